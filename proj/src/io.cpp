#include "wxbs/io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <cmath>

namespace wxbs {

Image read_image(const std::string& path) {
  const cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (m.empty()) throw std::runtime_error("cannot read image: " + path);
  double scale = 0;
  switch (m.depth()) {
    case CV_8U: scale = 1.0 / 255.0; break;
    case CV_16U: scale = 1.0 / 65535.0; break;
    default: throw std::runtime_error("unsupported pixel depth: " + path);
  }
  const int ch = m.channels();
  // Alpha does not contribute to intensity.
  const int used = ch == 4 ? 3 : (ch == 2 ? 1 : ch);
  std::vector<float> data(static_cast<size_t>(m.rows) * m.cols);
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) {
      double s = 0;
      for (int c = 0; c < used; ++c) {
        const size_t off = (static_cast<size_t>(x) * ch + c);
        s += m.depth() == CV_8U ? m.ptr<std::uint8_t>(y)[off] : m.ptr<std::uint16_t>(y)[off];
      }
      data[static_cast<size_t>(y) * m.cols + x] = static_cast<float>(s / used * scale);
    }
  return Image::from_clamped(m.cols, m.rows, std::move(data));
}

void write_image(const std::string& path, const Image& img) {
  cv::Mat m(img.height(), img.width(), CV_8UC1);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      m.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(std::lround(255.0 * img.at(x, y)));
  if (!cv::imwrite(path, m)) throw std::runtime_error("cannot write image: " + path);
}

}  // namespace wxbs
