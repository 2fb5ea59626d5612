#pragma once

#include "wxbs/core.hpp"

#include <string>

namespace wxbs {

/// PNG, JPEG or PGM; colour input is averaged over channels. 8- and
/// 16-bit depths are scaled to [0,1]. Throws std::runtime_error.
Image read_image(const std::string& path);

/// 8-bit grayscale; format chosen by extension.
void write_image(const std::string& path, const Image& img);

}  // namespace wxbs
