#include "wxbs/formats.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace wxbs {

std::string format_number(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

namespace {

constexpr int kFeatDigits = 9;
constexpr int kModelDigits = 17;

[[noreturn]] void fail(int line, const std::string& what) {
  throw FormatError("line " + std::to_string(line) + ": " + what);
}

// Whitespace-separated numbers of one line; exact count required.
std::vector<double> parse_numbers(const std::string& text, size_t expected, int line) {
  std::vector<double> out;
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) {
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      fail(line, "not a number: '" + tok + "'");
    }
    if (used != tok.size()) fail(line, "not a number: '" + tok + "'");
    out.push_back(v);
  }
  if (out.size() != expected)
    fail(line, "expected " + std::to_string(expected) + " values, found " + std::to_string(out.size()));
  return out;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; }

void put(std::ostream& os, double v, int digits) { os << format_number(v, digits); }

// Nine digits identify a float, so frame values are stored at float precision.
double as_float(double v) { return static_cast<float>(v); }

}  // namespace

void write_features(std::ostream& os, const FeatureFile& f) {
  f.features.validate();
  const int dim = f.features.dim > 0 ? f.features.dim : descriptor_dim(f.kind);
  if (dim != descriptor_dim(f.kind)) throw std::invalid_argument("write_features: dimension does not match kind");
  os << "WXBS-FEAT v1 count=" << f.features.size() << " desc=" << to_string(f.kind) << " dim=" << dim << '\n';
  for (int i = 0; i < f.features.size(); ++i) {
    const auto& l = f.features.lafs[i];
    const double head[] = {as_float(l.center.x()), as_float(l.center.y()), as_float(l.A(0, 0)), as_float(l.A(0, 1)),
                           as_float(l.A(1, 0)),    as_float(l.A(1, 1)),    as_float(l.response)};
    for (double v : head) {
      put(os, v, kFeatDigits);
      os << ' ';
    }
    os << l.view_id;
    const float* d = f.features.descriptor(i);
    for (int k = 0; k < dim; ++k) {
      os << ' ';
      put(os, d[k], kFeatDigits);
    }
    os << '\n';
  }
}

FeatureFile read_features(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) fail(1, "missing header");
  int count = -1, dim = -1;
  char kind[32] = {0};
  int consumed = 0;
  if (std::sscanf(header.c_str(), "WXBS-FEAT v1 count=%d desc=%31s dim=%d%n", &count, kind, &dim, &consumed) != 3 ||
      count < 0 || dim <= 0 || !blank(header.substr(consumed)))
    fail(1, "bad header: '" + header + "'");
  FeatureFile f;
  try {
    f.kind = descriptor_from_string(kind);
  } catch (const std::invalid_argument& e) {
    fail(1, e.what());
  }
  if (dim != descriptor_dim(f.kind)) fail(1, "dim does not match descriptor kind");
  f.features.dim = dim;
  std::string text;
  int line = 1;
  while (static_cast<int>(f.features.lafs.size()) < count) {
    if (!std::getline(is, text)) fail(line + 1, "expected " + std::to_string(count) + " features");
    ++line;
    const auto v = parse_numbers(text, 8 + static_cast<size_t>(dim), line);
    LocalAffineFrame laf;
    laf.center = Vec2(as_float(v[0]), as_float(v[1]));
    laf.A << as_float(v[2]), as_float(v[3]), as_float(v[4]), as_float(v[5]);
    laf.response = as_float(v[6]);
    if (v[7] != static_cast<double>(static_cast<int>(v[7]))) fail(line, "view_id must be an integer");
    laf.view_id = static_cast<int>(v[7]);
    std::vector<float> d(v.begin() + 8, v.end());
    f.features.append(laf, d);
  }
  while (std::getline(is, text)) {
    ++line;
    if (!blank(text)) fail(line, "trailing content after " + std::to_string(count) + " features");
  }
  return f;
}

void write_matches(std::ostream& os, const std::vector<MatchRecord>& m) {
  for (const auto& r : m) {
    const double v[] = {r.p1.x(), r.p1.y(), r.p2.x(), r.p2.y(), r.ratio, r.distance};
    for (int k = 0; k < 6; ++k) {
      if (k) os << ' ';
      put(os, v[k], kModelDigits);
    }
    os << '\n';
  }
}

std::vector<MatchRecord> read_matches(std::istream& is) {
  std::vector<MatchRecord> out;
  std::string text;
  for (int line = 1; std::getline(is, text); ++line) {
    if (blank(text)) continue;
    const auto v = parse_numbers(text, 6, line);
    out.push_back({Vec2(v[0], v[1]), Vec2(v[2], v[3]), v[4], v[5]});
  }
  return out;
}

void write_model(std::ostream& os, const ModelFile& m) {
  os << (m.kind == ModelKind::homography ? "# H" : "# F") << '\n';
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (c) os << ' ';
      put(os, m.M(r, c), kModelDigits);
    }
    os << '\n';
  }
}

ModelFile read_model(std::istream& is) {
  ModelFile m;
  std::string text;
  int line = 0, row = 0;
  bool have_kind = false;
  while (std::getline(is, text)) {
    ++line;
    if (blank(text)) continue;
    if (!have_kind) {
      if (text.rfind("# H", 0) == 0 && blank(text.substr(3))) {
        m.kind = ModelKind::homography;
      } else if (text.rfind("# F", 0) == 0 && blank(text.substr(3))) {
        m.kind = ModelKind::fundamental;
      } else {
        fail(line, "expected '# H' or '# F'");
      }
      have_kind = true;
      continue;
    }
    if (row == 3) fail(line, "more than three rows");
    const auto v = parse_numbers(text, 3, line);
    m.M.row(row++) << v[0], v[1], v[2];
  }
  if (!have_kind) fail(line + 1, "empty model file");
  if (row != 3) fail(line + 1, "expected three rows");
  return m;
}

void write_gt_pairs(std::ostream& os, const std::vector<PointPair>& pairs) {
  for (const auto& p : pairs) {
    const double v[] = {p.u.x(), p.u.y(), p.v.x(), p.v.y()};
    for (int k = 0; k < 4; ++k) {
      if (k) os << ' ';
      put(os, v[k], kModelDigits);
    }
    os << '\n';
  }
}

std::vector<PointPair> read_gt_pairs(std::istream& is) {
  std::vector<PointPair> out;
  std::string text;
  for (int line = 1; std::getline(is, text); ++line) {
    if (blank(text) || text[text.find_first_not_of(" \t")] == '#') continue;
    const auto v = parse_numbers(text, 4, line);
    out.push_back({Vec2(v[0], v[1]), Vec2(v[2], v[3])});
  }
  return out;
}

void write_trajectory(std::ostream& os, const Trajectory& t) {
  if (t.iterates.size() != t.losses.size() || t.iterates.empty())
    throw std::invalid_argument("write_trajectory: need one loss per iterate");
  const int n = t.iterates.front().size(), dim = static_cast<int>(t.iterates.front().a.cols());
  os << "WXBS-TRAJ v1 loss=" << losslab::to_string(t.kind) << " iterates=" << t.iterates.size() << " pairs=" << n
     << " dim=" << dim << '\n';
  for (size_t k = 0; k < t.iterates.size(); ++k) {
    const auto& b = t.iterates[k];
    if (b.size() != n || b.a.cols() != dim || b.b.cols() != dim)
      throw std::invalid_argument("write_trajectory: iterates differ in shape");
    os << "# " << k << ' ';
    put(os, t.losses[k], kModelDigits);
    os << '\n';
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < dim; ++c) {
        if (c) os << ' ';
        put(os, b.a(i, c), kModelDigits);
      }
      for (int c = 0; c < dim; ++c) {
        os << ' ';
        put(os, b.b(i, c), kModelDigits);
      }
      os << '\n';
    }
  }
}

Trajectory read_trajectory(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) fail(1, "missing header");
  char kind[32] = {0};
  int iterates = -1, n = -1, dim = -1, consumed = 0;
  if (std::sscanf(header.c_str(), "WXBS-TRAJ v1 loss=%31s iterates=%d pairs=%d dim=%d%n", kind, &iterates, &n, &dim,
                  &consumed) != 4 ||
      iterates < 1 || n < 1 || dim < 1 || !blank(header.substr(consumed)))
    fail(1, "bad header: '" + header + "'");
  Trajectory t;
  try {
    t.kind = losslab::loss_from_string(kind);
  } catch (const std::invalid_argument& e) {
    fail(1, e.what());
  }
  std::string text;
  int line = 1;
  auto next = [&]() {
    if (!std::getline(is, text)) fail(line + 1, "unexpected end of trajectory");
    ++line;
  };
  for (int k = 0; k < iterates; ++k) {
    next();
    if (text.rfind("# ", 0) != 0) fail(line, "expected iterate marker");
    const auto m = parse_numbers(text.substr(2), 2, line);
    if (m[0] != k) fail(line, "iterates out of order");
    t.losses.push_back(m[1]);
    losslab::Batch b;
    b.a.resize(n, dim);
    b.b.resize(n, dim);
    for (int i = 0; i < n; ++i) {
      next();
      const auto v = parse_numbers(text, 2 * static_cast<size_t>(dim), line);
      for (int c = 0; c < dim; ++c) {
        b.a(i, c) = v[c];
        b.b(i, c) = v[dim + c];
      }
    }
    t.iterates.push_back(std::move(b));
  }
  while (std::getline(is, text)) {
    ++line;
    if (!blank(text)) fail(line, "trailing content");
  }
  return t;
}

}  // namespace wxbs
