#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace wxbs::cli {

using nlohmann::json;

void fail_at(const std::string& pointer, const std::string& what) {
  throw ConfigError((pointer.empty() ? std::string("/") : pointer) + ": " + what);
}

std::pair<int, int> line_column(const std::string& text, std::size_t offset) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

void EvalConfig::validate() const {
  if (thetas.empty()) throw std::invalid_argument("eval: thetas must not be empty");
  for (double t : thetas)
    if (!(t > 0)) throw std::invalid_argument("eval: thetas must be positive");
  if (!std::is_sorted(thetas.begin(), thetas.end())) throw std::invalid_argument("eval: thetas must be ascending");
  if (!(correct_px > 0) || !(median_px > 0)) throw std::invalid_argument("eval: pixel thresholds must be positive");
  if (solved_min < 1) throw std::invalid_argument("eval: solved_min must be at least 1");
  if (!(maa_max_deg > 0) || !(maa_step_deg > 0)) throw std::invalid_argument("eval: mAA thresholds must be positive");
}

ObjectReader::ObjectReader(const json& j, std::string pointer) : j_(j), pointer_(std::move(pointer)) {
  if (!j_.is_object()) fail_at(pointer_, "expected an object");
}

bool ObjectReader::has(const std::string& key) const { return j_.contains(key); }

const json& ObjectReader::at(const std::string& key) {
  seen_.push_back(key);
  return j_.at(key);
}

double ObjectReader::number(const std::string& key, double fallback) {
  if (!has(key)) return fallback;
  const json& v = at(key);
  if (!v.is_number()) fail_at(child(key), "expected a number");
  return v.get<double>();
}

int ObjectReader::integer(const std::string& key, int fallback) {
  if (!has(key)) return fallback;
  const json& v = at(key);
  if (!v.is_number_integer()) fail_at(child(key), "expected an integer");
  const auto x = v.get<long long>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    fail_at(child(key), "integer out of range");
  return static_cast<int>(x);
}

bool ObjectReader::boolean(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const json& v = at(key);
  if (!v.is_boolean()) fail_at(child(key), "expected true or false");
  return v.get<bool>();
}

std::string ObjectReader::string(const std::string& key, const std::string& fallback) {
  if (!has(key)) return fallback;
  const json& v = at(key);
  if (!v.is_string()) fail_at(child(key), "expected a string");
  return v.get<std::string>();
}

std::vector<double> ObjectReader::numbers(const std::string& key, const std::vector<double>& fallback) {
  if (!has(key)) return fallback;
  const json& v = at(key);
  if (!v.is_array()) fail_at(child(key), "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail_at(child(key) + "/" + std::to_string(i), "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

void ObjectReader::finish() const {
  for (auto it = j_.begin(); it != j_.end(); ++it)
    if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) fail_at(child(it.key()), "unknown key");
}

namespace {

template <class F>
auto converted(const std::string& pointer, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    fail_at(pointer, e.what());
  }
}

DetectorParams read_detector_params(const json& j, const std::string& ptr, DetectorParams d) {
  ObjectReader r(j, ptr);
  d.threshold = r.number("threshold", d.threshold);
  d.min_features = r.integer("min_features", d.min_features);
  d.max_features = r.integer("max_features", d.max_features);
  d.levels_per_octave = r.integer("levels_per_octave", d.levels_per_octave);
  d.sigma_base = r.number("sigma_base", d.sigma_base);
  d.edge_like_allowed = r.boolean("edge_like_allowed", d.edge_like_allowed);
  d.edge_ratio = r.number("edge_ratio", d.edge_ratio);
  r.finish();
  converted(ptr, [&] { d.validate(); return 0; });
  return d;
}

StepConfig read_step(const json& j, const std::string& ptr, StepConfig s) {
  ObjectReader r(j, ptr);
  s.step_id = r.integer("step_id", s.step_id);
  if (r.has("detector")) {
    const auto v = r.string("detector", "");
    s.detector = converted(r.child("detector"), [&] { return detector_from_string(v); });
  }
  if (r.has("descriptor")) {
    const auto v = r.string("descriptor", "");
    s.descriptor = converted(r.child("descriptor"), [&] { return descriptor_from_string(v); });
  }
  s.scales = r.numbers("scales", s.scales);
  s.tilts = r.numbers("tilts", s.tilts);
  s.delta_phi_base = r.number("delta_phi_base", s.delta_phi_base);
  s.sigma_base = r.number("sigma_base", s.sigma_base);
  if (r.has("detector_params"))
    s.detector_params = read_detector_params(r.at("detector_params"), r.child("detector_params"), s.detector_params);
  r.finish();
  converted(ptr, [&] { s.validate(); return 0; });
  return s;
}

MatcherParams read_matcher(const json& j, const std::string& ptr, MatcherParams m) {
  ObjectReader r(j, ptr);
  m.ratio_threshold = r.number("ratio_threshold", m.ratio_threshold);
  m.fginn_radius = r.number("fginn_radius", m.fginn_radius);
  if (r.has("strategy")) {
    const auto v = r.string("strategy", "");
    m.strategy = converted(r.child("strategy"), [&] { return strategy_from_string(v); });
  }
  r.finish();
  converted(ptr, [&] { m.validate(); return 0; });
  return m;
}

RansacParams read_ransac(const json& j, const std::string& ptr, RansacParams p) {
  ObjectReader r(j, ptr);
  p.inlier_threshold = r.number("inlier_threshold", p.inlier_threshold);
  p.confidence = r.number("confidence", p.confidence);
  p.max_iter = r.integer("max_iter", p.max_iter);
  p.lo_enabled = r.boolean("lo_enabled", p.lo_enabled);
  p.degeneracy_fraction = r.number("degeneracy_fraction", p.degeneracy_fraction);
  p.auto_h_fraction = r.number("auto_h_fraction", p.auto_h_fraction);
  r.finish();
  converted(ptr, [&] { p.validate(); return 0; });
  return p;
}

ModsConfig read_mods(const json& j, const std::string& ptr, ModsConfig c) {
  ObjectReader r(j, ptr);
  c.theta_m = r.integer("theta_m", c.theta_m);
  c.s_max = r.integer("s_max", c.s_max);
  if (r.has("model")) {
    const auto v = r.string("model", "");
    c.model = converted(r.child("model"), [&] { return model_request_from_string(v); });
  }
  c.duplicate_radius = r.number("duplicate_radius", c.duplicate_radius);
  c.laf_check_threshold = r.number("laf_check_threshold", c.laf_check_threshold);
  if (r.has("matcher")) c.matcher = read_matcher(r.at("matcher"), r.child("matcher"), c.matcher);
  if (r.has("ransac")) c.ransac = read_ransac(r.at("ransac"), r.child("ransac"), c.ransac);
  if (r.has("steps")) {
    const json& steps = r.at("steps");
    if (!steps.is_array()) fail_at(r.child("steps"), "expected an array of steps");
    c.steps.clear();
    for (std::size_t i = 0; i < steps.size(); ++i) {
      StepConfig base;
      base.step_id = static_cast<int>(i) + 1;
      c.steps.push_back(read_step(steps[i], r.child("steps") + "/" + std::to_string(i), base));
    }
  }
  r.finish();
  converted(ptr, [&] { c.validate(); return 0; });
  return c;
}

EvalConfig read_eval(const json& j, const std::string& ptr, EvalConfig e) {
  ObjectReader r(j, ptr);
  e.thetas = r.numbers("thetas", e.thetas);
  e.correct_px = r.number("correct_px", e.correct_px);
  e.solved_min = r.integer("solved_min", e.solved_min);
  e.median_px = r.number("median_px", e.median_px);
  e.maa_max_deg = r.number("maa_max_deg", e.maa_max_deg);
  e.maa_step_deg = r.number("maa_step_deg", e.maa_step_deg);
  r.finish();
  converted(ptr, [&] { e.validate(); return 0; });
  return e;
}

}  // namespace

StepConfig default_detect_step() {
  StepConfig s = default_ladder().front();
  s.detector_params.min_features = 0;
  return s;
}

nlohmann::json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string what = e.what();
    // Drop the library's own position prefix; ours is more useful.
    if (const auto p = what.find(": syntax error"); p != std::string::npos) what = what.substr(p + 2);
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  const json j = parse_json(text, origin);
  RunConfig c;
  try {
    ObjectReader r(j, "");
    if (r.has("seed")) {
      const json& s = r.at("seed");
      if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
        fail_at("/seed", "expected a non-negative integer");
      c.seed = s.get<std::uint64_t>();
    }
    c.threads = r.integer("threads", c.threads);
    if (c.threads < 0) fail_at("/threads", "must be non-negative");
    if (r.has("mods")) c.mods = read_mods(r.at("mods"), "/mods", c.mods);
    if (r.has("detect")) c.detect = read_step(r.at("detect"), "/detect", c.detect);
    if (r.has("eval")) c.eval = read_eval(r.at("eval"), "/eval", c.eval);
    r.finish();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) { return parse_config(read_text_file(path), path); }

namespace {

nlohmann::ordered_json step_json(const StepConfig& s) {
  const auto& d = s.detector_params;
  return {{"step_id", s.step_id},
          {"detector", to_string(s.detector)},
          {"descriptor", to_string(s.descriptor)},
          {"scales", s.scales},
          {"tilts", s.tilts},
          {"delta_phi_base", s.delta_phi_base},
          {"sigma_base", s.sigma_base},
          {"detector_params",
           {{"threshold", d.threshold},
            {"min_features", d.min_features},
            {"max_features", d.max_features},
            {"levels_per_octave", d.levels_per_octave},
            {"sigma_base", d.sigma_base},
            {"edge_like_allowed", d.edge_like_allowed},
            {"edge_ratio", d.edge_ratio}}}};
}

}  // namespace

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  if (c.seed) j["seed"] = *c.seed;
  j["threads"] = c.threads;
  const auto& m = c.mods;
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const auto& s : m.steps) steps.push_back(step_json(s));
  j["mods"] = {{"theta_m", m.theta_m},
               {"s_max", m.s_max},
               {"model", to_string(m.model)},
               {"duplicate_radius", m.duplicate_radius},
               {"laf_check_threshold", m.laf_check_threshold},
               {"matcher",
                {{"ratio_threshold", m.matcher.ratio_threshold},
                 {"fginn_radius", m.matcher.fginn_radius},
                 {"strategy", to_string(m.matcher.strategy)}}},
               {"ransac",
                {{"inlier_threshold", m.ransac.inlier_threshold},
                 {"confidence", m.ransac.confidence},
                 {"max_iter", m.ransac.max_iter},
                 {"lo_enabled", m.ransac.lo_enabled},
                 {"degeneracy_fraction", m.ransac.degeneracy_fraction},
                 {"auto_h_fraction", m.ransac.auto_h_fraction}}},
               {"steps", steps}};
  j["detect"] = step_json(c.detect);
  j["eval"] = {{"thetas", c.eval.thetas},
               {"correct_px", c.eval.correct_px},
               {"solved_min", c.eval.solved_min},
               {"median_px", c.eval.median_px},
               {"maa_max_deg", c.eval.maa_max_deg},
               {"maa_step_deg", c.eval.maa_step_deg}};
  return j;
}

}  // namespace wxbs::cli
