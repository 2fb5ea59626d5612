#pragma once

#include "wxbs/mods.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wxbs::cli {

/// Bad configuration or input; maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Default `detect` step: the first ladder step without the R_min floor, so
/// weak responses are not padded in.
StepConfig default_detect_step();

struct EvalConfig {
  std::vector<double> thetas = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 14, 16, 18, 20};
  double correct_px = 3.0;
  int solved_min = 10;
  double median_px = 6.0;
  double maa_max_deg = 10.0;
  double maa_step_deg = 1.0;

  void validate() const;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  int threads = 0;  // 0 keeps the OpenMP default
  ModsConfig mods = default_mods_config();
  StepConfig detect = default_detect_step();
  EvalConfig eval;
};

/// Parses JSON text; syntax errors carry "line:column", semantic errors a
/// JSON pointer to the offending value. Unknown keys are rejected.
RunConfig parse_config(const std::string& text, const std::string& origin = "config");
RunConfig load_config(const std::string& path);

/// Serialized form of a config, accepted back by parse_config.
nlohmann::ordered_json to_json(const RunConfig& c);

/// JSON with syntax errors reported as "origin:line:column: message".
nlohmann::json parse_json(const std::string& text, const std::string& origin);
std::string read_text_file(const std::string& path);

/// 1-based line and column of a byte offset.
std::pair<int, int> line_column(const std::string& text, std::size_t offset);

/// Strict object reader shared by the config and manifest parsers.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string pointer);

  bool has(const std::string& key) const;
  const nlohmann::json& at(const std::string& key);
  std::string child(const std::string& key) const { return pointer_ + "/" + key; }

  double number(const std::string& key, double fallback);
  int integer(const std::string& key, int fallback);
  bool boolean(const std::string& key, bool fallback);
  std::string string(const std::string& key, const std::string& fallback);
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback);

  /// Throws for keys that were never requested.
  void finish() const;

 private:
  const nlohmann::json& j_;
  std::string pointer_;
  std::vector<std::string> seen_;
};

[[noreturn]] void fail_at(const std::string& pointer, const std::string& what);

}  // namespace wxbs::cli
