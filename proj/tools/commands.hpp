#pragma once

#include "config.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace wxbs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNoMatch = 2;

/// Flags shared by every command. Unset optionals defer to the config.
struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  int verbosity = 1;
};

struct DetectOptions {
  CommonOptions common;
  std::string image;
  std::string output;
  std::string detector;  // empty keeps the configured one
};

struct ModsOptions {
  CommonOptions common;
  std::string image1;
  std::string image2;
  std::string output_prefix;
  std::string model;  // h, f or auto; empty keeps the configured one
  std::optional<int> min_inliers;
  std::optional<int> max_steps;
};

struct EvalOptions {
  CommonOptions common;
  std::string manifest;
  std::string gt_dir;
  std::string output;
};

struct LosslabOptions {
  CommonOptions common;
  std::string spec;
  std::string output;
};

/// Each command returns its exit code; problems with inputs throw.
int cmd_detect(const DetectOptions& o, std::ostream& out, std::ostream& log);
int cmd_mods(const ModsOptions& o, std::ostream& out, std::ostream& log);
int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& log);
int cmd_losslab(const LosslabOptions& o, std::ostream& out, std::ostream& log);

/// Flag, then config, then WXBS_THREADS; 0 leaves the OpenMP default.
int resolve_threads(const CommonOptions& o, const RunConfig& c);

}  // namespace wxbs::cli
