#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace wxbs::cli;

namespace {

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "RANSAC seed");
  app->add_option("--threads", o.threads, "worker threads, 0 keeps the default (env WXBS_THREADS)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--verbosity", o.verbosity, "0 quiet, 1 progress, 2 timings")->check(CLI::Range(0, 2));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wide-baseline two-view matching"};
  app.require_subcommand(1);

  DetectOptions det;
  auto* detect = app.add_subcommand("detect", "detect and describe local affine frames");
  add_common(detect, det.common);
  detect->add_option("image", det.image, "input image (PNG, JPEG, PGM)")->required();
  detect->add_option("-o,--output", det.output, "features file")->required();
  detect->add_option("--detector", det.detector, "hessian, dog or hessian_affine");

  ModsOptions mods;
  auto* mods_cmd = app.add_subcommand("mods", "match two views with progressive view synthesis");
  add_common(mods_cmd, mods.common);
  mods_cmd->add_option("image1", mods.image1)->required();
  mods_cmd->add_option("image2", mods.image2)->required();
  mods_cmd->add_option("-o,--output", mods.output_prefix, "prefix for .matches.txt, .model.txt, .report.json")
      ->required();
  mods_cmd->add_option("--model", mods.model, "h, f or auto")->check(CLI::IsMember({"h", "f", "auto"}));
  mods_cmd->add_option("--min-inliers", mods.min_inliers, "verified inliers needed to stop")
      ->check(CLI::PositiveNumber);
  mods_cmd->add_option("--max-steps", mods.max_steps, "run at most this many ladder steps")
      ->check(CLI::NonNegativeNumber);

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "score estimates against ground truth");
  add_common(eval, ev.common);
  eval->add_option("manifest", ev.manifest, "JSON list of pairs")->required();
  eval->add_option("--gt-dir", ev.gt_dir, "directory of ground-truth files (default: manifest directory)");
  eval->add_option("-o,--output", ev.output, "JSON report");

  LosslabOptions ll;
  auto* losslab = app.add_subcommand("losslab", "optimize the 2-D toy problem");
  add_common(losslab, ll.common);
  losslab->add_option("spec", ll.spec, "JSON toy specification")->required();
  losslab->add_option("-o,--output", ll.output, "trajectory file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*detect) return cmd_detect(det, std::cout, std::cerr);
    if (*mods_cmd) return cmd_mods(mods, std::cout, std::cerr);
    if (*eval) return cmd_eval(ev, std::cout, std::cerr);
    if (*losslab) return cmd_losslab(ll, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "wxbs: error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
