#include "commands.hpp"

#include "wxbs/evalkit.hpp"
#include "wxbs/formats.hpp"
#include "wxbs/io.hpp"
#include "wxbs/kernels.hpp"
#include "wxbs/losslab.hpp"
#include "wxbs/mods.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace wxbs::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

RunConfig load(const CommonOptions& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  if (o.seed) c.seed = o.seed;
  if (c.seed) c.mods.ransac.seed = *c.seed;
  return c;
}

void apply_threads(const CommonOptions& o, const RunConfig& c) {
  if (const int n = resolve_threads(o, c); n > 0) set_num_threads(n);
}

// Output is assembled in memory and written in one go.
void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  f.close();
  if (!f) throw std::runtime_error("error writing " + path);
}

template <class Writer>
std::string render(Writer&& w) {
  std::ostringstream ss;
  w(ss);
  return ss.str();
}

std::vector<MatchRecord> match_records(const MatchResult& r) {
  std::vector<MatchRecord> out;
  for (const auto& m : r.matches) out.push_back({m.corr.pa, m.corr.pb, m.corr.ratio, m.corr.distance});
  return out;
}

// Non-finite values become null; everything else keeps full precision.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

int resolve_threads(const CommonOptions& o, const RunConfig& c) {
  if (o.threads) {
    if (*o.threads < 0) throw ConfigError("--threads must be non-negative");
    return *o.threads;
  }
  if (c.threads > 0) return c.threads;
  if (const char* env = std::getenv("WXBS_THREADS"); env && *env) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 0 || n > 4096) throw ConfigError(std::string("WXBS_THREADS: bad value '") + env + "'");
    return static_cast<int>(n);
  }
  return 0;
}

int cmd_detect(const DetectOptions& o, std::ostream& out, std::ostream& log) {
  RunConfig c = load(o.common);
  apply_threads(o.common, c);
  StepConfig step = c.detect;
  if (!o.detector.empty()) step.detector = detector_from_string(o.detector);
  step.validate();
  const Image img = read_image(o.image);
  const FeatureFile f{step.descriptor, extract_step_features(img, step)};
  write_file(o.output, render([&](std::ostream& os) { write_features(os, f); }));
  if (o.common.verbosity >= 1)
    log << "detect: " << img.width() << "x" << img.height() << ", " << to_string(step.detector) << ", "
        << f.features.size() << " frames\n";
  out << f.features.size() << '\n';
  return kExitOk;
}

int cmd_mods(const ModsOptions& o, std::ostream& out, std::ostream& log) {
  RunConfig c = load(o.common);
  apply_threads(o.common, c);
  ModsConfig m = c.mods;
  if (!o.model.empty()) m.model = model_request_from_string(o.model);
  if (o.min_inliers) m.theta_m = *o.min_inliers;
  if (o.max_steps) m.s_max = *o.max_steps;
  m.validate();

  const Image img1 = read_image(o.image1), img2 = read_image(o.image2);
  const MatchResult r = run_mods(img1, img2, m);

  if (o.common.verbosity >= 1) {
    for (const auto& s : r.steps) {
      log << "step " << s.step_id << ": features " << s.features1 << "/" << s.features2 << ", tentative "
          << s.tentatives << ", ransac " << s.ransac_inliers << ", verified " << s.verified;
      if (o.common.verbosity >= 2) log << ", " << std::fixed << std::setprecision(2) << s.seconds << " s";
      log << '\n';
    }
  }

  const std::string matches_path = o.output_prefix + ".matches.txt";
  const std::string model_path = o.output_prefix + ".model.txt";
  const std::string report_path = o.output_prefix + ".report.json";

  std::vector<MatchRecord> records;
  if (r.success) records = match_records(r);
  write_file(matches_path, render([&](std::ostream& os) { write_matches(os, records); }));
  if (r.success) {
    Mat3 M = r.model->M;
    // Homographies are written with H33 = 1, the usual file convention.
    if (r.model->kind == ModelKind::homography && std::abs(M(2, 2)) > 1e-12) M /= M(2, 2);
    write_file(model_path, render([&](std::ostream& os) { write_model(os, {r.model->kind, M}); }));
  } else {
    std::error_code ec;
    fs::remove(model_path, ec);
  }

  // Wall times stay out of the report so that it is reproducible.
  ordered_json steps = ordered_json::array();
  for (const auto& s : r.steps)
    steps.push_back({{"step_id", s.step_id},
                     {"features1", s.features1},
                     {"features2", s.features2},
                     {"tentatives", s.tentatives},
                     {"ransac_inliers", s.ransac_inliers},
                     {"verified", s.verified}});
  ordered_json report = {{"success", r.success},
                         {"model", r.success ? to_string(r.model->kind) : std::string("none")},
                         {"inliers", static_cast<int>(records.size())},
                         {"steps_used", r.steps_used},
                         {"steps", steps}};
  write_file(report_path, report.dump(2) + "\n");

  out << (r.success ? "success" : "no-match") << " steps=" << r.steps_used << " inliers=" << records.size()
      << '\n';
  return r.success ? kExitOk : kExitNoMatch;
}

namespace {

Mat3 matrix3(const json& j, const std::string& ptr) {
  if (!j.is_array() || j.size() != 3) fail_at(ptr, "expected a 3x3 array");
  Mat3 M;
  for (int r = 0; r < 3; ++r) {
    if (!j[r].is_array() || j[r].size() != 3) fail_at(ptr + "/" + std::to_string(r), "expected three numbers");
    for (int c = 0; c < 3; ++c) {
      if (!j[r][c].is_number()) fail_at(ptr + "/" + std::to_string(r) + "/" + std::to_string(c), "expected a number");
      M(r, c) = j[r][c].get<double>();
    }
  }
  return M;
}

struct CameraGt {
  Mat3 K1, K2, R;
  Vec3 t;
};

struct ManifestPair {
  std::string name;
  std::string category;
  std::string gt;
  std::string gt_model;
  std::string estimate;
  std::string matches;
  std::string image1;
  std::string image2;
  std::optional<CameraGt> camera;
};

std::vector<ManifestPair> parse_manifest(const std::string& path) {
  const std::string text = read_text_file(path);
  const json j = parse_json(text, path);
  std::vector<ManifestPair> pairs;
  try {
    ObjectReader top(j, "");
    if (!top.has("pairs")) fail_at("/pairs", "missing");
    const json& list = top.at("pairs");
    top.finish();
    if (!list.is_array()) fail_at("/pairs", "expected an array");
    if (list.empty()) fail_at("/pairs", "manifest lists no pairs");
    for (size_t i = 0; i < list.size(); ++i) {
      const std::string ptr = "/pairs/" + std::to_string(i);
      ObjectReader r(list[i], ptr);
      ManifestPair p;
      p.name = r.string("name", "pair" + std::to_string(i));
      p.category = r.string("category", "default");
      p.gt = r.string("gt", "");
      if (p.gt.empty()) fail_at(r.child("gt"), "missing ground-truth file");
      p.gt_model = r.string("gt_model", "");
      p.estimate = r.string("estimate", "");
      p.matches = r.string("matches", "");
      p.image1 = r.string("image1", "");
      p.image2 = r.string("image2", "");
      if (r.has("camera")) {
        ObjectReader cr(r.at("camera"), r.child("camera"));
        CameraGt cam;
        for (const char* key : {"K1", "K2", "R", "t"})
          if (!cr.has(key)) fail_at(cr.child(key), "missing");
        cam.K1 = matrix3(cr.at("K1"), cr.child("K1"));
        cam.K2 = matrix3(cr.at("K2"), cr.child("K2"));
        cam.R = matrix3(cr.at("R"), cr.child("R"));
        const json& t = cr.at("t");
        if (!t.is_array() || t.size() != 3) fail_at(cr.child("t"), "expected three numbers");
        for (int k = 0; k < 3; ++k) {
          if (!t[k].is_number()) fail_at(cr.child("t") + "/" + std::to_string(k), "expected a number");
          cam.t(k) = t[k].get<double>();
        }
        cr.finish();
        p.camera = cam;
      }
      r.finish();
      if (p.estimate.empty() && (p.image1.empty() || p.image2.empty()))
        fail_at(ptr, "needs either an estimate or both images");
      if (!p.matches.empty() && p.estimate.empty()) fail_at(r.child("matches"), "only valid with an estimate");
      pairs.push_back(std::move(p));
    }
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return pairs;
}

std::string resolve(const fs::path& base, const std::string& p) {
  const fs::path q(p);
  return (q.is_absolute() ? q : base / q).string();
}

template <class T, class Reader>
T read_file_with(const std::string& path, Reader&& reader) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return reader(in);
  } catch (const FormatError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string fixed(double v, int decimals) {
  if (!std::isfinite(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& log) {
  RunConfig c = load(o.common);
  apply_threads(o.common, c);
  c.eval.validate();
  const auto pairs = parse_manifest(o.manifest);
  const fs::path manifest_dir = fs::path(o.manifest).parent_path();
  const fs::path gt_dir = o.gt_dir.empty() ? manifest_dir : fs::path(o.gt_dir);
  const eval::VerdictParams vp{c.eval.correct_px, c.eval.solved_min, c.eval.median_px};

  struct Row {
    std::string name, category, model = "none";
    std::vector<double> recall;
    double recall_at_correct = 0.0;
    std::optional<eval::Verdict> verdict;
    std::optional<double> pose_error;
  };
  std::vector<Row> rows;
  std::map<std::string, std::vector<std::vector<double>>> by_category;
  std::vector<double> pose_errors;

  for (const auto& p : pairs) {
    eval::GtCorrespondenceSet gt;
    gt.scene = p.name;
    gt.category = p.category;
    const std::string gt_path = resolve(gt_dir, p.gt);
    if (!fs::exists(gt_path)) throw ConfigError(p.name + ": missing ground truth " + gt_path);
    gt.pairs = read_file_with<std::vector<PointPair>>(gt_path, [](std::istream& is) { return read_gt_pairs(is); });
    gt.validate();

    std::optional<eval::GtModel> gt_model;
    if (!p.gt_model.empty()) {
      const auto m = read_file_with<ModelFile>(resolve(gt_dir, p.gt_model), [](std::istream& is) { return read_model(is); });
      gt_model = eval::GtModel{m.kind, m.M};
    }

    std::optional<ModelFile> estimate;
    std::vector<PointPair> output;
    if (!p.estimate.empty()) {
      estimate = read_file_with<ModelFile>(resolve(manifest_dir, p.estimate), [](std::istream& is) { return read_model(is); });
      if (!p.matches.empty()) {
        const auto recs = read_file_with<std::vector<MatchRecord>>(resolve(manifest_dir, p.matches),
                                                                   [](std::istream& is) { return read_matches(is); });
        for (const auto& r : recs) output.push_back({r.p1, r.p2});
      }
    } else {
      const Image img1 = read_image(resolve(manifest_dir, p.image1));
      const Image img2 = read_image(resolve(manifest_dir, p.image2));
      const MatchResult r = run_mods(img1, img2, c.mods);
      if (r.success) {
        estimate = ModelFile{r.model->kind, r.model->M};
        for (const auto& m : r.matches) output.push_back({m.corr.pa, m.corr.pb});
      }
      if (o.common.verbosity >= 1)
        log << p.name << ": " << (r.success ? "matched" : "no match") << " after " << r.steps_used << " steps\n";
    }

    Row row;
    row.name = p.name;
    row.category = p.category;
    if (estimate) {
      row.model = to_string(estimate->kind);
      row.recall = eval::recall_curve(gt, estimate->kind, estimate->M, c.eval.thetas);
      row.recall_at_correct = eval::recall_curve(gt, estimate->kind, estimate->M, {c.eval.correct_px}).front();
    } else {
      row.recall.assign(c.eval.thetas.size(), 0.0);
    }
    if (gt_model) row.verdict = eval::pair_verdicts(output, *gt_model, vp);
    if (p.camera) {
      double err = std::numeric_limits<double>::infinity();
      if (estimate && estimate->kind == ModelKind::fundamental) {
        try {
          const auto pose = eval::pose_from_fundamental(estimate->M, p.camera->K1, p.camera->K2, gt.pairs);
          err = eval::pose_error(pose.R, pose.t, p.camera->R, p.camera->t);
        } catch (const std::exception&) {
          // A degenerate estimate counts as a miss.
        }
      }
      row.pose_error = err;
      pose_errors.push_back(err);
    }
    by_category[p.category].push_back(row.recall);
    rows.push_back(std::move(row));
  }

  ordered_json jpairs = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json e = {{"name", r.name}, {"category", r.category}, {"model", r.model}, {"recall", r.recall}};
    if (r.verdict)
      e["verdict"] = {{"total", r.verdict->total},
                      {"correct", r.verdict->correct},
                      {"solved", r.verdict->solved},
                      {"median_error", number_or_null(r.verdict->median_error)},
                      {"median_ok", r.verdict->median_ok}};
    if (r.pose_error) e["pose_error_deg"] = number_or_null(*r.pose_error);
    jpairs.push_back(e);
  }
  ordered_json cats = ordered_json::object();
  for (const auto& [name, curves] : by_category) cats[name] = eval::category_recall(curves);
  ordered_json report = {{"thetas", c.eval.thetas}, {"pairs", jpairs}, {"categories", cats}};
  int solved = 0, judged = 0;
  for (const auto& r : rows)
    if (r.verdict) {
      ++judged;
      solved += r.verdict->solved ? 1 : 0;
    }
  report["solved"] = solved;
  report["judged"] = judged;
  if (!pose_errors.empty()) {
    report["maa"] = eval::maa(pose_errors, c.eval.maa_max_deg, c.eval.maa_step_deg);
    report["maa_max_deg"] = c.eval.maa_max_deg;
  } else {
    report["maa"] = nullptr;
  }
  if (!o.output.empty()) write_file(o.output, report.dump(2) + "\n");

  // Human-readable table.
  const std::string recall_head = "r@" + format_number(c.eval.correct_px, 6) + "px";
  out << std::left << std::setw(20) << "pair" << std::setw(14) << "category" << std::setw(13) << "model"
      << std::right << std::setw(9) << recall_head << std::setw(10) << "correct" << std::setw(8) << "solved"
      << std::setw(10) << "pose deg" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(20) << r.name << std::setw(14) << r.category << std::setw(13) << r.model
        << std::right << std::setw(9) << fixed(r.recall_at_correct, 3);
    if (r.verdict) {
      out << std::setw(10) << (std::to_string(r.verdict->correct) + "/" + std::to_string(r.verdict->total))
          << std::setw(8) << (r.verdict->solved ? "yes" : "no");
    } else {
      out << std::setw(10) << "-" << std::setw(8) << "-";
    }
    out << std::setw(10) << (r.pose_error ? fixed(*r.pose_error, 2) : std::string("-")) << '\n';
  }
  out << "solved " << solved << "/" << judged;
  if (!pose_errors.empty())
    out << ", mAA@" << format_number(c.eval.maa_max_deg, 6) << " " << fixed(report["maa"].get<double>(), 4);
  out << '\n';
  return kExitOk;
}

int cmd_losslab(const LosslabOptions& o, std::ostream& out, std::ostream& log) {
  RunConfig c = load(o.common);
  apply_threads(o.common, c);
  const json j = parse_json(read_text_file(o.spec), o.spec);

  losslab::LossKind kind{};
  int steps = 150;
  double margin = losslab::kDefaultMargin;
  losslab::AdamParams adam;
  losslab::Batch points = losslab::toy_layout();
  try {
    ObjectReader r(j, "");
    if (!r.has("loss")) fail_at("/loss", "missing");
    const std::string name = r.string("loss", "");
    try {
      kind = losslab::loss_from_string(name);
    } catch (const std::invalid_argument& e) {
      fail_at("/loss", e.what());
    }
    steps = r.integer("steps", steps);
    if (steps < 0) fail_at("/steps", "must be non-negative");
    margin = r.number("margin", margin);
    if (!std::isfinite(margin)) fail_at("/margin", "must be finite");
    if (r.has("adam")) {
      ObjectReader a(r.at("adam"), "/adam");
      adam.lr = a.number("lr", adam.lr);
      adam.beta1 = a.number("beta1", adam.beta1);
      adam.beta2 = a.number("beta2", adam.beta2);
      adam.eps = a.number("eps", adam.eps);
      a.finish();
      if (!(adam.lr >= 0) || !(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1) ||
          !(adam.eps > 0))
        fail_at("/adam", "needs lr >= 0, betas in [0,1) and eps > 0");
    }
    if (r.has("a") != r.has("b")) fail_at(r.has("a") ? "/b" : "/a", "points must be given for both sides");
    if (r.has("a")) {
      auto rows = [&](const std::string& key) {
        const json& v = r.at(key);
        const std::string ptr = "/" + key;
        if (!v.is_array() || v.empty()) fail_at(ptr, "expected a non-empty array of points");
        const size_t dim = v[0].is_array() ? v[0].size() : 0;
        if (dim == 0) fail_at(ptr + "/0", "expected a point");
        losslab::RowMatrix m(static_cast<int>(v.size()), static_cast<int>(dim));
        for (size_t i = 0; i < v.size(); ++i) {
          if (!v[i].is_array() || v[i].size() != dim) fail_at(ptr + "/" + std::to_string(i), "inconsistent dimension");
          for (size_t k = 0; k < dim; ++k) {
            if (!v[i][k].is_number())
              fail_at(ptr + "/" + std::to_string(i) + "/" + std::to_string(k), "expected a number");
            m(i, k) = v[i][k].get<double>();
          }
        }
        return m;
      };
      points.a = rows("a");
      points.b = rows("b");
    }
    r.finish();
  } catch (const ConfigError& e) {
    throw ConfigError(o.spec + ": " + e.what());
  }

  losslab::ToyTrajectory tr;
  try {
    tr = losslab::toy_optimize(points, kind, steps, margin, adam);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(o.spec + ": " + e.what());
  }
  const Trajectory t{kind, tr.iterates, tr.losses};
  write_file(o.output, render([&](std::ostream& os) { write_trajectory(os, t); }));

  const double d0 = losslab::mean_positive_distance(tr.iterates.front(), losslab::Metric::euclidean);
  const double d1 = losslab::mean_positive_distance(tr.iterates.back(), losslab::Metric::euclidean);
  ordered_json summary = {{"loss", losslab::to_string(kind)},
                          {"steps", steps},
                          {"initial_loss", tr.losses.front()},
                          {"final_loss", tr.losses.back()},
                          {"initial_positive_distance", d0},
                          {"final_positive_distance", d1}};
  if (o.common.verbosity >= 1) log << "losslab: " << steps << " steps of " << losslab::to_string(kind) << '\n';
  out << summary.dump(2) << '\n';
  return kExitOk;
}

}  // namespace wxbs::cli
