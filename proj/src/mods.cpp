#include "wxbs/mods.hpp"

#include "wxbs/shape.hpp"

#include <chrono>
#include <exception>

namespace wxbs {

void ModsConfig::validate() const {
  if (steps.empty()) throw std::invalid_argument("mods: at least one step is required");
  for (const auto& s : steps) s.validate();
  const int m = model == ModelRequest::homography ? minimal_sample_size(ModelKind::homography)
                                                  : minimal_sample_size(ModelKind::fundamental) + 1;
  if (theta_m < m + 1) throw std::invalid_argument("mods: theta_m must exceed the minimal sample size");
  if (s_max < 0) throw std::invalid_argument("mods: s_max must be non-negative");
  if (!(duplicate_radius >= 0)) throw std::invalid_argument("mods: duplicate_radius must be non-negative");
  if (!(laf_check_threshold >= 0)) throw std::invalid_argument("mods: laf_check_threshold must be non-negative");
  matcher.validate();
  ransac.validate();
}

int ModsConfig::step_limit() const {
  const int n = static_cast<int>(steps.size());
  return s_max > 0 ? std::min(s_max, n) : n;
}

std::vector<StepConfig> default_ladder() {
  std::vector<StepConfig> ladder;
  auto add = [&](DetectorKind det, std::vector<double> scales, std::vector<double> tilts, double dphi,
                 double threshold, int cap) {
    StepConfig s;
    s.step_id = static_cast<int>(ladder.size()) + 1;
    s.detector = det;
    s.scales = std::move(scales);
    s.tilts = std::move(tilts);
    s.delta_phi_base = dphi;
    s.detector_params.threshold = threshold;
    s.detector_params.min_features = 300;
    s.detector_params.max_features = cap;
    ladder.push_back(s);
  };
  add(DetectorKind::hessian, {1}, {1}, 360, 2e-3, 2000);
  add(DetectorKind::hessian, {1}, {1, 5, 9}, 360, 1e-4, 800);
  add(DetectorKind::dog, {1, 0.25, 0.125}, {1}, 360, 5e-3, 1500);
  add(DetectorKind::dog, {1}, {1, 3, 6, 9}, 360, 5e-3, 600);
  add(DetectorKind::hessian_affine, {1}, {1, 2, 4, 6, 8}, 360, 5e-4, 500);
  add(DetectorKind::hessian_affine, {1}, {1, 2, 4, 6, 8}, 120, 5e-4, 400);
  add(DetectorKind::hessian_affine, {1}, {1, 2, 4, 6, 8, 10}, 60, 5e-4, 300);
  return ladder;
}

ModsConfig default_mods_config() {
  ModsConfig c;
  c.steps = default_ladder();
  return c;
}

namespace {

FeatureSet extract_view(const Image& img, const StepConfig& step, const SynthViewSpec& spec, int view_id) {
  FeatureSet out;
  out.dim = descriptor_dim(step.descriptor);
  SynthView view;
  try {
    view = synth_view(img, spec);
  } catch (const std::invalid_argument&) {
    return out;  // view collapsed below the minimum size
  }
  const ScaleSpace ss = build_scale_space(view.image, step.detector_params);
  std::vector<LocalAffineFrame> lafs = detect(ss, step.detector, step.detector_params);
  if (step.detector == DetectorKind::hessian_affine) {
    std::vector<LocalAffineFrame> adapted;
    const BaumbergParams bp;
    for (const auto& f : lafs) {
      const ShapeResult r = baumberg_adapt(ss, f, bp);
      if (r.accepted()) adapted.push_back(r.laf);
    }
    lafs = std::move(adapted);
  } else {
    for (auto& f : lafs) f.detector = step.detector;
  }
  std::vector<LocalAffineFrame> oriented;
  for (const auto& f : lafs)
    for (const auto& g : oriented_frames(ss, f)) oriented.push_back(g);
  const auto descs = describe_frames(ss, oriented, step.descriptor);
  const auto back = backproject_lafs(oriented, view.A_view, view_id);
  // Rotated views pad the canvas; frames from the padding land outside.
  for (size_t i = 0; i < back.size(); ++i) {
    const Vec2& c = back[i].center;
    const bool inside = c.x() >= 0 && c.y() >= 0 && c.x() <= img.width() - 1 && c.y() <= img.height() - 1;
    if (inside && !descs[i].zero_guard) out.append(back[i], descs[i].values);
  }
  return out;
}

// Views of both images in one parallel loop; results merged in order.
std::pair<FeatureSet, FeatureSet> extract_pair(const Image* img2, const Image& img1, const StepConfig& step) {
  const auto specs = gen_views(step);
  const int nv = static_cast<int>(specs.size());
  const int total = img2 ? 2 * nv : nv;
  std::vector<FeatureSet> parts(total);
  std::vector<std::exception_ptr> errors(total);
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 0; k < total; ++k) {
    try {
      const Image& img = k < nv ? img1 : *img2;
      parts[k] = extract_view(img, step, specs[k % nv], 1000 * step.step_id + k % nv);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  FeatureSet a, b;
  a.dim = b.dim = descriptor_dim(step.descriptor);
  for (int k = 0; k < total; ++k) (k < nv ? a : b).append(parts[k]);
  return {std::move(a), std::move(b)};
}

}  // namespace

FeatureSet extract_step_features(const Image& img, const StepConfig& step) {
  step.validate();
  return extract_pair(nullptr, img, step).first;
}

MatchResult run_mods(const Image& img1, const Image& img2, const ModsConfig& cfg) {
  cfg.validate();
  if (img1.empty() || img2.empty()) throw std::invalid_argument("mods: empty image");
  const double laf_th = cfg.laf_check_threshold > 0 ? cfg.laf_check_threshold : cfg.ransac.inlier_threshold;

  MatchResult result;
  FeatureSet g1, g2;
  g1.dim = g2.dim = descriptor_dim(cfg.steps.front().descriptor);
  int best_verified = -1;

  for (int s = 0; s < cfg.step_limit(); ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    const StepConfig& step = cfg.steps[s];
    if (descriptor_dim(step.descriptor) != g1.dim)
      throw std::invalid_argument("mods: all steps must share the descriptor dimension");
    auto [f1, f2] = extract_pair(&img2, img1, step);
    g1.append(f1);
    g2.append(f2);

    StepRecord rec;
    rec.step_id = step.step_id;
    rec.features1 = g1.size();
    rec.features2 = g2.size();

    auto tentatives = duplicate_filter(match_features(g1, g2, cfg.matcher), cfg.duplicate_radius);
    rec.tentatives = static_cast<int>(tentatives.size());

    std::vector<PointPair> pts;
    std::vector<LafPair> lafs;
    for (const auto& c : tentatives) {
      pts.push_back({c.pa, c.pb});
      lafs.push_back({g1.lafs[c.idx_a], g2.lafs[c.idx_b]});
    }
    std::optional<TwoViewModel> model;
    try {
      model = loransac(pts, cfg.model, cfg.ransac);
    } catch (const NoModelError&) {
    } catch (const std::invalid_argument&) {
      // fewer tentatives than a minimal sample
    }
    std::vector<int> verified;
    if (model) {
      rec.ransac_inliers = static_cast<int>(model->inliers.size());
      verified = laf_check(model->kind, model->M, lafs, model->inliers, laf_th);
    }
    rec.verified = static_cast<int>(verified.size());
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.steps.push_back(rec);
    result.steps_used = s + 1;

    if (model && rec.verified > best_verified) {
      best_verified = rec.verified;
      result.model = model;
      result.matches.clear();
      for (int i : verified) result.matches.push_back({tentatives[i], lafs[i].a, lafs[i].b});
    }
    if (rec.verified >= cfg.theta_m) {
      result.success = true;
      break;
    }
  }
  return result;
}

}  // namespace wxbs
