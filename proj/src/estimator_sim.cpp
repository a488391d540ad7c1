#include "anchorpose/estimator_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace anchorpose {

void NoiseModel::validate() const {
  if (base_deg < 0.0 || slope_deg_per_deg < 0.0 || trans_noise_mm < 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "noise model parameters must be non-negative");
  }
}

double NoiseModel::magnitude_deg(double difficulty_deg) const {
  return std::clamp(base_deg + slope_deg_per_deg * difficulty_deg, 0.0, 180.0);
}

namespace {

SE3Posed perturb(SE3Posed pose, double magnitude_deg, double trans_noise_mm, Rng& rng) {
  // Both directions are always drawn so the stream layout is fixed.
  const Eigen::Vector3d axis = rng.unit_vector();
  const Eigen::Vector3d shift = rng.unit_vector();
  pose.rotation = Rotationd::FromAngleAxis(deg_to_rad(magnitude_deg), axis) * pose.rotation;
  pose.translation += trans_noise_mm * shift;
  return pose;
}

}  // namespace

SE3Posed simulate_absolute(const SE3Posed& truth, const NoiseModel& nm, const Rotationd& canonical_ref, Rng& rng) {
  return perturb(truth, nm.magnitude_deg(geodesic_deg(truth.rotation, canonical_ref)), nm.trans_noise_mm, rng);
}

SE3Posed simulate_relative(const SE3Posed& anchor, const SE3Posed& query, const NoiseModel& nm, Rng& rng) {
  const double gap = geodesic_deg(anchor.rotation, query.rotation);
  return perturb(relative(query, anchor), nm.magnitude_deg(gap), nm.trans_noise_mm, rng);
}

SimulatedAbsoluteEstimator::SimulatedAbsoluteEstimator(std::string id, NoiseModel noise, Rotationd canonical_ref)
    : id_(std::move(id)), noise_(noise), canonical_ref_(canonical_ref) {
  noise_.validate();
}

SE3Posed SimulatedAbsoluteEstimator::estimate(const EstimateRequest& request) const {
  Rng rng(derive_seed(noise_.seed, {id_, request.subject_id, request.query.frame_id}));
  return simulate_absolute(request.query.pose, noise_, canonical_ref_, rng);
}

SimulatedRelativeEstimator::SimulatedRelativeEstimator(std::string id, NoiseModel noise)
    : id_(std::move(id)), noise_(noise) {
  noise_.validate();
}

SE3Posed SimulatedRelativeEstimator::estimate(const EstimateRequest& request) const {
  if (request.anchor == nullptr) {
    throw Error(ErrorCode::kInvalidConfig, "relative estimator '" + id_ + "' called without an anchor");
  }
  Rng rng(derive_seed(noise_.seed, {id_, request.subject_id, request.anchor->frame_id, request.query.frame_id}));
  return simulate_relative(request.anchor->pose, request.query.pose, noise_, rng);
}

std::unique_ptr<Estimator> make_perfect_estimator(std::string id, EstimatorKind kind) {
  if (kind == EstimatorKind::kAbsolute) {
    return std::make_unique<SimulatedAbsoluteEstimator>(std::move(id), NoiseModel{});
  }
  return std::make_unique<SimulatedRelativeEstimator>(std::move(id), NoiseModel{});
}

void PoseSampler::validate() const {
  for (const AngleRange* r : {&yaw, &pitch, &roll}) {
    if (!(r->lo <= r->hi)) throw Error(ErrorCode::kEmptyRange, "angle range lower bound exceeds upper bound");
  }
  if (yaw.lo < -180.0 || yaw.hi > 180.0 || roll.lo < -180.0 || roll.hi > 180.0 || pitch.lo < -90.0 ||
      pitch.hi > 90.0) {
    throw Error(ErrorCode::kEmptyRange, "angle ranges exceed the Euler convention's domain");
  }
  if (frames_per_log == 0) throw Error(ErrorCode::kEmptyRange, "frames_per_log must be positive");
  if (subjects == 0) throw Error(ErrorCode::kEmptyRange, "subjects must be positive");
  if (step_deg < 0.0 || translation_spread_mm < 0.0) {
    throw Error(ErrorCode::kEmptyRange, "step and translation spread must be non-negative");
  }
}

namespace {

double reflect(double v, const AngleRange& r) {
  if (r.hi == r.lo) return r.lo;
  const double span = r.hi - r.lo;
  double x = std::fmod(v - r.lo, 2.0 * span);
  if (x < 0.0) x += 2.0 * span;
  return x <= span ? r.lo + x : r.hi - (x - span);
}

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
  return buf;
}

}  // namespace

std::vector<PoseLog> sample_logs(const PoseSampler& s) {
  s.validate();
  std::vector<PoseLog> logs;
  logs.reserve(s.subjects);
  for (std::size_t subject = 0; subject < s.subjects; ++subject) {
    PoseLog log;
    log.subject_id = numbered("S", subject, 2);
    log.frame_tag = s.frame_tag;
    Rng rng(derive_seed(s.seed, {"sampler", log.subject_id}));

    double e[3] = {std::clamp(0.0, s.yaw.lo, s.yaw.hi), std::clamp(0.0, s.pitch.lo, s.pitch.hi),
                   std::clamp(0.0, s.roll.lo, s.roll.hi)};
    const AngleRange* ranges[3] = {&s.yaw, &s.pitch, &s.roll};
    for (std::size_t i = 0; i < s.frames_per_log; ++i) {
      Eigen::Vector3d t = s.translation_mean_mm;
      if (i > 0) {
        for (int a = 0; a < 3; ++a) {
          e[a] = s.step_deg > 0.0 ? reflect(e[a] + rng.uniform(-s.step_deg, s.step_deg), *ranges[a])
                                  : rng.uniform(ranges[a]->lo, ranges[a]->hi);
        }
        for (int a = 0; a < 3; ++a) t[a] += rng.uniform(-s.translation_spread_mm, s.translation_spread_mm);
      }
      FrameRecord f;
      f.frame_id = numbered("f", i, 5);
      f.index = i;
      f.pose = SE3Posed{rotation_from_euler(e[0], e[1], e[2]), t, s.frame_tag};
      log.frames.push_back(std::move(f));
    }
    logs.push_back(std::move(log));
  }
  return logs;
}

const char* to_string(BenchmarkKind kind) {
  switch (kind) {
    case BenchmarkKind::kHardPairs: return "hard";
    case BenchmarkKind::kEasyPairs: return "easy";
    case BenchmarkKind::kSweepGap: return "sweep_gap";
    case BenchmarkKind::kSweepPose: return "sweep_pose";
  }
  return "hard";
}

BenchmarkKind parse_benchmark_kind(std::string_view name) {
  for (BenchmarkKind k : {BenchmarkKind::kHardPairs, BenchmarkKind::kEasyPairs, BenchmarkKind::kSweepGap,
                          BenchmarkKind::kSweepPose}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown benchmark '" + std::string(name) + "'");
}

EndToEndResult run_end_to_end(std::span<const PoseLog> logs, std::span<const Estimator* const> estimators,
                              const EndToEndConfig& config) {
  EndToEndResult result;
  switch (config.benchmark) {
    case BenchmarkKind::kHardPairs:
    case BenchmarkKind::kEasyPairs: {
      result.pairs = config.benchmark == BenchmarkKind::kHardPairs ? build_hard_pairs(logs, config.pairs)
                                                                   : build_easy_pairs(logs, config.pairs);
      PairEvalOptions eval;
      eval.anchor_estimator = config.anchor_estimator;
      for (const Estimator* e : estimators) {
        result.metrics.emplace_back(e->id(), evaluate_estimator(*result.pairs, logs, *e, eval));
      }
      break;
    }
    case BenchmarkKind::kSweepGap:
    case BenchmarkKind::kSweepPose: {
      SweepOptions opts;
      opts.axis = config.benchmark == BenchmarkKind::kSweepGap ? SweepAxis::kAnchorQueryGap
                                                               : SweepAxis::kAbsoluteQueryPose;
      opts.bin_width_deg = config.bin_width_deg;
      opts.anchor_estimator = config.anchor_estimator;
      result.sweep = sweep(logs, estimators, config.policy, opts);
      break;
    }
  }
  return result;
}

}  // namespace anchorpose
