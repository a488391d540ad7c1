#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anchorpose/anchors.hpp"
#include "anchorpose/benchmark.hpp"
#include "anchorpose/estimator.hpp"
#include "anchorpose/pose_log.hpp"
#include "anchorpose/random.hpp"

namespace anchorpose {

/**
 * Error model of a simulated estimator. Each prediction is rotated by a
 * left-multiplied perturbation about a uniformly random axis with magnitude
 *
 *   base_deg + slope_deg_per_deg * difficulty     (clamped to [0, 180])
 *
 * where difficulty is the distance to the canonical frame (absolute) or the
 * anchor-query gap (relative). Translation moves trans_noise_mm in a uniformly
 * random direction. These are illustrative harness parameters only.
 */
struct NoiseModel {
  double base_deg = 0.0;
  double slope_deg_per_deg = 0.0;
  double trans_noise_mm = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  double magnitude_deg(double difficulty_deg) const;
};

/// Draws one perturbed absolute pose from `rng`.
SE3Posed simulate_absolute(const SE3Posed& truth, const NoiseModel& nm, const Rotationd& canonical_ref, Rng& rng);

/// Draws one noisy relative transform T_{q<-a}.
SE3Posed simulate_relative(const SE3Posed& anchor, const SE3Posed& query, const NoiseModel& nm, Rng& rng);

/// Absolute estimator whose per-query noise stream is keyed on
/// (seed, id, subject, frame): results do not depend on call order.
class SimulatedAbsoluteEstimator final : public Estimator {
 public:
  SimulatedAbsoluteEstimator(std::string id, NoiseModel noise, Rotationd canonical_ref = Rotationd::Identity());

  const std::string& id() const override { return id_; }
  EstimatorKind kind() const override { return EstimatorKind::kAbsolute; }
  SE3Posed estimate(const EstimateRequest& request) const override;

  const NoiseModel& noise() const { return noise_; }

 private:
  std::string id_;
  NoiseModel noise_;
  Rotationd canonical_ref_;
};

/// Relative estimator; stream keyed on (seed, id, subject, anchor, query).
class SimulatedRelativeEstimator final : public Estimator {
 public:
  SimulatedRelativeEstimator(std::string id, NoiseModel noise);

  const std::string& id() const override { return id_; }
  EstimatorKind kind() const override { return EstimatorKind::kRelative; }
  SE3Posed estimate(const EstimateRequest& request) const override;

  const NoiseModel& noise() const { return noise_; }

 private:
  std::string id_;
  NoiseModel noise_;
};

/// Exact estimator of either kind (zero noise), handy as a control.
std::unique_ptr<Estimator> make_perfect_estimator(std::string id, EstimatorKind kind);

struct AngleRange {
  double lo = 0.0;
  double hi = 0.0;
};

/**
 * Synthetic pose logs. Frame 0 of every log sits at the in-range Euler triple
 * closest to (0, 0, 0), so fixed-first anchors and neutral selection are
 * well posed. With step_deg == 0 the remaining frames are independent uniform
 * draws; otherwise each Euler angle follows a random walk with steps uniform
 * in [-step_deg, step_deg], reflected at the range bounds (a head-motion-like
 * sequence).
 */
struct PoseSampler {
  AngleRange yaw{-90.0, 90.0};
  AngleRange pitch{-40.0, 40.0};
  AngleRange roll{-30.0, 30.0};
  std::size_t frames_per_log = 500;
  std::size_t subjects = 4;
  double step_deg = 0.0;
  Eigen::Vector3d translation_mean_mm{0.0, 0.0, 1000.0};
  double translation_spread_mm = 50.0;
  std::string frame_tag = "sim";
  std::uint64_t seed = 0;

  void validate() const;
};

std::vector<PoseLog> sample_logs(const PoseSampler& sampler);

enum class BenchmarkKind { kHardPairs, kEasyPairs, kSweepGap, kSweepPose };

const char* to_string(BenchmarkKind kind);
BenchmarkKind parse_benchmark_kind(std::string_view name);

struct EndToEndConfig {
  BenchmarkKind benchmark = BenchmarkKind::kHardPairs;
  PairOptions pairs;
  AnchorPolicy policy;        // sweeps only
  double bin_width_deg = 5.0;  // sweeps only
  const Estimator* anchor_estimator = nullptr;  // predicted anchors, if any
};

struct EndToEndResult {
  std::optional<PairSet> pairs;
  std::vector<std::pair<std::string, MetricReport>> metrics;  // pair benchmarks
  std::optional<SweepReport> sweep;
};

/// Pair construction or sweep, then prediction and scoring for every
/// estimator. Deterministic for fixed seeds.
EndToEndResult run_end_to_end(std::span<const PoseLog> logs, std::span<const Estimator* const> estimators,
                              const EndToEndConfig& config);

}  // namespace anchorpose
