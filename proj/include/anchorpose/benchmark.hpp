#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "anchorpose/anchors.hpp"
#include "anchorpose/estimator.hpp"
#include "anchorpose/geometry.hpp"
#include "anchorpose/pose_log.hpp"

namespace anchorpose {

// ============================================================================
// Neutral reference
// ============================================================================

/// Index of the frame minimizing the mean geodesic distance to all other
/// frames (the per-subject "neutral" reference); ties go to the lowest index.
std::size_t neutral_reference_index(const PoseLog& log);

/// Geodesic distance of every frame to the neutral reference, in degrees.
std::vector<double> distances_to_neutral(const PoseLog& log);

// ============================================================================
// Pair sets
// ============================================================================

struct Pair {
  std::string subject_id;
  std::string anchor_id;
  std::string query_id;
  double gap_deg = 0.0;
};

struct PairStats {
  std::size_t count = 0;
  double gap_mean_deg = 0.0;
  double gap_max_deg = 0.0;
};

PairStats compute_pair_stats(std::span<const Pair> pairs);

struct PairSet {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<Pair> pairs;
  PairStats stats;
  std::vector<std::string> skipped_subjects;  // multi-log builds only
};

enum class PairScope {
  kPerSubject,  // n_pairs drawn from every subject
  kTotal,       // n_pairs drawn from the union of all subjects' candidates
};

const char* to_string(PairScope scope);
PairScope parse_pair_scope(std::string_view name);

struct PairOptions {
  double neutral_thresh_deg = 15.0;
  double extreme_thresh_deg = 45.0;  // hard pairs
  double max_gap_deg = 10.0;         // easy pairs
  std::size_t n_pairs = 360;
  std::uint64_t seed = 0;
  PairScope scope = PairScope::kPerSubject;
};

/**
 * Neutral anchors (distance to the neutral reference < neutral_thresh_deg)
 * paired with extreme queries (distance > extreme_thresh_deg). When more
 * candidates exist than n_pairs, n_pairs are drawn without replacement under
 * the seed; pairs are listed in candidate order (anchor index, query index).
 * InsufficientFrames when either group is empty.
 */
PairSet build_hard_pairs(const PoseLog& log, const PairOptions& options);

/// Ordered pairs of distinct near-neutral frames with gap <= max_gap_deg.
/// InsufficientFrames when no such pair exists.
PairSet build_easy_pairs(const PoseLog& log, const PairOptions& options);

/// Multi-subject builds; subjects without candidates are listed in
/// skipped_subjects, and InsufficientFrames is raised only if all are.
PairSet build_hard_pairs(std::span<const PoseLog> logs, const PairOptions& options);
PairSet build_easy_pairs(std::span<const PoseLog> logs, const PairOptions& options);

void write_pairs_csv(std::ostream& out, const PairSet& pairs);
PairSet read_pairs_csv(std::istream& in, const std::string& source);

// ============================================================================
// Metrics
// ============================================================================

struct TranslationMetrics {
  double x_mae_mm = 0.0;
  double y_mae_mm = 0.0;
  double z_mae_mm = 0.0;
  double l2_mean_mm = 0.0;
};

struct MetricReport {
  double yaw_mae_deg = 0.0;
  double pitch_mae_deg = 0.0;
  double roll_mae_deg = 0.0;
  double mae_deg = 0.0;  // mean of the three axes
  double geodesic_mae_deg = 0.0;
  std::size_t n = 0;
  std::optional<TranslationMetrics> translation;
};

/// Per-axis absolute Euler errors with differences wrapped to [-180, 180).
EulerAnglesd euler_abs_error(const Rotationd& predicted, const Rotationd& truth);

/**
 * Metrics over aligned truth/prediction samples. Sums run in sample order, so
 * the result is independent of how the samples were produced.
 */
MetricReport evaluate_samples(std::span<const SE3Posed> truth, std::span<const SE3Posed> predicted,
                              bool with_translation);

/// Looks up each pair's query in `predictions` (MissingPrediction if absent)
/// and its ground truth in `truth`.
MetricReport evaluate(const PairSet& pairs, const PredictionMap& predictions, std::span<const PoseLog> truth);

/// Single-subject form keyed by query id.
MetricReport evaluate(const PairSet& pairs, const std::map<std::string, SE3Posed>& predictions,
                      const PoseLog& truth);

struct PairEvalOptions {
  /// When set, anchors use this absolute estimator's prediction instead of
  /// the ground-truth anchor pose.
  const Estimator* anchor_estimator = nullptr;
};

/// Runs an estimator on every pair and scores its composed query poses.
MetricReport evaluate_estimator(const PairSet& pairs, std::span<const PoseLog> logs, const Estimator& estimator,
                                const PairEvalOptions& options = {});

// ============================================================================
// Binned sweeps
// ============================================================================

enum class SweepAxis { kAnchorQueryGap, kAbsoluteQueryPose };

const char* to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view name);

struct SweepBin {
  double lo_deg = 0.0;
  double hi_deg = 0.0;
  std::size_t pair_count = 0;
  std::vector<MetricReport> per_estimator;  // aligned with SweepReport::estimator_ids
};

struct SweepReport {
  SweepAxis axis = SweepAxis::kAnchorQueryGap;
  double bin_width_deg = 5.0;
  std::vector<std::string> estimator_ids;
  std::vector<SweepBin> bins;  // contiguous from 0, empty bins kept
  std::size_t paired = 0;
  std::size_t unpaired = 0;
};

struct SweepOptions {
  SweepAxis axis = SweepAxis::kAnchorQueryGap;
  double bin_width_deg = 5.0;
  /// Estimator supplying anchor poses for external_predicted policies.
  const Estimator* anchor_estimator = nullptr;
};

/**
 * Assigns anchors per log, predicts every paired query with each estimator
 * and bins by anchor-query gap or by the query's distance to the neutral
 * reference. The absolute-pose axis requires a nearest_within policy.
 */
SweepReport sweep(std::span<const PoseLog> logs, std::span<const Estimator* const> estimators,
                  const AnchorPolicy& policy, const SweepOptions& options = {});

/// Anchor poses predicted by an absolute estimator for every frame of a log.
FramePoseMap predict_all_frames(const PoseLog& log, const Estimator& estimator);

/// Spearman rank correlation (average ranks for ties).
double spearman_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace anchorpose
