#include <cmath>

#include "anchorpose/benchmark.hpp"

namespace anchorpose {

const char* to_string(SweepAxis axis) {
  return axis == SweepAxis::kAnchorQueryGap ? "anchor_query_gap" : "absolute_query_pose";
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "anchor_query_gap") return SweepAxis::kAnchorQueryGap;
  if (name == "absolute_query_pose") return SweepAxis::kAbsoluteQueryPose;
  throw Error(ErrorCode::kInvalidConfig, "unknown sweep axis '" + std::string(name) + "'");
}

FramePoseMap predict_all_frames(const PoseLog& log, const Estimator& estimator) {
  if (estimator.kind() != EstimatorKind::kAbsolute) {
    throw Error(ErrorCode::kInvalidConfig, "anchor estimator '" + estimator.id() + "' must be absolute");
  }
  FramePoseMap out;
  for (const FrameRecord& f : log.frames) {
    SE3Posed pose = estimator.estimate(EstimateRequest{log.subject_id, nullptr, f});
    pose.frame_tag = log.frame_tag;
    out.emplace(f.frame_id, std::move(pose));
  }
  return out;
}

namespace {

struct Sample {
  double axis_value = 0.0;
  SE3Posed truth;
  std::vector<SE3Posed> predicted;  // one per estimator
};

}  // namespace

SweepReport sweep(std::span<const PoseLog> logs, std::span<const Estimator* const> estimators,
                  const AnchorPolicy& policy, const SweepOptions& options) {
  if (!(options.bin_width_deg > 0.0)) throw Error(ErrorCode::kInvalidConfig, "bin width must be positive");
  if (options.axis == SweepAxis::kAbsoluteQueryPose && policy.kind != AnchorKind::kNearestWithin) {
    throw Error(ErrorCode::kInvalidConfig, "absolute_query_pose sweeps require a nearest_within anchor policy");
  }
  if (estimators.empty()) throw Error(ErrorCode::kInvalidConfig, "sweep needs at least one estimator");

  SweepReport report;
  report.axis = options.axis;
  report.bin_width_deg = options.bin_width_deg;
  for (const Estimator* e : estimators) report.estimator_ids.push_back(e->id());

  std::vector<Sample> samples;
  for (const PoseLog& log : logs) {
    FramePoseMap anchor_predictions;
    if (policy.kind == AnchorKind::kExternalPredicted) {
      if (options.anchor_estimator == nullptr) {
        throw Error(ErrorCode::kMissingPredictions,
                    "external_predicted policy needs estimator '" + policy.external_source + "'");
      }
      anchor_predictions = predict_all_frames(log, *options.anchor_estimator);
    }
    const std::vector<AnchorAssignment> assignments = assign_anchors(log, policy, &anchor_predictions);
    std::vector<double> pose_axis;
    if (options.axis == SweepAxis::kAbsoluteQueryPose) pose_axis = distances_to_neutral(log);

    for (const AnchorAssignment& a : assignments) {
      if (!a.paired) {
        ++report.unpaired;
        continue;
      }
      ++report.paired;
      const FrameRecord& query = log.frames[a.query_index];
      const FrameRecord& anchor = log.frames[a.anchor_index];
      Sample s;
      s.axis_value = options.axis == SweepAxis::kAnchorQueryGap ? a.gap_deg : pose_axis[a.query_index];
      s.truth = query.pose;
      for (const Estimator* e : estimators) {
        s.predicted.push_back(predict_query_pose(*e, log.subject_id, &anchor, a.anchor_pose, query));
      }
      samples.push_back(std::move(s));
    }
  }
  if (samples.empty()) return report;

  const double width = options.bin_width_deg;
  std::size_t max_bin = 0;
  std::vector<std::size_t> bin_of(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    bin_of[i] = static_cast<std::size_t>(std::floor(std::max(0.0, samples[i].axis_value) / width));
    max_bin = std::max(max_bin, bin_of[i]);
  }

  for (std::size_t b = 0; b <= max_bin; ++b) {
    SweepBin bin;
    bin.lo_deg = static_cast<double>(b) * width;
    bin.hi_deg = static_cast<double>(b + 1) * width;
    std::vector<SE3Posed> truth;
    std::vector<std::vector<SE3Posed>> predicted(estimators.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (bin_of[i] != b) continue;
      truth.push_back(samples[i].truth);
      for (std::size_t e = 0; e < estimators.size(); ++e) predicted[e].push_back(samples[i].predicted[e]);
    }
    bin.pair_count = truth.size();
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      bin.per_estimator.push_back(evaluate_samples(truth, predicted[e], estimators[e]->provides_translation()));
    }
    report.bins.push_back(std::move(bin));
  }
  return report;
}

}  // namespace anchorpose
