#include "anchorpose/anchors.hpp"

#include <cmath>

namespace anchorpose {

const char* to_string(AnchorKind kind) {
  switch (kind) {
    case AnchorKind::kFixedFirst: return "fixed_first";
    case AnchorKind::kNearestWithin: return "nearest_within";
    case AnchorKind::kTemporalPrevious: return "temporal_previous";
    case AnchorKind::kExternalPredicted: return "external_predicted";
  }
  return "fixed_first";
}

AnchorKind parse_anchor_kind(std::string_view name) {
  for (AnchorKind k : {AnchorKind::kFixedFirst, AnchorKind::kNearestWithin, AnchorKind::kTemporalPrevious,
                       AnchorKind::kExternalPredicted}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown anchor policy '" + std::string(name) + "'");
}

const char* to_string(AnchorPoseSource source) {
  return source == AnchorPoseSource::kGroundTruth ? "ground_truth" : "predicted";
}

void AnchorPolicy::validate() const {
  if (kind == AnchorKind::kNearestWithin && !(threshold_deg > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "nearest_within needs threshold_deg > 0");
  }
  if (kind == AnchorKind::kExternalPredicted && external_source.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "external_predicted needs an external_source estimator id");
  }
}

namespace {

AnchorAssignment paired_with(const PoseLog& log, std::size_t query, std::size_t anchor) {
  AnchorAssignment a;
  a.query_id = log.frames[query].frame_id;
  a.query_index = query;
  a.paired = true;
  a.anchor_id = log.frames[anchor].frame_id;
  a.anchor_index = anchor;
  a.anchor_pose = log.frames[anchor].pose;
  a.anchor_pose_source = AnchorPoseSource::kGroundTruth;
  a.gap_deg = geodesic_deg(log.frames[anchor].pose.rotation, log.frames[query].pose.rotation);
  return a;
}

AnchorAssignment unpaired(const PoseLog& log, std::size_t query) {
  AnchorAssignment a;
  a.query_id = log.frames[query].frame_id;
  a.query_index = query;
  return a;
}

}  // namespace

std::vector<AnchorAssignment> assign_anchors(const PoseLog& log, const AnchorPolicy& policy,
                                             const FramePoseMap* anchor_predictions) {
  policy.validate();
  log.validate();
  const std::size_t n = log.frames.size();
  std::vector<AnchorAssignment> out;
  out.reserve(n);

  switch (policy.kind) {
    case AnchorKind::kFixedFirst:
      for (std::size_t i = 0; i < n; ++i) out.push_back(paired_with(log, i, 0));
      break;

    case AnchorKind::kTemporalPrevious:
      out.push_back(unpaired(log, 0));
      for (std::size_t i = 1; i < n; ++i) out.push_back(paired_with(log, i, i - 1));
      break;

    case AnchorKind::kNearestWithin: {
      // |<qa, qb>| is monotone decreasing in the geodesic angle, so the argmax
      // of the dot product is the nearest frame.
      std::vector<Eigen::Vector4d> coeffs(n);
      for (std::size_t i = 0; i < n; ++i) coeffs[i] = log.frames[i].pose.rotation.quaternion().coeffs();
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = n;
        double best_dot = -1.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          const double d = std::abs(coeffs[i].dot(coeffs[j]));
          if (d > best_dot) {
            best_dot = d;
            best = j;
          }
        }
        if (best == n) {
          out.push_back(unpaired(log, i));
          continue;
        }
        AnchorAssignment a = paired_with(log, i, best);
        out.push_back(a.gap_deg < policy.threshold_deg ? std::move(a) : unpaired(log, i));
      }
      break;
    }

    case AnchorKind::kExternalPredicted: {
      const std::string& first_id = log.frames.front().frame_id;
      if (anchor_predictions == nullptr) {
        throw Error(ErrorCode::kMissingPredictions,
                    "external_predicted anchors need predictions from '" + policy.external_source + "'");
      }
      const auto it = anchor_predictions->find(first_id);
      if (it == anchor_predictions->end()) {
        throw Error(ErrorCode::kMissingPredictions, "estimator '" + policy.external_source +
                                                        "' has no prediction for anchor frame '" + first_id +
                                                        "' of subject '" + log.subject_id + "'");
      }
      for (std::size_t i = 0; i < n; ++i) {
        AnchorAssignment a = paired_with(log, i, 0);
        a.anchor_pose = it->second;
        a.anchor_pose.frame_tag = log.frame_tag;
        a.anchor_pose_source = AnchorPoseSource::kPredicted;
        out.push_back(std::move(a));
      }
      break;
    }
  }
  return out;
}

AnchorErrorPropagation propagate_anchor_error(const SE3Posed& true_anchor, const SE3Posed& predicted_anchor,
                                              const SE3Posed& true_query) {
  detail::require_same_frame(true_anchor, predicted_anchor);
  AnchorErrorPropagation out;
  out.composed_query = apply_anchor(relative(true_query, true_anchor), predicted_anchor);
  out.rotation_offset_deg = geodesic_deg(out.composed_query.rotation, true_query.rotation);
  return out;
}

std::vector<SE3Posed> compose_chain(const SE3Posed& start, std::span<const SE3Posed> relatives) {
  std::vector<SE3Posed> out;
  out.reserve(relatives.size() + 1);
  out.push_back(start);
  for (const SE3Posed& rel : relatives) out.push_back(apply_anchor(rel, out.back()));
  return out;
}

}  // namespace anchorpose
