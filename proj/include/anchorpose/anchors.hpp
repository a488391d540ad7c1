#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "anchorpose/geometry.hpp"
#include "anchorpose/pose_log.hpp"

namespace anchorpose {

enum class AnchorKind {
  kFixedFirst,         // frame 0 of the log anchors every query
  kNearestWithin,      // closest other frame, if closer than threshold_deg
  kTemporalPrevious,   // frame i-1
  kExternalPredicted,  // frame 0, with its pose taken from an estimator
};

const char* to_string(AnchorKind kind);
AnchorKind parse_anchor_kind(std::string_view name);

struct AnchorPolicy {
  AnchorKind kind = AnchorKind::kFixedFirst;
  double threshold_deg = 5.0;   // nearest_within only
  std::string external_source;  // estimator id, external_predicted only

  void validate() const;
};

enum class AnchorPoseSource { kGroundTruth, kPredicted };

const char* to_string(AnchorPoseSource source);

struct AnchorAssignment {
  std::string query_id;
  std::size_t query_index = 0;
  bool paired = false;  // false: no admissible anchor; anchor fields unset
  std::string anchor_id;
  std::size_t anchor_index = 0;
  SE3Posed anchor_pose;
  AnchorPoseSource anchor_pose_source = AnchorPoseSource::kGroundTruth;
  double gap_deg = 0.0;  // ground-truth anchor/query geodesic distance
};

/// Frame id -> pose, e.g. an external estimator's absolute predictions.
using FramePoseMap = std::map<std::string, SE3Posed>;

/**
 * One assignment per frame of the log, in frame order. Unpaired queries are
 * kept (paired == false) so callers can report them.
 *
 * nearest_within searches the whole log except the query itself and breaks
 * ties by the lowest frame index. external_predicted requires
 * `anchor_predictions` to hold a pose for frame 0 (MissingPredictions
 * otherwise).
 */
std::vector<AnchorAssignment> assign_anchors(const PoseLog& log, const AnchorPolicy& policy,
                                             const FramePoseMap* anchor_predictions = nullptr);

struct AnchorErrorPropagation {
  SE3Posed composed_query;
  double rotation_offset_deg = 0.0;
};

/// Composes the exact relative transform with a wrong anchor. By
/// bi-invariance of the geodesic metric the composed rotation error equals the
/// anchor's rotation error.
AnchorErrorPropagation propagate_anchor_error(const SE3Posed& true_anchor, const SE3Posed& predicted_anchor,
                                              const SE3Posed& true_query);

/// Auto-regressive composition: out[0] = start, out[i] = relatives[i-1] * out[i-1].
std::vector<SE3Posed> compose_chain(const SE3Posed& start, std::span<const SE3Posed> relatives);

}  // namespace anchorpose
