#pragma once

#include <compare>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

#include "anchorpose/geometry.hpp"
#include "anchorpose/pose_log.hpp"

namespace anchorpose {

enum class EstimatorKind { kAbsolute, kRelative };

const char* to_string(EstimatorKind kind);

/// What an estimator may look at for one anchor/query pair. Absolute
/// estimators ignore the anchor.
struct EstimateRequest {
  std::string_view subject_id;
  const FrameRecord* anchor = nullptr;
  const FrameRecord& query;
};

/**
 * Pose-level stand-in for a head-pose model. Absolute estimators return the
 * query pose; relative estimators return T_{q<-a}, which the harness composes
 * with whichever anchor pose the protocol supplies.
 */
class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual const std::string& id() const = 0;
  virtual EstimatorKind kind() const = 0;
  virtual SE3Posed estimate(const EstimateRequest& request) const = 0;
  virtual bool provides_translation() const { return true; }
};

/// Absolute query pose for a pair: relative outputs are composed with
/// `anchor_pose` (ground truth or predicted).
SE3Posed predict_query_pose(const Estimator& estimator, std::string_view subject_id, const FrameRecord* anchor,
                            const SE3Posed& anchor_pose, const FrameRecord& query);

struct QueryKey {
  std::string subject_id;
  std::string frame_id;
  auto operator<=>(const QueryKey&) const = default;
};

struct Prediction {
  SE3Posed pose;
  bool has_translation = true;
};

using PredictionMap = std::map<QueryKey, Prediction>;

/**
 * Predictions CSV: header row, then one row per query. Recognized columns:
 *   [subject_id,]query_id,qw,qx,qy,qz[,tx_mm,ty_mm,tz_mm]
 * Without subject_id, `default_subject` is used for every row.
 */
PredictionMap read_predictions_csv(std::istream& in, const std::string& source, const std::string& default_subject,
                                   const std::string& frame_tag);
PredictionMap read_predictions_csv(const std::filesystem::path& path, const std::string& default_subject,
                                   const std::string& frame_tag);
/// Translation columns are written only when every prediction has one.
void write_predictions_csv(std::ostream& out, const PredictionMap& predictions);

/// Absolute estimator replaying precomputed predictions (e.g. a real model's
/// output produced elsewhere). Missing queries raise MissingPrediction.
class TableEstimator final : public Estimator {
 public:
  TableEstimator(std::string id, PredictionMap predictions);

  const std::string& id() const override { return id_; }
  EstimatorKind kind() const override { return EstimatorKind::kAbsolute; }
  SE3Posed estimate(const EstimateRequest& request) const override;
  bool provides_translation() const override;

  const PredictionMap& predictions() const { return predictions_; }

 private:
  std::string id_;
  PredictionMap predictions_;
};

}  // namespace anchorpose
