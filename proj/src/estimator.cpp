#include "anchorpose/estimator.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "anchorpose/text.hpp"

namespace anchorpose {

const char* to_string(EstimatorKind kind) {
  return kind == EstimatorKind::kAbsolute ? "absolute" : "relative";
}

SE3Posed predict_query_pose(const Estimator& estimator, std::string_view subject_id, const FrameRecord* anchor,
                            const SE3Posed& anchor_pose, const FrameRecord& query) {
  const EstimateRequest request{subject_id, anchor, query};
  if (estimator.kind() == EstimatorKind::kAbsolute) return estimator.estimate(request);
  if (anchor == nullptr) {
    throw Error(ErrorCode::kInvalidConfig, "relative estimator '" + estimator.id() + "' needs an anchor");
  }
  return apply_anchor(estimator.estimate(request), anchor_pose);
}

TableEstimator::TableEstimator(std::string id, PredictionMap predictions)
    : id_(std::move(id)), predictions_(std::move(predictions)) {}

SE3Posed TableEstimator::estimate(const EstimateRequest& request) const {
  const auto it = predictions_.find(QueryKey{std::string(request.subject_id), request.query.frame_id});
  if (it == predictions_.end()) {
    throw Error(ErrorCode::kMissingPrediction, "estimator '" + id_ + "' has no prediction for " +
                                                   std::string(request.subject_id) + "/" + request.query.frame_id);
  }
  SE3Posed pose = it->second.pose;
  pose.frame_tag = request.query.pose.frame_tag;
  return pose;
}

bool TableEstimator::provides_translation() const {
  for (const auto& [key, p] : predictions_) {
    if (!p.has_translation) return false;
  }
  return true;
}

PredictionMap read_predictions_csv(std::istream& in, const std::string& source, const std::string& default_subject,
                                   const std::string& frame_tag) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, source + ": empty predictions file");
  ++line_no;
  const std::vector<std::string> header = split(trim(line), ',');
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[std::string(trim(header[i]))] = i;
  for (const char* required : {"query_id", "qw", "qx", "qy", "qz"}) {
    if (!col.count(required)) {
      throw Error(ErrorCode::kParseError, source + ":1: missing column '" + required + "'");
    }
  }
  const bool has_subject = col.count("subject_id") > 0;
  const bool has_t = col.count("tx_mm") && col.count("ty_mm") && col.count("tz_mm");

  PredictionMap out;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split(trim(line), ',');
    if (f.size() != header.size()) {
      throw Error(ErrorCode::kParseError, source + ":" + std::to_string(line_no) + ": expected " +
                                              std::to_string(header.size()) + " fields");
    }
    auto number = [&](const char* name) {
      return parse_number(f[col.at(name)], source + ":" + std::to_string(line_no) + " field '" + name + "'");
    };
    QueryKey key{has_subject ? std::string(trim(f[col.at("subject_id")])) : default_subject,
                 std::string(trim(f[col.at("query_id")]))};
    const Eigen::Quaterniond q(number("qw"), number("qx"), number("qy"), number("qz"));
    if (std::abs(q.norm() - 1.0) > kQuaternionNormTolerance) {
      throw Error(ErrorCode::kInvariantViolation,
                  source + ":" + std::to_string(line_no) + ": quaternion is not unit");
    }
    Prediction p;
    p.pose.rotation = Rotationd(q);
    p.pose.frame_tag = frame_tag;
    p.has_translation = has_t;
    if (has_t) p.pose.translation = {number("tx_mm"), number("ty_mm"), number("tz_mm")};
    if (!out.emplace(std::move(key), p).second) {
      throw Error(ErrorCode::kParseError, source + ":" + std::to_string(line_no) + ": duplicate query");
    }
  }
  return out;
}

PredictionMap read_predictions_csv(const std::filesystem::path& path, const std::string& default_subject,
                                   const std::string& frame_tag) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  return read_predictions_csv(in, path.string(), default_subject, frame_tag);
}

void write_predictions_csv(std::ostream& out, const PredictionMap& predictions) {
  bool with_t = true;
  for (const auto& [key, p] : predictions) with_t = with_t && p.has_translation;
  out << "subject_id,query_id,qw,qx,qy,qz" << (with_t ? ",tx_mm,ty_mm,tz_mm" : "") << '\n';
  for (const auto& [key, p] : predictions) {
    const auto& q = p.pose.rotation;
    const auto& t = p.pose.translation;
    out << key.subject_id << ',' << key.frame_id;
    for (double v : {q.w(), q.x(), q.y(), q.z()}) out << ',' << format_number(v);
    if (with_t) {
      for (double v : {t.x(), t.y(), t.z()}) out << ',' << format_number(v);
    }
    out << '\n';
  }
}

}  // namespace anchorpose
