#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "anchorpose/benchmark.hpp"

namespace anchorpose {

EulerAnglesd euler_abs_error(const Rotationd& predicted, const Rotationd& truth) {
  const EulerAnglesd p = euler_from_rotation(predicted);
  const EulerAnglesd t = euler_from_rotation(truth);
  EulerAnglesd e;
  e.yaw = std::abs(wrap_deg(p.yaw - t.yaw));
  e.pitch = std::abs(wrap_deg(p.pitch - t.pitch));
  e.roll = std::abs(wrap_deg(p.roll - t.roll));
  e.gimbal_lock = p.gimbal_lock || t.gimbal_lock;
  return e;
}

MetricReport evaluate_samples(std::span<const SE3Posed> truth, std::span<const SE3Posed> predicted,
                              bool with_translation) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::kInvariantViolation, "truth and prediction counts differ");
  }
  MetricReport r;
  r.n = truth.size();
  TranslationMetrics tm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const EulerAnglesd e = euler_abs_error(predicted[i].rotation, truth[i].rotation);
    r.yaw_mae_deg += e.yaw;
    r.pitch_mae_deg += e.pitch;
    r.roll_mae_deg += e.roll;
    r.geodesic_mae_deg += geodesic_deg(predicted[i].rotation, truth[i].rotation);
    if (with_translation) {
      const Eigen::Vector3d d = predicted[i].translation - truth[i].translation;
      tm.x_mae_mm += std::abs(d.x());
      tm.y_mae_mm += std::abs(d.y());
      tm.z_mae_mm += std::abs(d.z());
      tm.l2_mean_mm += d.norm();
    }
  }
  if (r.n > 0) {
    const double n = static_cast<double>(r.n);
    r.yaw_mae_deg /= n;
    r.pitch_mae_deg /= n;
    r.roll_mae_deg /= n;
    r.geodesic_mae_deg /= n;
    tm.x_mae_mm /= n;
    tm.y_mae_mm /= n;
    tm.z_mae_mm /= n;
    tm.l2_mean_mm /= n;
  }
  r.mae_deg = (r.yaw_mae_deg + r.pitch_mae_deg + r.roll_mae_deg) / 3.0;
  if (with_translation) r.translation = tm;
  return r;
}

namespace {

using FrameIndex = std::unordered_map<std::string, const FrameRecord*>;

std::unordered_map<std::string, FrameIndex> index_logs(std::span<const PoseLog> logs) {
  std::unordered_map<std::string, FrameIndex> out;
  for (const PoseLog& log : logs) {
    FrameIndex& idx = out[log.subject_id];
    for (const FrameRecord& f : log.frames) idx.emplace(f.frame_id, &f);
  }
  return out;
}

const FrameRecord& lookup(const std::unordered_map<std::string, FrameIndex>& index, const std::string& subject,
                          const std::string& frame) {
  const auto s = index.find(subject);
  if (s != index.end()) {
    const auto f = s->second.find(frame);
    if (f != s->second.end()) return *f->second;
  }
  throw Error(ErrorCode::kInvariantViolation, "ground truth has no frame " + subject + "/" + frame);
}

}  // namespace

MetricReport evaluate(const PairSet& pairs, const PredictionMap& predictions, std::span<const PoseLog> truth) {
  const auto index = index_logs(truth);
  std::vector<SE3Posed> t, p;
  t.reserve(pairs.pairs.size());
  p.reserve(pairs.pairs.size());
  bool with_translation = true;
  for (const Pair& pair : pairs.pairs) {
    const auto it = predictions.find(QueryKey{pair.subject_id, pair.query_id});
    if (it == predictions.end()) {
      throw Error(ErrorCode::kMissingPrediction, "no prediction for query '" + pair.query_id + "' of subject '" +
                                                     pair.subject_id + "'");
    }
    t.push_back(lookup(index, pair.subject_id, pair.query_id).pose);
    p.push_back(it->second.pose);
    with_translation = with_translation && it->second.has_translation;
  }
  return evaluate_samples(t, p, with_translation);
}

MetricReport evaluate(const PairSet& pairs, const std::map<std::string, SE3Posed>& predictions,
                      const PoseLog& truth) {
  PredictionMap keyed;
  for (const auto& [id, pose] : predictions) keyed.emplace(QueryKey{truth.subject_id, id}, Prediction{pose, true});
  return evaluate(pairs, keyed, std::span<const PoseLog>(&truth, 1));
}

MetricReport evaluate_estimator(const PairSet& pairs, std::span<const PoseLog> logs, const Estimator& estimator,
                                const PairEvalOptions& options) {
  const auto index = index_logs(logs);
  std::vector<SE3Posed> t, p;
  t.reserve(pairs.pairs.size());
  p.reserve(pairs.pairs.size());
  for (const Pair& pair : pairs.pairs) {
    const FrameRecord& anchor = lookup(index, pair.subject_id, pair.anchor_id);
    const FrameRecord& query = lookup(index, pair.subject_id, pair.query_id);
    SE3Posed anchor_pose = anchor.pose;
    if (options.anchor_estimator != nullptr) {
      anchor_pose = options.anchor_estimator->estimate(EstimateRequest{pair.subject_id, nullptr, anchor});
      anchor_pose.frame_tag = anchor.pose.frame_tag;
    }
    t.push_back(query.pose);
    p.push_back(predict_query_pose(estimator, pair.subject_id, &anchor, anchor_pose, query));
  }
  return evaluate_samples(t, p, estimator.provides_translation());
}

double spearman_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::kInvariantViolation, "spearman_correlation needs two equal-length samples of size >= 2");
  }
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const std::vector<double> rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace anchorpose
