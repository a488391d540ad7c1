#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "anchorpose/camera.hpp"
#include "anchorpose/errors.hpp"
#include "anchorpose/geometry.hpp"

namespace anchorpose {

enum class LossMode {
  kFull,
  kNoFov,
  kRotationOnly,
  kGeodesic,
  kTranslationAux,  // full objective, flagged for reporting
};

inline const char* to_string(LossMode mode) {
  switch (mode) {
    case LossMode::kFull: return "full";
    case LossMode::kNoFov: return "no_fov";
    case LossMode::kRotationOnly: return "rotation_only";
    case LossMode::kGeodesic: return "geodesic";
    case LossMode::kTranslationAux: return "translation_aux";
  }
  return "full";
}

inline LossMode parse_loss_mode(std::string_view name) {
  for (LossMode m : {LossMode::kFull, LossMode::kNoFov, LossMode::kRotationOnly,
                     LossMode::kGeodesic, LossMode::kTranslationAux}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown loss mode '" + std::string(name) + "'");
}

template <typename Scalar>
struct LossConfig {
  Scalar lambda_t = Scalar(1);
  Scalar lambda_r = Scalar(1);
  Scalar lambda_f = Scalar(0.5);
  Scalar gamma = Scalar(0.6);
  LossMode mode = LossMode::kFull;

  void validate() const {
    if (lambda_t < Scalar(0) || lambda_r < Scalar(0) || lambda_f < Scalar(0)) {
      throw Error(ErrorCode::kInvalidConfig, "loss weights must be non-negative");
    }
    if (!(gamma > Scalar(0) && gamma <= Scalar(1))) {
      throw Error(ErrorCode::kInvalidConfig, "gamma must lie in (0, 1]");
    }
  }
};

using LossConfigd = LossConfig<double>;

template <typename Scalar>
struct FovPair {
  Scalar fov_h = kPi<Scalar> / Scalar(2);
  Scalar fov_w = kPi<Scalar> / Scalar(2);
};

/// Prediction of the supervised (second) frame at one refinement stage. The
/// anchor's fields of view enter only through the focal-ratio term.
template <typename Scalar>
struct StagePrediction {
  int stage_index = 1;
  CameraPose<Scalar> pose_pred;
  CameraPose<Scalar> pose_true;
  FovPair<Scalar> anchor_fov_pred;
  FovPair<Scalar> anchor_fov_true;
};

using StagePredictiond = StagePrediction<double>;

template <typename Scalar>
Scalar loss_translation(const Eigen::Matrix<Scalar, 3, 1>& pred,
                        const Eigen::Matrix<Scalar, 3, 1>& truth) {
  return (pred - truth).template lpNorm<1>();
}

/// L1 distance between canonical-sign quaternions.
template <typename Scalar>
Scalar loss_rotation_quat(const Rotation<Scalar>& pred, const Rotation<Scalar>& truth) {
  return (pred.quaternion().coeffs() - truth.quaternion().coeffs()).template lpNorm<1>();
}

/// Geodesic angle in radians.
template <typename Scalar>
Scalar loss_rotation_geodesic(const Rotation<Scalar>& pred, const Rotation<Scalar>& truth) {
  return geodesic_rad(pred, truth);
}

/**
 * Gradient of loss_rotation_geodesic w.r.t. a left tangent perturbation of the
 * prediction, pred -> exp([h u]x) pred: d/dh = u . g. The gradient g is the unit
 * axis of pred * truth^T, undefined at 0 and pi.
 */
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> loss_rotation_geodesic_gradient(const Rotation<Scalar>& pred,
                                                            const Rotation<Scalar>& truth) {
  return (pred * truth.inverse()).axis();
}

/// | (r(pred.second) - r(pred.first)) - (r(truth.second) - r(truth.first)) |
/// with r = logtan_fov; pairs are (anchor fov, query fov).
template <typename Scalar>
Scalar loss_fov(const std::pair<Scalar, Scalar>& pred, const std::pair<Scalar, Scalar>& truth) {
  const Scalar pred_ratio = logtan_fov(pred.second) - logtan_fov(pred.first);
  const Scalar true_ratio = logtan_fov(truth.second) - logtan_fov(truth.first);
  return std::abs(pred_ratio - true_ratio);
}

/// Focal-ratio loss over both fields of view of a stage (L1 over h and w).
template <typename Scalar>
Scalar loss_fov(const StagePrediction<Scalar>& s) {
  return loss_fov<Scalar>({s.anchor_fov_pred.fov_h, s.pose_pred.fov_h},
                          {s.anchor_fov_true.fov_h, s.pose_true.fov_h}) +
         loss_fov<Scalar>({s.anchor_fov_pred.fov_w, s.pose_pred.fov_w},
                          {s.anchor_fov_true.fov_w, s.pose_true.fov_w});
}

template <typename Scalar>
struct StageLossTerms {
  int stage_index = 0;
  Scalar weight = Scalar(0);  // gamma^(K-k) / K
  Scalar translation = Scalar(0);
  Scalar rotation = Scalar(0);
  Scalar fov = Scalar(0);
  Scalar weighted_translation = Scalar(0);
  Scalar weighted_rotation = Scalar(0);
  Scalar weighted_fov = Scalar(0);
  Scalar contribution = Scalar(0);
};

template <typename Scalar>
struct LossBreakdown {
  Scalar total = Scalar(0);
  Scalar translation_total = Scalar(0);
  Scalar rotation_total = Scalar(0);
  Scalar fov_total = Scalar(0);
  LossMode mode = LossMode::kFull;
  std::vector<StageLossTerms<Scalar>> stages;  // ordered by stage index
};

/**
 * Multi-stage camera loss
 *
 *   (1/K) sum_k gamma^(K-k) (lambda_T L_T(k) + lambda_R L_R(k) + lambda_F L_F(k))
 *
 * K is the number of stages supplied; stage indices must be exactly 1..K (any
 * order). Raw per-term values are always reported; terms switched off by the
 * mode contribute zero.
 */
template <typename Scalar>
LossBreakdown<Scalar> loss_cam(std::vector<StagePrediction<Scalar>> stages,
                               const LossConfig<Scalar>& cfg) {
  cfg.validate();
  if (stages.empty()) throw Error(ErrorCode::kEmptyStages, "loss_cam needs at least one stage");
  std::sort(stages.begin(), stages.end(),
            [](const auto& a, const auto& b) { return a.stage_index < b.stage_index; });
  const int k_stages = static_cast<int>(stages.size());
  for (int i = 0; i < k_stages; ++i) {
    if (stages[i].stage_index != i + 1) {
      throw Error(ErrorCode::kNonContiguousStages,
                  "expected stage " + std::to_string(i + 1) + ", found " +
                      std::to_string(stages[i].stage_index));
    }
  }

  const bool use_t = cfg.mode != LossMode::kRotationOnly;
  const bool use_f = cfg.mode != LossMode::kRotationOnly && cfg.mode != LossMode::kNoFov;

  LossBreakdown<Scalar> out;
  out.mode = cfg.mode;
  out.stages.reserve(stages.size());
  for (const auto& s : stages) {
    StageLossTerms<Scalar> terms;
    terms.stage_index = s.stage_index;
    terms.weight = std::pow(cfg.gamma, Scalar(k_stages - s.stage_index)) / Scalar(k_stages);
    terms.translation = loss_translation<Scalar>(s.pose_pred.t, s.pose_true.t);
    terms.rotation = cfg.mode == LossMode::kGeodesic
                         ? loss_rotation_geodesic(s.pose_pred.q, s.pose_true.q)
                         : loss_rotation_quat(s.pose_pred.q, s.pose_true.q);
    terms.fov = loss_fov(s);
    terms.weighted_translation = use_t ? terms.weight * cfg.lambda_t * terms.translation : Scalar(0);
    terms.weighted_rotation = terms.weight * cfg.lambda_r * terms.rotation;
    terms.weighted_fov = use_f ? terms.weight * cfg.lambda_f * terms.fov : Scalar(0);
    terms.contribution = terms.weighted_translation + terms.weighted_rotation + terms.weighted_fov;

    out.translation_total += terms.weighted_translation;
    out.rotation_total += terms.weighted_rotation;
    out.fov_total += terms.weighted_fov;
    out.total += terms.contribution;
    out.stages.push_back(terms);
  }
  return out;
}

}  // namespace anchorpose
