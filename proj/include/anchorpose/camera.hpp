#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <utility>

#include "anchorpose/errors.hpp"
#include "anchorpose/geometry.hpp"

namespace anchorpose {

namespace detail {
template <typename Scalar>
void require_open_fov(Scalar phi, const char* what) {
  if (!(phi > Scalar(0) && phi < kPi<Scalar>)) {
    throw Error(ErrorCode::kDomainError,
                std::string(what) + " must lie in (0, pi), got " + std::to_string(double(phi)));
  }
}
}  // namespace detail

/// Camera encoding [t, q, fov_h, fov_w]; fields of view in radians.
template <typename Scalar>
struct CameraPose {
  Eigen::Matrix<Scalar, 3, 1> t = Eigen::Matrix<Scalar, 3, 1>::Zero();
  Rotation<Scalar> q;
  Scalar fov_h = kPi<Scalar> / Scalar(2);
  Scalar fov_w = kPi<Scalar> / Scalar(2);

  void validate() const {
    detail::require_open_fov(fov_h, "fov_h");
    detail::require_open_fov(fov_w, "fov_w");
  }
};

using CameraPosed = CameraPose<double>;

/// Pinhole intrinsics in pixels.
template <typename Scalar>
struct Intrinsics {
  Scalar fx = Scalar(1);
  Scalar fy = Scalar(1);
  Scalar cx = Scalar(0);
  Scalar cy = Scalar(0);
  Scalar width = Scalar(1);
  Scalar height = Scalar(1);

  /// fx, fy > 0 and principal point inside the image.
  bool is_valid() const {
    return fx > Scalar(0) && fy > Scalar(0) && width > Scalar(0) && height > Scalar(0) &&
           cx >= Scalar(0) && cx <= width && cy >= Scalar(0) && cy <= height;
  }

  Eigen::Matrix<Scalar, 3, 3> matrix() const {
    Eigen::Matrix<Scalar, 3, 3> k;
    k << fx, Scalar(0), cx, Scalar(0), fy, cy, Scalar(0), Scalar(0), Scalar(1);
    return k;
  }

  bool operator==(const Intrinsics&) const = default;
};

using Intrinsicsd = Intrinsics<double>;

/// Square crop [x0, x0 + side) x [y0, y0 + side) resampled to out_size pixels.
template <typename Scalar>
struct CropSpec {
  Scalar x0 = Scalar(0);
  Scalar y0 = Scalar(0);
  Scalar side = Scalar(1);
  Scalar out_size = Scalar(1);

  Scalar scale() const { return out_size / side; }
};

using CropSpecd = CropSpec<double>;

/// r(phi) = ln(tan(phi / 2)); strictly increasing on (0, pi).
template <typename Scalar>
Scalar logtan_fov(Scalar phi) {
  detail::require_open_fov(phi, "field of view");
  return std::log(std::tan(phi / Scalar(2)));
}

/// Inverse of logtan_fov.
template <typename Scalar>
Scalar fov_from_logtan(Scalar r) {
  return Scalar(2) * std::atan(std::exp(r));
}

template <typename Scalar>
Intrinsics<Scalar> intrinsics_from_fov(Scalar fov_w, Scalar fov_h, Scalar width, Scalar height) {
  detail::require_open_fov(fov_w, "fov_w");
  detail::require_open_fov(fov_h, "fov_h");
  if (!(width > Scalar(0) && height > Scalar(0))) {
    throw Error(ErrorCode::kDomainError, "image dimensions must be positive");
  }
  Intrinsics<Scalar> k;
  k.fx = (width / Scalar(2)) / std::tan(fov_w / Scalar(2));
  k.fy = (height / Scalar(2)) / std::tan(fov_h / Scalar(2));
  k.cx = width / Scalar(2);
  k.cy = height / Scalar(2);
  k.width = width;
  k.height = height;
  return k;
}

/// Returns {fov_w, fov_h} in radians.
template <typename Scalar>
std::pair<Scalar, Scalar> fov_from_intrinsics(const Intrinsics<Scalar>& k) {
  if (!(k.fx > Scalar(0) && k.fy > Scalar(0) && k.width > Scalar(0) && k.height > Scalar(0))) {
    throw Error(ErrorCode::kDomainError, "intrinsics need positive focal lengths and dimensions");
  }
  return {Scalar(2) * std::atan(k.width / (Scalar(2) * k.fx)),
          Scalar(2) * std::atan(k.height / (Scalar(2) * k.fy))};
}

template <typename Scalar>
void validate_crop(const Intrinsics<Scalar>& k, const CropSpec<Scalar>& crop) {
  if (!(crop.side > Scalar(0))) throw Error(ErrorCode::kInvalidCrop, "crop side must be positive");
  if (!(crop.out_size > Scalar(0))) {
    throw Error(ErrorCode::kInvalidCrop, "crop output size must be positive");
  }
  const bool intersects = crop.x0 < k.width && crop.x0 + crop.side > Scalar(0) &&
                          crop.y0 < k.height && crop.y0 + crop.side > Scalar(0);
  if (!intersects) throw Error(ErrorCode::kInvalidCrop, "crop rectangle misses the image");
}

/**
 * Intrinsics of the image obtained by cropping the square window described by
 * `crop` and resampling it to out_size x out_size pixels. Projecting through
 * the result equals projecting through `k` and then mapping pixel coordinates
 * with u' = (u - x0) * s, s = out_size / side.
 *
 * The principal point may land outside the crop window; that is a legitimate
 * result for off-center face crops.
 */
template <typename Scalar>
Intrinsics<Scalar> crop_update_intrinsics(const Intrinsics<Scalar>& k, const CropSpec<Scalar>& crop) {
  validate_crop(k, crop);
  const Scalar s = crop.scale();
  Intrinsics<Scalar> out;
  out.fx = k.fx * s;
  out.fy = k.fy * s;
  out.cx = (k.cx - crop.x0) * s;
  out.cy = (k.cy - crop.y0) * s;
  out.width = crop.out_size;
  out.height = crop.out_size;
  return out;
}

/// The single crop equivalent to applying `first` and then `second`, where
/// `second` is expressed in the pixel coordinates of first's output.
template <typename Scalar>
CropSpec<Scalar> compose_crops(const CropSpec<Scalar>& first, const CropSpec<Scalar>& second) {
  const Scalar s1 = first.scale();
  return CropSpec<Scalar>{first.x0 + second.x0 / s1, first.y0 + second.y0 / s1, second.side / s1,
                          second.out_size};
}

/// Pixel coordinates of a camera-frame point (z > 0).
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> project(const Intrinsics<Scalar>& k, const Eigen::Matrix<Scalar, 3, 1>& p) {
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

}  // namespace anchorpose
