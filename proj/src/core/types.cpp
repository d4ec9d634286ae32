#include "vdfield/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "vdfield/error.hpp"

namespace vdfield {

double wrap_angle_diff(double a, double b) {
  double d = std::remainder(a - b, kTwoPi);
  if (d <= -kPi) d += kTwoPi;
  if (d > kPi) d -= kTwoPi;
  return d;
}

Viewpoint::Viewpoint(double azimuth, double polar) {
  if (!std::isfinite(azimuth) || !std::isfinite(polar)) {
    throw Error(ErrorKind::kInvalidArgument, "viewpoint angles must be finite");
  }
  double az = std::fmod(azimuth, kTwoPi);
  if (az < 0.0) az += kTwoPi;
  if (az >= kTwoPi) az = 0.0;
  azimuth_ = az;
  polar_ = std::clamp(polar, 0.0, kPi);
}

Viewpoint Viewpoint::from_degrees(double azimuth_deg, double polar_deg) {
  return {deg_to_rad(azimuth_deg), deg_to_rad(polar_deg)};
}

Vec3 Viewpoint::direction() const {
  const double s = std::sin(polar_);
  return {std::cos(azimuth_) * s, std::cos(polar_), std::sin(azimuth_) * s};
}

CameraIntrinsics CameraIntrinsics::from_fov(int width, int height, double fov_x_rad) {
  CameraIntrinsics k;
  k.width = width;
  k.height = height;
  k.ax = 0.5 * width / std::tan(0.5 * fov_x_rad);
  k.ay = k.ax;
  k.cx = 0.5 * width;
  k.cy = 0.5 * height;
  return k;
}

void CameraIntrinsics::validate() const {
  if (!(ax > 0.0) || !(ay > 0.0)) throw ValidationError("CameraIntrinsics: a_x > 0 and a_y > 0");
  if (width <= 0 || height <= 0) throw ValidationError("CameraIntrinsics: positive image size");
  if (!(cx >= 0.0 && cx <= width && cy >= 0.0 && cy <= height)) {
    throw ValidationError("CameraIntrinsics: principal point inside the image");
  }
}

void CameraExtrinsics::validate() const {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw ValidationError("CameraExtrinsics: finite entries");
  }
  if ((rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw ValidationError("CameraExtrinsics: rotation orthonormal");
  }
  if (std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw ValidationError("CameraExtrinsics: det(rotation) = +1");
  }
}

bool is_symmetric(const Mat3& m, double tol) {
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

bool is_psd(const Mat3& m, double tol) {
  const Mat3 sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat3> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -tol;
}

void Gaussian::validate() const {
  if (!mean.allFinite() || !covariance.allFinite() || !color.allFinite() ||
      !std::isfinite(opacity)) {
    throw ValidationError("Gaussian: finite parameters");
  }
  if (!is_symmetric(covariance)) throw ValidationError("Gaussian: covariance symmetric");
  if (!is_psd(covariance)) throw ValidationError("Gaussian: covariance positive semi-definite");
  if (opacity < 0.0 || opacity > 1.0) throw ValidationError("Gaussian: opacity in [0,1]");
  if (color.minCoeff() < 0.0 || color.maxCoeff() > 1.0) {
    throw ValidationError("Gaussian: color in [0,1]^3");
  }
}

void SplatModel::validate() const {
  if (gaussians.empty()) throw ValidationError("SplatModel: non-empty");
  for (const auto& g : gaussians) g.validate();
}

void TriMeshModel::validate() const {
  if (vertices.empty()) throw ValidationError("TriMeshModel: non-empty");
  const int n = static_cast<int>(vertices.size());
  for (const auto& v : vertices) {
    if (!v.allFinite()) throw ValidationError("TriMeshModel: finite vertices");
  }
  for (const auto& f : faces) {
    for (int i : f) {
      if (i < 0 || i >= n) throw ValidationError("TriMeshModel: face indices in range");
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
      throw ValidationError("TriMeshModel: no degenerate face");
    }
  }
}

namespace {

template <typename Range, typename Get>
Bounds3 bounds_of(const Range& items, Get get) {
  Bounds3 b;
  if (items.empty()) return b;
  b.min = Vec3::Constant(std::numeric_limits<double>::infinity());
  b.max = -b.min;
  for (const auto& it : items) {
    const Vec3& p = get(it);
    b.min = b.min.cwiseMin(p);
    b.max = b.max.cwiseMax(p);
  }
  return b;
}

}  // namespace

Bounds3 bounds(const SplatModel& model) {
  return bounds_of(model.gaussians, [](const Gaussian& g) -> const Vec3& { return g.mean; });
}

Bounds3 bounds(const TriMeshModel& model) {
  return bounds_of(model.vertices, [](const Vec3& v) -> const Vec3& { return v; });
}

Bounds3 bounds(const AnyModel& model) {
  return std::visit([](const auto& m) { return bounds(m); }, model);
}

}  // namespace vdfield
