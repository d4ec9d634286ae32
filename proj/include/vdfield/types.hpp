#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace vdfield {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// 3x3 derivative of a world->world map at a point.
using Jacobian3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
inline double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

/// Signed minimal difference a - b, wrapped to (-pi, pi].
double wrap_angle_diff(double a, double b);

/// Orbit direction. Azimuth is wrapped into [0, 2pi), polar clamped to [0, pi].
class Viewpoint {
 public:
  Viewpoint() = default;
  Viewpoint(double azimuth, double polar);

  static Viewpoint from_degrees(double azimuth_deg, double polar_deg);

  double azimuth() const { return azimuth_; }
  double polar() const { return polar_; }

  /// Unit direction from the orbit target towards the camera (world +Y up).
  Vec3 direction() const;

  friend bool operator==(const Viewpoint&, const Viewpoint&) = default;

 private:
  double azimuth_ = 0.0;
  double polar_ = kPi / 2.0;
};

struct CameraIntrinsics {
  double ax = 0.0;
  double ay = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Square image, principal point at the centre, given horizontal field of view.
  static CameraIntrinsics from_fov(int width, int height, double fov_x_rad);

  void validate() const;

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

struct CameraExtrinsics {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  void validate() const;
};

struct Gaussian {
  Vec3 mean = Vec3::Zero();
  Mat3 covariance = Mat3::Identity();
  double opacity = 1.0;
  Vec3 color = Vec3::Constant(0.5);

  void validate() const;
};

struct SplatModel {
  std::vector<Gaussian> gaussians;

  void validate() const;
};

using Face = std::array<int, 3>;

struct TriMeshModel {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  void validate() const;
};

struct Bounds3 {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 center() const { return 0.5 * (min + max); }
  double radius() const { return 0.5 * (max - min).norm(); }
};

using AnyModel = std::variant<SplatModel, TriMeshModel>;

Bounds3 bounds(const SplatModel& model);
Bounds3 bounds(const TriMeshModel& model);
Bounds3 bounds(const AnyModel& model);

bool is_symmetric(const Mat3& m, double tol = 1e-9);
bool is_psd(const Mat3& m, double tol = 1e-9);

}  // namespace vdfield
