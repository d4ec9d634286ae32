#pragma once

#include <functional>

#include "vdfield/types.hpp"

namespace vdfield {

/// Orbit camera: extrinsics are derived from (viewpoint, radius, target).
/// Camera frame is right-handed, looks down +z, pixel y grows downward.
struct CameraPose {
  CameraIntrinsics intrinsics;
  CameraExtrinsics extrinsics;
  Viewpoint viewpoint;
  double orbit_radius = 1.0;
  Vec3 orbit_target = Vec3::Zero();

  /// Points closer than this (camera-frame z) are rejected by projection.
  double z_near() const { return 1e-4 * orbit_radius; }
  Vec3 center() const;

  /// Re-derives the extrinsics from the orbit parameters and checks them.
  void validate() const;
};

CameraPose pose_from_viewpoint(const Viewpoint& v, double radius, const Vec3& target,
                               const CameraIntrinsics& intrinsics);

Vec3 to_camera(const Vec3& p_world, const CameraExtrinsics& extrinsics);
Vec3 from_camera(const Vec3& p_cam, const CameraExtrinsics& extrinsics);

/// Perspective projection (a_x x/z + c_x, a_y y/z + c_y). Throws DepthTooSmall
/// when z <= z_near.
Vec2 project(const Vec3& p_cam, const CameraIntrinsics& intrinsics, double z_near);

/// d(project)/d(p_cam), 2x3.
Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3& p_cam,
                                                const CameraIntrinsics& intrinsics);

/// Value and Jacobian of an image-plane warp at a pixel.
struct WarpSample {
  Vec2 position;
  Mat2 jacobian;
};

using Warp2D = std::function<WarpSample(const Vec2&)>;

struct LiftResult {
  Vec3 point;
  Jacobian3 jacobian;
};

/// Lifts an image-plane warp to a depth-preserving 3D map at p_world: the point
/// slides parallel to the image plane until it projects onto phi(project(p)).
/// The Jacobian is assembled analytically by the chain rule.
LiftResult lift_2d_deformation(const Vec3& p_world, const CameraPose& pose, const Warp2D& phi);

}  // namespace vdfield
