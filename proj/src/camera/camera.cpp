#include "vdfield/camera.hpp"

#include <cmath>

#include "../kernels/kernels.hpp"
#include "vdfield/error.hpp"

namespace vdfield {

Vec3 CameraPose::center() const {
  return -(extrinsics.rotation.transpose() * extrinsics.translation);
}

void CameraPose::validate() const {
  intrinsics.validate();
  extrinsics.validate();
  if (!(orbit_radius > 0.0)) throw ValidationError("CameraPose: orbit_radius > 0");
  const CameraPose derived = pose_from_viewpoint(viewpoint, orbit_radius, orbit_target, intrinsics);
  const double dr = (derived.extrinsics.rotation - extrinsics.rotation).cwiseAbs().maxCoeff();
  const double dt = (derived.extrinsics.translation - extrinsics.translation).cwiseAbs().maxCoeff();
  if (dr > 1e-9 || dt > 1e-9 * std::max(1.0, orbit_radius)) {
    throw ValidationError("CameraPose: extrinsics derived from the orbit parameters");
  }
}

CameraPose pose_from_viewpoint(const Viewpoint& v, double radius, const Vec3& target,
                               const CameraIntrinsics& intrinsics) {
  if (!(radius > 0.0)) throw Error(ErrorKind::kInvalidArgument, "orbit radius must be positive");
  const Vec3 dir = v.direction();
  const Vec3 eye = target + radius * dir;
  const Vec3 forward = -dir;
  Vec3 up = Vec3::UnitY();
  if (std::abs(dir.dot(up)) > 1.0 - 1e-6) up = Vec3::UnitZ();
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right);

  CameraPose pose;
  pose.intrinsics = intrinsics;
  pose.viewpoint = v;
  pose.orbit_radius = radius;
  pose.orbit_target = target;
  pose.extrinsics.rotation.row(0) = right.transpose();
  pose.extrinsics.rotation.row(1) = down.transpose();
  pose.extrinsics.rotation.row(2) = forward.transpose();
  pose.extrinsics.translation = -(pose.extrinsics.rotation * eye);
  return pose;
}

Vec3 to_camera(const Vec3& p_world, const CameraExtrinsics& e) {
  return e.rotation * p_world + e.translation;
}

Vec3 from_camera(const Vec3& p_cam, const CameraExtrinsics& e) {
  return e.rotation.transpose() * (p_cam - e.translation);
}

Vec2 project(const Vec3& p_cam, const CameraIntrinsics& k, double z_near) {
  if (!(p_cam.z() > z_near)) {
    throw Error(ErrorKind::kDepthTooSmall, "point at or behind the near plane");
  }
  return {k.ax * (p_cam.x() / p_cam.z()) + k.cx, k.ay * (p_cam.y() / p_cam.z()) + k.cy};
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3& p_cam, const CameraIntrinsics& k) {
  const double iz = 1.0 / p_cam.z();
  Eigen::Matrix<double, 2, 3> j;
  j << k.ax * iz, 0.0, -k.ax * p_cam.x() * iz * iz,  //
      0.0, k.ay * iz, -k.ay * p_cam.y() * iz * iz;
  return j;
}

LiftResult lift_2d_deformation(const Vec3& p_world, const CameraPose& pose, const Warp2D& phi) {
  using namespace kernels;
  const LayerCamera cam = make_layer_camera(pose);
  double x = p_world.x(), y = p_world.y(), z = p_world.z();
  ProjectedBlock proj;
  const KernelTable& table = scalar_table();
  table.project(cam, ConstPoints{&x, &y, &z}, 1, proj);
  if (!(proj.zc[0] > cam.z_near)) {
    throw Error(ErrorKind::kDepthTooSmall, "point at or behind the near plane");
  }
  const WarpSample s = phi(Vec2(proj.u[0], proj.v[0]));
  WarpBlock warp;
  warp.up[0] = s.position.x();
  warp.vp[0] = s.position.y();
  warp.d00[0] = s.jacobian(0, 0);
  warp.d01[0] = s.jacobian(0, 1);
  warp.d10[0] = s.jacobian(1, 0);
  warp.d11[0] = s.jacobian(1, 1);
  warp.beta[0] = 1.0;
  double j[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  Jacobians jac{{&j[0], &j[1], &j[2], &j[3], &j[4], &j[5], &j[6], &j[7], &j[8]}};
  table.lift_blend(cam, proj, warp, 1, Points{&x, &y, &z}, jac);

  LiftResult out;
  out.point = Vec3(x, y, z);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.jacobian(r, c) = j[3 * r + c];
  }
  return out;
}

}  // namespace vdfield
