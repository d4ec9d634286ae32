#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vdfield/camera.hpp"
#include "vdfield/error.hpp"

using namespace vdfield;

namespace {

CameraIntrinsics square_intrinsics() { return CameraIntrinsics::from_fov(400, 400, deg_to_rad(45.0)); }

Warp2D affine_warp(const Mat2& a, const Vec2& b) {
  return [a, b](const Vec2& q) { return WarpSample{a * q + b, a}; };
}

Warp2D identity_warp() { return affine_warp(Mat2::Identity(), Vec2::Zero()); }

struct Fixture {
  CameraPose pose;
  Vec3 p;
  Mat2 a;
  Vec2 b;
};

Fixture random_fixture(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  Fixture f;
  const Viewpoint v(kTwoPi * u(rng), 0.05 + (kPi - 0.1) * u(rng));
  const Vec3 target(n(rng) * 0.2, n(rng) * 0.2, n(rng) * 0.2);
  f.pose = pose_from_viewpoint(v, 2.5 + 3.0 * u(rng), target, square_intrinsics());
  f.p = target + Vec3(n(rng), n(rng), n(rng)) * 0.4;
  do {
    f.a << 1.0 + 0.25 * n(rng), 0.25 * n(rng), 0.25 * n(rng), 1.0 + 0.25 * n(rng);
  } while (f.a.determinant() < 0.2);
  f.b = Vec2(n(rng), n(rng)) * 15.0;
  return f;
}

}  // namespace

TEST(Pose, OrbitExamples) {
  const CameraIntrinsics k = square_intrinsics();
  const CameraPose a = pose_from_viewpoint(Viewpoint(0.0, kPi / 2), 1.0, Vec3::Zero(), k);
  EXPECT_NEAR((a.center() - Vec3(1, 0, 0)).norm(), 0.0, 1e-12);
  const CameraPose b = pose_from_viewpoint(Viewpoint(kPi / 2, kPi / 2), 1.0, Vec3::Zero(), k);
  EXPECT_NEAR((b.center() - Vec3(0, 0, 1)).norm(), 0.0, 1e-12);
  // the target projects to the principal point
  const Vec2 q = project(to_camera(Vec3::Zero(), b.extrinsics), k, b.z_near());
  EXPECT_NEAR(q.x(), k.cx, 1e-9);
  EXPECT_NEAR(q.y(), k.cy, 1e-9);
}

TEST(Pose, RotationIsProperAndLooksAtTarget) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const CameraIntrinsics k = square_intrinsics();
  for (int i = 0; i < 2000; ++i) {
    // include the poles, where the up vector switches
    const double polar = i % 10 == 0 ? (i % 20 == 0 ? 0.0 : kPi) : kPi * u(rng);
    const Vec3 target(u(rng), u(rng), u(rng));
    const double r = 0.5 + 10 * u(rng);
    const CameraPose pose = pose_from_viewpoint(Viewpoint(kTwoPi * u(rng), polar), r, target, k);
    const Mat3& rot = pose.extrinsics.rotation;
    EXPECT_LT((rot.transpose() * rot - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(rot.determinant(), 1.0, 1e-9);
    EXPECT_NO_THROW(pose.validate());
    const Vec3 t = to_camera(target, pose.extrinsics);
    EXPECT_NEAR(t.x(), 0.0, 1e-9 * r);
    EXPECT_NEAR(t.y(), 0.0, 1e-9 * r);
    EXPECT_NEAR(t.z(), r, 1e-9 * r);
    EXPECT_NEAR((pose.center() - (target + r * pose.viewpoint.direction())).norm(), 0.0, 1e-9 * r);
  }
}

TEST(Pose, WorldUpMapsToImageUp) {
  const CameraIntrinsics k = square_intrinsics();
  const CameraPose pose = pose_from_viewpoint(Viewpoint(0.3, 1.2), 4.0, Vec3::Zero(), k);
  const Vec2 lo = project(to_camera(Vec3(0, 0, 0), pose.extrinsics), k, pose.z_near());
  const Vec2 hi = project(to_camera(Vec3(0, 0.5, 0), pose.extrinsics), k, pose.z_near());
  EXPECT_LT(hi.y(), lo.y());
}

TEST(Pose, ValidateRejectsTamperedExtrinsics) {
  CameraPose pose = pose_from_viewpoint(Viewpoint(1.0, 1.0), 3.0, Vec3::Zero(), square_intrinsics());
  pose.extrinsics.translation.x() += 1e-6;
  EXPECT_THROW(pose.validate(), ValidationError);
  EXPECT_THROW(pose_from_viewpoint(Viewpoint(), 0.0, Vec3::Zero(), square_intrinsics()), Error);
}

TEST(Camera, RoundTrip) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const CameraPose pose = pose_from_viewpoint(Viewpoint(n(rng), std::abs(n(rng))), 1.0 + std::abs(n(rng)),
                                                Vec3(n(rng), n(rng), n(rng)), square_intrinsics());
    const Vec3 p(n(rng), n(rng), n(rng));
    EXPECT_LT((from_camera(to_camera(p, pose.extrinsics), pose.extrinsics) - p).norm(), 1e-12);
  }
}

TEST(Project, Examples) {
  CameraIntrinsics k;
  k.ax = k.ay = 100.0;
  k.cx = k.cy = 200.0;
  k.width = k.height = 400;
  const Vec2 c = project(Vec3(0, 0, 5), k, 1e-4);
  EXPECT_EQ(c, Vec2(200, 200));
  EXPECT_DOUBLE_EQ(project(Vec3(1, 0, 1), k, 1e-4).x(), 300.0);
  EXPECT_DOUBLE_EQ(project(Vec3(1, 0, 1), k, 1e-4).y(), 200.0);
  try {
    project(Vec3(0, 0, 1e-5), k, 1e-4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDepthTooSmall);
  }
  EXPECT_THROW(project(Vec3(0, 0, -1), k, 1e-4), Error);
}

TEST(Project, RayInvariantAndJacobian) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const CameraIntrinsics k = square_intrinsics();
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p(u(rng), u(rng), 2.0 + u(rng));
    const double s = 0.1 + 5.0 * std::abs(u(rng));
    const Vec2 a = project(p, k, 1e-4), b = project(s * p, k, 1e-4);
    EXPECT_NEAR((a - b).norm(), 0.0, 1e-9);

    const Eigen::Matrix<double, 2, 3> j = projection_jacobian(p, k);
    const double h = 1e-6;
    for (int c = 0; c < 3; ++c) {
      Vec3 e = Vec3::Zero();
      e[c] = h;
      const Vec2 fd = (project(p + e, k, 1e-4) - project(p - e, k, 1e-4)) / (2 * h);
      EXPECT_NEAR((fd - j.col(c)).norm(), 0.0, 1e-5 * std::max(1.0, fd.norm()));
    }
  }
}

TEST(Lift, IdentityWarpIsIdentity) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 500; ++i) {
    const Fixture f = random_fixture(rng);
    const LiftResult r = lift_2d_deformation(f.p, f.pose, identity_warp());
    EXPECT_LT((r.point - f.p).norm(), 1e-12 * std::max(1.0, f.p.norm()));
    EXPECT_LT((r.jacobian - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Lift, PixelTranslationRoundTrip) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    const Fixture f = random_fixture(rng);
    const LiftResult fwd = lift_2d_deformation(f.p, f.pose, affine_warp(Mat2::Identity(), f.b));
    const LiftResult back = lift_2d_deformation(fwd.point, f.pose, affine_warp(Mat2::Identity(), -f.b));
    EXPECT_LT((back.point - f.p).norm(), 1e-9);
  }
}

TEST(Lift, AlignsWithWarpAndPreservesDepth) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 2000; ++i) {
    const Fixture f = random_fixture(rng);
    const Warp2D phi = affine_warp(f.a, f.b);
    const LiftResult r = lift_2d_deformation(f.p, f.pose, phi);
    const Vec3 pc = to_camera(f.p, f.pose.extrinsics);
    const Vec3 qc = to_camera(r.point, f.pose.extrinsics);
    EXPECT_NEAR(qc.z(), pc.z(), 1e-9);
    const Vec2 want = phi(project(pc, f.pose.intrinsics, f.pose.z_near())).position;
    const Vec2 got = project(qc, f.pose.intrinsics, f.pose.z_near());
    EXPECT_LT((got - want).norm(), 1e-6);
  }
}

TEST(Lift, JacobianMatchesCentralDifferences) {
  std::mt19937_64 rng(9);
  const double scene_scale = 1.0;
  const double h = 1e-5 * scene_scale;
  double worst = 0.0;
  for (int i = 0; i < 1500; ++i) {
    const Fixture f = random_fixture(rng);
    const Warp2D phi = affine_warp(f.a, f.b);
    const LiftResult r = lift_2d_deformation(f.p, f.pose, phi);
    Mat3 fd;
    for (int c = 0; c < 3; ++c) {
      Vec3 e = Vec3::Zero();
      e[c] = h;
      fd.col(c) = (lift_2d_deformation(f.p + e, f.pose, phi).point -
                   lift_2d_deformation(f.p - e, f.pose, phi).point) /
                  (2 * h);
    }
    const double rel = (r.jacobian - fd).norm() / fd.norm();
    worst = std::max(worst, rel);
    EXPECT_LT(rel, 1e-5) << "fixture " << i;
  }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(Lift, RejectsPointsBehindCamera) {
  const CameraPose pose = pose_from_viewpoint(Viewpoint(0.0, kPi / 2), 2.0, Vec3::Zero(), square_intrinsics());
  try {
    lift_2d_deformation(Vec3(5, 0, 0), pose, identity_warp());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDepthTooSmall);
  }
}
