#include <gtest/gtest.h>

#include <cstring>
#include <random>
#include <vector>

#include "kernels/kernels.hpp"
#include "vdfield/camera.hpp"
#include "vdfield/simd.hpp"

using namespace vdfield;
using namespace vdfield::kernels;

namespace {

bool same_bits(const double* a, const double* b, std::size_t n) {
  return std::memcmp(a, b, n * sizeof(double)) == 0;
}

struct Soa {
  explicit Soa(std::size_t n) : x(kBlock, 0.0), y(kBlock, 0.0), z(kBlock, 0.0) { (void)n; }
  std::vector<double> x, y, z;
  Points view() { return {x.data(), y.data(), z.data()}; }
  ConstPoints cview() const { return {x.data(), y.data(), z.data()}; }
};

struct Mats {
  explicit Mats(int k) : e(k, std::vector<double>(kBlock, 0.0)) {}
  std::vector<std::vector<double>> e;
  Jacobians jac() {
    Jacobians j;
    for (int k = 0; k < 9; ++k) j.m[k] = e[k].data();
    return j;
  }
  SymMats sym() {
    SymMats s;
    for (int k = 0; k < 6; ++k) s.s[k] = e[k].data();
    return s;
  }
  ConstSymMats csym() const {
    ConstSymMats s;
    for (int k = 0; k < 6; ++k) s.s[k] = e[k].data();
    return s;
  }
};

struct Case {
  CameraPose pose;
  LayerCamera cam;
  Soa pts{kBlock};
  Mats jac{9};
  Mats cov{6};
  WarpBlock warp;
};

Case random_case(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  Case c;
  CameraIntrinsics k = CameraIntrinsics::from_fov(320 + int(200 * u(rng)), 240 + int(200 * u(rng)), 0.6 + u(rng));
  k.ay *= 0.8 + 0.4 * u(rng);  // non-square pixels exercise the ratio terms
  c.pose = pose_from_viewpoint(Viewpoint(kTwoPi * u(rng), kPi * u(rng)), 2.0 + 3.0 * u(rng),
                               Vec3(n(rng), n(rng), n(rng)) * 0.1, k);
  c.cam = make_layer_camera(c.pose);
  for (std::size_t i = 0; i < kBlock; ++i) {
    c.pts.x[i] = 0.5 * n(rng) + c.pose.orbit_target.x();
    c.pts.y[i] = 0.5 * n(rng) + c.pose.orbit_target.y();
    c.pts.z[i] = 0.5 * n(rng) + c.pose.orbit_target.z();
    for (int e = 0; e < 9; ++e) c.jac.e[e][i] = (e % 4 == 0 ? 1.0 : 0.0) + 0.3 * n(rng);
    Mat3 a;
    for (int e = 0; e < 9; ++e) a(e / 3, e % 3) = n(rng);
    const Mat3 s = 0.01 * a * a.transpose();
    const double v[6] = {s(0, 0), s(0, 1), s(0, 2), s(1, 1), s(1, 2), s(2, 2)};
    for (int e = 0; e < 6; ++e) c.cov.e[e][i] = v[e];
    c.warp.up[i] = k.cx + 100 * n(rng);
    c.warp.vp[i] = k.cy + 100 * n(rng);
    c.warp.d00[i] = 1.0 + 0.3 * n(rng);
    c.warp.d01[i] = 0.3 * n(rng);
    c.warp.d10[i] = 0.3 * n(rng);
    c.warp.d11[i] = 1.0 + 0.3 * n(rng);
    const double roll = u(rng);
    c.warp.beta[i] = roll < 0.25 ? 0.0 : (roll < 0.4 ? 1.0 : u(rng));
  }
  return c;
}

Mat3 jac_at(const Mats& m, std::size_t i) {
  Mat3 j;
  for (int k = 0; k < 9; ++k) j(k / 3, k % 3) = m.e[k][i];
  return j;
}

Mat3 sym_at(const Mats& m, std::size_t i) {
  Mat3 s;
  s << m.e[0][i], m.e[1][i], m.e[2][i], m.e[1][i], m.e[3][i], m.e[4][i], m.e[2][i], m.e[4][i], m.e[5][i];
  return s;
}

const std::size_t kSizes[] = {1, 2, 3, 4, 5, 7, 8, 13, 31, 37, 63, 64};

}  // namespace

TEST(Simd, LevelSelection) {
  EXPECT_TRUE(simd_supported(SimdLevel::kScalar));
  const SimdLevel before = simd_level();
  set_simd_level(SimdLevel::kScalar);
  EXPECT_EQ(active().level, SimdLevel::kScalar);
  set_simd_level(before);
  EXPECT_STREQ(to_string(SimdLevel::kAvx2), "avx2");
}

TEST(ScalarKernels, ProjectMatchesCamera) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    Case c = random_case(rng);
    ProjectedBlock out;
    scalar_table().project(c.cam, c.pts.cview(), kBlock, out);
    for (std::size_t i = 0; i < kBlock; ++i) {
      const Vec3 pc = to_camera(Vec3(c.pts.x[i], c.pts.y[i], c.pts.z[i]), c.pose.extrinsics);
      EXPECT_NEAR(out.zc[i], pc.z(), 1e-12);
      const Vec2 q = project(pc, c.pose.intrinsics, c.pose.z_near());
      EXPECT_NEAR(out.u[i], q.x(), 1e-9);
      EXPECT_NEAR(out.v[i], q.y(), 1e-9);
    }
  }
}

TEST(ScalarKernels, BlendAndAccumulateFollowTheirDefinitions) {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 50; ++rep) {
    Case c = random_case(rng);
    ProjectedBlock proj;
    scalar_table().project(c.cam, c.pts.cview(), kBlock, proj);
    Case blended = c;
    scalar_table().lift_blend(c.cam, proj, c.warp, kBlock, blended.pts.view(), blended.jac.jac());
    Soa acc(kBlock);
    Mats acc_j(9);
    scalar_table().lift_accumulate(c.cam, proj, c.warp, kBlock, c.pts.cview(), acc.view(), acc_j.jac());
    for (std::size_t i = 0; i < kBlock; ++i) {
      const Vec3 p(c.pts.x[i], c.pts.y[i], c.pts.z[i]);
      const Mat2 d = (Mat2() << c.warp.d00[i], c.warp.d01[i], c.warp.d10[i], c.warp.d11[i]).finished();
      const Vec2 target(c.warp.up[i], c.warp.vp[i]);
      // Oracle: the lift through the public single-point path with a constant warp sample.
      const LiftResult l = lift_2d_deformation(p, c.pose, [&](const Vec2&) { return WarpSample{target, d}; });
      const double beta = c.warp.beta[i];
      const Vec3 want_p = beta * l.point + (1 - beta) * p;
      const Mat3 want_j = beta * l.jacobian * jac_at(c.jac, i) + (1 - beta) * jac_at(c.jac, i);
      EXPECT_LT((Vec3(blended.pts.x[i], blended.pts.y[i], blended.pts.z[i]) - want_p).norm(), 1e-9);
      EXPECT_LT((jac_at(blended.jac, i) - want_j).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_LT((Vec3(acc.x[i], acc.y[i], acc.z[i]) - beta * (l.point - p)).norm(), 1e-9);
      EXPECT_LT((jac_at(acc_j, i) - beta * (l.jacobian - Mat3::Identity())).cwiseAbs().maxCoeff(), 1e-9);
      if (beta == 0.0) {
        EXPECT_EQ(blended.pts.x[i], c.pts.x[i]);
        EXPECT_EQ(jac_at(blended.jac, i), jac_at(c.jac, i));
      }
    }
  }
}

TEST(ScalarKernels, PushforwardAndFootprintMatchEigen) {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 50; ++rep) {
    Case c = random_case(rng);
    Mats out(6);
    scalar_table().pushforward(c.jac.jac(), c.cov.csym(), kBlock, out.sym());
    std::vector<double> fu(kBlock), fv(kBlock), fd(kBlock), f00(kBlock), f01(kBlock), f11(kBlock);
    scalar_table().project_gaussians(c.cam, c.pts.cview(), c.cov.csym(), kBlock,
                                     Footprints{fu.data(), fv.data(), fd.data(), f00.data(), f01.data(), f11.data()});
    for (std::size_t i = 0; i < kBlock; ++i) {
      const Mat3 j = jac_at(c.jac, i), s = sym_at(c.cov, i);
      const Mat3 want = j * s * j.transpose();
      EXPECT_LT((sym_at(out, i) - want).cwiseAbs().maxCoeff(), 1e-12 * (1 + want.norm()));

      const Vec3 pc = to_camera(Vec3(c.pts.x[i], c.pts.y[i], c.pts.z[i]), c.pose.extrinsics);
      const Eigen::Matrix<double, 2, 3> jp = projection_jacobian(pc, c.pose.intrinsics);
      const Mat3& r = c.pose.extrinsics.rotation;
      const Mat2 cov2 = jp * r * s * r.transpose() * jp.transpose();
      EXPECT_NEAR(fd[i], pc.z(), 1e-12);
      const double tol = 1e-9 * (1 + cov2.norm());
      EXPECT_NEAR(f00[i], cov2(0, 0), tol);
      EXPECT_NEAR(f01[i], cov2(0, 1), tol);
      EXPECT_NEAR(f11[i], cov2(1, 1), tol);
    }
  }
}

#if defined(VDFIELD_HAVE_AVX2)

class Avx2Equivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!simd_supported(SimdLevel::kAvx2)) GTEST_SKIP() << "CPU lacks AVX2";
  }
  const KernelTable& s = scalar_table();
  const KernelTable& v = avx2_table();
};

TEST_F(Avx2Equivalence, Project) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    for (std::size_t n : kSizes) {
      Case c = random_case(rng);
      ProjectedBlock a{}, b{};
      s.project(c.cam, c.pts.cview(), n, a);
      v.project(c.cam, c.pts.cview(), n, b);
      EXPECT_TRUE(same_bits(a.zc, b.zc, n));
      EXPECT_TRUE(same_bits(a.a, b.a, n));
      EXPECT_TRUE(same_bits(a.b, b.b, n));
      EXPECT_TRUE(same_bits(a.u, b.u, n));
      EXPECT_TRUE(same_bits(a.v, b.v, n));
    }
  }
}

TEST_F(Avx2Equivalence, LiftBlend) {
  std::mt19937_64 rng(22);
  for (int rep = 0; rep < 20; ++rep) {
    for (std::size_t n : kSizes) {
      Case c = random_case(rng);
      ProjectedBlock proj{};
      s.project(c.cam, c.pts.cview(), n, proj);
      Case a = c, b = c;
      s.lift_blend(c.cam, proj, c.warp, n, a.pts.view(), a.jac.jac());
      v.lift_blend(c.cam, proj, c.warp, n, b.pts.view(), b.jac.jac());
      // lanes past n must be left alone
      EXPECT_TRUE(same_bits(a.pts.x.data(), b.pts.x.data(), kBlock));
      EXPECT_TRUE(same_bits(a.pts.y.data(), b.pts.y.data(), kBlock));
      EXPECT_TRUE(same_bits(a.pts.z.data(), b.pts.z.data(), kBlock));
      for (int k = 0; k < 9; ++k) EXPECT_TRUE(same_bits(a.jac.e[k].data(), b.jac.e[k].data(), kBlock));
    }
  }
}

TEST_F(Avx2Equivalence, LiftAccumulate) {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    for (std::size_t n : kSizes) {
      Case c = random_case(rng);
      ProjectedBlock proj{};
      s.project(c.cam, c.pts.cview(), n, proj);
      Case a = c, b = c;
      s.lift_accumulate(c.cam, proj, c.warp, n, c.pts.cview(), a.pts.view(), a.jac.jac());
      v.lift_accumulate(c.cam, proj, c.warp, n, c.pts.cview(), b.pts.view(), b.jac.jac());
      EXPECT_TRUE(same_bits(a.pts.x.data(), b.pts.x.data(), kBlock));
      EXPECT_TRUE(same_bits(a.pts.y.data(), b.pts.y.data(), kBlock));
      EXPECT_TRUE(same_bits(a.pts.z.data(), b.pts.z.data(), kBlock));
      for (int k = 0; k < 9; ++k) EXPECT_TRUE(same_bits(a.jac.e[k].data(), b.jac.e[k].data(), kBlock));
    }
  }
}

TEST_F(Avx2Equivalence, Pushforward) {
  std::mt19937_64 rng(24);
  for (int rep = 0; rep < 20; ++rep) {
    for (std::size_t n : kSizes) {
      Case c = random_case(rng);
      Mats a(6), b(6);
      s.pushforward(c.jac.jac(), c.cov.csym(), n, a.sym());
      v.pushforward(c.jac.jac(), c.cov.csym(), n, b.sym());
      for (int k = 0; k < 6; ++k) EXPECT_TRUE(same_bits(a.e[k].data(), b.e[k].data(), kBlock));
    }
  }
}

TEST_F(Avx2Equivalence, ProjectGaussians) {
  std::mt19937_64 rng(25);
  for (int rep = 0; rep < 20; ++rep) {
    for (std::size_t n : kSizes) {
      Case c = random_case(rng);
      std::vector<std::vector<double>> a(6, std::vector<double>(kBlock, 0.0)), b = a;
      s.project_gaussians(c.cam, c.pts.cview(), c.cov.csym(), n,
                          Footprints{a[0].data(), a[1].data(), a[2].data(), a[3].data(), a[4].data(), a[5].data()});
      v.project_gaussians(c.cam, c.pts.cview(), c.cov.csym(), n,
                          Footprints{b[0].data(), b[1].data(), b[2].data(), b[3].data(), b[4].data(), b[5].data()});
      for (int k = 0; k < 6; ++k) EXPECT_TRUE(same_bits(a[k].data(), b[k].data(), kBlock));
    }
  }
}

#endif
