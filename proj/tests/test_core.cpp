#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <random>

#include "vdfield/error.hpp"
#include "vdfield/parallel.hpp"
#include "vdfield/types.hpp"

using namespace vdfield;

TEST(WrapAngleDiff, Examples) {
  EXPECT_EQ(wrap_angle_diff(0.1, 0.1), 0.0);
  EXPECT_NEAR(wrap_angle_diff(0.1, 0.1 + kTwoPi), 0.0, 1e-15);
  EXPECT_NEAR(wrap_angle_diff(6.0, 0.5), 6.0 - 0.5 - kTwoPi, 1e-15);
  EXPECT_NEAR(wrap_angle_diff(6.0, 0.5), -0.7831853071795862, 1e-15);
  EXPECT_EQ(wrap_angle_diff(kPi, 0.0), kPi);
  EXPECT_EQ(wrap_angle_diff(0.0, kPi), kPi);
}

TEST(WrapAngleDiff, AntisymmetricAndBounded) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 100000; ++i) {
    const double a = u(rng), b = u(rng);
    const double d = wrap_angle_diff(a, b);
    EXPECT_LE(std::abs(d), kPi);
    EXPECT_GT(d, -kPi);
    if (std::abs(std::abs(d) - kPi) > 1e-9) {
      EXPECT_EQ(d, -wrap_angle_diff(b, a));
    }
    // Oracle: brute-force search over integer turns.
    double best = a - b;
    for (int k = -20; k <= 20; ++k) {
      const double c = a - b + k * kTwoPi;
      if (std::abs(c) < std::abs(best)) best = c;
    }
    EXPECT_NEAR(d, best, 1e-9);
  }
}

TEST(Viewpoint, WrapsAndClamps) {
  const Viewpoint v(-0.5, 4.0);
  EXPECT_NEAR(v.azimuth(), kTwoPi - 0.5, 1e-15);
  EXPECT_EQ(v.polar(), kPi);
  EXPECT_EQ(Viewpoint(7.0, -1.0).polar(), 0.0);
  EXPECT_NEAR(Viewpoint(7.0, 1.0).azimuth(), 7.0 - kTwoPi, 1e-15);
  EXPECT_GE(Viewpoint(-1e-300, 1.0).azimuth(), 0.0);
  EXPECT_LT(Viewpoint(-1e-300, 1.0).azimuth(), kTwoPi);
  EXPECT_THROW(Viewpoint(std::nan(""), 1.0), Error);
  const Viewpoint d = Viewpoint::from_degrees(90.0, 90.0);
  EXPECT_NEAR(d.azimuth(), kPi / 2, 1e-15);
  EXPECT_NEAR((d.direction() - Vec3(0, 0, 1)).norm(), 0.0, 1e-15);
}

TEST(Types, IntrinsicsValidation) {
  CameraIntrinsics k = CameraIntrinsics::from_fov(400, 400, deg_to_rad(45.0));
  EXPECT_NO_THROW(k.validate());
  EXPECT_DOUBLE_EQ(k.cx, 200.0);
  EXPECT_DOUBLE_EQ(k.cy, 200.0);
  EXPECT_NEAR(k.ax, 200.0 / std::tan(deg_to_rad(22.5)), 1e-9);
  k.ax = 0.0;
  EXPECT_THROW(k.validate(), ValidationError);
  k.ax = 10.0;
  k.cx = 500.0;
  EXPECT_THROW(k.validate(), ValidationError);
}

TEST(Types, ExtrinsicsValidation) {
  CameraExtrinsics e;
  EXPECT_NO_THROW(e.validate());
  e.rotation(0, 0) = -1.0;  // reflection
  EXPECT_THROW(e.validate(), ValidationError);
  e.rotation = Mat3::Identity() * 1.001;
  EXPECT_THROW(e.validate(), ValidationError);
}

TEST(Types, GaussianAndMeshValidation) {
  Gaussian g;
  EXPECT_NO_THROW(g.validate());
  g.covariance(0, 1) = 1e-6;
  EXPECT_THROW(g.validate(), ValidationError);
  g.covariance = Mat3::Identity();
  g.covariance(2, 2) = -1e-3;
  EXPECT_THROW(g.validate(), ValidationError);
  g.covariance = Mat3::Identity();
  g.opacity = 1.5;
  EXPECT_THROW(g.validate(), ValidationError);

  TriMeshModel m;
  m.vertices = {Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY()};
  m.faces = {Face{0, 1, 2}};
  EXPECT_NO_THROW(m.validate());
  m.faces = {Face{0, 1, 1}};
  EXPECT_THROW(m.validate(), ValidationError);
  m.faces = {Face{0, 1, 3}};
  EXPECT_THROW(m.validate(), ValidationError);
}

TEST(Types, PsdAcceptsPushforward) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    Mat3 a, j;
    for (int k = 0; k < 9; ++k) {
      a(k / 3, k % 3) = n(rng);
      j(k / 3, k % 3) = n(rng) * 3.0;
    }
    const Mat3 s = a * a.transpose() * 1e-2;
    Mat3 t = j * s * j.transpose();
    t = 0.5 * (t + t.transpose());
    EXPECT_TRUE(is_symmetric(t));
    EXPECT_TRUE(is_psd(t));
  }
  Mat3 bad = Mat3::Identity();
  bad(1, 1) = -0.1;
  EXPECT_FALSE(is_psd(bad));
}

TEST(Types, Bounds) {
  TriMeshModel m;
  m.vertices = {Vec3(-1, 0, 0), Vec3(1, 2, 0), Vec3(0, 0, 4)};
  const Bounds3 b = bounds(m);
  EXPECT_EQ(b.min, Vec3(-1, 0, 0));
  EXPECT_EQ(b.max, Vec3(1, 2, 4));
  EXPECT_EQ(b.center(), Vec3(0, 1, 2));
}

TEST(Errors, MessagesCarryKindAndLocation) {
  const ParseError p("bad header", 17, ParseError::Unit::kLine);
  EXPECT_EQ(p.kind(), ErrorKind::kParseError);
  EXPECT_NE(std::string(p.what()).find("line 17"), std::string::npos);
  const ValidationError v("X: y > 0");
  EXPECT_EQ(v.invariant(), "X: y > 0");
  EXPECT_EQ(v.kind(), ErrorKind::kValidationError);
}

TEST(Parallel, CoversRangeOnceAndPropagates) {
  set_thread_count(4);
  std::vector<std::atomic<int>> hits(10007);
  parallel_for(hits.size(), 100, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) hits[i]++;
  });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(1000, 10,
                            [&](std::size_t b, std::size_t) {
                              if (b == 500) throw std::runtime_error("x");
                            }),
               std::runtime_error);
  set_thread_count(1);
}
