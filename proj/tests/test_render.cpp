#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "field_fixtures.hpp"
#include "vdfield/error.hpp"
#include "vdfield/io.hpp"
#include "vdfield/parallel.hpp"
#include "vdfield/render.hpp"
#include "vdfield/rigging.hpp"
#include "vdfield/splats.hpp"

using namespace vdfield;
using namespace vdtest;

namespace {

CameraPose pose_at(const Viewpoint& v, const CameraIntrinsics& in = test_intrinsics()) {
  return pose_from_viewpoint(v, kOrbitRadius, Vec3::Zero(), in);
}

std::size_t area(const Mask& m) {
  std::size_t n = 0;
  for (auto p : m.pixels) n += p != 0;
  return n;
}

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

/// Monotone-chain hull area.
double hull_area(std::vector<Vec2> p) {
  std::sort(p.begin(), p.end(), [](const Vec2& a, const Vec2& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
  std::vector<Vec2> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  double a = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const Vec2& u = h[i];
    const Vec2& v = h[(i + 1) % h.size()];
    a += u.x() * v.y() - u.y() * v.x();
  }
  return 0.5 * std::abs(a);
}

double mean_displacement(const TriMeshModel& a, const TriMeshModel& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.vertices.size(); ++i) s += (a.vertices[i] - b.vertices[i]).norm();
  return s / a.vertices.size();
}

}  // namespace

TEST(RenderMask, GaussianOnAxisIsCentredEllipse) {
  SplatModel m;
  Gaussian g;
  g.covariance = Vec3(0.09, 0.04, 0.02).asDiagonal();
  m.gaussians.push_back(g);
  const Viewpoint v(0.0, M_PI / 2);
  const CameraPose pose = pose_at(v);
  const Mask mask = render_mask(m, pose);
  // Independent footprint: Jacobian of the pinhole at the mean, rotation applied by hand.
  const Mat3& r = pose.extrinsics.rotation;
  const Vec3 c = r * g.mean + pose.extrinsics.translation;
  Eigen::Matrix<double, 2, 3> jp;
  jp << pose.intrinsics.ax / c.z(), 0, -pose.intrinsics.ax * c.x() / (c.z() * c.z()), 0,
      pose.intrinsics.ay / c.z(), -pose.intrinsics.ay * c.y() / (c.z() * c.z());
  const Mat2 cov = jp * r * g.covariance * r.transpose() * jp.transpose();
  const Mat2 inv = cov.inverse();
  Mask want(400, 400, 0);
  double sx = 0, sy = 0;
  for (int y = 0; y < 400; ++y) {
    for (int x = 0; x < 400; ++x) {
      const Vec2 d(x + 0.5 - 200, y + 0.5 - 200);
      want(x, y) = d.dot(inv * d) <= 4.0;
      if (mask(x, y)) sx += x + 0.5, sy += y + 0.5;
    }
  }
  const double n = static_cast<double>(area(mask));
  EXPECT_NEAR(sx / n, 200.0, 1e-9);
  EXPECT_NEAR(sy / n, 200.0, 1e-9);
  EXPECT_GT(mask_iou(mask, want), 0.99);
}

TEST(RenderMask, OpacityThresholdDropsFloaters) {
  SplatModel m;
  Gaussian g;
  g.covariance = 0.01 * Mat3::Identity();
  g.opacity = 0.29;
  m.gaussians.push_back(g);
  EXPECT_THROW(render_mask(m, pose_at(Viewpoint(1, 1))), Error);
  m.gaussians[0].opacity = 0.3;
  EXPECT_GT(area(render_mask(m, pose_at(Viewpoint(1, 1)))), 100u);
}

TEST(RenderMask, MeshBehindCameraIsNothingVisible) {
  const CameraPose pose = pose_at(Viewpoint(0.3, 1.2));
  const Vec3 behind = pose.center() * 2.0;
  const TriMeshModel m = box_mesh(behind - Vec3::Constant(0.2), behind + Vec3::Constant(0.2));
  try {
    render_mask(m, pose);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNothingVisible);
  }
}

TEST(RenderMask, CubeAreaMatchesProjectedHull) {
  std::mt19937_64 rng(1);
  const TriMeshModel cube = box_mesh(Vec3::Constant(-0.5), Vec3::Constant(0.5));
  for (int t = 0; t < 10; ++t) {
    const CameraPose pose = pose_at(random_view(rng));
    std::vector<Vec2> pts;
    for (const Vec3& p : cube.vertices) {
      const Vec3 c = pose.extrinsics.rotation * p + pose.extrinsics.translation;
      pts.emplace_back(pose.intrinsics.ax * c.x() / c.z() + pose.intrinsics.cx,
                       pose.intrinsics.ay * c.y() / c.z() + pose.intrinsics.cy);
    }
    const double want = hull_area(pts);
    const double got = static_cast<double>(area(render_mask(cube, pose)));
    EXPECT_LT(std::abs(got - want) / want, 0.02);
  }
}

TEST(RenderMask, ClosingSealsPinholes) {
  Mask m(20, 20, 1);
  m(5, 5) = 0;
  m(0, 0) = 0;
  const Mask c = close3x3(m);
  EXPECT_EQ(c(5, 5), 1);
  EXPECT_EQ(c(0, 0), 1);
  EXPECT_EQ(c(19, 19), 1);
  Mask dot(20, 20, 0);
  dot(10, 10) = 1;
  EXPECT_EQ(close3x3(dot), dot);
}

TEST(RenderPreview, NearerSplatWins) {
  SplatModel m;
  Gaussian far, near;
  far.mean = Vec3(-0.5, 0, 0);
  near.mean = Vec3(0.5, 0, 0);
  far.covariance = near.covariance = 0.01 * Mat3::Identity();
  far.color = Vec3(1, 0, 0);
  near.color = Vec3(0, 0, 1);
  m.gaussians = {near, far};
  const RgbaImage img = render_preview(m, pose_at(Viewpoint(0, M_PI / 2)));
  const Rgba p = img(200, 200);
  EXPECT_LE(p.r, 3);
  EXPECT_GE(p.b, 252);
  EXPECT_GE(p.a, 254);
  std::swap(m.gaussians[0], m.gaussians[1]);
  EXPECT_EQ(render_preview(m, pose_at(Viewpoint(0, M_PI / 2)))(200, 200), p);
}

TEST(RenderPreview, AnisotropicIntrinsicsStretchFootprint) {
  CameraIntrinsics in = test_intrinsics();
  in.ax = 2.0 * in.ay;
  SplatModel m;
  Gaussian g;
  g.covariance = 0.01 * Mat3::Identity();
  m.gaussians.push_back(g);
  const Mask mask = render_mask(m, pose_at(Viewpoint(0.4, 1.3), in), {0.3, 2.0, false});
  int x0 = 400, x1 = -1, y0 = 400, y1 = -1;
  for (int y = 0; y < 400; ++y) {
    for (int x = 0; x < 400; ++x) {
      if (!mask(x, y)) continue;
      x0 = std::min(x0, x), x1 = std::max(x1, x);
      y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  }
  EXPECT_NEAR(static_cast<double>(x1 - x0 + 1) / (y1 - y0 + 1), 2.0, 0.06);
}

TEST(RenderPreview, IdentityDocumentRendersIdentically) {
  std::mt19937_64 rng(2);
  const SplatModel m = blob_splats(rng, 3000);
  DeformationDocument doc;
  doc.intrinsics = test_intrinsics();
  doc.keypoints.push_back(make_keypoint(Viewpoint(0.2, 1.2), square_rig()));
  const Viewpoint v(0.3, 1.1);
  const CameraPose pose = pose_at(v);
  EXPECT_EQ(render_preview(deform_model(m, doc, v), pose), render_preview(m, pose));
  const TriMeshModel s = uv_sphere(0.6, 12, 24);
  EXPECT_EQ(render_preview(deform_model(s, doc, v), pose), render_preview(s, pose));
}

TEST(RenderPreview, DeterministicAcrossThreads) {
  std::mt19937_64 rng(3);
  const SplatModel m = blob_splats(rng, 5000);
  const CameraPose pose = pose_at(Viewpoint(2.0, 0.9));
  const int saved = thread_count();
  set_thread_count(1);
  const RgbaImage a = render_preview(m, pose);
  set_thread_count(5);
  const RgbaImage b = render_preview(m, pose);
  set_thread_count(saved);
  EXPECT_EQ(a, b);
}

TEST(RenderPreview, MeshIsShadedAndOpaque) {
  const TriMeshModel s = uv_sphere(0.6, 16, 32);
  const RgbaImage img = render_preview(s, pose_at(Viewpoint(1.0, 1.0)));
  EXPECT_EQ(img(200, 200).a, 255);
  EXPECT_GT(img(200, 200).r, img(200 + 60, 200).r);  // headlight falls off towards the rim
  EXPECT_EQ(img(5, 5).a, 0);
}

TEST(RenderMask, KeypointMaskMatchesDeformedRig) {
  const TriMeshModel model = uv_sphere(0.7, 40, 80);
  const Viewpoint v(0.8, 1.2);
  const CameraPose pose = pose_at(v);
  const Mask mask = render_mask(model, pose);
  RigMesh2D rig = rig_from_mask(mask, TriangulationParams{});
  // Three handles: two dragged, one pinned.
  int left = 0, right = 0, top = 0;
  const auto& rv = rig.rest_vertices();
  for (int i = 0; i < static_cast<int>(rv.size()); ++i) {
    if (rv[i].x() < rv[left].x()) left = i;
    if (rv[i].x() > rv[right].x()) right = i;
    if (rv[i].y() < rv[top].y()) top = i;
  }
  HandleSet h = HandleSet::at({left, right, top});
  h.transforms[0] = affine_translation(Vec2(-25, 5));
  h.transforms[2] = affine_translation(Vec2(10, -30));
  const WeightMatrix w = solve_weights(rig, h, WeightMethod::kHarmonic);
  rig = apply_skinning(rig, h, w);
  DeformationDocument doc;
  doc.intrinsics = test_intrinsics();
  doc.keypoints.push_back(make_keypoint(v, rig));
  doc.keypoints[0].handles = h;
  const Mask got = render_mask(deform_model(model, doc, v), pose);
  EXPECT_GE(mask_iou(got, rasterize_rig(rig, 400, 400, true)), 0.95);
}

TEST(Turntable, FadesAwayFromKeypoint) {
  const TriMeshModel model = uv_sphere(0.7, 24, 48);
  DeformationDocument doc;
  doc.intrinsics = test_intrinsics();
  std::mt19937_64 rng(4);
  doc.keypoints.push_back(make_keypoint(Viewpoint(0.0, M_PI / 2), random_warp(square_rig(), rng), 4, 4));
  TurntableOptions opt;
  opt.orbit = {Vec3::Zero(), kOrbitRadius};
  std::vector<double> disp;
  std::vector<Mask> masks;
  render_turntable(model, doc, opt, [&](const TurntableFrame& f) {
    disp.push_back(mean_displacement(std::get<TriMeshModel>(f.deformed), model));
    Mask m(400, 400, 0);
    for (std::size_t i = 0; i < m.pixels.size(); ++i) m.pixels[i] = f.image.pixels[i].a != 0;
    masks.push_back(m);
  });
  ASSERT_EQ(disp.size(), 36u);
  EXPECT_GT(disp[0], 1e-3);
  EXPECT_LT(disp[18], 1e-9);
  for (int i = 1; i <= 18; ++i) EXPECT_LE(disp[i], disp[i - 1] * 1.05 + 1e-12);
  const Mask plain = render_mask(model, pose_at(Viewpoint(M_PI, M_PI / 2)), {0.3, 2.0, false});
  EXPECT_GE(mask_iou(masks[18], plain), 0.98);
}

TEST(Turntable, IdentityDocumentAndFiles) {
  const TriMeshModel model = uv_sphere(0.7, 12, 24);
  DeformationDocument empty;
  TurntableOptions opt;
  opt.frames = 4;
  opt.orbit = {Vec3::Zero(), kOrbitRadius};
  const std::string dir = (std::filesystem::temp_directory_path() / "vdfield_turntable").string();
  std::filesystem::remove_all(dir);
  const auto paths = write_turntable(model, empty, opt, dir);
  ASSERT_EQ(paths.size(), 4u);
  EXPECT_EQ(std::filesystem::path(paths[3]).filename(), "frame_0003.png");
  for (int i = 0; i < 4; ++i) {
    const RgbaImage img = decode_png(read_file(paths[i]));
    EXPECT_EQ(img, render_preview(model, pose_at(Viewpoint(2 * M_PI * i / 4, M_PI / 2))));
  }
  std::filesystem::remove_all(dir);
  opt.frames = 1;
  EXPECT_THROW(render_turntable(model, empty, opt, [](const TurntableFrame&) {}), Error);
}

TEST(ImageCodecs, PngAndPgmRoundTrip) {
  RgbaImage img(7, 5);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 7; ++x) img(x, y) = {static_cast<std::uint8_t>(x * 30), static_cast<std::uint8_t>(y * 50), 7, static_cast<std::uint8_t>(x * y)};
  }
  EXPECT_EQ(decode_png(encode_png(img)), img);
  EXPECT_THROW(decode_png("not a png"), ParseError);
  Mask m(9, 4, 0);
  m(3, 2) = 1;
  m(8, 0) = 1;
  EXPECT_EQ(decode_pgm(encode_pgm(m)), m);
}
