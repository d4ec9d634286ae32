#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <queue>
#include <random>
#include <set>

#include "test_shapes.hpp"
#include "vdfield/error.hpp"
#include "vdfield/rigging.hpp"

using namespace vdfield;

namespace {

/// nx x ny grid of quads over [0, len] x [0, h]; diagonals mirror about x = len / 2.
RigMesh2D strip(int nx, int ny, double len, double h) {
  std::vector<Vec2> v;
  std::vector<Face> f;
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) v.emplace_back(len * i / nx, h * j / ny);
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if (i < nx / 2) {
        f.push_back({a, b, c});
        f.push_back({a, c, d});
      } else {
        f.push_back({a, b, d});
        f.push_back({b, c, d});
      }
    }
  }
  return RigMesh2D(std::move(v), std::move(f));
}

struct RigCase {
  RigMesh2D rig;
  HandleSet handles;
};

RigCase random_case(std::mt19937_64& rng, int index) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double cx = 200 + 20 * (u(rng) - 0.5), cy = 200 + 20 * (u(rng) - 0.5);
  std::vector<Polygon2D> poly;
  switch (index % 4) {
    case 0: poly = {vdtest::ellipse(cx, cy, 60 + 40 * u(rng), 30 + 40 * u(rng), u(rng) * 3, 48)}; break;
    case 1: poly = {vdtest::star(cx, cy, 5 + index % 3, 90, 45 + 20 * u(rng), u(rng))}; break;
    case 2: poly = {vdtest::wobbly(cx, cy, 70, 0.15, 3 + index % 5, u(rng) * 6, 64)}; break;
    default:
      poly = {vdtest::ellipse(cx, cy, 90, 70, u(rng), 48), vdtest::reversed(vdtest::ellipse(cx, cy, 25, 20, 0, 16))};
  }
  TriangulationParams p;
  p.max_area = 40.0;
  RigCase c{triangulate(poly, p), {}};
  const int n = static_cast<int>(c.rig.vertex_count());
  const int nh = 2 + static_cast<int>(u(rng) * 4);
  std::set<int> chosen;
  while (static_cast<int>(chosen.size()) < nh) chosen.insert(static_cast<int>(u(rng) * n));
  c.handles = HandleSet::at({chosen.begin(), chosen.end()});
  for (auto& t : c.handles.transforms) {
    t = affine_rotation(0.5 * (u(rng) - 0.5), Vec2(cx, cy), Vec2(30 * (u(rng) - 0.5), 30 * (u(rng) - 0.5)));
  }
  return c;
}

void expect_weight_invariants(const RigCase& c, const WeightMatrix& w) {
  EXPECT_NO_THROW(w.validate(c.handles, 1e-7));
  const auto& rest = c.rig.rest_vertices();
  // Handle interpolation after skinning.
  const RigMesh2D def = apply_skinning(c.rig, c.handles, w);
  for (std::size_t h = 0; h < c.handles.size(); ++h) {
    const int v = c.handles.vertices[h];
    EXPECT_LT((def.deformed_vertices()[v] - apply_affine(c.handles.transforms[h], rest[v])).norm(), 1e-7);
  }
  // Translation covariance.
  HandleSet moved = c.handles;
  const Vec2 tau(13.25, -7.5);
  for (auto& t : moved.transforms) t.col(2) += tau;
  const RigMesh2D def2 = apply_skinning(c.rig, moved, w);
  for (std::size_t i = 0; i < rest.size(); ++i) {
    EXPECT_LT((def2.deformed_vertices()[i] - def.deformed_vertices()[i] - tau).norm(), 1e-9);
  }
}

}  // namespace

TEST(Affine, Helpers) {
  const Vec2 p(3, 4);
  EXPECT_EQ(apply_affine(affine_identity(), p), p);
  EXPECT_EQ(apply_affine(affine_translation(Vec2(1, -1)), p), Vec2(4, 3));
  const Affine2 r = affine_rotation(kPi / 2, Vec2(1, 1));
  EXPECT_LT((apply_affine(r, Vec2(2, 1)) - Vec2(1, 2)).norm(), 1e-15);
  EXPECT_LT((apply_affine(r, Vec2(1, 1)) - Vec2(1, 1)).norm(), 1e-15);
}

TEST(HandleSet, Validation) {
  HandleSet h = HandleSet::at({0, 3});
  EXPECT_NO_THROW(h.validate(4));
  EXPECT_THROW(h.validate(3), ValidationError);
  h.vertices = {1, 1};
  EXPECT_THROW(h.validate(4), ValidationError);
  h.vertices = {1};
  EXPECT_THROW(h.validate(4), ValidationError);  // transform count
  EXPECT_NO_THROW(HandleSet{}.validate(4));
  EXPECT_THROW(HandleSet{}.validate(4, true), ValidationError);
}

TEST(Laplacian, RowSumsZeroAndSymmetric) {
  const RigMesh2D rig = strip(12, 4, 30, 10);
  const Eigen::SparseMatrix<double> l = cotangent_laplacian(rig.rest_vertices(), rig.faces());
  const Eigen::MatrixXd d(l);
  EXPECT_LT((d - d.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(d.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
  for (int i = 0; i < d.rows(); ++i) {
    for (int j = 0; j < d.cols(); ++j) {
      if (i != j) {
        EXPECT_LE(d(i, j), 0.0);
      }
    }
  }
  // Linear functions are harmonic at interior vertices, up to the clamp on the
  // zero weights opposite right angles.
  Eigen::VectorXd x(rig.vertex_count());
  for (std::size_t i = 0; i < rig.vertex_count(); ++i) x[i] = 2 * rig.rest_vertices()[i].x() - rig.rest_vertices()[i].y();
  const Eigen::VectorXd lx = l * x;
  for (std::size_t i = 0; i < rig.vertex_count(); ++i) {
    const Vec2 p = rig.rest_vertices()[i];
    if (p.x() > 0 && p.x() < 30 && p.y() > 0 && p.y() < 10) {
      EXPECT_NEAR(lx[i], 0.0, 1e-4);
    }
  }
  const Eigen::VectorXd m = lumped_mass(rig.rest_vertices(), rig.faces());
  EXPECT_NEAR(m.sum(), 300.0, 1e-9);
}

TEST(Weights, SingleHandleIsExactlyOne) {
  const RigMesh2D rig = strip(10, 3, 20, 6);
  for (WeightMethod m : {WeightMethod::kHarmonic, WeightMethod::kBoundedBiharmonic}) {
    const WeightMatrix w = solve_weights(rig, HandleSet::at({7}), m);
    EXPECT_EQ(w.cols(), 1u);
    for (std::size_t i = 0; i < w.rows(); ++i) EXPECT_EQ(w.w(i, 0), 1.0);
  }
}

TEST(Weights, SymmetricStripMidline) {
  const int nx = 20, ny = 6;
  const RigMesh2D rig = strip(nx, ny, 40, 12);
  const int left = (ny / 2) * (nx + 1), right = left + nx;
  for (WeightMethod m : {WeightMethod::kHarmonic, WeightMethod::kBoundedBiharmonic}) {
    const WeightMatrix w = solve_weights(rig, HandleSet::at({left, right}), m);
    int checked = 0;
    for (std::size_t i = 0; i < rig.vertex_count(); ++i) {
      if (std::abs(rig.rest_vertices()[i].x() - 20.0) > 1e-12) continue;
      EXPECT_NEAR(w.w(i, 0), 0.5, 1e-3) << to_string(m);
      EXPECT_NEAR(w.w(i, 1), 0.5, 1e-3) << to_string(m);
      ++checked;
    }
    EXPECT_EQ(checked, ny + 1);
  }
}

TEST(Weights, InvariantsOnRandomRigs) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 20; ++i) {
    const RigCase c = random_case(rng, i);
    for (WeightMethod m : {WeightMethod::kHarmonic, WeightMethod::kBoundedBiharmonic}) {
      SCOPED_TRACE(std::string(to_string(m)) + " case " + std::to_string(i));
      const WeightMatrix w = solve_weights(c.rig, c.handles, m);
      EXPECT_EQ(w.orphan_components, 0);
      expect_weight_invariants(c, w);
    }
  }
}

TEST(Weights, BiharmonicIsLowerEnergyThanHarmonic) {
  std::mt19937_64 rng(32);
  const RigCase c = random_case(rng, 0);
  const WeightMatrix wh = solve_weights(c.rig, c.handles, WeightMethod::kHarmonic);
  const WeightMatrix wb = solve_weights(c.rig, c.handles, WeightMethod::kBoundedBiharmonic);
  const auto l = cotangent_laplacian(c.rig.rest_vertices(), c.rig.faces());
  const Eigen::VectorXd minv = lumped_mass(c.rig.rest_vertices(), c.rig.faces()).cwiseInverse();
  auto energy = [&](const Eigen::MatrixXd& w) {
    const Eigen::MatrixXd lw = l * w;
    return (lw.transpose() * minv.asDiagonal() * lw).trace();
  };
  EXPECT_LE(energy(wb.w), energy(wh.w) * (1 + 1e-9));
}

TEST(Weights, HarmonicHasNoInteriorExtrema) {
  // Discrete maximum principle on a radial disk: a free vertex never exceeds
  // all of its neighbours, so weights decay away from their handle.
  const RigMesh2D rig = triangulate({vdtest::ellipse(100, 100, 60, 60, 0, 64)}, TriangulationParams{});
  int center = 0;
  for (std::size_t i = 0; i < rig.vertex_count(); ++i) {
    if ((rig.rest_vertices()[i] - Vec2(100, 100)).norm() < (rig.rest_vertices()[center] - Vec2(100, 100)).norm()) {
      center = static_cast<int>(i);
    }
  }
  const HandleSet h = HandleSet::at({center, 0, 16});
  const WeightMatrix w = solve_weights(rig, h, WeightMethod::kHarmonic);
  std::vector<std::set<int>> nbr(rig.vertex_count());
  for (const Face& f : rig.faces()) {
    for (int k = 0; k < 3; ++k) nbr[f[k]].insert({f[(k + 1) % 3], f[(k + 2) % 3]});
  }
  for (std::size_t i = 0; i < rig.vertex_count(); ++i) {
    if (i == 0 || i == 16 || static_cast<int>(i) == center) continue;
    for (int k = 0; k < 3; ++k) {
      double lo = 2, hi = -1;
      for (int j : nbr[i]) {
        lo = std::min(lo, w.w(j, k));
        hi = std::max(hi, w.w(j, k));
      }
      EXPECT_LE(w.w(i, k), hi + 1e-12);
      EXPECT_GE(w.w(i, k), lo - 1e-12);
    }
  }
  // Along the ray from the centre handle away from both boundary handles the
  // centre weight falls off monotonically.
  const Vec2 away = -(rig.rest_vertices()[0] + rig.rest_vertices()[16] - 2 * Vec2(100, 100)).normalized();
  std::vector<std::pair<double, double>> ray;
  for (std::size_t i = 0; i < rig.vertex_count(); ++i) {
    const Vec2 d = rig.rest_vertices()[i] - rig.rest_vertices()[center];
    const double along = d.dot(away);
    if (along > 0 && std::abs(d.x() * away.y() - d.y() * away.x()) < 2.0) ray.emplace_back(along, w.w(i, 0));
  }
  std::sort(ray.begin(), ray.end());
  ASSERT_GT(ray.size(), 5u);
  for (std::size_t i = 1; i < ray.size(); ++i) {
    if (ray[i].first - ray[i - 1].first > 4.0) {
      EXPECT_LT(ray[i].second, ray[i - 1].second + 1e-9);
    }
  }
}

TEST(Weights, OrphanComponentsAreAnchored) {
  const RigMesh2D rig = triangulate({vdtest::ellipse(60, 60, 30, 30, 0, 24), vdtest::ellipse(200, 60, 30, 30, 0, 24)},
                                    TriangulationParams{});
  std::vector<int> comp = vertex_components(rig.vertex_count(), rig.faces());
  int a = -1;
  for (std::size_t i = 0; i < comp.size(); ++i) {
    if (rig.rest_vertices()[i].x() < 120) {
      a = static_cast<int>(i);
      break;
    }
  }
  HandleSet h = HandleSet::at({a});
  h.transforms[0] = affine_translation(Vec2(5, 5));
  const WeightMatrix w = solve_weights(rig, h, WeightMethod::kHarmonic);
  EXPECT_EQ(w.orphan_components, 1);
  EXPECT_NO_THROW(w.validate(h));
  const RigMesh2D def = apply_skinning(rig, h, w);
  for (std::size_t i = 0; i < rig.vertex_count(); ++i) {
    const Vec2 want = rig.rest_vertices()[i].x() < 120 ? rig.rest_vertices()[i] + Vec2(5, 5) : rig.rest_vertices()[i];
    EXPECT_LT((def.deformed_vertices()[i] - want).norm(), 1e-12);
  }
  WeightSolveOptions strict;
  strict.strict_components = true;
  try {
    solve_weights(rig, h, WeightMethod::kHarmonic, strict);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDisconnectedFromHandles);
  }
  const WeightMatrix none = solve_weights(rig, HandleSet{}, WeightMethod::kHarmonic);
  EXPECT_EQ(none.orphan_components, 2);
  EXPECT_TRUE(apply_skinning(rig, HandleSet{}, none).is_identity());
}

TEST(Skinning, IdentityAndBruteForce) {
  std::mt19937_64 rng(33);
  const RigCase c = random_case(rng, 2);
  const WeightMatrix w = solve_weights(c.rig, c.handles, WeightMethod::kHarmonic);
  HandleSet ident = c.handles;
  for (auto& t : ident.transforms) t = affine_identity();
  EXPECT_TRUE(apply_skinning(c.rig, ident, w).is_identity());

  HandleSet one = ident;
  one.transforms[0] = affine_translation(Vec2(10, 0));
  const RigMesh2D def = apply_skinning(c.rig, one, w);
  const int hv = one.vertices[0];
  EXPECT_LT((def.deformed_vertices()[hv] - c.rig.rest_vertices()[hv] - Vec2(10, 0)).norm(), 1e-12);
  const RigMesh2D full = apply_skinning(c.rig, c.handles, w);
  for (std::size_t i = 0; i < c.rig.vertex_count(); ++i) {
    // the blended sum written out term by term
    Vec2 s = Vec2::Zero();
    for (std::size_t h = 0; h < c.handles.size(); ++h) {
      const Mat2 a = c.handles.transforms[h].leftCols<2>();
      s += w.w(i, h) * (a * c.rig.rest_vertices()[i] + c.handles.transforms[h].col(2));
    }
    EXPECT_LT((full.deformed_vertices()[i] - s).norm(), 1e-9);
    EXPECT_LT((def.deformed_vertices()[i] - c.rig.rest_vertices()[i] - w.w(i, 0) * Vec2(10, 0)).norm(), 1e-9);
  }
}

TEST(Weights, BiharmonicSolveTimeOnSilhouetteRig) {
  const auto shapes = vdtest::synthetic_silhouettes();
  const RigMesh2D rig = rig_from_mask(shapes[0].mask, TriangulationParams{});
  const HandleSet h = HandleSet::at({0, static_cast<int>(rig.vertex_count() / 3), static_cast<int>(rig.vertex_count() / 2)});
  const auto t0 = std::chrono::steady_clock::now();
  const WeightMatrix w = solve_weights(rig, h, WeightMethod::kBoundedBiharmonic);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  RecordProperty("bbw_ms", std::to_string(ms));
  std::printf("bbw on %zu vertices: %.1f ms\n", rig.vertex_count(), ms);
  EXPECT_NO_THROW(w.validate(h));
}
