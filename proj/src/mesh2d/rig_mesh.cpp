#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "rig_internal.hpp"
#include "vdfield/error.hpp"

namespace vdfield {

using detail::RigDeformation;
using detail::RigGeometry;

namespace {

constexpr double kInsideTol = 1e-12;

std::shared_ptr<const RigGeometry> build_geometry(std::vector<Vec2> rest, std::vector<Face> faces) {
  const int nv = static_cast<int>(rest.size());
  if (faces.empty()) throw ValidationError("RigMesh2D: at least one face");
  for (const Vec2& p : rest) {
    if (!p.allFinite()) throw ValidationError("RigMesh2D: finite rest vertices");
  }
  auto g = std::make_shared<RigGeometry>();
  g->einv.reserve(faces.size());
  std::map<std::pair<int, int>, int> directed;
  for (const Face& f : faces) {
    for (int k = 0; k < 3; ++k) {
      if (f[k] < 0 || f[k] >= nv) throw ValidationError("RigMesh2D: face indices in range");
    }
    const Vec2 e1 = rest[f[1]] - rest[f[0]];
    const Vec2 e2 = rest[f[2]] - rest[f[0]];
    const double det = e1.x() * e2.y() - e1.y() * e2.x();
    if (!(0.5 * det > 1e-9)) throw ValidationError("RigMesh2D: rest triangle area > 1e-9");
    g->einv.push_back({e2.y() / det, -e2.x() / det, -e1.y() / det, e1.x() / det});
    for (int k = 0; k < 3; ++k) {
      if (++directed[{f[k], f[(k + 1) % 3]}] > 1) {
        throw ValidationError("RigMesh2D: rest triangulation edge-manifold");
      }
    }
  }

  Vec2 lo = rest[faces[0][0]], hi = lo;
  std::vector<double> diam;
  diam.reserve(faces.size());
  for (const Face& f : faces) {
    double d = 0.0;
    for (int k = 0; k < 3; ++k) {
      lo = lo.cwiseMin(rest[f[k]]);
      hi = hi.cwiseMax(rest[f[k]]);
      d = std::max(d, (rest[f[k]] - rest[f[(k + 1) % 3]]).norm());
    }
    diam.push_back(d);
  }
  std::nth_element(diam.begin(), diam.begin() + diam.size() / 2, diam.end());
  double cell = diam[diam.size() / 2];
  const double w = std::max(hi.x() - lo.x(), 1e-9), h = std::max(hi.y() - lo.y(), 1e-9);
  const double max_cells = std::max<double>(16.0, 4.0 * faces.size());
  if ((w / cell) * (h / cell) > max_cells) cell = std::sqrt(w * h / max_cells);
  g->x0 = lo.x();
  g->y0 = lo.y();
  g->cell = cell;
  g->nx = std::clamp(static_cast<int>(std::ceil(w / cell)), 1, 4096);
  g->ny = std::clamp(static_cast<int>(std::ceil(h / cell)), 1, 4096);

  auto cell_range = [&](double a, double b, double origin, int n) {
    const int i0 = std::clamp(static_cast<int>(std::floor((a - origin) / cell)), 0, n - 1);
    const int i1 = std::clamp(static_cast<int>(std::floor((b - origin) / cell)), 0, n - 1);
    return std::pair<int, int>(i0, i1);
  };
  std::vector<int> count(static_cast<std::size_t>(g->nx) * g->ny + 1, 0);
  auto for_cells = [&](const Face& f, auto&& fn) {
    const Vec2 a = rest[f[0]], b = rest[f[1]], c = rest[f[2]];
    const auto [ix0, ix1] = cell_range(std::min({a.x(), b.x(), c.x()}), std::max({a.x(), b.x(), c.x()}),
                                       g->x0, g->nx);
    const auto [iy0, iy1] = cell_range(std::min({a.y(), b.y(), c.y()}), std::max({a.y(), b.y(), c.y()}),
                                       g->y0, g->ny);
    for (int iy = iy0; iy <= iy1; ++iy) {
      for (int ix = ix0; ix <= ix1; ++ix) fn(iy * g->nx + ix);
    }
  };
  for (const Face& f : faces) for_cells(f, [&](int c) { ++count[c + 1]; });
  for (std::size_t i = 1; i < count.size(); ++i) count[i] += count[i - 1];
  g->cell_start = count;
  g->cell_faces.resize(count.back());
  std::vector<int> fill(count.begin(), count.end() - 1);
  for (std::size_t fi = 0; fi < faces.size(); ++fi) {
    for_cells(faces[fi], [&](int c) { g->cell_faces[fill[c]++] = static_cast<int>(fi); });
  }

  g->rest = std::move(rest);
  g->faces = std::move(faces);
  return g;
}

std::shared_ptr<const RigDeformation> build_deformation(const RigGeometry& g,
                                                        std::vector<Vec2> deformed) {
  if (deformed.size() != g.rest.size()) {
    throw ValidationError("RigMesh2D: deformed_vertices same length as rest_vertices");
  }
  for (const Vec2& p : deformed) {
    if (!p.allFinite()) throw ValidationError("RigMesh2D: finite deformed vertices");
  }
  auto d = std::make_shared<RigDeformation>();
  d->identity = deformed == g.rest;
  d->jacobian.reserve(g.faces.size());
  for (std::size_t f = 0; f < g.faces.size(); ++f) {
    const Face& t = g.faces[f];
    Mat2 ep;
    ep.col(0) = deformed[t[1]] - deformed[t[0]];
    ep.col(1) = deformed[t[2]] - deformed[t[0]];
    Mat2 ei;
    ei << g.einv[f][0], g.einv[f][1], g.einv[f][2], g.einv[f][3];
    d->jacobian.push_back(d->identity ? Mat2::Identity() : Mat2(ep * ei));
  }
  d->deformed = std::move(deformed);
  return d;
}

// Barycentrics of q with respect to rest face f (unclamped).
inline void barycentric(const RigGeometry& g, int f, double u, double v, double bary[3]) {
  const Vec2& a = g.rest[g.faces[f][0]];
  const double px = u - a.x(), py = v - a.y();
  const auto& m = g.einv[f];
  const double s = m[0] * px + m[1] * py;
  const double t = m[2] * px + m[3] * py;
  bary[1] = s;
  bary[2] = t;
  bary[0] = 1.0 - s - t;
}

int find_containing(const RigGeometry& g, double u, double v, double bary[3]) {
  const double fx = (u - g.x0) / g.cell, fy = (v - g.y0) / g.cell;
  if (!(fx >= 0.0 && fy >= 0.0 && fx <= g.nx && fy <= g.ny)) return -1;
  const int ix = std::min(static_cast<int>(fx), g.nx - 1);
  const int iy = std::min(static_cast<int>(fy), g.ny - 1);
  const int c = iy * g.nx + ix;
  for (int k = g.cell_start[c]; k < g.cell_start[c + 1]; ++k) {
    const int f = g.cell_faces[k];
    barycentric(g, f, u, v, bary);
    if (bary[0] >= -kInsideTol && bary[1] >= -kInsideTol && bary[2] >= -kInsideTol) return f;
  }
  return -1;
}

// Closest point on triangle abc to p, as barycentrics.
std::array<double, 3> closest_barycentric(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return {1.0, 0.0, 0.0};
  const Vec2 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return {0.0, 1.0, 0.0};
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double t = d1 / (d1 - d3);
    return {1.0 - t, t, 0.0};
  }
  const Vec2 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return {0.0, 0.0, 1.0};
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double t = d2 / (d2 - d6);
    return {1.0 - t, 0.0, t};
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {0.0, 1.0 - t, t};
  }
  const double denom = 1.0 / (va + vb + vc);
  const double s = vb * denom, t = vc * denom;
  return {1.0 - s - t, s, t};
}

struct Nearest {
  int face = -1;
  std::array<double, 3> bary{};
};

Nearest find_nearest(const RigGeometry& g, const Vec2& q) {
  const int cx = std::clamp(static_cast<int>(std::floor((q.x() - g.x0) / g.cell)), 0, g.nx - 1);
  const int cy = std::clamp(static_cast<int>(std::floor((q.y() - g.y0) / g.cell)), 0, g.ny - 1);
  Nearest best;
  double best_d2 = std::numeric_limits<double>::infinity();
  auto visit = [&](int ix, int iy) {
    const int c = iy * g.nx + ix;
    for (int k = g.cell_start[c]; k < g.cell_start[c + 1]; ++k) {
      const int f = g.cell_faces[k];
      const Face& t = g.faces[f];
      const auto bc = closest_barycentric(q, g.rest[t[0]], g.rest[t[1]], g.rest[t[2]]);
      const Vec2 p = bc[0] * g.rest[t[0]] + bc[1] * g.rest[t[1]] + bc[2] * g.rest[t[2]];
      const double d2 = (p - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && f < best.face)) {
        best_d2 = d2;
        best.face = f;
        best.bary = bc;
      }
    }
  };
  const int max_r = std::max(g.nx, g.ny);
  for (int r = 0; r <= max_r; ++r) {
    for (int iy = cy - r; iy <= cy + r; ++iy) {
      if (iy < 0 || iy >= g.ny) continue;
      const bool edge_row = iy == cy - r || iy == cy + r;
      for (int ix = cx - r; ix <= cx + r; ix += (edge_row || r == 0) ? 1 : 2 * r) {
        if (ix >= 0 && ix < g.nx) visit(ix, iy);
      }
    }
    if (best.face < 0) continue;
    // Lower bound on the distance to faces registered only in unvisited cells.
    double lb = std::numeric_limits<double>::infinity();
    const double bx0 = g.x0 + (cx - r) * g.cell, bx1 = g.x0 + (cx + r + 1) * g.cell;
    const double by0 = g.y0 + (cy - r) * g.cell, by1 = g.y0 + (cy + r + 1) * g.cell;
    if (cx - r > 0) lb = std::min(lb, std::max(0.0, q.x() - bx0));
    if (cx + r < g.nx - 1) lb = std::min(lb, std::max(0.0, bx1 - q.x()));
    if (cy - r > 0) lb = std::min(lb, std::max(0.0, q.y() - by0));
    if (cy + r < g.ny - 1) lb = std::min(lb, std::max(0.0, by1 - q.y()));
    if (lb * lb > best_d2) break;
  }
  return best;
}

}  // namespace

void TriangulationParams::validate() const {
  if (!(min_angle > 0.0 && min_angle < 34.0)) {
    throw ValidationError("TriangulationParams: min_angle in (0, 34)");
  }
  if (!(max_area > 0.0)) throw ValidationError("TriangulationParams: max_area > 0");
  if (mask_resolution <= 0) throw ValidationError("TriangulationParams: mask_resolution > 0");
  if (!(simplify_tolerance >= 0.0)) {
    throw ValidationError("TriangulationParams: simplify_tolerance >= 0");
  }
  if (!(vertex_budget_factor > 0.0)) {
    throw ValidationError("TriangulationParams: vertex_budget_factor > 0");
  }
}

RigMesh2D::RigMesh2D(std::vector<Vec2> rest_vertices, std::vector<Face> faces)
    : geometry_(build_geometry(std::move(rest_vertices), std::move(faces))) {
  deformation_ = build_deformation(*geometry_, geometry_->rest);
}

RigMesh2D::RigMesh2D(std::vector<Vec2> rest_vertices, std::vector<Face> faces,
                     std::vector<Vec2> deformed_vertices)
    : geometry_(build_geometry(std::move(rest_vertices), std::move(faces))) {
  deformation_ = build_deformation(*geometry_, std::move(deformed_vertices));
}

namespace {
const std::vector<Vec2> kNoVertices;
const std::vector<Face> kNoFaces;
}  // namespace

const std::vector<Vec2>& RigMesh2D::rest_vertices() const {
  return geometry_ ? geometry_->rest : kNoVertices;
}
const std::vector<Face>& RigMesh2D::faces() const { return geometry_ ? geometry_->faces : kNoFaces; }
const std::vector<Vec2>& RigMesh2D::deformed_vertices() const {
  return deformation_ ? deformation_->deformed : kNoVertices;
}
bool RigMesh2D::is_identity() const { return !deformation_ || deformation_->identity; }

RigMesh2D RigMesh2D::with_deformed(std::vector<Vec2> deformed_vertices) const {
  if (!geometry_) throw Error(ErrorKind::kInvalidArgument, "empty rig mesh");
  RigMesh2D out;
  out.geometry_ = geometry_;
  out.deformation_ = build_deformation(*geometry_, std::move(deformed_vertices));
  return out;
}

const Mat2& RigMesh2D::face_jacobian(int face) const { return deformation_->jacobian.at(face); }

std::vector<std::array<int, 2>> RigMesh2D::boundary_edges() const {
  std::map<std::pair<int, int>, int> count;
  for (const Face& f : faces()) {
    for (int k = 0; k < 3; ++k) {
      const int a = f[k], b = f[(k + 1) % 3];
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  }
  std::vector<std::array<int, 2>> out;
  for (const Face& f : faces()) {
    for (int k = 0; k < 3; ++k) {
      const int a = f[k], b = f[(k + 1) % 3];
      if (count[{std::min(a, b), std::max(a, b)}] == 1) out.push_back({a, b});
    }
  }
  return out;
}

Location locate(const Vec2& q, const RigMesh2D& rig) {
  if (rig.empty()) throw Error(ErrorKind::kInvalidArgument, "empty rig mesh");
  const RigGeometry& g = rig.geometry();
  double bary[3];
  const int f = find_containing(g, q.x(), q.y(), bary);
  if (f >= 0) return {f, {bary[0], bary[1], bary[2]}, true};
  const Nearest n = find_nearest(g, q);
  return {n.face, n.bary, false};
}

bool sample_phi(const RigMesh2D& rig, double u, double v, double& up, double& vp, double d[4]) {
  const RigGeometry& g = rig.geometry();
  double bary[3];
  int f = find_containing(g, u, v, bary);
  const bool inside = f >= 0;
  if (!inside) {
    f = find_nearest(g, Vec2(u, v)).face;
    barycentric(g, f, u, v, bary);  // affine extension of the nearest face
  }
  const std::vector<Vec2>& dv = rig.deformed_vertices();
  const Face& t = g.faces[f];
  up = bary[0] * dv[t[0]].x() + bary[1] * dv[t[1]].x() + bary[2] * dv[t[2]].x();
  vp = bary[0] * dv[t[0]].y() + bary[1] * dv[t[1]].y() + bary[2] * dv[t[2]].y();
  const Mat2& j = rig.face_jacobian(f);
  d[0] = j(0, 0);
  d[1] = j(0, 1);
  d[2] = j(1, 0);
  d[3] = j(1, 1);
  return inside;
}

WarpSample eval_phi(const Vec2& q, const RigMesh2D& rig) {
  if (rig.empty()) throw Error(ErrorKind::kInvalidArgument, "empty rig mesh");
  WarpSample s;
  double up, vp, d[4];
  sample_phi(rig, q.x(), q.y(), up, vp, d);
  s.position = Vec2(up, vp);
  s.jacobian << d[0], d[1], d[2], d[3];
  return s;
}

}  // namespace vdfield
