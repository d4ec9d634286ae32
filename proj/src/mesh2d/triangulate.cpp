#include <algorithm>
#include <cmath>
#include <map>

#include "cdt.hpp"
#include "vdfield/error.hpp"
#include "vdfield/mesh2d.hpp"

namespace vdfield {

RigMesh2D triangulate(const std::vector<Polygon2D>& boundary, const TriangulationParams& params) {
  params.validate();
  Vec2 lo(0, 0), hi(0, 0);
  bool any = false;
  for (const Polygon2D& loop : boundary) {
    if (loop.size() < 3) throw Error(ErrorKind::kInvalidArgument, "boundary loop with fewer than 3 points");
    for (const Vec2& p : loop) {
      if (!p.allFinite()) throw Error(ErrorKind::kInvalidArgument, "non-finite boundary point");
      lo = any ? lo.cwiseMin(p) : p;
      hi = any ? hi.cwiseMax(p) : p;
      any = true;
    }
  }
  if (!any) throw Error(ErrorKind::kInvalidArgument, "empty boundary");

  detail::Cdt cdt(lo, hi);
  std::vector<std::vector<int>> ids;
  for (const Polygon2D& loop : boundary) {
    std::vector<int>& row = ids.emplace_back();
    for (const Vec2& p : loop) row.push_back(cdt.insert_input_vertex(p));
  }
  for (const auto& row : ids) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      const int a = row[i], b = row[(i + 1) % row.size()];
      if (a != b) cdt.insert_segment(a, b);
    }
  }
  cdt.classify_regions();

  double area = 0.0;
  for (const auto& t : cdt.triangles()) {
    if (!t.interior) continue;
    const Vec2& a = cdt.vertices()[t.v[0]].p;
    const Vec2& b = cdt.vertices()[t.v[1]].p;
    const Vec2& c = cdt.vertices()[t.v[2]].p;
    area += 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
  }
  if (!(area > 0.0)) throw Error(ErrorKind::kInvalidArgument, "boundary encloses no area");

  detail::RefineParams rp;
  rp.min_angle_deg = params.min_angle;
  rp.max_area = params.max_area;
  rp.max_vertices = static_cast<std::size_t>(params.vertex_budget_factor * cdt.input_vertex_count() +
                                             8.0 * area / params.max_area) +
                    64;
  cdt.refine(rp);

  const auto& verts = cdt.vertices();
  std::vector<int> remap(verts.size(), -1);
  std::vector<Vec2> out_verts;
  std::vector<Face> faces;
  for (const auto& t : cdt.triangles()) {
    if (!t.interior) continue;
    for (int v : t.v) remap[v] = 0;
  }
  for (std::size_t v = 0; v < verts.size(); ++v) {
    if (remap[v] < 0) continue;
    remap[v] = static_cast<int>(out_verts.size());
    out_verts.push_back(verts[v].p);
  }
  for (const auto& t : cdt.triangles()) {
    if (t.interior) faces.push_back({remap[t.v[0]], remap[t.v[1]], remap[t.v[2]]});
  }
  if (faces.empty()) throw Error(ErrorKind::kInvalidArgument, "triangulation has no interior faces");
  return RigMesh2D(std::move(out_verts), std::move(faces));
}

QualityReport check_quality(const RigMesh2D& rig, const TriangulationParams& params) {
  std::map<std::pair<int, int>, int> uses;
  for (const Face& f : rig.faces()) {
    for (int k = 0; k < 3; ++k) {
      const int a = f[k], b = f[(k + 1) % 3];
      ++uses[{std::min(a, b), std::max(a, b)}];
    }
  }
  QualityReport r;
  const auto& v = rig.rest_vertices();
  for (const Face& f : rig.faces()) {
    ++r.triangles;
    int boundary = 0;
    double min_ang = 180.0;
    for (int k = 0; k < 3; ++k) {
      const int a = f[k], b = f[(k + 1) % 3], c = f[(k + 2) % 3];
      if (uses[{std::min(a, b), std::max(a, b)}] == 1) ++boundary;
      const Vec2 e1 = v[b] - v[a], e2 = v[c] - v[a];
      const double ang = rad_to_deg(std::atan2(std::abs(e1.x() * e2.y() - e1.y() * e2.x()), e1.dot(e2)));
      min_ang = std::min(min_ang, ang);
    }
    const Vec2 e1 = v[f[1]] - v[f[0]], e2 = v[f[2]] - v[f[0]];
    const double area = 0.5 * std::abs(e1.x() * e2.y() - e1.y() * e2.x());
    r.max_area = std::max(r.max_area, area);
    if (area > params.max_area * (1.0 + 1e-9)) ++r.area_violations;
    r.min_angle_all = std::min(r.min_angle_all, min_ang);
    if (boundary >= 2) {
      ++r.exempt;
      continue;
    }
    r.min_angle = std::min(r.min_angle, min_ang);
    if (min_ang < params.min_angle - 1e-9) ++r.angle_violations;
  }
  return r;
}

RigMesh2D rig_from_mask(const Mask& mask, const TriangulationParams& params,
                        std::vector<Polygon2D>* boundary_out) {
  params.validate();
  std::vector<Polygon2D> boundary = extract_silhouette(mask, params.simplify_tolerance);
  RigMesh2D rig = triangulate(boundary, params);
  if (boundary_out) *boundary_out = std::move(boundary);
  return rig;
}

}  // namespace vdfield
