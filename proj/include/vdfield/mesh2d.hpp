#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

#include "vdfield/camera.hpp"
#include "vdfield/image.hpp"
#include "vdfield/types.hpp"

namespace vdfield {

/// Closed polyline in pixel coordinates; the last point connects to the first.
/// Outer loops have positive signed (shoelace) area, holes negative.
using Polygon2D = std::vector<Vec2>;

double signed_area(const Polygon2D& poly);

struct TriangulationParams {
  double min_angle = 32.5;       // degrees
  double max_area = 20.0;        // px^2
  int mask_resolution = 400;     // px
  double simplify_tolerance = 1.5;  // px
  /// Steiner budget: vertex_budget_factor * input vertices plus an area term
  /// (a max_area bound alone forces about 2 * area / max_area triangles).
  double vertex_budget_factor = 50.0;

  void validate() const;
};

/// Marching-squares boundary of the foreground, simplified with the given
/// tolerance. Loops are simple and mutually non-crossing.
std::vector<Polygon2D> extract_silhouette(const Mask& mask, double simplify_tolerance);

namespace detail {
struct RigGeometry;
struct RigDeformation;
}  // namespace detail

/// Triangulated silhouette defining a piecewise-linear 2D warp from rest to
/// deformed positions. Copies share the immutable rest geometry; changing the
/// deformation produces a new snapshot via with_deformed().
class RigMesh2D {
 public:
  RigMesh2D() = default;
  RigMesh2D(std::vector<Vec2> rest_vertices, std::vector<Face> faces);
  RigMesh2D(std::vector<Vec2> rest_vertices, std::vector<Face> faces,
            std::vector<Vec2> deformed_vertices);

  const std::vector<Vec2>& rest_vertices() const;
  const std::vector<Face>& faces() const;
  const std::vector<Vec2>& deformed_vertices() const;

  std::size_t vertex_count() const { return rest_vertices().size(); }
  std::size_t face_count() const { return faces().size(); }
  bool empty() const { return geometry_ == nullptr; }

  /// True when deformed_vertices equals rest_vertices exactly.
  bool is_identity() const;

  RigMesh2D with_deformed(std::vector<Vec2> deformed_vertices) const;

  /// Constant per-face Jacobian of the rest->deformed map.
  const Mat2& face_jacobian(int face) const;

  /// Edges used by exactly one face, as (from, to) in face winding order.
  std::vector<std::array<int, 2>> boundary_edges() const;

  const detail::RigGeometry& geometry() const { return *geometry_; }

 private:
  std::shared_ptr<const detail::RigGeometry> geometry_;
  std::shared_ptr<const detail::RigDeformation> deformation_;
};

struct Location {
  int face = -1;
  std::array<double, 3> bary{};
  bool inside = false;
};

/// Containing rest triangle (inclusive, lowest face index on ties) with exact
/// barycentrics, or the nearest triangle with the barycentrics of the closest
/// point on it, flagged !inside.
Location locate(const Vec2& q, const RigMesh2D& rig);

/// Rest->deformed map and its Jacobian. Outside queries use the affine map of
/// the nearest triangle.
WarpSample eval_phi(const Vec2& q, const RigMesh2D& rig);

/// Same as eval_phi with raw outputs; returns false if q was outside the mesh.
bool sample_phi(const RigMesh2D& rig, double u, double v, double& up, double& vp, double d[4]);

/// Constrained Delaunay triangulation of the polygon interiors refined until the
/// angle and area bounds hold (except where small input angles forbid it).
RigMesh2D triangulate(const std::vector<Polygon2D>& boundary, const TriangulationParams& params);

struct QualityReport {
  std::size_t triangles = 0;
  std::size_t exempt = 0;            // triangles with two boundary edges
  std::size_t angle_violations = 0;  // non-exempt triangles below min_angle
  std::size_t area_violations = 0;
  double min_angle = 180.0;          // over non-exempt triangles, degrees
  double min_angle_all = 180.0;
  double max_area = 0.0;

  bool ok() const { return angle_violations == 0 && area_violations == 0; }
};

/// Checks a rig against the angle/area bounds. Triangles with two boundary
/// edges are exempt from the angle bound.
QualityReport check_quality(const RigMesh2D& rig, const TriangulationParams& params);

/// Silhouette extraction followed by triangulation.
RigMesh2D rig_from_mask(const Mask& mask, const TriangulationParams& params,
                        std::vector<Polygon2D>* boundary_out = nullptr);

}  // namespace vdfield
