#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "vdfield/mesh2d.hpp"

namespace vdfield {

/// 2x3 affine map in pixel units: p' = A.leftCols<2>() * p + A.col(2).
using Affine2 = Eigen::Matrix<double, 2, 3>;

Affine2 affine_identity();
Affine2 affine_translation(const Vec2& t);
/// Rotation by angle (radians) about a pivot, followed by a translation.
Affine2 affine_rotation(double angle, const Vec2& pivot, const Vec2& t = Vec2::Zero());

inline Vec2 apply_affine(const Affine2& a, const Vec2& p) {
  return a.leftCols<2>() * p + a.col(2);
}

struct HandleSet {
  std::vector<int> vertices;
  std::vector<Affine2> transforms;

  std::size_t size() const { return vertices.size(); }
  bool empty() const { return vertices.empty(); }

  /// Handles with identity transforms.
  static HandleSet at(std::vector<int> vertices);

  /// Distinct, in-range indices with one transform each. An empty set is
  /// accepted unless require_nonempty is set.
  void validate(std::size_t vertex_count, bool require_nonempty = false) const;
};

enum class WeightMethod { kHarmonic, kBoundedBiharmonic };

const char* to_string(WeightMethod m) noexcept;
WeightMethod weight_method_from_string(const std::string& s);

/// |V| x |H| skinning weights. Rows of mesh components that contain no handle
/// are anchored: all zero, and the vertex stays at its rest position.
struct WeightMatrix {
  Eigen::MatrixXd w;
  std::vector<std::uint8_t> anchored;
  int orphan_components = 0;

  std::size_t rows() const { return static_cast<std::size_t>(w.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(w.cols()); }

  /// Bounds, partition of unity and handle interpolation to tol.
  void validate(const HandleSet& handles, double tol = 1e-7) const;
};

struct WeightSolveOptions {
  /// Throw DisconnectedFromHandles instead of anchoring handle-free components.
  bool strict_components = false;
  /// Active-set iterations for bounded_biharmonic.
  int max_iterations = 200;
  /// Largest accepted bound or partition violation.
  double tolerance = 1e-7;
};

/// Symmetric positive semi-definite cotangent Laplacian (row sums zero). Edge
/// weights are clamped below at 1e-6.
Eigen::SparseMatrix<double> cotangent_laplacian(const std::vector<Vec2>& vertices,
                                                const std::vector<Face>& faces);

/// Lumped (one third of incident area) vertex masses.
Eigen::VectorXd lumped_mass(const std::vector<Vec2>& vertices, const std::vector<Face>& faces);

/// Vertex component labels over face adjacency; isolated vertices get their own.
std::vector<int> vertex_components(std::size_t vertex_count, const std::vector<Face>& faces,
                                   int* count = nullptr);

WeightMatrix solve_weights(const RigMesh2D& rig, const HandleSet& handles, WeightMethod method,
                           const WeightSolveOptions& options = {});

/// Linear blend skinning of the rest vertices; returns a rig with a fresh
/// deformed snapshot.
RigMesh2D apply_skinning(const RigMesh2D& rig, const HandleSet& handles, const WeightMatrix& w);

}  // namespace vdfield
