#pragma once

// Batch kernels over structure-of-arrays blocks. Every kernel has a scalar
// reference in kernels_scalar.cpp; SIMD variants perform the same IEEE
// operations in the same order so results are bit-identical.

#include <cstddef>

#include "vdfield/camera.hpp"
#include "vdfield/simd.hpp"

namespace vdfield::kernels {

inline constexpr std::size_t kBlock = 64;

/// Per-layer camera constants, flattened for the kernels.
struct LayerCamera {
  double r[9];  // row-major world->camera rotation
  double t[3];
  double ax, ay, cx, cy;
  double ratio_xy;  // ax / ay
  double ratio_yx;  // ay / ax
  double z_near;
};

LayerCamera make_layer_camera(const CameraPose& pose);

/// Camera-frame depth and normalised image coordinates (a = x/z, b = y/z) plus
/// the pixel position of each point.
struct alignas(32) ProjectedBlock {
  double zc[kBlock];
  double a[kBlock];
  double b[kBlock];
  double u[kBlock];
  double v[kBlock];
};

/// Warped pixel, warp Jacobian (row-major d00 d01 / d10 d11) and the blend
/// weight per point. A zero weight leaves the point and its Jacobian untouched.
struct alignas(32) WarpBlock {
  double up[kBlock];
  double vp[kBlock];
  double d00[kBlock];
  double d01[kBlock];
  double d10[kBlock];
  double d11[kBlock];
  double beta[kBlock];
};

struct Points {
  double* x;
  double* y;
  double* z;
};

struct ConstPoints {
  const double* x;
  const double* y;
  const double* z;
};

/// Nine row-major entry arrays.
struct Jacobians {
  double* m[9];
};

/// Six upper-triangle entry arrays: 00 01 02 11 12 22.
struct SymMats {
  double* s[6];
};

struct ConstSymMats {
  const double* s[6];
};

/// 2D screen-space footprint of a projected Gaussian.
struct Footprints {
  double* u;
  double* v;
  double* depth;
  double* c00;
  double* c01;
  double* c11;
};

struct KernelTable {
  SimdLevel level;

  void (*project)(const LayerCamera& cam, ConstPoints p, std::size_t n, ProjectedBlock& out);

  /// Compositional step: p <- beta * lift(p) + (1 - beta) * p and
  /// J <- beta * Dlift * J + (1 - beta) * J.
  void (*lift_blend)(const LayerCamera& cam, const ProjectedBlock& proj, const WarpBlock& warp,
                     std::size_t n, Points p, Jacobians jac);

  /// Linear step: acc_p += beta * (lift(p0) - p0), acc_J += beta * (Dlift - I).
  void (*lift_accumulate)(const LayerCamera& cam, const ProjectedBlock& proj,
                          const WarpBlock& warp, std::size_t n, ConstPoints p0, Points acc_p,
                          Jacobians acc_j);

  /// out = sym(J * S * J^T).
  void (*pushforward)(const Jacobians jac, ConstSymMats cov, std::size_t n, SymMats out);

  /// Camera-frame mean and 2D covariance J_pi * (R S R^T) * J_pi^T.
  void (*project_gaussians)(const LayerCamera& cam, ConstPoints mean, ConstSymMats cov,
                            std::size_t n, Footprints out);
};

const KernelTable& scalar_table();
#if defined(VDFIELD_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

/// Table for the process-wide SIMD level.
const KernelTable& active();

}  // namespace vdfield::kernels
