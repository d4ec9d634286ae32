#pragma once

// Per-element reference arithmetic. The operation order here is the contract
// that SIMD variants reproduce lane-wise.

#include <cstddef>

#include "kernels.hpp"

namespace vdfield::kernels::ref {

inline void project_one(const LayerCamera& c, const ConstPoints& p, std::size_t i,
                        ProjectedBlock& out) {
  const double x = p.x[i], y = p.y[i], z = p.z[i];
  const double xc = ((c.r[0] * x + c.r[1] * y) + c.r[2] * z) + c.t[0];
  const double yc = ((c.r[3] * x + c.r[4] * y) + c.r[5] * z) + c.t[1];
  const double zc = ((c.r[6] * x + c.r[7] * y) + c.r[8] * z) + c.t[2];
  const double iz = 1.0 / zc;
  const double a = xc * iz;
  const double b = yc * iz;
  out.zc[i] = zc;
  out.a[i] = a;
  out.b[i] = b;
  out.u[i] = c.ax * a + c.cx;
  out.v[i] = c.ay * b + c.cy;
}

/// World-space lifted point q and Jacobian jw (row-major) of one element.
inline void lift_one(const LayerCamera& c, const ProjectedBlock& pr, const WarpBlock& w,
                     std::size_t i, double q[3], double jw[9]) {
  const double* r = c.r;
  const double zc = pr.zc[i], a = pr.a[i], b = pr.b[i];
  const double gx = (w.up[i] - c.cx) / c.ax;
  const double gy = (w.vp[i] - c.cy) / c.ay;
  const double dx = gx * zc - c.t[0];
  const double dy = gy * zc - c.t[1];
  const double dz = zc - c.t[2];
  q[0] = (r[0] * dx + r[3] * dy) + r[6] * dz;
  q[1] = (r[1] * dx + r[4] * dy) + r[7] * dz;
  q[2] = (r[2] * dx + r[5] * dy) + r[8] * dz;

  // Camera-frame Jacobian rows 0 and 1; row 2 is e_z.
  const double c00 = w.d00[i];
  const double c01 = w.d01[i] * c.ratio_yx;
  const double c02 = (gx - c00 * a) - c01 * b;
  const double c10 = w.d10[i] * c.ratio_xy;
  const double c11 = w.d11[i];
  const double c12 = (gy - c10 * a) - c11 * b;

  double a0[3], a1[3];
  for (int j = 0; j < 3; ++j) {
    a0[j] = (c00 * r[j] + c01 * r[3 + j]) + c02 * r[6 + j];
    a1[j] = (c10 * r[j] + c11 * r[3 + j]) + c12 * r[6 + j];
  }
  for (int ii = 0; ii < 3; ++ii) {
    for (int j = 0; j < 3; ++j) {
      jw[3 * ii + j] = (r[ii] * a0[j] + r[3 + ii] * a1[j]) + r[6 + ii] * r[6 + j];
    }
  }
}

inline void lift_blend_one(const LayerCamera& c, const ProjectedBlock& pr, const WarpBlock& w,
                           std::size_t i, Points& p, Jacobians& jac) {
  const double beta = w.beta[i];
  if (beta == 0.0) return;
  double q[3], jw[9];
  lift_one(c, pr, w, i, q, jw);
  const double omb = 1.0 - beta;
  p.x[i] = beta * q[0] + omb * p.x[i];
  p.y[i] = beta * q[1] + omb * p.y[i];
  p.z[i] = beta * q[2] + omb * p.z[i];
  double prev[9];
  for (int k = 0; k < 9; ++k) prev[k] = jac.m[k][i];
  for (int ii = 0; ii < 3; ++ii) {
    for (int j = 0; j < 3; ++j) {
      const double jj = (jw[3 * ii] * prev[j] + jw[3 * ii + 1] * prev[3 + j]) +
                        jw[3 * ii + 2] * prev[6 + j];
      jac.m[3 * ii + j][i] = beta * jj + omb * prev[3 * ii + j];
    }
  }
}

inline void lift_accumulate_one(const LayerCamera& c, const ProjectedBlock& pr,
                                const WarpBlock& w, std::size_t i, const ConstPoints& p0,
                                Points& acc, Jacobians& acc_j) {
  const double beta = w.beta[i];
  if (beta == 0.0) return;
  double q[3], jw[9];
  lift_one(c, pr, w, i, q, jw);
  acc.x[i] += beta * (q[0] - p0.x[i]);
  acc.y[i] += beta * (q[1] - p0.y[i]);
  acc.z[i] += beta * (q[2] - p0.z[i]);
  for (int k = 0; k < 9; ++k) {
    const double delta = (k % 4 == 0) ? 1.0 : 0.0;
    acc_j.m[k][i] += beta * (jw[k] - delta);
  }
}

inline void pushforward_one(const Jacobians& jac, const ConstSymMats& cov, std::size_t i,
                            SymMats& out) {
  double j[9];
  for (int k = 0; k < 9; ++k) j[k] = jac.m[k][i];
  const double s00 = cov.s[0][i], s01 = cov.s[1][i], s02 = cov.s[2][i];
  const double s11 = cov.s[3][i], s12 = cov.s[4][i], s22 = cov.s[5][i];
  const double s[9] = {s00, s01, s02, s01, s11, s12, s02, s12, s22};
  double bm[9];
  for (int r = 0; r < 3; ++r) {
    for (int col = 0; col < 3; ++col) {
      bm[3 * r + col] = (j[3 * r] * s[col] + j[3 * r + 1] * s[3 + col]) + j[3 * r + 2] * s[6 + col];
    }
  }
  double cm[9];
  for (int r = 0; r < 3; ++r) {
    for (int col = 0; col < 3; ++col) {
      cm[3 * r + col] =
          (bm[3 * r] * j[3 * col] + bm[3 * r + 1] * j[3 * col + 1]) + bm[3 * r + 2] * j[3 * col + 2];
    }
  }
  out.s[0][i] = cm[0];
  out.s[1][i] = 0.5 * (cm[1] + cm[3]);
  out.s[2][i] = 0.5 * (cm[2] + cm[6]);
  out.s[3][i] = cm[4];
  out.s[4][i] = 0.5 * (cm[5] + cm[7]);
  out.s[5][i] = cm[8];
}

inline void project_gaussian_one(const LayerCamera& c, const ConstPoints& mean,
                                 const ConstSymMats& cov, std::size_t i, Footprints& out) {
  const double* r = c.r;
  const double x = mean.x[i], y = mean.y[i], z = mean.z[i];
  const double xc = ((r[0] * x + r[1] * y) + r[2] * z) + c.t[0];
  const double yc = ((r[3] * x + r[4] * y) + r[5] * z) + c.t[1];
  const double zc = ((r[6] * x + r[7] * y) + r[8] * z) + c.t[2];
  const double iz = 1.0 / zc;
  const double a = xc * iz;
  const double b = yc * iz;
  out.u[i] = c.ax * a + c.cx;
  out.v[i] = c.ay * b + c.cy;
  out.depth[i] = zc;

  const double s00 = cov.s[0][i], s01 = cov.s[1][i], s02 = cov.s[2][i];
  const double s11 = cov.s[3][i], s12 = cov.s[4][i], s22 = cov.s[5][i];
  const double s[9] = {s00, s01, s02, s01, s11, s12, s02, s12, s22};
  double t[9];
  for (int rr = 0; rr < 3; ++rr) {
    for (int col = 0; col < 3; ++col) {
      t[3 * rr + col] = (r[3 * rr] * s[col] + r[3 * rr + 1] * s[3 + col]) + r[3 * rr + 2] * s[6 + col];
    }
  }
  auto wm = [&](int rr, int col) {
    return (t[3 * rr] * r[3 * col] + t[3 * rr + 1] * r[3 * col + 1]) + t[3 * rr + 2] * r[3 * col + 2];
  };
  const double w00 = wm(0, 0), w01 = wm(0, 1), w02 = wm(0, 2);
  const double w11 = wm(1, 1), w12 = wm(1, 2), w22 = wm(2, 2);

  const double j00 = c.ax * iz;
  const double j02 = -(j00 * a);
  const double j11 = c.ay * iz;
  const double j12 = -(j11 * b);
  const double m00 = j00 * w00 + j02 * w02;
  const double m01 = j00 * w01 + j02 * w12;
  const double m02 = j00 * w02 + j02 * w22;
  const double m11 = j11 * w11 + j12 * w12;
  const double m12 = j11 * w12 + j12 * w22;
  out.c00[i] = m00 * j00 + m02 * j02;
  out.c01[i] = m01 * j11 + m02 * j12;
  out.c11[i] = m11 * j11 + m12 * j12;
}

}  // namespace vdfield::kernels::ref
