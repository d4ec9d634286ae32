// AVX2 variants, four doubles per lane group. Built with -mavx2 only (no FMA)
// so that every lane performs exactly the scalar reference operations.

#include <immintrin.h>

#include "kernels.hpp"
#include "scalar_ops.hpp"

namespace vdfield::kernels {

namespace {

using V = __m256d;

inline V ld(const double* p) { return _mm256_loadu_pd(p); }
inline void st(double* p, V v) { _mm256_storeu_pd(p, v); }
inline V bc(double x) { return _mm256_set1_pd(x); }
inline V add(V a, V b) { return _mm256_add_pd(a, b); }
inline V sub(V a, V b) { return _mm256_sub_pd(a, b); }
inline V mul(V a, V b) { return _mm256_mul_pd(a, b); }
inline V dvd(V a, V b) { return _mm256_div_pd(a, b); }
// (a*b + c*d) + e*f, the reference three-term order.
inline V dot3(V a, V b, V c, V d, V e, V f) { return add(add(mul(a, b), mul(c, d)), mul(e, f)); }

void project(const LayerCamera& c, ConstPoints p, std::size_t n, ProjectedBlock& out) {
  std::size_t i = 0;
  const V r0 = bc(c.r[0]), r1 = bc(c.r[1]), r2 = bc(c.r[2]);
  const V r3 = bc(c.r[3]), r4 = bc(c.r[4]), r5 = bc(c.r[5]);
  const V r6 = bc(c.r[6]), r7 = bc(c.r[7]), r8 = bc(c.r[8]);
  const V t0 = bc(c.t[0]), t1 = bc(c.t[1]), t2 = bc(c.t[2]);
  const V ax = bc(c.ax), ay = bc(c.ay), cx = bc(c.cx), cy = bc(c.cy), one = bc(1.0);
  for (; i + 4 <= n; i += 4) {
    const V x = ld(p.x + i), y = ld(p.y + i), z = ld(p.z + i);
    const V xc = add(dot3(r0, x, r1, y, r2, z), t0);
    const V yc = add(dot3(r3, x, r4, y, r5, z), t1);
    const V zc = add(dot3(r6, x, r7, y, r8, z), t2);
    const V iz = dvd(one, zc);
    const V a = mul(xc, iz);
    const V b = mul(yc, iz);
    st(out.zc + i, zc);
    st(out.a + i, a);
    st(out.b + i, b);
    st(out.u + i, add(mul(ax, a), cx));
    st(out.v + i, add(mul(ay, b), cy));
  }
  for (; i < n; ++i) ref::project_one(c, p, i, out);
}

struct Lifted4 {
  V q[3];
  V jw[9];
};

inline Lifted4 lift4(const LayerCamera& c, const ProjectedBlock& pr, const WarpBlock& w,
                     std::size_t i) {
  V r[9];
  for (int k = 0; k < 9; ++k) r[k] = bc(c.r[k]);
  const V zc = ld(pr.zc + i), a = ld(pr.a + i), b = ld(pr.b + i);
  const V gx = dvd(sub(ld(w.up + i), bc(c.cx)), bc(c.ax));
  const V gy = dvd(sub(ld(w.vp + i), bc(c.cy)), bc(c.ay));
  const V dx = sub(mul(gx, zc), bc(c.t[0]));
  const V dy = sub(mul(gy, zc), bc(c.t[1]));
  const V dz = sub(zc, bc(c.t[2]));
  Lifted4 out;
  out.q[0] = dot3(r[0], dx, r[3], dy, r[6], dz);
  out.q[1] = dot3(r[1], dx, r[4], dy, r[7], dz);
  out.q[2] = dot3(r[2], dx, r[5], dy, r[8], dz);

  const V c00 = ld(w.d00 + i);
  const V c01 = mul(ld(w.d01 + i), bc(c.ratio_yx));
  const V c02 = sub(sub(gx, mul(c00, a)), mul(c01, b));
  const V c10 = mul(ld(w.d10 + i), bc(c.ratio_xy));
  const V c11 = ld(w.d11 + i);
  const V c12 = sub(sub(gy, mul(c10, a)), mul(c11, b));

  V a0[3], a1[3];
  for (int j = 0; j < 3; ++j) {
    a0[j] = dot3(c00, r[j], c01, r[3 + j], c02, r[6 + j]);
    a1[j] = dot3(c10, r[j], c11, r[3 + j], c12, r[6 + j]);
  }
  for (int ii = 0; ii < 3; ++ii) {
    for (int j = 0; j < 3; ++j) {
      out.jw[3 * ii + j] = dot3(r[ii], a0[j], r[3 + ii], a1[j], r[6 + ii], r[6 + j]);
    }
  }
  return out;
}

void lift_blend(const LayerCamera& c, const ProjectedBlock& pr, const WarpBlock& w,
                std::size_t n, Points p, Jacobians jac) {
  std::size_t i = 0;
  const V zero = _mm256_setzero_pd(), one = bc(1.0);
  for (; i + 4 <= n; i += 4) {
    const V beta = ld(w.beta + i);
    const V active = _mm256_cmp_pd(beta, zero, _CMP_NEQ_OQ);
    if (_mm256_movemask_pd(active) == 0) continue;
    const Lifted4 l = lift4(c, pr, w, i);
    const V omb = sub(one, beta);
    double* px[3] = {p.x, p.y, p.z};
    for (int k = 0; k < 3; ++k) {
      const V old = ld(px[k] + i);
      const V blended = add(mul(beta, l.q[k]), mul(omb, old));
      st(px[k] + i, _mm256_blendv_pd(old, blended, active));
    }
    V prev[9];
    for (int k = 0; k < 9; ++k) prev[k] = ld(jac.m[k] + i);
    for (int ii = 0; ii < 3; ++ii) {
      for (int j = 0; j < 3; ++j) {
        const V jj = dot3(l.jw[3 * ii], prev[j], l.jw[3 * ii + 1], prev[3 + j], l.jw[3 * ii + 2],
                          prev[6 + j]);
        const V next = add(mul(beta, jj), mul(omb, prev[3 * ii + j]));
        st(jac.m[3 * ii + j] + i, _mm256_blendv_pd(prev[3 * ii + j], next, active));
      }
    }
  }
  for (; i < n; ++i) ref::lift_blend_one(c, pr, w, i, p, jac);
}

void lift_accumulate(const LayerCamera& c, const ProjectedBlock& pr, const WarpBlock& w,
                     std::size_t n, ConstPoints p0, Points acc, Jacobians acc_j) {
  std::size_t i = 0;
  const V zero = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    const V beta = ld(w.beta + i);
    const V active = _mm256_cmp_pd(beta, zero, _CMP_NEQ_OQ);
    if (_mm256_movemask_pd(active) == 0) continue;
    const Lifted4 l = lift4(c, pr, w, i);
    const double* src[3] = {p0.x, p0.y, p0.z};
    double* dst[3] = {acc.x, acc.y, acc.z};
    for (int k = 0; k < 3; ++k) {
      const V old = ld(dst[k] + i);
      const V next = add(old, mul(beta, sub(l.q[k], ld(src[k] + i))));
      st(dst[k] + i, _mm256_blendv_pd(old, next, active));
    }
    for (int k = 0; k < 9; ++k) {
      const V delta = bc((k % 4 == 0) ? 1.0 : 0.0);
      const V old = ld(acc_j.m[k] + i);
      const V next = add(old, mul(beta, sub(l.jw[k], delta)));
      st(acc_j.m[k] + i, _mm256_blendv_pd(old, next, active));
    }
  }
  for (; i < n; ++i) ref::lift_accumulate_one(c, pr, w, i, p0, acc, acc_j);
}

void pushforward(const Jacobians jac, ConstSymMats cov, std::size_t n, SymMats out) {
  std::size_t i = 0;
  const V half = bc(0.5);
  for (; i + 4 <= n; i += 4) {
    V j[9];
    for (int k = 0; k < 9; ++k) j[k] = ld(jac.m[k] + i);
    const V s00 = ld(cov.s[0] + i), s01 = ld(cov.s[1] + i), s02 = ld(cov.s[2] + i);
    const V s11 = ld(cov.s[3] + i), s12 = ld(cov.s[4] + i), s22 = ld(cov.s[5] + i);
    const V s[9] = {s00, s01, s02, s01, s11, s12, s02, s12, s22};
    V bm[9];
    for (int r = 0; r < 3; ++r) {
      for (int col = 0; col < 3; ++col) {
        bm[3 * r + col] = dot3(j[3 * r], s[col], j[3 * r + 1], s[3 + col], j[3 * r + 2], s[6 + col]);
      }
    }
    V cm[9];
    for (int r = 0; r < 3; ++r) {
      for (int col = 0; col < 3; ++col) {
        cm[3 * r + col] = dot3(bm[3 * r], j[3 * col], bm[3 * r + 1], j[3 * col + 1], bm[3 * r + 2],
                               j[3 * col + 2]);
      }
    }
    st(out.s[0] + i, cm[0]);
    st(out.s[1] + i, mul(half, add(cm[1], cm[3])));
    st(out.s[2] + i, mul(half, add(cm[2], cm[6])));
    st(out.s[3] + i, cm[4]);
    st(out.s[4] + i, mul(half, add(cm[5], cm[7])));
    st(out.s[5] + i, cm[8]);
  }
  for (; i < n; ++i) ref::pushforward_one(jac, cov, i, out);
}

void project_gaussians(const LayerCamera& c, ConstPoints mean, ConstSymMats cov, std::size_t n,
                       Footprints out) {
  std::size_t i = 0;
  V r[9];
  for (int k = 0; k < 9; ++k) r[k] = bc(c.r[k]);
  const V one = bc(1.0), ax = bc(c.ax), ay = bc(c.ay), cx = bc(c.cx), cy = bc(c.cy);
  const V sign = bc(-0.0);
  for (; i + 4 <= n; i += 4) {
    const V x = ld(mean.x + i), y = ld(mean.y + i), z = ld(mean.z + i);
    const V xc = add(dot3(r[0], x, r[1], y, r[2], z), bc(c.t[0]));
    const V yc = add(dot3(r[3], x, r[4], y, r[5], z), bc(c.t[1]));
    const V zc = add(dot3(r[6], x, r[7], y, r[8], z), bc(c.t[2]));
    const V iz = dvd(one, zc);
    const V a = mul(xc, iz);
    const V b = mul(yc, iz);
    st(out.u + i, add(mul(ax, a), cx));
    st(out.v + i, add(mul(ay, b), cy));
    st(out.depth + i, zc);

    const V s00 = ld(cov.s[0] + i), s01 = ld(cov.s[1] + i), s02 = ld(cov.s[2] + i);
    const V s11 = ld(cov.s[3] + i), s12 = ld(cov.s[4] + i), s22 = ld(cov.s[5] + i);
    const V s[9] = {s00, s01, s02, s01, s11, s12, s02, s12, s22};
    V t[9];
    for (int rr = 0; rr < 3; ++rr) {
      for (int col = 0; col < 3; ++col) {
        t[3 * rr + col] = dot3(r[3 * rr], s[col], r[3 * rr + 1], s[3 + col], r[3 * rr + 2], s[6 + col]);
      }
    }
    auto wm = [&](int rr, int col) {
      return dot3(t[3 * rr], r[3 * col], t[3 * rr + 1], r[3 * col + 1], t[3 * rr + 2], r[3 * col + 2]);
    };
    const V w00 = wm(0, 0), w01 = wm(0, 1), w02 = wm(0, 2);
    const V w11 = wm(1, 1), w12 = wm(1, 2), w22 = wm(2, 2);
    const V j00 = mul(ax, iz);
    const V j02 = _mm256_xor_pd(mul(j00, a), sign);
    const V j11 = mul(ay, iz);
    const V j12 = _mm256_xor_pd(mul(j11, b), sign);
    const V m00 = add(mul(j00, w00), mul(j02, w02));
    const V m01 = add(mul(j00, w01), mul(j02, w12));
    const V m02 = add(mul(j00, w02), mul(j02, w22));
    const V m11 = add(mul(j11, w11), mul(j12, w12));
    const V m12 = add(mul(j11, w12), mul(j12, w22));
    st(out.c00 + i, add(mul(m00, j00), mul(m02, j02)));
    st(out.c01 + i, add(mul(m01, j11), mul(m02, j12)));
    st(out.c11 + i, add(mul(m11, j11), mul(m12, j12)));
  }
  for (; i < n; ++i) ref::project_gaussian_one(c, mean, cov, i, out);
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{SimdLevel::kAvx2, &project,     &lift_blend,
                                 &lift_accumulate, &pushforward, &project_gaussians};
  return table;
}

}  // namespace vdfield::kernels
