#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/QR>
#include <string>

#include <Eigen/SparseCholesky>

#include "vdfield/error.hpp"
#include "vdfield/rigging.hpp"

namespace vdfield {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Sparse = Eigen::SparseMatrix<double>;

struct Component {
  std::vector<int> verts;
  std::vector<int> handle_cols;
  std::vector<int> free;  // global ids of non-handle vertices
};

/// Rows of `a` restricted to the free vertices of c, split into the free block
/// and the handle columns multiplied into a dense matrix.
void split_block(const Sparse& a, const std::vector<int>& free_of,
                 const std::vector<int>& handle_col_of, const Component& c, Sparse& aff, RowMat& afb) {
  const int nf = static_cast<int>(c.free.size());
  const int m = static_cast<int>(c.handle_cols.size());
  std::vector<Eigen::Triplet<double>> trip;
  afb = RowMat::Zero(nf, m);
  for (int col = 0; col < a.outerSize(); ++col) {
    const int gc = c.verts[col];
    const int fc = free_of[gc];
    if (fc < 0) continue;
    for (Sparse::InnerIterator it(a, col); it; ++it) {
      const int gr = c.verts[it.row()];
      if (free_of[gr] >= 0) {
        trip.emplace_back(free_of[gr], fc, it.value());
      } else {
        afb(fc, handle_col_of[gr]) += it.value();
      }
    }
  }
  aff.resize(nf, nf);
  aff.setFromTriplets(trip.begin(), trip.end());
}

/// Component-local copy of a global matrix.
Sparse restrict_to(const Sparse& a, const std::vector<int>& index_of, const Component& c) {
  const int n = static_cast<int>(c.verts.size());
  std::vector<Eigen::Triplet<double>> trip;
  for (int lc = 0; lc < n; ++lc) {
    for (Sparse::InnerIterator it(a, c.verts[lc]); it; ++it) {
      trip.emplace_back(index_of[it.row()], lc, it.value());
    }
  }
  Sparse out(n, n);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

RowMat harmonic_free(const Sparse& lff, const RowMat& lfb) {
  Eigen::SimplicialLDLT<Sparse> ldlt(lff);
  if (ldlt.info() != Eigen::Success) {
    throw Error(ErrorKind::kSolverFailure, "Laplacian factorization failed");
  }
  RowMat x = ldlt.solve(RowMat(-lfb));
  if (ldlt.info() != Eigen::Success || !x.allFinite()) {
    throw Error(ErrorKind::kSolverFailure, "Laplacian solve failed");
  }
  return x;
}

/// min sum_k 1/2 x_k' Q x_k + x_k' g_k subject to every row of X lying on the
/// probability simplex (bounds plus partition of unity).
///
/// Rows are parametrised as x_i = 1/m + N z_i with N an orthonormal basis of
/// the complement of the ones vector, so partition of unity holds identically
/// and the objective becomes sum_a 1/2 z_a' Q z_a + (g N)_a' z_a. The
/// remaining bounds N z_i >= -1/m are handled by a feasible primal-dual
/// interior point method with Mehrotra's predictor-corrector.
RowMat bbw_interior_point(const Sparse& q_in, const RowMat& g_in, const RowMat& start,
                          const WeightSolveOptions& opt) {
  const int nf = static_cast<int>(g_in.rows()), m = static_cast<int>(g_in.cols()), r = m - 1;
  const double scale = q_in.diagonal().mean();
  const Sparse q = q_in / scale;
  const double c0 = 1.0 / m;

  const Eigen::MatrixXd basis =
      Eigen::HouseholderQR<Eigen::MatrixXd>(Eigen::MatrixXd::Ones(m, 1)).householderQ();
  const Eigen::MatrixXd nb = basis.rightCols(r);  // m x r
  const RowMat gz = (g_in / scale) * nb;          // nf x r

  // z from the (strictly feasible) start, pulled slightly towards the centre.
  RowMat z = ((start.array() * 0.99 + 0.01 * c0).matrix() - RowMat::Constant(nf, m, c0)) * nb;
  auto slack = [&](const RowMat& zz) { return RowMat((zz * nb.transpose()).array() + c0); };
  RowMat s = slack(z);
  RowMat lam = (1.0 / s.array()).matrix();  // mu = 1

  // Off-diagonal part of Q (x) I_r; the per-vertex r x r blocks change every step.
  std::vector<Eigen::Triplet<double>> pattern;
  for (int col = 0; col < q.outerSize(); ++col) {
    for (Sparse::InnerIterator e(q, col); e; ++e) {
      if (e.row() == col) continue;
      for (int a = 0; a < r; ++a) pattern.emplace_back(e.row() * r + a, col * r + a, e.value());
    }
  }
  const Eigen::VectorXd qdiag = q.diagonal();
  Sparse h(nf * r, nf * r);
  Eigen::SimplicialLLT<Sparse> llt;
  bool analysed = false;

  auto matvec_q = [&](const RowMat& v) { return RowMat(q * v); };
  const int nc = nf * m;
  const double dual_tol = 1e-8 * (1.0 + gz.cwiseAbs().maxCoeff());
  for (int it = 0; it < opt.max_iterations; ++it) {
    const RowMat rd = matvec_q(z) + gz - lam * nb;  // dual residual
    const double mu = (s.array() * lam.array()).sum() / nc;
    if (rd.cwiseAbs().maxCoeff() < dual_tol && mu < 1e-12) {
      RowMat x = slack(z);
      double violation = 0.0;
      for (int i = 0; i < nf; ++i) {
        violation = std::max({violation, std::abs(x.row(i).sum() - 1.0), -x.row(i).minCoeff(),
                              x.row(i).maxCoeff() - 1.0});
      }
      if (violation >= opt.tolerance) {
        throw Error(ErrorKind::kSolverFailure, "bounded biharmonic weights violate constraints by " +
                                                   std::to_string(violation));
      }
      return x.cwiseMax(0.0).cwiseMin(1.0);
    }

    // H + N' diag(lambda / s) N per vertex.
    std::vector<Eigen::Triplet<double>> trip = pattern;
    trip.reserve(pattern.size() + static_cast<std::size_t>(nf) * r * r);
    for (int i = 0; i < nf; ++i) {
      Eigen::MatrixXd blk = nb.transpose() * (lam.row(i).array() / s.row(i).array()).matrix().asDiagonal() * nb;
      blk.diagonal().array() += qdiag[i];
      for (int a = 0; a < r; ++a) {
        for (int b = 0; b < r; ++b) trip.emplace_back(i * r + a, i * r + b, blk(a, b));
      }
    }
    h.setFromTriplets(trip.begin(), trip.end());
    if (!analysed) {
      llt.analyzePattern(h);
      analysed = true;
    }
    llt.factorize(h);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorKind::kSolverFailure, "interior point system is not positive definite");
    }

    // Newton direction for target complementarity w (per bound):
    // (H + G' L S^-1 G) dz = -rd - G' (lam - w / s).
    auto direction = [&](const RowMat& w, RowMat& dz, RowMat& ds, RowMat& dl) {
      const RowMat t = (lam.array() - w.array() / s.array()).matrix();
      const RowMat rhs = -rd - t * nb;
      Eigen::Map<const Eigen::VectorXd> rv(rhs.data(), static_cast<Eigen::Index>(nf) * r);
      const Eigen::VectorXd sol = llt.solve(rv);
      dz = Eigen::Map<const RowMat>(sol.data(), nf, r);
      ds = dz * nb.transpose();
      dl = ((w.array() - s.array() * lam.array() - lam.array() * ds.array()) / s.array()).matrix();
    };
    auto max_step = [&](const RowMat& v, const RowMat& dv) {
      double a = 1.0;
      for (Eigen::Index k = 0; k < v.size(); ++k) {
        if (dv.data()[k] < 0.0) a = std::min(a, -v.data()[k] / dv.data()[k]);
      }
      return a;
    };

    RowMat dz, ds, dl;
    direction(RowMat::Zero(nf, m), dz, ds, dl);
    const double ap = max_step(s, ds), ad = max_step(lam, dl);
    const double mu_aff = ((s + ap * ds).array() * (lam + ad * dl).array()).sum() / nc;
    const double sigma = std::pow(mu_aff / mu, 3.0);
    const RowMat w = (sigma * mu - ds.array() * dl.array()).matrix();
    direction(w, dz, ds, dl);
    const double step_p = std::min(1.0, 0.995 * max_step(s, ds));
    const double step_d = std::min(1.0, 0.995 * max_step(lam, dl));
    z += step_p * dz;
    s = slack(z);
    lam += step_d * dl;
    if (!z.allFinite() || !lam.allFinite()) break;
  }
  throw Error(ErrorKind::kSolverFailure, "bounded biharmonic weights did not converge within " +
                                             std::to_string(opt.max_iterations) + " iterations");
}

}  // namespace

const char* to_string(WeightMethod m) noexcept {
  return m == WeightMethod::kHarmonic ? "harmonic" : "bounded_biharmonic";
}

WeightMethod weight_method_from_string(const std::string& s) {
  if (s == "harmonic") return WeightMethod::kHarmonic;
  if (s == "bounded_biharmonic" || s == "bbw") return WeightMethod::kBoundedBiharmonic;
  throw Error(ErrorKind::kInvalidArgument, "unknown weight method: " + s);
}

Affine2 affine_identity() {
  Affine2 a;
  a << 1, 0, 0, 0, 1, 0;
  return a;
}

Affine2 affine_translation(const Vec2& t) {
  Affine2 a = affine_identity();
  a.col(2) = t;
  return a;
}

Affine2 affine_rotation(double angle, const Vec2& pivot, const Vec2& t) {
  Affine2 a;
  const double c = std::cos(angle), s = std::sin(angle);
  a.leftCols<2>() << c, -s, s, c;
  a.col(2) = pivot - a.leftCols<2>() * pivot + t;
  return a;
}

HandleSet HandleSet::at(std::vector<int> vertices) {
  HandleSet h;
  h.transforms.assign(vertices.size(), affine_identity());
  h.vertices = std::move(vertices);
  return h;
}

void HandleSet::validate(std::size_t vertex_count, bool require_nonempty) const {
  if (require_nonempty && vertices.empty()) throw ValidationError("HandleSet: at least one handle");
  if (transforms.size() != vertices.size()) {
    throw ValidationError("HandleSet: one transform per handle");
  }
  std::set<int> seen;
  for (int v : vertices) {
    if (v < 0 || static_cast<std::size_t>(v) >= vertex_count || !seen.insert(v).second) {
      throw ValidationError("HandleSet: indices distinct and in range");
    }
  }
  for (const Affine2& a : transforms) {
    if (!a.allFinite()) throw ValidationError("HandleSet: finite transforms");
  }
}

void WeightMatrix::validate(const HandleSet& handles, double tol) const {
  if (cols() != handles.size() || anchored.size() != rows()) {
    throw ValidationError("WeightMatrix: dimensions |V| x |H|");
  }
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index h = 0; h < w.cols(); ++h) {
      const double x = w(i, h);
      if (!(x >= -tol && x <= 1.0 + tol)) throw ValidationError("WeightMatrix: entries in [0, 1]");
      sum += x;
    }
    const double want = anchored[i] ? 0.0 : 1.0;
    if (!(std::abs(sum - want) <= tol)) throw ValidationError("WeightMatrix: rows sum to 1");
  }
  for (std::size_t h = 0; h < handles.size(); ++h) {
    const int v = handles.vertices[h];
    if (v < 0 || static_cast<std::size_t>(v) >= rows()) {
      throw ValidationError("WeightMatrix: handle rows are indicators");
    }
    for (std::size_t k = 0; k < handles.size(); ++k) {
      const double want = k == h ? 1.0 : 0.0;
      if (!(std::abs(w(v, static_cast<Eigen::Index>(k)) - want) <= tol)) {
        throw ValidationError("WeightMatrix: handle rows are indicators");
      }
    }
  }
}

WeightMatrix solve_weights(const RigMesh2D& rig, const HandleSet& handles, WeightMethod method,
                           const WeightSolveOptions& options) {
  if (rig.empty()) throw Error(ErrorKind::kInvalidArgument, "empty rig");
  const std::size_t n = rig.vertex_count();
  handles.validate(n);

  int ncomp = 0;
  const std::vector<int> label = vertex_components(n, rig.faces(), &ncomp);
  std::vector<Component> comps(ncomp);
  std::vector<int> handle_col_of(n, -1), index_of(n, -1), free_of(n, -1);
  for (std::size_t h = 0; h < handles.size(); ++h) handle_col_of[handles.vertices[h]] = static_cast<int>(h);
  for (std::size_t v = 0; v < n; ++v) {
    Component& c = comps[label[v]];
    index_of[v] = static_cast<int>(c.verts.size());
    c.verts.push_back(static_cast<int>(v));
    if (handle_col_of[v] >= 0) {
      c.handle_cols.push_back(handle_col_of[v]);
    } else {
      free_of[v] = static_cast<int>(c.free.size());
      c.free.push_back(static_cast<int>(v));
    }
  }

  WeightMatrix out;
  out.w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(handles.size()));
  out.anchored.assign(n, 0);

  Sparse lap;
  Eigen::VectorXd mass;
  bool have_operators = false;
  for (const Component& c : comps) {
    if (c.handle_cols.empty()) {
      if (options.strict_components) {
        throw Error(ErrorKind::kDisconnectedFromHandles,
                    "a mesh component of " + std::to_string(c.verts.size()) + " vertices has no handle");
      }
      ++out.orphan_components;
      for (int v : c.verts) out.anchored[v] = 1;
      continue;
    }
    for (int v : c.verts) {
      if (handle_col_of[v] >= 0) out.w(v, handle_col_of[v]) = 1.0;
    }
    if (c.handle_cols.size() == 1) {
      for (int v : c.free) out.w(v, c.handle_cols[0]) = 1.0;
      continue;
    }
    if (c.free.empty()) continue;
    if (!have_operators) {
      lap = cotangent_laplacian(rig.rest_vertices(), rig.faces());
      mass = lumped_mass(rig.rest_vertices(), rig.faces());
      have_operators = true;
    }

    // Handle columns inside this component, in local order.
    std::vector<int> local_col(n, -1);
    for (std::size_t k = 0; k < c.handle_cols.size(); ++k) {
      local_col[handles.vertices[c.handle_cols[k]]] = static_cast<int>(k);
    }
    const Sparse lc = restrict_to(lap, index_of, c);
    Sparse lff;
    RowMat lfb;
    split_block(lc, free_of, local_col, c, lff, lfb);
    RowMat x = harmonic_free(lff, lfb);

    if (method == WeightMethod::kBoundedBiharmonic) {
      Eigen::VectorXd inv_mass(static_cast<Eigen::Index>(c.verts.size()));
      for (std::size_t i = 0; i < c.verts.size(); ++i) inv_mass[i] = 1.0 / mass[c.verts[i]];
      const Sparse q = lc * inv_mass.asDiagonal() * lc;
      Sparse qff;
      RowMat qfb;
      split_block(q, free_of, local_col, c, qff, qfb);
      x = bbw_interior_point(qff, qfb, x, options);
    }
    for (std::size_t f = 0; f < c.free.size(); ++f) {
      for (std::size_t k = 0; k < c.handle_cols.size(); ++k) {
        out.w(c.free[f], c.handle_cols[k]) = x(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k));
      }
    }
  }
  return out;
}

}  // namespace vdfield
