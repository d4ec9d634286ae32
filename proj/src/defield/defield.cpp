#include "vdfield/defield.hpp"

#include <cmath>
#include <limits>

#include "kernels/kernels.hpp"
#include "vdfield/error.hpp"
#include "vdfield/parallel.hpp"

namespace vdfield {

KeypointDeformation KeypointDeformation::at_view(const Viewpoint& v, double orbit_radius,
                                                 const Vec3& target,
                                                 const CameraIntrinsics& intrinsics,
                                                 RigMesh2D rig) {
  KeypointDeformation k;
  k.viewpoint = v;
  k.pose = pose_from_viewpoint(v, orbit_radius, target, intrinsics);
  k.rig = std::move(rig);
  return k;
}

void KeypointDeformation::validate() const {
  if (!(pose.viewpoint == viewpoint)) throw ValidationError("KeypointDeformation: pose.viewpoint = viewpoint");
  pose.validate();
  if (!(std::isfinite(sigma_azimuth) && sigma_azimuth >= 0.0) ||
      !(std::isfinite(sigma_polar) && sigma_polar >= 0.0)) {
    throw ValidationError("KeypointDeformation: sigmas finite and >= 0");
  }
  if (depth_cut && std::isnan(*depth_cut)) throw ValidationError("KeypointDeformation: depth_cut is a number");
  if (rig.empty()) throw ValidationError("KeypointDeformation: rig present");
  handles.validate(rig.vertex_count());
}

const char* to_string(BlendMode m) noexcept {
  return m == BlendMode::kLinear ? "linear" : "compositional";
}

const char* to_string(BaseCaseMode m) noexcept {
  return m == BaseCaseMode::kPaperLiteral ? "paper_literal" : "uniform";
}

BlendMode blend_mode_from_string(const std::string& s) {
  if (s == "compositional") return BlendMode::kCompositional;
  if (s == "linear") return BlendMode::kLinear;
  throw Error(ErrorKind::kInvalidArgument, "unknown blend mode '" + s + "'");
}

BaseCaseMode base_case_mode_from_string(const std::string& s) {
  if (s == "uniform") return BaseCaseMode::kUniform;
  if (s == "paper_literal") return BaseCaseMode::kPaperLiteral;
  throw Error(ErrorKind::kInvalidArgument, "unknown base case mode '" + s + "'");
}

void DeformationDocument::validate() const {
  intrinsics.validate();
  for (const KeypointDeformation& k : keypoints) {
    k.validate();
    if (!(k.pose.intrinsics == intrinsics)) {
      throw ValidationError("DeformationDocument: keypoint intrinsics match the document");
    }
  }
}

double basis(const KeypointDeformation& k, const Viewpoint& v) {
  const double da = wrap_angle_diff(v.azimuth(), k.viewpoint.azimuth());
  const double dp = wrap_angle_diff(v.polar(), k.viewpoint.polar());
  return std::exp(-k.sigma_azimuth * da * da - k.sigma_polar * dp * dp);
}

LiftResult lift_keypoint(const KeypointDeformation& k, const Vec3& p) {
  if (k.depth_cut) {
    const Vec3 pc = to_camera(p, k.pose.extrinsics);
    if (pc.z() < *k.depth_cut) return {p, Jacobian3::Identity()};
  }
  const RigMesh2D& rig = k.rig;
  return lift_2d_deformation(p, k.pose, [&rig](const Vec2& q) { return eval_phi(q, rig); });
}

LiftResult evaluate(const DeformationDocument& doc, const Vec3& p, const Viewpoint& v,
                    EvalStats* stats) {
  const FieldEvaluator fe(doc, v);
  double x = p.x(), y = p.y(), z = p.z();
  double j[9];
  double* jac[9];
  for (int i = 0; i < 9; ++i) jac[i] = &j[i];
  const EvalStats s = fe.run(1, &x, &y, &z, jac);
  if (stats) *stats += s;
  LiftResult out;
  out.point = Vec3(x, y, z);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.jacobian(r, c) = j[3 * r + c];
  }
  return out;
}

FieldEvaluator::FieldEvaluator(const DeformationDocument& doc, const Viewpoint& v) : doc_(&doc) {
  layers_.resize(doc.keypoints.size());
  double total = 0.0;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const KeypointDeformation& kp = doc.keypoints[k];
    double b = basis(kp, v);
    if (k == 0 && doc.base_case_mode == BaseCaseMode::kPaperLiteral) b = 1.0;
    layers_[k].keypoint = &kp;
    layers_[k].beta = b;
    total += b;
  }
  if (doc.blend_mode == BlendMode::kLinear && total > 1.0) {
    for (Layer& l : layers_) l.beta /= total;
  }
  // A rest-pose rig maps every point to itself, so the layer is dropped.
  for (Layer& l : layers_) {
    if (l.keypoint->rig.empty() || l.keypoint->rig.is_identity()) l.beta = 0.0;
  }
}

bool FieldEvaluator::is_identity() const {
  for (const Layer& l : layers_) {
    if (l.beta != 0.0) return false;
  }
  return true;
}

EvalStats FieldEvaluator::run(std::size_t n, double* x, double* y, double* z, double* const* jac,
                              std::uint32_t* failures) const {
  using kernels::kBlock;
  if (failures) std::fill(failures, failures + n, 0u);
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<EvalStats> per_block(blocks);
  parallel_for(blocks, 16, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t off = b * kBlock;
      const std::size_t m = std::min(kBlock, n - off);
      double* jb[9];
      if (jac) {
        for (int i = 0; i < 9; ++i) jb[i] = jac[i] + off;
      }
      per_block[b] = run_block(m, x + off, y + off, z + off, jac ? jb : nullptr,
                               failures ? failures + off : nullptr);
    }
  });
  EvalStats total;
  for (const EvalStats& s : per_block) total += s;
  return total;
}

namespace {

struct alignas(32) JacobianBlock {
  double m[9][kernels::kBlock];

  void set_identity(std::size_t n) {
    for (int i = 0; i < 9; ++i) {
      const double v = (i % 4 == 0) ? 1.0 : 0.0;
      std::fill(m[i], m[i] + n, v);
    }
  }
  void zero(std::size_t n) {
    for (int i = 0; i < 9; ++i) std::fill(m[i], m[i] + n, 0.0);
  }
  kernels::Jacobians view() {
    kernels::Jacobians j;
    for (int i = 0; i < 9; ++i) j.m[i] = m[i];
    return j;
  }
};

}  // namespace

EvalStats FieldEvaluator::run_block(std::size_t n, double* x, double* y, double* z,
                                    double* const* jac, std::uint32_t* failures) const {
  using namespace kernels;
  const KernelTable& table = active();
  JacobianBlock j;
  j.set_identity(n);
  kernels::Jacobians jv = j.view();
  std::uint32_t fail[kBlock] = {};
  EvalStats stats;

  ProjectedBlock proj;
  WarpBlock warp;
  const bool linear = doc_->blend_mode == BlendMode::kLinear;

  alignas(32) double x0[kBlock], y0[kBlock], z0[kBlock];
  alignas(32) double ax[kBlock], ay[kBlock], az[kBlock];
  JacobianBlock acc;
  if (linear) {
    std::copy(x, x + n, x0);
    std::copy(y, y + n, y0);
    std::copy(z, z + n, z0);
    std::fill(ax, ax + n, 0.0);
    std::fill(ay, ay + n, 0.0);
    std::fill(az, az + n, 0.0);
    acc.zero(n);
  }

  for (const Layer& layer : layers_) {
    if (layer.beta == 0.0) continue;
    const KeypointDeformation& k = *layer.keypoint;
    const LayerCamera cam = make_layer_camera(k.pose);
    const ConstPoints src = linear ? ConstPoints{x0, y0, z0} : ConstPoints{x, y, z};
    table.project(cam, src, n, proj);

    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      warp.beta[i] = 0.0;
      if (k.depth_cut && proj.zc[i] < *k.depth_cut) continue;
      if (!(proj.zc[i] > cam.z_near)) {
        ++fail[i];
        continue;
      }
      double d[4];
      sample_phi(k.rig, proj.u[i], proj.v[i], warp.up[i], warp.vp[i], d);
      warp.d00[i] = d[0];
      warp.d01[i] = d[1];
      warp.d10[i] = d[2];
      warp.d11[i] = d[3];
      warp.beta[i] = layer.beta;
      any = true;
    }
    if (!any) continue;
    // Masked lanes still run through the arithmetic; keep them finite.
    for (std::size_t i = 0; i < n; ++i) {
      if (warp.beta[i] != 0.0) continue;
      warp.up[i] = proj.u[i];
      warp.vp[i] = proj.v[i];
      warp.d00[i] = 1.0;
      warp.d01[i] = 0.0;
      warp.d10[i] = 0.0;
      warp.d11[i] = 1.0;
    }
    if (linear) {
      table.lift_accumulate(cam, proj, warp, n, src, Points{ax, ay, az}, acc.view());
    } else {
      table.lift_blend(cam, proj, warp, n, Points{x, y, z}, jv);
    }
  }

  if (linear) {
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = x0[i] + ax[i];
      y[i] = y0[i] + ay[i];
      z[i] = z0[i] + az[i];
    }
    for (int e = 0; e < 9; ++e) {
      for (std::size_t i = 0; i < n; ++i) j.m[e][i] += acc.m[e][i];
    }
  }

  if (jac) {
    for (int e = 0; e < 9; ++e) std::copy(j.m[e], j.m[e] + n, jac[e]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    stats.layer_failures += fail[i];
    if (fail[i]) ++stats.failed_points;
    if (failures) failures[i] = fail[i];
  }
  return stats;
}

}  // namespace vdfield
