#include <cstdlib>
#include <cstring>

#include "kernels.hpp"
#include "scalar_ops.hpp"

namespace vdfield::kernels {

namespace {

void project(const LayerCamera& cam, ConstPoints p, std::size_t n, ProjectedBlock& out) {
  for (std::size_t i = 0; i < n; ++i) ref::project_one(cam, p, i, out);
}

void lift_blend(const LayerCamera& cam, const ProjectedBlock& proj, const WarpBlock& warp,
                std::size_t n, Points p, Jacobians jac) {
  for (std::size_t i = 0; i < n; ++i) ref::lift_blend_one(cam, proj, warp, i, p, jac);
}

void lift_accumulate(const LayerCamera& cam, const ProjectedBlock& proj, const WarpBlock& warp,
                     std::size_t n, ConstPoints p0, Points acc_p, Jacobians acc_j) {
  for (std::size_t i = 0; i < n; ++i) {
    ref::lift_accumulate_one(cam, proj, warp, i, p0, acc_p, acc_j);
  }
}

void pushforward(const Jacobians jac, ConstSymMats cov, std::size_t n, SymMats out) {
  for (std::size_t i = 0; i < n; ++i) ref::pushforward_one(jac, cov, i, out);
}

void project_gaussians(const LayerCamera& cam, ConstPoints mean, ConstSymMats cov,
                       std::size_t n, Footprints out) {
  for (std::size_t i = 0; i < n; ++i) ref::project_gaussian_one(cam, mean, cov, i, out);
}

}  // namespace

LayerCamera make_layer_camera(const CameraPose& pose) {
  LayerCamera c{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) c.r[3 * i + j] = pose.extrinsics.rotation(i, j);
    c.t[i] = pose.extrinsics.translation(i);
  }
  c.ax = pose.intrinsics.ax;
  c.ay = pose.intrinsics.ay;
  c.cx = pose.intrinsics.cx;
  c.cy = pose.intrinsics.cy;
  c.ratio_xy = c.ax / c.ay;
  c.ratio_yx = c.ay / c.ax;
  c.z_near = pose.z_near();
  return c;
}

const KernelTable& scalar_table() {
  static const KernelTable table{SimdLevel::kScalar, &project,     &lift_blend,
                                 &lift_accumulate,   &pushforward, &project_gaussians};
  return table;
}

}  // namespace vdfield::kernels
