#include "vdfield/error.hpp"
#include "vdfield/parallel.hpp"
#include "vdfield/rigging.hpp"

namespace vdfield {

RigMesh2D apply_skinning(const RigMesh2D& rig, const HandleSet& handles, const WeightMatrix& w) {
  const std::size_t n = rig.vertex_count();
  if (w.rows() != n || w.cols() != handles.size() || handles.transforms.size() != handles.size()) {
    throw Error(ErrorKind::kInvalidArgument, "skinning dimensions do not match");
  }
  const std::vector<Vec2>& rest = rig.rest_vertices();
  std::vector<Vec2> out(n);
  parallel_for(n, 1024, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      if (w.anchored[i]) {
        out[i] = rest[i];
        continue;
      }
      // Displacement form of sum_h w_ih T_h v_i; equal under partition of unity
      // and exact for identity transforms.
      Vec2 acc = Vec2::Zero();
      for (std::size_t h = 0; h < handles.size(); ++h) {
        const double wi = w.w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(h));
        if (wi == 0.0) continue;
        acc += wi * (apply_affine(handles.transforms[h], rest[i]) - rest[i]);
      }
      out[i] = rest[i] + acc;
    }
  });
  return rig.with_deformed(std::move(out));
}

}  // namespace vdfield
