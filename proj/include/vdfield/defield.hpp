#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vdfield/camera.hpp"
#include "vdfield/mesh2d.hpp"
#include "vdfield/rigging.hpp"

namespace vdfield {

/// One authored 2D warp and the view it was authored from.
struct KeypointDeformation {
  Viewpoint viewpoint;
  CameraPose pose;
  RigMesh2D rig;
  HandleSet handles;
  double sigma_azimuth = 4.0;
  double sigma_polar = 4.0;
  /// Camera-frame depth; nearer points are left alone by this layer.
  std::optional<double> depth_cut;

  static KeypointDeformation at_view(const Viewpoint& v, double orbit_radius, const Vec3& target,
                                     const CameraIntrinsics& intrinsics, RigMesh2D rig);

  void validate() const;
};

enum class BlendMode { kCompositional, kLinear };
enum class BaseCaseMode { kUniform, kPaperLiteral };

const char* to_string(BlendMode m) noexcept;
const char* to_string(BaseCaseMode m) noexcept;
BlendMode blend_mode_from_string(const std::string& s);
BaseCaseMode base_case_mode_from_string(const std::string& s);

/// Ordered layers; later keypoints act on the output of earlier ones.
struct DeformationDocument {
  std::vector<KeypointDeformation> keypoints;
  CameraIntrinsics intrinsics = CameraIntrinsics::from_fov(400, 400, deg_to_rad(45.0));
  BlendMode blend_mode = BlendMode::kCompositional;
  BaseCaseMode base_case_mode = BaseCaseMode::kUniform;

  bool empty() const { return keypoints.empty(); }
  void validate() const;
};

/// Gaussian falloff over wrapped azimuth and polar differences.
double basis(const KeypointDeformation& k, const Viewpoint& v);

/// The keypoint's 2D warp lifted to 3D at p. Points nearer than the depth cut
/// come back unchanged with an identity Jacobian.
LiftResult lift_keypoint(const KeypointDeformation& k, const Vec3& p);

struct EvalStats {
  /// (point, layer) pairs skipped because the point was not in front of the
  /// layer's camera.
  std::size_t layer_failures = 0;
  /// Points with at least one skipped layer.
  std::size_t failed_points = 0;

  EvalStats& operator+=(const EvalStats& o) {
    layer_failures += o.layer_failures;
    failed_points += o.failed_points;
    return *this;
  }
};

/// Field value and Jacobian at p for view v.
LiftResult evaluate(const DeformationDocument& doc, const Vec3& p, const Viewpoint& v,
                    EvalStats* stats = nullptr);

/// Batch evaluation against one document snapshot and one view. Per-layer
/// camera constants and blend weights are computed once; points run through
/// the SIMD kernels in blocks.
class FieldEvaluator {
 public:
  FieldEvaluator(const DeformationDocument& doc, const Viewpoint& v);

  std::size_t layer_count() const { return layers_.size(); }
  /// Blend weight of layer k at this view (after base-case and linear
  /// normalisation); zero for layers that are skipped outright.
  double weight(std::size_t k) const { return layers_[k].beta; }
  /// True when no layer can move any point.
  bool is_identity() const;

  /// In place over n points in structure-of-arrays form. jac holds nine
  /// row-major entry arrays or is null. failures, if given, receives the number
  /// of skipped layers per point.
  EvalStats run(std::size_t n, double* x, double* y, double* z, double* const* jac,
                std::uint32_t* failures = nullptr) const;

 private:
  struct Layer {
    const KeypointDeformation* keypoint = nullptr;
    double beta = 0.0;
  };

  EvalStats run_block(std::size_t n, double* x, double* y, double* z, double* const* jac,
                      std::uint32_t* failures) const;

  const DeformationDocument* doc_;
  std::vector<Layer> layers_;
};

}  // namespace vdfield
