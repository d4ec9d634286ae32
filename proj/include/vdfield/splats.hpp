#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "vdfield/defield.hpp"
#include "vdfield/types.hpp"

namespace vdfield {

/// Gaussian geometry in structure-of-arrays form. Covariances keep the upper
/// triangle: 00 01 02 11 12 22.
struct GaussianArrays {
  std::vector<double> x, y, z;
  std::array<std::vector<double>, 6> cov;

  std::size_t size() const { return x.size(); }
  void resize(std::size_t n);

  static GaussianArrays from(const SplatModel& model);
  /// Writes means and covariances back; model must have size() Gaussians.
  void store(SplatModel& model) const;
};

struct DeformReport {
  std::size_t primitives = 0;
  /// Primitives for which at least one layer had to be skipped.
  std::size_t failed = 0;
  std::size_t layer_failures = 0;
};

/// Largest tolerated fraction of failed primitives before deform_model throws.
inline constexpr double kMaxFailureFraction = 0.01;

/// Batch deformer that keeps its Jacobian buffers across calls.
class SplatDeformer {
 public:
  /// out may alias nothing in `in`; it is resized as needed.
  DeformReport run(const GaussianArrays& in, const DeformationDocument& doc, const Viewpoint& v,
                   GaussianArrays& out);

 private:
  std::array<std::vector<double>, 9> jac_;
};

/// Mean through the field, covariance J * Sigma * J^T (symmetrised).
Gaussian deform_gaussian(const Gaussian& g, const DeformationDocument& doc, const Viewpoint& v,
                         EvalStats* stats = nullptr);

/// Per-primitive deformation with order preserved. Throws TooManyFailures when
/// more than kMaxFailureFraction of the primitives failed.
SplatModel deform_model(const SplatModel& model, const DeformationDocument& doc, const Viewpoint& v,
                        DeformReport* report = nullptr);
TriMeshModel deform_model(const TriMeshModel& model, const DeformationDocument& doc,
                          const Viewpoint& v, DeformReport* report = nullptr);
AnyModel deform_model(const AnyModel& model, const DeformationDocument& doc, const Viewpoint& v,
                      DeformReport* report = nullptr);

}  // namespace vdfield
