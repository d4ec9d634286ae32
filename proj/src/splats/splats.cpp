#include "vdfield/splats.hpp"

#include <string>

#include "kernels/kernels.hpp"
#include "vdfield/error.hpp"
#include "vdfield/parallel.hpp"

namespace vdfield {

void GaussianArrays::resize(std::size_t n) {
  x.resize(n);
  y.resize(n);
  z.resize(n);
  for (auto& c : cov) c.resize(n);
}

GaussianArrays GaussianArrays::from(const SplatModel& model) {
  GaussianArrays a;
  a.resize(model.gaussians.size());
  for (std::size_t i = 0; i < model.gaussians.size(); ++i) {
    const Gaussian& g = model.gaussians[i];
    a.x[i] = g.mean.x();
    a.y[i] = g.mean.y();
    a.z[i] = g.mean.z();
    a.cov[0][i] = g.covariance(0, 0);
    a.cov[1][i] = g.covariance(0, 1);
    a.cov[2][i] = g.covariance(0, 2);
    a.cov[3][i] = g.covariance(1, 1);
    a.cov[4][i] = g.covariance(1, 2);
    a.cov[5][i] = g.covariance(2, 2);
  }
  return a;
}

void GaussianArrays::store(SplatModel& model) const {
  for (std::size_t i = 0; i < size(); ++i) {
    Gaussian& g = model.gaussians[i];
    g.mean = Vec3(x[i], y[i], z[i]);
    Mat3& c = g.covariance;
    c(0, 0) = cov[0][i];
    c(0, 1) = c(1, 0) = cov[1][i];
    c(0, 2) = c(2, 0) = cov[2][i];
    c(1, 1) = cov[3][i];
    c(1, 2) = c(2, 1) = cov[4][i];
    c(2, 2) = cov[5][i];
  }
}

DeformReport SplatDeformer::run(const GaussianArrays& in, const DeformationDocument& doc,
                                const Viewpoint& v, GaussianArrays& out) {
  using namespace kernels;
  const std::size_t n = in.size();
  out.x = in.x;
  out.y = in.y;
  out.z = in.z;
  for (auto& c : out.cov) c.resize(n);
  for (auto& j : jac_) j.resize(n);

  double* jac[9];
  for (int e = 0; e < 9; ++e) jac[e] = jac_[e].data();
  const FieldEvaluator fe(doc, v);
  const EvalStats s = fe.run(n, out.x.data(), out.y.data(), out.z.data(), jac);

  const KernelTable& table = active();
  parallel_for(n, 16 * kBlock, [&](std::size_t b, std::size_t e) {
    Jacobians j;
    ConstSymMats c;
    SymMats o;
    for (int k = 0; k < 9; ++k) j.m[k] = jac[k] + b;
    for (int k = 0; k < 6; ++k) {
      c.s[k] = in.cov[k].data() + b;
      o.s[k] = out.cov[k].data() + b;
    }
    table.pushforward(j, c, e - b, o);
  });

  DeformReport r;
  r.primitives = n;
  r.failed = s.failed_points;
  r.layer_failures = s.layer_failures;
  return r;
}

Gaussian deform_gaussian(const Gaussian& g, const DeformationDocument& doc, const Viewpoint& v,
                         EvalStats* stats) {
  SplatModel one;
  one.gaussians.push_back(g);
  GaussianArrays out;
  SplatDeformer d;
  const DeformReport r = d.run(GaussianArrays::from(one), doc, v, out);
  if (stats) {
    stats->failed_points += r.failed;
    stats->layer_failures += r.layer_failures;
  }
  out.store(one);
  return one.gaussians[0];
}

namespace {

void check_failures(const DeformReport& r) {
  if (static_cast<double>(r.failed) > kMaxFailureFraction * static_cast<double>(r.primitives)) {
    throw Error(ErrorKind::kTooManyFailures, std::to_string(r.failed) + " of " +
                                                 std::to_string(r.primitives) +
                                                 " primitives failed to deform");
  }
}

}  // namespace

SplatModel deform_model(const SplatModel& model, const DeformationDocument& doc, const Viewpoint& v,
                        DeformReport* report) {
  GaussianArrays out;
  SplatDeformer d;
  const DeformReport r = d.run(GaussianArrays::from(model), doc, v, out);
  if (report) *report = r;
  check_failures(r);
  SplatModel result = model;
  out.store(result);
  return result;
}

TriMeshModel deform_model(const TriMeshModel& model, const DeformationDocument& doc,
                          const Viewpoint& v, DeformReport* report) {
  const std::size_t n = model.vertices.size();
  std::vector<double> x(n), y(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = model.vertices[i].x();
    y[i] = model.vertices[i].y();
    z[i] = model.vertices[i].z();
  }
  const EvalStats s = FieldEvaluator(doc, v).run(n, x.data(), y.data(), z.data(), nullptr);
  DeformReport r;
  r.primitives = n;
  r.failed = s.failed_points;
  r.layer_failures = s.layer_failures;
  if (report) *report = r;
  check_failures(r);
  TriMeshModel result = model;
  for (std::size_t i = 0; i < n; ++i) result.vertices[i] = Vec3(x[i], y[i], z[i]);
  return result;
}

AnyModel deform_model(const AnyModel& model, const DeformationDocument& doc, const Viewpoint& v,
                      DeformReport* report) {
  return std::visit([&](const auto& m) -> AnyModel { return deform_model(m, doc, v, report); }, model);
}

}  // namespace vdfield
