#include <algorithm>

#include "vdfield/error.hpp"
#include "vdfield/io.hpp"
#include "vdfield/service.hpp"
#include "vdfield/splats.hpp"

namespace vdfield {
namespace {

/// Primitives at or beyond the cut plane of the pose; faces need every vertex beyond it.
AnyModel beyond_cut(const AnyModel& model, const CameraPose& pose, double cut) {
  auto beyond = [&](const Vec3& p) { return to_camera(p, pose.extrinsics).z() >= cut; };
  if (const auto* s = std::get_if<SplatModel>(&model)) {
    SplatModel out;
    for (const Gaussian& g : s->gaussians) {
      if (beyond(g.mean)) out.gaussians.push_back(g);
    }
    return out;
  }
  const TriMeshModel& m = std::get<TriMeshModel>(model);
  TriMeshModel out;
  out.vertices = m.vertices;
  for (const Face& f : m.faces) {
    if (beyond(m.vertices[f[0]]) && beyond(m.vertices[f[1]]) && beyond(m.vertices[f[2]])) out.faces.push_back(f);
  }
  return out;
}

bool model_empty(const AnyModel& m) {
  if (const auto* s = std::get_if<SplatModel>(&m)) return s->gaussians.empty();
  return std::get<TriMeshModel>(m).faces.empty();
}

CameraIntrinsics scaled(const CameraIntrinsics& in, int resolution) {
  const double s = static_cast<double>(resolution) / in.width;
  CameraIntrinsics out = in;
  out.width = resolution;
  out.height = std::max(1, static_cast<int>(std::lround(in.height * s)));
  out.ax = in.ax * s;
  out.ay = in.ay * s;
  out.cx = in.cx * s;
  out.cy = in.cy * s;
  return out;
}

}  // namespace

StaleRevision::StaleRevision(std::uint64_t expected, std::uint64_t current)
    : std::runtime_error("stale revision " + std::to_string(expected) + " (current " + std::to_string(current) + ")"),
      current_(current) {}

EditorSession::EditorSession(AnyModel model, DeformationDocument doc, SessionConfig config)
    : model_(std::move(model)), config_(std::move(config)) {
  doc.validate();
  orbit_ = default_orbit(model_, doc.intrinsics);
  if (!doc.keypoints.empty()) {
    orbit_.target = doc.keypoints[0].pose.orbit_target;
    orbit_.radius = doc.keypoints[0].pose.orbit_radius;
  }
  weights_.resize(doc.keypoints.size());
  doc_ = std::make_shared<const DeformationDocument>(std::move(doc));
}

std::uint64_t EditorSession::revision() const {
  std::lock_guard lock(snapshot_mutex_);
  return revision_;
}

std::shared_ptr<const DeformationDocument> EditorSession::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return doc_;
}

std::optional<std::size_t> EditorSession::active_keypoint() const {
  std::lock_guard lock(snapshot_mutex_);
  return active_;
}

void EditorSession::check_revision(std::uint64_t revision) const {
  const std::uint64_t current = this->revision();
  if (revision != current) throw StaleRevision(revision, current);
}

void EditorSession::check_index(const DeformationDocument& doc, std::size_t index) const {
  if (index >= doc.keypoints.size()) {
    throw Error(ErrorKind::kInvalidArgument, "no keypoint " + std::to_string(index));
  }
}

void EditorSession::publish(DeformationDocument doc, std::optional<std::size_t> active) {
  doc.validate();
  auto next = std::make_shared<const DeformationDocument>(std::move(doc));
  std::lock_guard lock(snapshot_mutex_);
  doc_ = std::move(next);
  active_ = active;
  ++revision_;
}

std::size_t EditorSession::add_keypoint(std::uint64_t revision, const KeypointRequest& req) {
  std::lock_guard write(write_mutex_);
  check_revision(revision);
  const auto doc = snapshot();
  const double radius = req.radius.value_or(orbit_.radius);
  KeypointDeformation k;
  k.viewpoint = req.view;
  k.pose = pose_from_viewpoint(req.view, radius, orbit_.target, doc->intrinsics);
  k.sigma_azimuth = req.sigma_azimuth;
  k.sigma_polar = req.sigma_polar;
  k.depth_cut = req.depth_cut;

  // The user authors on what they currently see: the model deformed by the existing layers.
  AnyModel seen = deform_model(model_, *doc, req.view);
  if (k.depth_cut) seen = beyond_cut(seen, k.pose, *k.depth_cut);
  if (model_empty(seen)) throw Error(ErrorKind::kNothingVisible, "nothing beyond the depth cut");
  const Mask mask = render_mask(seen, k.pose, config_.mask);
  k.rig = rig_from_mask(mask, config_.triangulation);

  DeformationDocument next = *doc;
  next.keypoints.push_back(std::move(k));
  const std::size_t index = next.keypoints.size() - 1;
  publish(std::move(next), index);
  weights_.emplace_back();
  return index;
}

std::shared_ptr<const WeightMatrix> EditorSession::weights_for(const KeypointDeformation& k, std::size_t index) {
  WeightCache& c = weights_[index];
  if (!c.weights || c.handles != k.handles.vertices) {
    c.handles = k.handles.vertices;
    c.weights = std::make_shared<const WeightMatrix>(solve_weights(k.rig, k.handles, config_.weight_method));
  }
  return c.weights;
}

WeightMatrix EditorSession::set_handles(std::uint64_t revision, std::size_t index,
                                        const std::vector<int>& vertices) {
  std::lock_guard write(write_mutex_);
  check_revision(revision);
  const auto doc = snapshot();
  check_index(*doc, index);
  DeformationDocument next = *doc;
  KeypointDeformation& k = next.keypoints[index];
  HandleSet h = HandleSet::at(vertices);
  h.validate(k.rig.vertex_count());
  k.handles = std::move(h);
  k.rig = k.rig.with_deformed(k.rig.rest_vertices());
  const auto w = weights_for(k, index);
  publish(std::move(next), index);
  return *w;
}

std::vector<Vec2> EditorSession::set_transforms(std::uint64_t revision, std::size_t index,
                                                const std::vector<Affine2>& transforms) {
  std::lock_guard write(write_mutex_);
  check_revision(revision);
  const auto doc = snapshot();
  check_index(*doc, index);
  DeformationDocument next = *doc;
  KeypointDeformation& k = next.keypoints[index];
  HandleSet h = k.handles;
  h.transforms = transforms;
  h.validate(k.rig.vertex_count());
  for (const Affine2& t : transforms) {
    if (!t.allFinite()) throw ValidationError("HandleSet: transforms finite");
  }
  const auto w = weights_for(k, index);
  k.handles = std::move(h);
  k.rig = apply_skinning(k.rig, k.handles, *w);
  std::vector<Vec2> out = k.rig.deformed_vertices();
  publish(std::move(next), index);
  return out;
}

void EditorSession::set_sigmas(std::uint64_t revision, std::size_t index, double sigma_azimuth,
                               double sigma_polar) {
  std::lock_guard write(write_mutex_);
  check_revision(revision);
  const auto doc = snapshot();
  check_index(*doc, index);
  DeformationDocument next = *doc;
  next.keypoints[index].sigma_azimuth = sigma_azimuth;
  next.keypoints[index].sigma_polar = sigma_polar;
  publish(std::move(next), index);
}

void EditorSession::set_depth_cut(std::uint64_t revision, std::size_t index, std::optional<double> depth_cut) {
  std::lock_guard write(write_mutex_);
  check_revision(revision);
  const auto doc = snapshot();
  check_index(*doc, index);
  DeformationDocument next = *doc;
  next.keypoints[index].depth_cut = depth_cut;
  publish(std::move(next), index);
}

void EditorSession::remove_keypoint(std::uint64_t revision, std::size_t index) {
  std::lock_guard write(write_mutex_);
  check_revision(revision);
  const auto doc = snapshot();
  check_index(*doc, index);
  DeformationDocument next = *doc;
  next.keypoints.erase(next.keypoints.begin() + static_cast<std::ptrdiff_t>(index));
  std::optional<std::size_t> active;
  if (!next.keypoints.empty()) active = std::min(index, next.keypoints.size() - 1);
  publish(std::move(next), active);
  weights_.erase(weights_.begin() + static_cast<std::ptrdiff_t>(index));
}

RgbaImage EditorSession::preview(const Viewpoint& v, int resolution, bool undeformed) const {
  if (resolution < 8 || resolution > 4096) throw Error(ErrorKind::kInvalidArgument, "resolution out of range");
  const auto doc = snapshot();
  const CameraPose pose = pose_from_viewpoint(v, orbit_.radius, orbit_.target, scaled(doc->intrinsics, resolution));
  if (undeformed) return render_preview(model_, pose);
  return render_preview(deform_model(model_, *doc, v), pose);
}

RgbaImage EditorSession::keypoint_preview(std::size_t index) const {
  const auto doc = snapshot();
  check_index(*doc, index);
  const KeypointDeformation& k = doc->keypoints[index];
  const CameraPose pose = pose_from_viewpoint(k.viewpoint, k.pose.orbit_radius, k.pose.orbit_target,
                                              scaled(doc->intrinsics, config_.preview_resolution));
  return render_preview(deform_model(model_, *doc, k.viewpoint), pose);
}

void EditorSession::save(const std::string& path) const { save_document(*snapshot(), path); }

}  // namespace vdfield
