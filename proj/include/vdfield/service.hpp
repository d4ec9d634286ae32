#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "vdfield/defield.hpp"
#include "vdfield/image.hpp"
#include "vdfield/mesh2d.hpp"
#include "vdfield/render.hpp"
#include "vdfield/rigging.hpp"
#include "vdfield/types.hpp"

namespace vdfield {

inline constexpr int kApiVersion = 1;

/// A mutation carried a revision other than the current one.
class StaleRevision : public std::runtime_error {
 public:
  StaleRevision(std::uint64_t expected, std::uint64_t current);
  std::uint64_t current() const noexcept { return current_; }

 private:
  std::uint64_t current_;
};

struct SessionConfig {
  int preview_resolution = 400;
  TriangulationParams triangulation;
  WeightMethod weight_method = WeightMethod::kHarmonic;
  MaskOptions mask;
};

struct KeypointRequest {
  Viewpoint view;
  std::optional<double> radius;
  double sigma_azimuth = 4.0;
  double sigma_polar = 4.0;
  std::optional<double> depth_cut;
};

/// One model, one document. Mutations are serialised and each publishes a new
/// document snapshot; readers work on whichever snapshot they grabbed.
class EditorSession {
 public:
  EditorSession(AnyModel model, DeformationDocument doc, SessionConfig config = {});

  const AnyModel& model() const { return model_; }
  const SessionConfig& config() const { return config_; }
  Orbit orbit() const { return orbit_; }

  std::uint64_t revision() const;
  std::shared_ptr<const DeformationDocument> snapshot() const;
  std::optional<std::size_t> active_keypoint() const;

  /// Renders the current deformed model from the view, extracts and
  /// triangulates the silhouette and appends an identity layer.
  std::size_t add_keypoint(std::uint64_t revision, const KeypointRequest& req);
  /// Solves (or reuses) weights and resets transforms to identity.
  WeightMatrix set_handles(std::uint64_t revision, std::size_t index, const std::vector<int>& vertices);
  /// Skins the rig with the cached weights; returns the deformed vertices.
  std::vector<Vec2> set_transforms(std::uint64_t revision, std::size_t index,
                                   const std::vector<Affine2>& transforms);
  void set_sigmas(std::uint64_t revision, std::size_t index, double sigma_azimuth, double sigma_polar);
  void set_depth_cut(std::uint64_t revision, std::size_t index, std::optional<double> depth_cut);
  void remove_keypoint(std::uint64_t revision, std::size_t index);

  RgbaImage preview(const Viewpoint& v, int resolution, bool undeformed) const;
  /// Preview from the keypoint's own camera.
  RgbaImage keypoint_preview(std::size_t index) const;
  void save(const std::string& path) const;

 private:
  struct WeightCache {
    std::vector<int> handles;
    std::shared_ptr<const WeightMatrix> weights;
  };

  void check_revision(std::uint64_t revision) const;
  void check_index(const DeformationDocument& doc, std::size_t index) const;
  void publish(DeformationDocument doc, std::optional<std::size_t> active);
  std::shared_ptr<const WeightMatrix> weights_for(const KeypointDeformation& k, std::size_t index);

  const AnyModel model_;
  const SessionConfig config_;
  Orbit orbit_;

  std::mutex write_mutex_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const DeformationDocument> doc_;
  std::uint64_t revision_ = 0;
  std::optional<std::size_t> active_;
  std::vector<WeightCache> weights_;
};

/// HTTP front end for an EditorSession.
class EditorServer {
 public:
  explicit EditorServer(EditorSession& session);
  ~EditorServer();

  EditorServer(const EditorServer&) = delete;
  EditorServer& operator=(const EditorServer&) = delete;

  /// Binds host:port (port 0 picks a free one); returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vdfield
