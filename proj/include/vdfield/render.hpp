#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vdfield/camera.hpp"
#include "vdfield/defield.hpp"
#include "vdfield/image.hpp"
#include "vdfield/mesh2d.hpp"
#include "vdfield/splats.hpp"
#include "vdfield/types.hpp"

namespace vdfield {

struct MaskOptions {
  double opacity_threshold = 0.3;
  /// Splat footprint radius in standard deviations.
  double sigma_extent = 2.0;
  bool close = true;
};

/// Foreground coverage at the pose's image size. Throws NothingVisible when no
/// pixel is set.
Mask render_mask(const SplatModel& model, const CameraPose& pose, const MaskOptions& opt = {});
Mask render_mask(const TriMeshModel& model, const CameraPose& pose, const MaskOptions& opt = {});
Mask render_mask(const AnyModel& model, const CameraPose& pose, const MaskOptions& opt = {});

/// 3x3 dilation followed by 3x3 erosion; out-of-image pixels are ignored.
Mask close3x3(const Mask& m);

struct PreviewOptions {
  /// Splat footprints are cut off at this many standard deviations.
  double sigma_extent = 3.0;
  Rgba mesh_color{200, 200, 200, 255};
};

/// Back-to-front alpha-composited splats or flat-shaded mesh, transparent
/// background, straight (non-premultiplied) alpha.
RgbaImage render_preview(const SplatModel& model, const CameraPose& pose, const PreviewOptions& opt = {});
RgbaImage render_preview(const TriMeshModel& model, const CameraPose& pose, const PreviewOptions& opt = {});
RgbaImage render_preview(const AnyModel& model, const CameraPose& pose, const PreviewOptions& opt = {});

/// Rest or deformed rig triangles filled at pixel centres.
Mask rasterize_rig(const RigMesh2D& rig, int width, int height, bool deformed);

/// Rig edges drawn over an image.
void draw_rig(RgbaImage& image, const RigMesh2D& rig, bool deformed, Rgba color);

double mask_iou(const Mask& a, const Mask& b);

struct Orbit {
  Vec3 target = Vec3::Zero();
  double radius = 1.0;
};

/// Orbit that frames the model with margin for the given intrinsics.
Orbit default_orbit(const AnyModel& model, const CameraIntrinsics& intrinsics);

struct TurntableOptions {
  int frames = 36;
  double polar = kPi / 2;
  /// Azimuth of frame 0; frame i sits at start + 2 pi i / frames.
  double start_azimuth = 0.0;
  Orbit orbit;
  CameraIntrinsics intrinsics = CameraIntrinsics::from_fov(400, 400, deg_to_rad(45.0));
};

struct TurntableFrame {
  int index = 0;
  Viewpoint view;
  AnyModel deformed;
  RgbaImage image;
  DeformReport report;
};

/// Deforms and renders each frame in turn, handing it to sink.
void render_turntable(const AnyModel& model, const DeformationDocument& doc, const TurntableOptions& opt,
                      const std::function<void(const TurntableFrame&)>& sink);

/// Writes frame_0000.png ... into dir; returns the written paths.
std::vector<std::string> write_turntable(const AnyModel& model, const DeformationDocument& doc,
                                         const TurntableOptions& opt, const std::string& dir);

std::string encode_png(const RgbaImage& image);
RgbaImage decode_png(const std::string& bytes);
void write_png(const std::string& path, const RgbaImage& image);
RgbaImage mask_to_rgba(const Mask& m);

std::string encode_pgm(const Mask& m);
Mask decode_pgm(const std::string& bytes);

}  // namespace vdfield
