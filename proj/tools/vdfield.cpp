#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "vdfield/error.hpp"
#include "vdfield/io.hpp"
#include "vdfield/mesh2d.hpp"
#include "vdfield/parallel.hpp"
#include "vdfield/render.hpp"
#include "vdfield/service.hpp"
#include "vdfield/splats.hpp"

using namespace vdfield;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitUsage = 64;

EditorServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

AnyModel load(const std::string& path) {
  std::vector<std::string> warnings;
  AnyModel m = load_model(path, &warnings);
  for (const std::string& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return m;
}

/// The document's first keypoint fixes the orbit; otherwise frame the model.
Orbit scene_orbit(const AnyModel& model, const DeformationDocument& doc) {
  if (doc.keypoints.empty()) return default_orbit(model, doc.intrinsics);
  return {doc.keypoints[0].pose.orbit_target, doc.keypoints[0].pose.orbit_radius};
}

std::size_t primitive_count(const AnyModel& m) {
  if (const auto* s = std::get_if<SplatModel>(&m)) return s->gaussians.size();
  return std::get<TriMeshModel>(m).faces.size();
}

int cmd_info(const std::string& model_path) {
  const AnyModel m = load(model_path);
  const Bounds3 b = bounds(m);
  if (const auto* s = std::get_if<SplatModel>(&m)) {
    std::printf("kind: splats\ngaussians: %zu\n", s->gaussians.size());
  } else {
    const auto& t = std::get<TriMeshModel>(m);
    std::printf("kind: mesh\nvertices: %zu\nfaces: %zu\n", t.vertices.size(), t.faces.size());
  }
  std::printf("bounds_min: %.9g %.9g %.9g\nbounds_max: %.9g %.9g %.9g\n", b.min.x(), b.min.y(), b.min.z(), b.max.x(),
              b.max.y(), b.max.z());
  return 0;
}

struct ViewmeshArgs {
  std::string model;
  double az = 0, pol = 90;
  double radius = 0;
  double min_angle = 32.5, max_area = 20.0;
  int res = 400;
  std::string out = "viewmesh";
};

int cmd_viewmesh(const ViewmeshArgs& a) {
  const AnyModel m = load(a.model);
  TriangulationParams params;
  params.min_angle = a.min_angle;
  params.max_area = a.max_area;
  params.mask_resolution = a.res;
  params.validate();
  const CameraIntrinsics in = CameraIntrinsics::from_fov(a.res, a.res, deg_to_rad(45.0));
  const Orbit o = default_orbit(m, in);
  const Viewpoint v = Viewpoint::from_degrees(a.az, a.pol);
  KeypointDeformation k = KeypointDeformation::at_view(v, a.radius > 0 ? a.radius : o.radius, o.target, in,
                                                      RigMesh2D());
  const Mask mask = render_mask(m, k.pose);
  k.rig = rig_from_mask(mask, params);
  const QualityReport q = check_quality(k.rig, params);

  write_file(a.out + ".json", format_keypoint(k));
  RgbaImage img = render_preview(m, k.pose);
  draw_rig(img, k.rig, false, Rgba{255, 40, 40, 255});
  write_png(a.out + ".png", img);
  std::printf("vertices: %zu\ntriangles: %zu\nmin_angle: %.4f\nmax_area: %.4f\nviolations: %zu\n",
              k.rig.vertex_count(), q.triangles, q.min_angle, q.max_area, q.angle_violations + q.area_violations);
  return q.ok() ? 0 : kExitValidation;
}

int cmd_deform(const std::string& model_path, const std::string& doc_path, double az, double pol,
               const std::string& out) {
  const AnyModel m = load(model_path);
  const DeformationDocument doc = load_document(doc_path);
  DeformReport report;
  const AnyModel d = deform_model(m, doc, Viewpoint::from_degrees(az, pol), &report);
  save_model(d, out);
  if (report.failed) std::fprintf(stderr, "warning: %zu primitives failed to lift\n", report.failed);
  return 0;
}

int cmd_render(const std::string& model_path, const std::string& doc_path, double az, double pol, double radius,
               int res, const std::string& out) {
  const AnyModel m = load(model_path);
  DeformationDocument doc;
  if (!doc_path.empty()) doc = load_document(doc_path);
  const Orbit o = scene_orbit(m, doc);
  CameraIntrinsics in = doc.intrinsics;
  if (res > 0) {
    const double s = static_cast<double>(res) / in.width;
    in = CameraIntrinsics{in.ax * s, in.ay * s, in.cx * s, in.cy * s, res,
                          std::max(1, static_cast<int>(std::lround(in.height * s)))};
  }
  const Viewpoint v = Viewpoint::from_degrees(az, pol);
  const CameraPose pose = pose_from_viewpoint(v, radius > 0 ? radius : o.radius, o.target, in);
  write_png(out, render_preview(doc.empty() ? m : deform_model(m, doc, v), pose));
  return 0;
}

int cmd_turntable(const std::string& model_path, const std::string& doc_path, int frames, double polar,
                  double start, const std::string& dir) {
  const AnyModel m = load(model_path);
  const DeformationDocument doc = load_document(doc_path);
  TurntableOptions opt;
  opt.frames = frames;
  opt.polar = deg_to_rad(polar);
  opt.start_azimuth = deg_to_rad(start);
  opt.orbit = scene_orbit(m, doc);
  opt.intrinsics = doc.intrinsics;
  const auto paths = write_turntable(m, doc, opt, dir);
  std::printf("wrote %zu frames to %s\n", paths.size(), dir.c_str());
  return 0;
}

int cmd_validate(const std::string& doc_path) {
  const DeformationDocument doc = load_document(doc_path);
  std::printf("ok: %zu keypoints\n", doc.keypoints.size());
  return 0;
}

int cmd_serve(const std::string& model_path, const std::string& doc_path, const std::string& host, int port) {
  AnyModel m = load(model_path);
  DeformationDocument doc;
  if (!doc_path.empty() && std::filesystem::exists(doc_path)) doc = load_document(doc_path);
  EditorSession session(std::move(m), std::move(doc));
  EditorServer server(session);
  const int bound = server.bind(host, port);
  std::printf("listening on http://%s:%d (%zu primitives)\n", host.c_str(), bound, primitive_count(session.model()));
  std::fflush(stdout);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.listen();
  g_server = nullptr;
  return 0;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kParseError:
    case ErrorKind::kMissingProperty:
    case ErrorKind::kIoError:
    case ErrorKind::kSchemaVersionMismatch:
    case ErrorKind::kNonPsdCovariance:
      return kExitIo;
    default:
      return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vdfield: view-dependent deformation of splats and meshes"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (0 = all cores)")
      ->envname("VDFIELD_THREADS")
      ->check(CLI::NonNegativeNumber);

  std::string model, doc, out;
  double az = 0, pol = 90, radius = 0;

  auto* info = app.add_subcommand("info", "Print primitive counts and bounds");
  info->add_option("model", model, "Splat .ply or mesh .obj")->required();

  ViewmeshArgs vm;
  auto* viewmesh = app.add_subcommand("viewmesh", "Triangulate the silhouette at a view");
  viewmesh->add_option("model", vm.model)->required();
  viewmesh->add_option("--az", vm.az, "Azimuth, degrees")->required();
  viewmesh->add_option("--pol", vm.pol, "Polar angle, degrees")->required();
  viewmesh->add_option("--radius", vm.radius, "Orbit radius (default frames the model)");
  viewmesh->add_option("--min-angle", vm.min_angle, "Minimum triangle angle, degrees");
  viewmesh->add_option("--max-area", vm.max_area, "Maximum triangle area, px^2");
  viewmesh->add_option("--res", vm.res, "Mask resolution, px")->check(CLI::Range(16, 8192));
  viewmesh->add_option("-o,--out", vm.out, "Output prefix for .json and .png");

  auto* deform = app.add_subcommand("deform", "Deform a model as seen from a view");
  deform->add_option("model", model)->required();
  deform->add_option("doc", doc)->required();
  deform->add_option("--az", az)->required();
  deform->add_option("--pol", pol)->required();
  deform->add_option("-o,--out", out, "Output .ply or .obj")->required();

  int res = 0;
  auto* render = app.add_subcommand("render", "Render a preview PNG");
  render->add_option("model", model)->required();
  render->add_option("doc", doc);
  render->add_option("--az", az)->required();
  render->add_option("--pol", pol)->required();
  render->add_option("--radius", radius);
  render->add_option("--res", res)->check(CLI::Range(8, 8192));
  render->add_option("-o,--out", out)->required();

  int frames = 36;
  double polar = 90, start = 0;
  auto* turntable = app.add_subcommand("turntable", "Render an orbit sweep");
  turntable->add_option("model", model)->required();
  turntable->add_option("doc", doc)->required();
  turntable->add_option("--frames", frames)->check(CLI::Range(1, 100000));
  turntable->add_option("--polar", polar, "Polar angle, degrees");
  turntable->add_option("--start", start, "Azimuth of the first frame, degrees");
  turntable->add_option("-o,--out", out, "Output directory")->required();

  auto* validate = app.add_subcommand("validate", "Check a document's invariants");
  validate->add_option("doc", doc)->required();

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Start the editor service");
  serve->add_option("model", model)->required();
  serve->add_option("doc", doc, "Document to start from (optional)");
  serve->add_option("--host", host);
  serve->add_option("--port", port)->check(CLI::Range(0, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  set_thread_count(threads);

  try {
    if (*info) return cmd_info(model);
    if (*viewmesh) return cmd_viewmesh(vm);
    if (*deform) return cmd_deform(model, doc, az, pol, out);
    if (*render) return cmd_render(model, doc, az, pol, radius, res, out);
    if (*turntable) return cmd_turntable(model, doc, frames, polar, start, out);
    if (*validate) return cmd_validate(doc);
    if (*serve) return cmd_serve(model, doc, host, port);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "invalid: %s\n", e.invariant().c_str());
    return kExitValidation;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  return kExitUsage;
}
