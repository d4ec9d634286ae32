// vdfield headers first: httplib drags in <resolv.h>, whose _res macro breaks Eigen.
#include "vdfield/error.hpp"
#include "vdfield/io.hpp"
#include "vdfield/service.hpp"

#include <httplib.h>

#include <json.hpp>

namespace vdfield {
namespace {

using nlohmann::json;

/// Client mistake in the request body or query.
struct BadRequest : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw BadRequest("request body must be a JSON object");
  if (j.contains("api_version") && j["api_version"] != kApiVersion) {
    throw BadRequest("unsupported api_version " + j["api_version"].dump());
  }
  return j;
}

double number(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) throw BadRequest(std::string("'") + key + "' must be a number");
  return j[key].get<double>();
}

std::uint64_t revision_of(const json& j, const httplib::Request& req) {
  if (j.contains("revision")) {
    if (!j["revision"].is_number_unsigned()) throw BadRequest("'revision' must be a non-negative integer");
    return j["revision"].get<std::uint64_t>();
  }
  if (req.has_param("revision")) {
    try {
      return std::stoull(req.get_param_value("revision"));
    } catch (const std::exception&) {
      throw BadRequest("'revision' must be a non-negative integer");
    }
  }
  throw BadRequest("mutations must carry the revision they apply to");
}

std::size_t index_of(const httplib::Request& req) { return std::stoul(req.matches[1].str()); }

json flat(const std::vector<Vec2>& v) {
  json a = json::array();
  for (const Vec2& p : v) {
    a.push_back(p.x());
    a.push_back(p.y());
  }
  return a;
}

json base_reply(std::uint64_t revision) { return {{"api_version", kApiVersion}, {"revision", revision}}; }

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

int status_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::kNothingVisible:
    case ErrorKind::kEmptyMask:
    case ErrorKind::kRefinementDiverged:
    case ErrorKind::kDegenerateTriangle:
    case ErrorKind::kSolverFailure:
    case ErrorKind::kDisconnectedFromHandles:
    case ErrorKind::kTooManyFailures:
    case ErrorKind::kDepthTooSmall:
      return 422;
    case ErrorKind::kIoError:
      return 500;
    default:
      return 400;
  }
}

/// Runs the handler and maps failures onto status codes.
template <typename Fn>
httplib::Server::Handler guarded(EditorSession& s, Fn fn) {
  return [&s, fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const StaleRevision& e) {
      send_json(res, 409, {{"error", e.what()}, {"revision", e.current()}});
    } catch (const ValidationError& e) {
      send_json(res, 400, {{"error", e.what()}, {"invariant", e.invariant()}, {"revision", s.revision()}});
    } catch (const Error& e) {
      send_json(res, status_for(e.kind()), {{"error", e.what()}, {"kind", to_string(e.kind())}, {"revision", s.revision()}});
    } catch (const BadRequest& e) {
      send_json(res, 400, {{"error", e.what()}, {"revision", s.revision()}});
    } catch (const json::exception& e) {
      send_json(res, 400, {{"error", e.what()}, {"revision", s.revision()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", e.what()}, {"revision", s.revision()}});
    }
  };
}

void send_png(const httplib::Request& req, httplib::Response& res, const RgbaImage& img) {
  const std::string png = encode_png(img);
  const std::string accept = req.get_header_value("Accept");
  if (accept.find("application/json") != std::string::npos) {
    send_json(res, 200, {{"api_version", kApiVersion}, {"width", img.width}, {"height", img.height},
                         {"png_base64", httplib::detail::base64_encode(png)}});
  } else {
    res.status = 200;
    res.set_content(png, "image/png");
  }
}

}  // namespace

struct EditorServer::Impl {
  EditorSession& session;
  httplib::Server server;

  explicit Impl(EditorSession& s) : session(s) { routes(); }

  void routes() {
    EditorSession& s = session;
    server.Get("/meta", guarded(s, [&s](const httplib::Request&, httplib::Response& res) {
      const auto doc = s.snapshot();
      json j = base_reply(s.revision());
      const Bounds3 b = bounds(s.model());
      const bool splats = std::holds_alternative<SplatModel>(s.model());
      j["model"] = {{"kind", splats ? "splats" : "mesh"},
                    {"primitives", splats ? std::get<SplatModel>(s.model()).gaussians.size()
                                          : std::get<TriMeshModel>(s.model()).faces.size()},
                    {"bounds_min", {b.min.x(), b.min.y(), b.min.z()}},
                    {"bounds_max", {b.max.x(), b.max.y(), b.max.z()}}};
      const CameraIntrinsics& in = doc->intrinsics;
      j["intrinsics"] = {{"ax", in.ax}, {"ay", in.ay}, {"cx", in.cx}, {"cy", in.cy}, {"width", in.width}, {"height", in.height}};
      const Orbit o = s.orbit();
      j["orbit"] = {{"target", {o.target.x(), o.target.y(), o.target.z()}}, {"radius", o.radius}};
      j["blend_mode"] = to_string(doc->blend_mode);
      j["base_case_mode"] = to_string(doc->base_case_mode);
      const auto active = s.active_keypoint();
      j["active_keypoint"] = active ? json(*active) : json(nullptr);
      json ks = json::array();
      for (const KeypointDeformation& k : doc->keypoints) {
        ks.push_back({{"az", rad_to_deg(k.viewpoint.azimuth())},
                      {"pol", rad_to_deg(k.viewpoint.polar())},
                      {"sigma_az", k.sigma_azimuth},
                      {"sigma_pol", k.sigma_polar},
                      {"depth_cut", k.depth_cut ? json(*k.depth_cut) : json(nullptr)},
                      {"rig_vertices", k.rig.vertex_count()},
                      {"handles", k.handles.vertices}});
      }
      j["keypoints"] = ks;
      send_json(res, 200, j);
    }));

    server.Post("/keypoint", guarded(s, [&s](const httplib::Request& req, httplib::Response& res) {
      const json b = parse_body(req);
      const std::uint64_t rev = revision_of(b, req);
      KeypointRequest kr;
      kr.view = Viewpoint::from_degrees(number(b, "az"), number(b, "pol"));
      if (b.contains("radius") && !b["radius"].is_null()) kr.radius = number(b, "radius");
      if (b.contains("sigmas")) {
        const json& sg = b["sigmas"];
        if (!sg.is_array() || sg.size() != 2 || !sg[0].is_number() || !sg[1].is_number()) {
          throw BadRequest("'sigmas' must be [sigma_az, sigma_pol]");
        }
        kr.sigma_azimuth = sg[0].get<double>();
        kr.sigma_polar = sg[1].get<double>();
      }
      if (b.contains("depth_cut") && !b["depth_cut"].is_null()) kr.depth_cut = number(b, "depth_cut");
      const std::size_t index = s.add_keypoint(rev, kr);
      const auto doc = s.snapshot();
      const RigMesh2D& rig = doc->keypoints[index].rig;
      const QualityReport q = check_quality(rig, s.config().triangulation);
      json faces = json::array();
      for (const Face& f : rig.faces()) {
        for (int v : f) faces.push_back(v);
      }
      json j = base_reply(s.revision());
      j["index"] = index;
      j["rig"] = {{"rest", flat(rig.rest_vertices())}, {"faces", faces}};
      j["quality"] = {{"triangles", q.triangles}, {"min_angle", q.min_angle}, {"max_area", q.max_area},
                      {"angle_violations", q.angle_violations}, {"area_violations", q.area_violations}};
      send_json(res, 200, j);
    }));

    server.Post(R"(/keypoint/(\d+)/handles)", guarded(s, [&s](const httplib::Request& req, httplib::Response& res) {
      const json b = parse_body(req);
      const std::uint64_t rev = revision_of(b, req);
      if (!b.contains("vertex_indices") || !b["vertex_indices"].is_array()) {
        throw BadRequest("'vertex_indices' must be an array");
      }
      std::vector<int> idx;
      for (const json& v : b["vertex_indices"]) {
        if (!v.is_number_integer()) throw BadRequest("'vertex_indices' entries must be integers");
        idx.push_back(v.get<int>());
      }
      const WeightMatrix w = s.set_handles(rev, index_of(req), idx);
      json rows = json::array();
      for (Eigen::Index r = 0; r < w.w.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < w.w.cols(); ++c) row.push_back(w.w(r, c));
        rows.push_back(row);
      }
      json j = base_reply(s.revision());
      j["weights"] = rows;
      j["orphan_components"] = w.orphan_components;
      send_json(res, 200, j);
    }));

    server.Post(R"(/keypoint/(\d+)/transforms)", guarded(s, [&s](const httplib::Request& req, httplib::Response& res) {
      const json b = parse_body(req);
      const std::uint64_t rev = revision_of(b, req);
      if (!b.contains("transforms") || !b["transforms"].is_array()) throw BadRequest("'transforms' must be an array");
      std::vector<Affine2> ts;
      for (const json& t : b["transforms"]) {
        if (!t.is_array() || t.size() != 6) throw BadRequest("each transform is 6 numbers (2x3 row-major)");
        Affine2 a;
        for (int e = 0; e < 6; ++e) {
          if (!t[e].is_number()) throw BadRequest("each transform is 6 numbers (2x3 row-major)");
          a(e / 3, e % 3) = t[e].get<double>();
        }
        ts.push_back(a);
      }
      const std::size_t index = index_of(req);
      const std::vector<Vec2> deformed = s.set_transforms(rev, index, ts);
      json j = base_reply(s.revision());
      j["deformed"] = flat(deformed);
      const RgbaImage img = s.keypoint_preview(index);
      j["preview_png_base64"] = httplib::detail::base64_encode(encode_png(img));
      send_json(res, 200, j);
    }));

    server.Post(R"(/keypoint/(\d+)/sigmas)", guarded(s, [&s](const httplib::Request& req, httplib::Response& res) {
      const json b = parse_body(req);
      const std::uint64_t rev = revision_of(b, req);
      const std::size_t index = index_of(req);
      const bool has_sigmas = b.contains("sigma_az") || b.contains("sigma_pol");
      if (!has_sigmas && !b.contains("depth_cut")) throw BadRequest("nothing to update");
      std::uint64_t at = rev;
      if (has_sigmas) {
        s.set_sigmas(at, index, number(b, "sigma_az"), number(b, "sigma_pol"));
        ++at;
      }
      if (b.contains("depth_cut")) {
        const std::optional<double> cut =
            b["depth_cut"].is_null() ? std::nullopt : std::optional<double>(number(b, "depth_cut"));
        s.set_depth_cut(at, index, cut);
      }
      send_json(res, 200, base_reply(s.revision()));
    }));

    server.Delete(R"(/keypoint/(\d+))", guarded(s, [&s](const httplib::Request& req, httplib::Response& res) {
      const json b = parse_body(req);
      s.remove_keypoint(revision_of(b, req), index_of(req));
      send_json(res, 200, base_reply(s.revision()));
    }));

    server.Get("/preview", guarded(s, [&s](const httplib::Request& req, httplib::Response& res) {
      auto param = [&](const char* key, double fallback) {
        if (!req.has_param(key)) return fallback;
        try {
          return std::stod(req.get_param_value(key));
        } catch (const std::exception&) {
          throw BadRequest(std::string("query parameter '") + key + "' must be a number");
        }
      };
      const Viewpoint v = Viewpoint::from_degrees(param("az", 0.0), param("pol", 90.0));
      const int resolution = static_cast<int>(param("res", s.config().preview_resolution));
      const bool undeformed = req.has_param("undeformed") && req.get_param_value("undeformed") == "1";
      send_png(req, res, s.preview(v, resolution, undeformed));
    }));

    server.Post("/save", guarded(s, [&s](const httplib::Request& req, httplib::Response& res) {
      const json b = parse_body(req);
      if (!b.contains("path") || !b["path"].is_string()) throw BadRequest("'path' must be a string");
      const std::string path = b["path"].get<std::string>();
      s.save(path);
      json j = base_reply(s.revision());
      j["path"] = path;
      send_json(res, 200, j);
    }));
  }
};

EditorServer::EditorServer(EditorSession& session) : impl_(std::make_unique<Impl>(session)) {}

EditorServer::~EditorServer() { stop(); }

int EditorServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorKind::kIoError, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

bool EditorServer::listen() { return impl_->server.listen_after_bind(); }

void EditorServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace vdfield
