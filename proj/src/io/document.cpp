#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include <json.hpp>

#include "vdfield/error.hpp"
#include "vdfield/io.hpp"

namespace vdfield {
namespace {

using nlohmann::json;

// Degrees are the persisted unit; pick the degree value whose conversion lands
// on the stored radians exactly.
bool exact_degrees(double rad, bool polar, double& deg) {
  auto lands = [&](double d) {
    const Viewpoint v = polar ? Viewpoint(0.0, deg_to_rad(d)) : Viewpoint(deg_to_rad(d), kPi / 2);
    return (polar ? v.polar() : v.azimuth()) == rad;
  };
  const double guess = rad_to_deg(rad);
  // Shortest decimal first so authored values such as 30 stay 30.
  for (int digits = 1; digits <= 17; ++digits) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, guess);
    const double d = std::strtod(buf, nullptr);
    if (lands(d)) {
      deg = d;
      return true;
    }
  }
  double lo = guess, hi = guess;
  for (int step = 0; step < 256; ++step) {
    for (double d : {lo, hi}) {
      if (lands(d)) {
        deg = d;
        return true;
      }
    }
    lo = std::nextafter(lo, -std::numeric_limits<double>::infinity());
    hi = std::nextafter(hi, std::numeric_limits<double>::infinity());
  }
  return false;
}

json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

json flat(const std::vector<Vec2>& v) {
  json a = json::array();
  for (const Vec2& p : v) {
    a.push_back(p.x());
    a.push_back(p.y());
  }
  return a;
}

json to_json(const KeypointDeformation& k) {
  json j;
  json vp;
  double deg = 0;
  if (exact_degrees(k.viewpoint.azimuth(), false, deg)) {
    vp["azimuth_deg"] = deg;
  } else {
    vp["azimuth_deg"] = rad_to_deg(k.viewpoint.azimuth());
    vp["azimuth_rad"] = k.viewpoint.azimuth();
  }
  if (exact_degrees(k.viewpoint.polar(), true, deg)) {
    vp["polar_deg"] = deg;
  } else {
    vp["polar_deg"] = rad_to_deg(k.viewpoint.polar());
    vp["polar_rad"] = k.viewpoint.polar();
  }
  j["viewpoint"] = vp;
  j["orbit_radius"] = k.pose.orbit_radius;
  j["orbit_target"] = {k.pose.orbit_target.x(), k.pose.orbit_target.y(), k.pose.orbit_target.z()};
  j["sigma_azimuth"] = number(k.sigma_azimuth);
  j["sigma_polar"] = number(k.sigma_polar);
  j["depth_cut"] = k.depth_cut ? number(*k.depth_cut) : json(nullptr);
  json faces = json::array();
  for (const Face& f : k.rig.faces()) {
    for (int i : f) faces.push_back(i);
  }
  j["rig"] = {{"rest", flat(k.rig.rest_vertices())},
              {"deformed", flat(k.rig.deformed_vertices())},
              {"faces", faces}};
  json transforms = json::array();
  for (const Affine2& t : k.handles.transforms) {
    transforms.push_back({t(0, 0), t(0, 1), t(0, 2), t(1, 0), t(1, 1), t(1, 2)});
  }
  j["handles"] = {{"indices", k.handles.vertices}, {"transforms", transforms}};
  return j;
}

bool scalar_array(const json& j) {
  if (!j.is_array()) return false;
  for (const json& e : j) {
    if (e.is_structured()) return false;
  }
  return true;
}

// Containers indent one level per depth; arrays of plain values stay on one line.
void write(const json& j, int depth, std::string& out) {
  const std::string pad(2 * (depth + 1), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += pad + json(it.key()).dump() + ": ";
      write(it.value(), depth + 1, out);
    }
    out += "\n" + std::string(2 * depth, ' ') + "}";
  } else if (j.is_array() && !scalar_array(j)) {
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out += ",\n";
      out += pad;
      write(j[i], depth + 1, out);
    }
    out += "\n" + std::string(2 * depth, ' ') + "]";
  } else {
    out += j.dump();
  }
}

std::string path_of(const std::string& base, const char* key) { return base.empty() ? key : base + "." + key; }

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError("document: missing field '" + path_of(where, key) + "'");
  }
  return j.at(key);
}

double as_number(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ValidationError("document: '" + where + "' must be a number");
}

double num(const json& j, const char* key, const std::string& where) {
  return as_number(field(j, key, where), path_of(where, key));
}

const json& arr(const json& j, const char* key, const std::string& where, std::size_t multiple) {
  const json& a = field(j, key, where);
  if (!a.is_array() || a.size() % multiple != 0) {
    throw ValidationError("document: '" + path_of(where, key) + "' must be an array with a multiple of " +
                          std::to_string(multiple) + " entries");
  }
  return a;
}

std::vector<Vec2> points(const json& a, const std::string& where) {
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < a.size(); i += 2) {
    out.emplace_back(as_number(a[i], where), as_number(a[i + 1], where));
  }
  return out;
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ValidationError("document: '" + where + "' must be an integer");
  const long long v = j.get<long long>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ValidationError("document: '" + where + "' out of range");
  }
  return static_cast<int>(v);
}

KeypointDeformation keypoint_from_json(const json& j, const CameraIntrinsics& intrinsics,
                                       const std::string& where) {
  const json& vp = field(j, "viewpoint", where);
  const std::string vw = path_of(where, "viewpoint");
  const double az = vp.contains("azimuth_rad") ? as_number(vp["azimuth_rad"], vw + ".azimuth_rad")
                                               : deg_to_rad(num(vp, "azimuth_deg", vw));
  const double pol = vp.contains("polar_rad") ? as_number(vp["polar_rad"], vw + ".polar_rad")
                                              : deg_to_rad(num(vp, "polar_deg", vw));
  const json& tj = arr(j, "orbit_target", where, 3);
  if (tj.size() != 3) throw ValidationError("document: '" + path_of(where, "orbit_target") + "' must have 3 entries");
  const Vec3 target(as_number(tj[0], where), as_number(tj[1], where), as_number(tj[2], where));
  const double radius = num(j, "orbit_radius", where);

  const json& rj = field(j, "rig", where);
  const std::string rw = path_of(where, "rig");
  std::vector<Vec2> rest = points(arr(rj, "rest", rw, 2), rw + ".rest");
  std::vector<Vec2> deformed = points(arr(rj, "deformed", rw, 2), rw + ".deformed");
  const json& fj = arr(rj, "faces", rw, 3);
  std::vector<Face> faces;
  for (std::size_t i = 0; i < fj.size(); i += 3) {
    faces.push_back({integer(fj[i], rw + ".faces"), integer(fj[i + 1], rw + ".faces"),
                     integer(fj[i + 2], rw + ".faces")});
  }

  KeypointDeformation k;
  try {
    k = KeypointDeformation::at_view(Viewpoint(az, pol), radius, target, intrinsics,
                                     RigMesh2D(std::move(rest), std::move(faces), std::move(deformed)));
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(where + ": " + e.what());
  }
  k.sigma_azimuth = num(j, "sigma_azimuth", where);
  k.sigma_polar = num(j, "sigma_polar", where);
  const json& dc = field(j, "depth_cut", where);
  if (!dc.is_null()) k.depth_cut = as_number(dc, path_of(where, "depth_cut"));

  const json& hj = field(j, "handles", where);
  const std::string hw = path_of(where, "handles");
  for (const json& i : arr(hj, "indices", hw, 1)) k.handles.vertices.push_back(integer(i, hw + ".indices"));
  for (const json& t : arr(hj, "transforms", hw, 1)) {
    if (!t.is_array() || t.size() != 6) {
      throw ValidationError("document: '" + hw + ".transforms' entries must have 6 numbers");
    }
    Affine2 a;
    for (int e = 0; e < 6; ++e) a(e / 3, e % 3) = as_number(t[e], hw + ".transforms");
    k.handles.transforms.push_back(a);
  }
  return k;
}

}  // namespace

std::string format_document(const DeformationDocument& doc) {
  json j;
  j["vdfield_doc_version"] = kDocumentVersion;
  const CameraIntrinsics& in = doc.intrinsics;
  j["intrinsics"] = {{"ax", in.ax}, {"ay", in.ay}, {"cx", in.cx},
                     {"cy", in.cy}, {"width", in.width}, {"height", in.height}};
  j["blend_mode"] = to_string(doc.blend_mode);
  j["base_case_mode"] = to_string(doc.base_case_mode);
  j["keypoints"] = json::array();
  for (const KeypointDeformation& k : doc.keypoints) j["keypoints"].push_back(to_json(k));
  std::string out;
  write(j, 0, out);
  out += "\n";
  return out;
}

std::string format_keypoint(const KeypointDeformation& k) {
  std::string out;
  write(to_json(k), 0, out);
  out += "\n";
  return out;
}

DeformationDocument parse_document(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("document JSON: ") + e.what(), e.byte, ParseError::Unit::kByte);
  }
  if (!j.is_object() || !j.contains("vdfield_doc_version")) {
    throw Error(ErrorKind::kSchemaVersionMismatch, "document has no vdfield_doc_version field");
  }
  const json& ver = j["vdfield_doc_version"];
  if (!ver.is_number_integer() || ver.get<long long>() != kDocumentVersion) {
    throw Error(ErrorKind::kSchemaVersionMismatch,
                "document version " + ver.dump() + " (expected " + std::to_string(kDocumentVersion) + ")");
  }

  DeformationDocument doc;
  const json& ij = field(j, "intrinsics", "");
  doc.intrinsics.ax = num(ij, "ax", "intrinsics");
  doc.intrinsics.ay = num(ij, "ay", "intrinsics");
  doc.intrinsics.cx = num(ij, "cx", "intrinsics");
  doc.intrinsics.cy = num(ij, "cy", "intrinsics");
  doc.intrinsics.width = integer(field(ij, "width", "intrinsics"), "intrinsics.width");
  doc.intrinsics.height = integer(field(ij, "height", "intrinsics"), "intrinsics.height");
  try {
    doc.intrinsics.validate();
    const json& bm = field(j, "blend_mode", "");
    const json& bc = field(j, "base_case_mode", "");
    if (!bm.is_string() || !bc.is_string()) throw ValidationError("document: modes must be strings");
    doc.blend_mode = blend_mode_from_string(bm.get<std::string>());
    doc.base_case_mode = base_case_mode_from_string(bc.get<std::string>());
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(std::string("document: ") + e.what());
  }
  const json& kj = field(j, "keypoints", "");
  if (!kj.is_array()) throw ValidationError("document: 'keypoints' must be an array");
  for (std::size_t i = 0; i < kj.size(); ++i) {
    doc.keypoints.push_back(keypoint_from_json(kj[i], doc.intrinsics, "keypoints[" + std::to_string(i) + "]"));
  }
  doc.validate();
  return doc;
}

DeformationDocument load_document(const std::string& path) { return parse_document(read_file(path)); }

void save_document(const DeformationDocument& doc, const std::string& path) {
  write_file(path, format_document(doc));
}

}  // namespace vdfield
