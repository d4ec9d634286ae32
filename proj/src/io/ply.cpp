#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

#include "vdfield/error.hpp"
#include "vdfield/io.hpp"

namespace vdfield {
namespace {

static_assert(std::endian::native == std::endian::little, "PLY reader assumes a little-endian host");

enum class Scalar { kI8, kU8, kI16, kU16, kI32, kU32, kF32, kF64 };

bool scalar_from_name(const std::string& s, Scalar& out) {
  static const std::map<std::string, Scalar> names = {
      {"char", Scalar::kI8},    {"int8", Scalar::kI8},     {"uchar", Scalar::kU8},
      {"uint8", Scalar::kU8},   {"short", Scalar::kI16},   {"int16", Scalar::kI16},
      {"ushort", Scalar::kU16}, {"uint16", Scalar::kU16},  {"int", Scalar::kI32},
      {"int32", Scalar::kI32},  {"uint", Scalar::kU32},    {"uint32", Scalar::kU32},
      {"float", Scalar::kF32},  {"float32", Scalar::kF32}, {"double", Scalar::kF64},
      {"float64", Scalar::kF64}};
  const auto it = names.find(s);
  if (it == names.end()) return false;
  out = it->second;
  return true;
}

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::kI8:
    case Scalar::kU8: return 1;
    case Scalar::kI16:
    case Scalar::kU16: return 2;
    case Scalar::kI32:
    case Scalar::kU32:
    case Scalar::kF32: return 4;
    case Scalar::kF64: return 8;
  }
  return 0;
}

template <typename T>
T load_as(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

double read_scalar(Scalar s, const char* p) {
  switch (s) {
    case Scalar::kI8: return load_as<std::int8_t>(p);
    case Scalar::kU8: return load_as<std::uint8_t>(p);
    case Scalar::kI16: return load_as<std::int16_t>(p);
    case Scalar::kU16: return load_as<std::uint16_t>(p);
    case Scalar::kI32: return load_as<std::int32_t>(p);
    case Scalar::kU32: return load_as<std::uint32_t>(p);
    case Scalar::kF32: return load_as<float>(p);
    case Scalar::kF64: return load_as<double>(p);
  }
  return 0.0;
}

struct Property {
  std::string name;
  Scalar type = Scalar::kF32;
  bool is_list = false;
  Scalar count_type = Scalar::kU8;
  std::size_t offset = 0;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> props;
  std::size_t header_offset = 0;

  bool fixed_size() const {
    for (const Property& p : props) {
      if (p.is_list) return false;
    }
    return true;
  }
  std::size_t stride() const {
    std::size_t s = 0;
    for (const Property& p : props) s += scalar_size(p.type);
    return s;
  }
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

const char* const kNames[] = {"x",     "y",     "z",     "scale_0", "scale_1", "scale_2",
                              "rot_0", "rot_1", "rot_2", "rot_3",   "opacity", "f_dc_0",
                              "f_dc_1", "f_dc_2"};

}  // namespace

SplatModel parse_splats(std::string_view bytes, std::vector<std::string>* warnings) {
  std::size_t pos = 0;
  auto next_line = [&](std::string& line) -> std::size_t {
    const std::size_t start = pos;
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) throw ParseError("unterminated PLY header", start, ParseError::Unit::kByte);
    line.assign(bytes.substr(pos, nl - pos));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = nl + 1;
    return start;
  };

  std::string line;
  next_line(line);
  if (line != "ply") throw ParseError("missing 'ply' magic", 0, ParseError::Unit::kByte);
  std::vector<Element> elements;
  bool format_seen = false;
  for (;;) {
    const std::size_t at = next_line(line);
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key.empty() || key == "comment" || key == "obj_info") continue;
    if (key == "end_header") break;
    if (key == "format") {
      std::string fmt, ver;
      ls >> fmt >> ver;
      if (fmt != "binary_little_endian") {
        throw ParseError("unsupported PLY format '" + fmt + "' (binary_little_endian only)", at,
                         ParseError::Unit::kByte);
      }
      format_seen = true;
    } else if (key == "element") {
      Element e;
      long long count = -1;
      ls >> e.name >> count;
      if (e.name.empty() || count < 0) throw ParseError("malformed element line", at, ParseError::Unit::kByte);
      e.count = static_cast<std::size_t>(count);
      e.header_offset = at;
      elements.push_back(std::move(e));
    } else if (key == "property") {
      if (elements.empty()) throw ParseError("property before any element", at, ParseError::Unit::kByte);
      Property p;
      std::string t;
      ls >> t;
      if (t == "list") {
        std::string ct, vt;
        ls >> ct >> vt >> p.name;
        if (!scalar_from_name(ct, p.count_type) || !scalar_from_name(vt, p.type)) {
          throw ParseError("unknown list property type", at, ParseError::Unit::kByte);
        }
        p.is_list = true;
      } else {
        ls >> p.name;
        if (!scalar_from_name(t, p.type)) {
          throw ParseError("unknown property type '" + t + "'", at, ParseError::Unit::kByte);
        }
      }
      if (p.name.empty()) throw ParseError("property without a name", at, ParseError::Unit::kByte);
      elements.back().props.push_back(std::move(p));
    } else {
      throw ParseError("unexpected header keyword '" + key + "'", at, ParseError::Unit::kByte);
    }
  }
  if (!format_seen) throw ParseError("PLY header has no format line", 0, ParseError::Unit::kByte);

  std::size_t data = pos;
  const Element* vertex = nullptr;
  for (const Element& e : elements) {
    if (e.name == "vertex") {
      vertex = &e;
      break;
    }
    if (!e.fixed_size()) {
      throw ParseError("variable-size element '" + e.name + "' precedes vertex data", e.header_offset,
                       ParseError::Unit::kByte);
    }
    data += e.count * e.stride();
  }
  if (!vertex) throw Error(ErrorKind::kMissingProperty, "PLY has no 'vertex' element");
  if (!vertex->fixed_size()) {
    throw ParseError("list property inside the vertex element", vertex->header_offset, ParseError::Unit::kByte);
  }

  std::map<std::string, const Property*> by_name;
  std::vector<Property> props = vertex->props;
  std::size_t off = 0;
  for (Property& p : props) {
    p.offset = off;
    off += scalar_size(p.type);
  }
  for (const Property& p : props) by_name[p.name] = &p;
  const Property* idx[14];
  for (int i = 0; i < 14; ++i) {
    const auto it = by_name.find(kNames[i]);
    if (it == by_name.end()) {
      throw Error(ErrorKind::kMissingProperty, std::string("missing vertex property '") + kNames[i] + "'");
    }
    idx[i] = it->second;
  }
  if (warnings) {
    std::size_t rest = 0;
    for (const Property& p : props) rest += p.name.rfind("f_rest_", 0) == 0;
    if (rest) warnings->push_back("dropped " + std::to_string(rest) + " higher-order SH coefficients");
  }

  const std::size_t stride = off;
  const std::size_t n = vertex->count;
  if (data > bytes.size() || (bytes.size() - data) / std::max<std::size_t>(stride, 1) < n) {
    const std::size_t complete = data > bytes.size() ? 0 : (bytes.size() - data) / stride;
    throw ParseError("vertex data truncated after " + std::to_string(complete) + " of " + std::to_string(n) +
                         " records",
                     bytes.size(), ParseError::Unit::kByte);
  }

  SplatModel model;
  model.gaussians.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const char* rec = bytes.data() + data + i * stride;
    double v[14];
    for (int k = 0; k < 14; ++k) v[k] = read_scalar(idx[k]->type, rec + idx[k]->offset);
    for (int k = 0; k < 14; ++k) {
      if (!std::isfinite(v[k])) {
        throw ParseError(std::string("non-finite '") + kNames[k] + "' in vertex " + std::to_string(i),
                         data + i * stride + idx[k]->offset, ParseError::Unit::kByte);
      }
    }
    Eigen::Quaterniond q(v[6], v[7], v[8], v[9]);
    if (!(q.norm() > 0.0)) {
      throw ParseError("zero rotation quaternion in vertex " + std::to_string(i), data + i * stride + idx[6]->offset,
                       ParseError::Unit::kByte);
    }
    q.normalize();
    const Mat3 r = q.toRotationMatrix();
    const Vec3 s2(std::exp(2 * v[3]), std::exp(2 * v[4]), std::exp(2 * v[5]));
    Gaussian& g = model.gaussians[i];
    g.mean = Vec3(v[0], v[1], v[2]);
    g.covariance = r * s2.asDiagonal() * r.transpose();
    g.covariance = 0.5 * (g.covariance + g.covariance.transpose()).eval();
    g.opacity = sigmoid(v[10]);
    for (int c = 0; c < 3; ++c) g.color[c] = std::clamp(0.5 + kShC0 * v[11 + c], 0.0, 1.0);
  }
  return model;
}

std::string format_splats(const SplatModel& model) {
  std::ostringstream h;
  h << "ply\nformat binary_little_endian 1.0\nelement vertex " << model.gaussians.size() << "\n";
  for (const char* name : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0",
                           "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"}) {
    h << "property float " << name << "\n";
  }
  h << "end_header\n";
  std::string out = h.str();
  const std::size_t header = out.size();
  out.resize(header + model.gaussians.size() * 17 * sizeof(float));
  char* w = out.data() + header;

  for (const Gaussian& g : model.gaussians) {
    const Mat3 c = 0.5 * (g.covariance + g.covariance.transpose());
    Eigen::SelfAdjointEigenSolver<Mat3> es(c);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::kNonPsdCovariance, "eigendecomposition failed");
    Vec3 lambda = es.eigenvalues();
    if (lambda.minCoeff() < -1e-6) {
      throw Error(ErrorKind::kNonPsdCovariance,
                  "covariance eigenvalue " + std::to_string(lambda.minCoeff()) + " below -1e-6");
    }
    Mat3 r = es.eigenvectors();
    if (r.determinant() < 0) r.col(2) = -r.col(2);
    const Eigen::Quaterniond q(r);
    const double o = std::clamp(g.opacity, 1e-7, 1.0 - 1e-7);
    const float rec[17] = {
        static_cast<float>(g.mean.x()),
        static_cast<float>(g.mean.y()),
        static_cast<float>(g.mean.z()),
        0.0f,
        0.0f,
        0.0f,
        static_cast<float>((g.color.x() - 0.5) / kShC0),
        static_cast<float>((g.color.y() - 0.5) / kShC0),
        static_cast<float>((g.color.z() - 0.5) / kShC0),
        static_cast<float>(std::log(o / (1.0 - o))),
        static_cast<float>(0.5 * std::log(std::max(lambda[0], 1e-12))),
        static_cast<float>(0.5 * std::log(std::max(lambda[1], 1e-12))),
        static_cast<float>(0.5 * std::log(std::max(lambda[2], 1e-12))),
        static_cast<float>(q.w()),
        static_cast<float>(q.x()),
        static_cast<float>(q.y()),
        static_cast<float>(q.z()),
    };
    std::memcpy(w, rec, sizeof(rec));
    w += sizeof(rec);
  }
  return out;
}

SplatModel load_splats(const std::string& path, std::vector<std::string>* warnings) {
  return parse_splats(read_file(path), warnings);
}

void save_splats(const SplatModel& model, const std::string& path) {
  write_file(path, format_splats(model));
}

}  // namespace vdfield
