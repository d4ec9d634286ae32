#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "vdfield/error.hpp"
#include "vdfield/io.hpp"

namespace vdfield {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::kIoError, "read failed for '" + path + "'");
  return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoError, "cannot create '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::kIoError, "write failed for '" + path + "'");
}

namespace {

std::string extension(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string e = path.substr(dot + 1);
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

}  // namespace

AnyModel load_model(const std::string& path, std::vector<std::string>* warnings) {
  const std::string e = extension(path);
  if (e == "ply") return load_splats(path, warnings);
  if (e == "obj") return load_mesh(path);
  throw Error(ErrorKind::kInvalidArgument, "unknown model format '" + path + "' (expected .ply or .obj)");
}

void save_model(const AnyModel& model, const std::string& path) {
  if (const auto* s = std::get_if<SplatModel>(&model)) {
    save_splats(*s, path);
  } else {
    save_mesh(std::get<TriMeshModel>(model), path);
  }
}

}  // namespace vdfield
