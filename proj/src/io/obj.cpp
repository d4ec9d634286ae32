#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

#include "vdfield/error.hpp"
#include "vdfield/io.hpp"

namespace vdfield {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::string_view next_token(std::string_view& s) {
  std::size_t i = 0;
  while (i < s.size() && is_space(s[i])) ++i;
  std::size_t j = i;
  while (j < s.size() && !is_space(s[j])) ++j;
  const std::string_view tok = s.substr(i, j - i);
  s.remove_prefix(j);
  return tok;
}

bool parse_double(std::string_view t, double& out) {
  const auto r = std::from_chars(t.data(), t.data() + t.size(), out);
  return r.ec == std::errc() && r.ptr == t.data() + t.size() && std::isfinite(out);
}

bool parse_index(std::string_view t, long long& out) {
  const std::size_t slash = t.find('/');
  if (slash != std::string_view::npos) t = t.substr(0, slash);
  const auto r = std::from_chars(t.data(), t.data() + t.size(), out);
  return r.ec == std::errc() && r.ptr == t.data() + t.size() && out != 0;
}

}  // namespace

TriMeshModel parse_mesh(std::string_view text) {
  TriMeshModel m;
  std::size_t line_no = 0;
  std::vector<std::size_t> face_lines;
  while (!text.empty()) {
    ++line_no;
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string_view key = next_token(line);
    if (key == "v") {
      double c[3];
      for (double& x : c) {
        if (!parse_double(next_token(line), x)) throw ParseError("malformed vertex", line_no, ParseError::Unit::kLine);
      }
      m.vertices.emplace_back(c[0], c[1], c[2]);
    } else if (key == "f") {
      std::vector<int> idx;
      for (std::string_view t = next_token(line); !t.empty(); t = next_token(line)) {
        long long i = 0;
        if (!parse_index(t, i)) throw ParseError("malformed face index", line_no, ParseError::Unit::kLine);
        const long long n = static_cast<long long>(m.vertices.size());
        const long long zero_based = i > 0 ? i - 1 : n + i;
        if (zero_based < 0 || zero_based >= n) {
          throw ParseError("face index out of range", line_no, ParseError::Unit::kLine);
        }
        idx.push_back(static_cast<int>(zero_based));
      }
      if (idx.size() < 3) throw ParseError("face with fewer than 3 vertices", line_no, ParseError::Unit::kLine);
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) m.faces.push_back({idx[0], idx[k], idx[k + 1]});
    }
    // Other statements (normals, texture coordinates, groups, materials) are ignored.
  }
  return m;
}

std::string format_mesh(const TriMeshModel& model) {
  std::string out;
  char buf[96];
  for (const Vec3& v : model.vertices) {
    const int n = std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
    out.append(buf, static_cast<std::size_t>(n));
  }
  for (const Face& f : model.faces) {
    const int n = std::snprintf(buf, sizeof buf, "f %d %d %d\n", f[0] + 1, f[1] + 1, f[2] + 1);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

TriMeshModel load_mesh(const std::string& path) { return parse_mesh(read_file(path)); }

void save_mesh(const TriMeshModel& model, const std::string& path) { write_file(path, format_mesh(model)); }

}  // namespace vdfield
