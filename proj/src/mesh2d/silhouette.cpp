#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "predicates.hpp"
#include "vdfield/error.hpp"
#include "vdfield/mesh2d.hpp"

namespace vdfield {

double signed_area(const Polygon2D& poly) {
  double s = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    s += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * s;
}

namespace {

using detail::orient2d;
using detail::sign_of;

// Contour points sit on midpoints between pixel centres; doubling the
// coordinates makes them integral.
std::int64_t key(int x2, int y2) {
  return (static_cast<std::int64_t>(x2) << 32) ^ static_cast<std::uint32_t>(y2);
}

struct Seg {
  std::array<int, 2> from;
  std::array<int, 2> to;
};

std::vector<Polygon2D> trace_contours(const Mask& mask) {
  const int W = mask.width, H = mask.height;
  auto fg = [&](int x, int y) { return mask.contains(x, y) && mask(x, y) != 0; };

  std::vector<Seg> segs;
  // Cell (i, j) has corners at pixel centres TL=(i-1,j-1) TR=(i,j-1) BR=(i,j) BL=(i-1,j).
  for (int j = 0; j <= H; ++j) {
    for (int i = 0; i <= W; ++i) {
      const bool c[4] = {fg(i - 1, j - 1), fg(i, j - 1), fg(i, j), fg(i - 1, j)};
      const int code = c[0] | (c[1] << 1) | (c[2] << 2) | (c[3] << 3);
      if (code == 0 || code == 15) continue;
      // Doubled coordinates of the corner centres and edge midpoints.
      const std::array<int, 2> corner[4] = {
          {2 * i - 1, 2 * j - 1}, {2 * i + 1, 2 * j - 1}, {2 * i + 1, 2 * j + 1}, {2 * i - 1, 2 * j + 1}};
      const std::array<int, 2> mid[4] = {
          {2 * i, 2 * j - 1}, {2 * i + 1, 2 * j}, {2 * i, 2 * j + 1}, {2 * i - 1, 2 * j}};
      std::vector<std::array<int, 2>> pairs;  // edge index pairs: T=0 R=1 B=2 L=3
      if (code == 5) {
        pairs = {{3, 0}, {1, 2}};
      } else if (code == 10) {
        pairs = {{0, 1}, {2, 3}};
      } else {
        std::vector<int> crossing;
        for (int e = 0; e < 4; ++e) {
          if (c[e] != c[(e + 1) % 4]) crossing.push_back(e);
        }
        pairs = {{crossing[0], crossing[1]}};
      }
      for (auto [ea, eb] : pairs) {
        std::array<int, 2> f = mid[ea], t = mid[eb];
        const double mx = 0.5 * (f[0] + t[0]), my = 0.5 * (f[1] + t[1]);
        int best = 0;
        double bd = 1e300;
        for (int k = 0; k < 4; ++k) {
          const double d = std::hypot(corner[k][0] - mx, corner[k][1] - my);
          if (d < bd - 1e-12) {
            bd = d;
            best = k;
          }
        }
        const double cr = static_cast<double>(t[0] - f[0]) * (corner[best][1] - f[1]) -
                          static_cast<double>(t[1] - f[1]) * (corner[best][0] - f[0]);
        if ((cr > 0.0) != c[best]) std::swap(f, t);
        segs.push_back({f, t});
      }
    }
  }

  std::unordered_map<std::int64_t, std::size_t> out_of;
  out_of.reserve(segs.size() * 2);
  for (std::size_t s = 0; s < segs.size(); ++s) out_of[key(segs[s].from[0], segs[s].from[1])] = s;

  std::vector<char> used(segs.size(), 0);
  std::vector<Polygon2D> loops;
  for (std::size_t s0 = 0; s0 < segs.size(); ++s0) {
    if (used[s0]) continue;
    Polygon2D loop;
    std::size_t s = s0;
    while (!used[s]) {
      used[s] = 1;
      loop.emplace_back(0.5 * segs[s].from[0], 0.5 * segs[s].from[1]);
      const auto it = out_of.find(key(segs[s].to[0], segs[s].to[1]));
      if (it == out_of.end()) break;
      s = it->second;
    }
    loops.push_back(std::move(loop));
  }
  return loops;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double l2 = ab.squaredNorm();
  if (l2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / l2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

// Douglas-Peucker on the open chain pts[first..last] (indices modulo n).
void simplify_chain(const Polygon2D& pts, std::size_t first, std::size_t last, double tol,
                    std::vector<char>& keep) {
  const std::size_t n = pts.size();
  std::vector<std::array<std::size_t, 2>> stack = {{first, last}};
  while (!stack.empty()) {
    const auto [a, b] = stack.back();
    stack.pop_back();
    if (b <= a + 1) continue;
    double best = -1.0;
    std::size_t bi = a;
    for (std::size_t k = a + 1; k < b; ++k) {
      const double d = point_segment_distance(pts[k % n], pts[a % n], pts[b % n]);
      if (d > best) {
        best = d;
        bi = k;
      }
    }
    if (best > tol) {
      keep[bi % n] = 1;
      stack.push_back({a, bi});
      stack.push_back({bi, b});
    }
  }
}

Polygon2D simplify_loop(const Polygon2D& loop, double tol) {
  const std::size_t n = loop.size();
  if (n < 3) return loop;
  std::size_t far = 0;
  double best = -1.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double d = (loop[k] - loop[0]).squaredNorm();
    if (d > best) {
      best = d;
      far = k;
    }
  }
  std::vector<char> keep(n, 0);
  keep[0] = 1;
  keep[far] = 1;
  simplify_chain(loop, 0, far, tol, keep);
  simplify_chain(loop, far, n, tol, keep);
  Polygon2D out;
  for (std::size_t k = 0; k < n; ++k) {
    if (keep[k]) out.push_back(loop[k]);
  }
  return out;
}

bool segments_touch(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const int o1 = sign_of(orient2d(a, b, c)), o2 = sign_of(orient2d(a, b, d));
  const int o3 = sign_of(orient2d(c, d, a)), o4 = sign_of(orient2d(c, d, b));
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  auto on = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    return std::min(p.x(), q.x()) <= r.x() && r.x() <= std::max(p.x(), q.x()) &&
           std::min(p.y(), q.y()) <= r.y() && r.y() <= std::max(p.y(), q.y());
  };
  if (o1 == 0 && on(a, b, c)) return true;
  if (o2 == 0 && on(a, b, d)) return true;
  if (o3 == 0 && on(c, d, a)) return true;
  if (o4 == 0 && on(c, d, b)) return true;
  return false;
}

bool loops_intersect(const std::vector<Polygon2D>& loops) {
  struct Edge {
    Vec2 a, b;
    std::size_t loop, idx, n;
    double x0, x1, y0, y1;
  };
  std::vector<Edge> edges;
  for (std::size_t l = 0; l < loops.size(); ++l) {
    const std::size_t n = loops[l].size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a = loops[l][i];
      const Vec2& b = loops[l][(i + 1) % n];
      edges.push_back({a, b, l, i, n, std::min(a.x(), b.x()), std::max(a.x(), b.x()),
                       std::min(a.y(), b.y()), std::max(a.y(), b.y())});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& p, const Edge& q) { return p.x0 < q.x0; });
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    for (std::size_t j = i + 1; j < edges.size() && edges[j].x0 <= e.x1; ++j) {
      const Edge& f = edges[j];
      if (f.y0 > e.y1 || f.y1 < e.y0) continue;
      if (e.loop == f.loop) {
        const std::size_t n = e.n;
        const bool adjacent = (e.idx + 1) % n == f.idx || (f.idx + 1) % n == e.idx;
        if (adjacent) {
          // Only a fold back onto the previous edge counts.
          const Vec2& shared = (e.idx + 1) % n == f.idx ? e.b : e.a;
          const Vec2 u = (e.a == shared ? e.b : e.a) - shared;
          const Vec2 v = (f.a == shared ? f.b : f.a) - shared;
          if (orient2d(shared, shared + u, shared + v) == 0.0 && u.dot(v) > 0.0) return true;
          if (n == 2) return true;
          continue;
        }
      }
      if (segments_touch(e.a, e.b, f.a, f.b)) return true;
    }
  }
  return false;
}

}  // namespace

std::vector<Polygon2D> extract_silhouette(const Mask& mask, double simplify_tolerance) {
  if (!(simplify_tolerance >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "simplify_tolerance must be non-negative");
  }
  if (std::none_of(mask.pixels.begin(), mask.pixels.end(), [](std::uint8_t v) { return v != 0; })) {
    throw Error(ErrorKind::kEmptyMask, "mask has no foreground pixels");
  }
  const std::vector<Polygon2D> raw = trace_contours(mask);
  double tol = simplify_tolerance;
  while (true) {
    std::vector<Polygon2D> out;
    for (const Polygon2D& loop : raw) {
      Polygon2D s = tol > 0.0 ? simplify_loop(loop, tol) : loop;
      if (s.size() >= 3 && std::abs(signed_area(s)) > 1e-9) out.push_back(std::move(s));
    }
    if (tol < 1e-6 || !loops_intersect(out)) {
      if (out.empty()) throw Error(ErrorKind::kEmptyMask, "silhouette has no loops after simplification");
      return out;
    }
    tol *= 0.5;
  }
}

}  // namespace vdfield
