#include "cdt.hpp"

#include <algorithm>
#include <cmath>

#include "predicates.hpp"
#include "vdfield/error.hpp"

namespace vdfield::detail {

namespace {

int index_of(const CdtTriangle& t, int v) {
  for (int k = 0; k < 3; ++k) {
    if (t.v[k] == v) return k;
  }
  return -1;
}

double dist2(const Vec2& a, const Vec2& b) { return (a - b).squaredNorm(); }

Vec2 circumcenter(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double bx = b.x() - a.x(), by = b.y() - a.y();
  const double cx = c.x() - a.x(), cy = c.y() - a.y();
  const double d = 2.0 * (bx * cy - by * cx);
  const double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
  return {a.x() + (cy * b2 - by * c2) / d, a.y() + (bx * c2 - cx * b2) / d};
}

bool proper_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  return sign_of(orient2d(a, b, c)) * sign_of(orient2d(a, b, d)) < 0 &&
         sign_of(orient2d(c, d, a)) * sign_of(orient2d(c, d, b)) < 0;
}

}  // namespace

Cdt::Cdt(const Vec2& lo, const Vec2& hi) {
  const double ext = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1.0});
  const double m = 2.0 * ext;
  add_vertex({lo.x() - m, lo.y() - m}, VertexKind::kBox, -1);
  add_vertex({hi.x() + m, lo.y() - m}, VertexKind::kBox, -1);
  add_vertex({hi.x() + m, hi.y() + m}, VertexKind::kBox, -1);
  add_vertex({lo.x() - m, hi.y() + m}, VertexKind::kBox, -1);
  const int t0 = new_triangle();
  const int t1 = new_triangle();
  set_tri(t0, 0, 1, 2, -1, t1, -1, -1, -1, -1);
  set_tri(t1, 0, 2, 3, -1, -1, t0, -1, -1, -1);
  vert_tri_[0] = t0;
  vert_tri_[1] = t0;
  vert_tri_[2] = t0;
  vert_tri_[3] = t1;
}

int Cdt::add_vertex(const Vec2& p, VertexKind kind, int segment) {
  verts_.push_back({p, kind, segment});
  vert_tri_.push_back(-1);
  input_segs_.emplace_back();
  return static_cast<int>(verts_.size()) - 1;
}

int Cdt::new_triangle() {
  tris_.emplace_back();
  return static_cast<int>(tris_.size()) - 1;
}

void Cdt::set_nbr(int t, int old_nbr, int new_nbr) {
  if (t < 0) return;
  for (int& n : tris_[t].nbr) {
    if (n == old_nbr) {
      n = new_nbr;
      return;
    }
  }
}

void Cdt::set_tri(int t, int a, int b, int c, int na, int nb, int nc, int sa, int sb, int sc) {
  CdtTriangle& T = tris_[t];
  T.v = {a, b, c};
  T.nbr = {na, nb, nc};
  T.seg = {sa, sb, sc};
}

std::vector<int> Cdt::star(int v) const {
  std::vector<int> out;
  const int t0 = vert_tri_[v];
  if (t0 < 0) return out;
  int t = t0;
  bool closed = false;
  while (true) {
    out.push_back(t);
    const int k = index_of(tris_[t], v);
    const int n = tris_[t].nbr[(k + 1) % 3];
    if (n < 0) break;
    if (n == t0) {
      closed = true;
      break;
    }
    t = n;
  }
  if (!closed) {
    t = t0;
    while (true) {
      const int k = index_of(tris_[t], v);
      const int n = tris_[t].nbr[(k + 2) % 3];
      if (n < 0 || n == t0) break;
      out.push_back(n);
      t = n;
    }
  }
  return out;
}

Cdt::EdgeRef Cdt::find_edge(int a, int b) const {
  for (int t : star(a)) {
    const int k = index_of(tris_[t], a);
    if (tris_[t].v[(k + 1) % 3] == b) return {t, (k + 2) % 3};
  }
  return {};
}

Cdt::LocResult Cdt::locate(const Vec2& p, int hint) {
  int t = hint >= 0 ? hint : last_;
  const std::size_t max_steps = 4 * tris_.size() + 100;
  for (std::size_t step = 0; step < max_steps; ++step) {
    const CdtTriangle& T = tris_[t];
    const int start = static_cast<int>(rng_() % 3);
    bool moved = false;
    for (int k = 0; k < 3; ++k) {
      const int i = (start + k) % 3;
      if (orient2d(P(T.v[(i + 1) % 3]), P(T.v[(i + 2) % 3]), p) < 0.0) {
        if (T.nbr[i] < 0) return {};
        t = T.nbr[i];
        moved = true;
        break;
      }
    }
    if (moved) continue;
    last_ = t;
    for (int k = 0; k < 3; ++k) {
      if (P(T.v[k]) == p) return {LocKind::kVertex, t, k};
    }
    for (int i = 0; i < 3; ++i) {
      if (orient2d(P(T.v[(i + 1) % 3]), P(T.v[(i + 2) % 3]), p) == 0.0) {
        return {LocKind::kEdge, t, i};
      }
    }
    return {LocKind::kFace, t, -1};
  }
  throw Error(ErrorKind::kInvalidArgument, "point location did not terminate");
}

int Cdt::split_triangle(int t, const Vec2& p, VertexKind kind, int segment) {
  const int v = add_vertex(p, kind, segment);
  const CdtTriangle T = tris_[t];
  const int a = T.v[0], b = T.v[1], c = T.v[2];
  const int t1 = new_triangle();
  const int t2 = new_triangle();
  set_tri(t, a, b, v, t1, t2, T.nbr[2], -1, -1, T.seg[2]);
  set_tri(t1, b, c, v, t2, t, T.nbr[0], -1, -1, T.seg[0]);
  set_tri(t2, c, a, v, t, t1, T.nbr[1], -1, -1, T.seg[1]);
  tris_[t1].interior = T.interior;
  tris_[t2].interior = T.interior;
  set_nbr(T.nbr[0], t, t1);
  set_nbr(T.nbr[1], t, t2);
  vert_tri_[a] = t;
  vert_tri_[b] = t;
  vert_tri_[c] = t1;
  vert_tri_[v] = t;
  legalize({{t, 2}, {t1, 2}, {t2, 2}});
  return v;
}

int Cdt::split_edge(int t, int i, const Vec2& p, VertexKind kind, int segment) {
  const CdtTriangle T = tris_[t];
  const int s = T.seg[i];
  const int v = add_vertex(p, kind, kind == VertexKind::kSegment ? s : segment);
  const int a = T.v[i], b = T.v[(i + 1) % 3], c = T.v[(i + 2) % 3];
  const int n_b = T.nbr[(i + 1) % 3], s_b = T.seg[(i + 1) % 3];
  const int n_c = T.nbr[(i + 2) % 3], s_c = T.seg[(i + 2) % 3];
  const int u = T.nbr[i];

  const int t1 = new_triangle();
  int u1 = -1;
  if (u >= 0) u1 = new_triangle();
  set_tri(t, a, b, v, u1, t1, n_c, s, -1, s_c);
  set_tri(t1, a, v, c, u >= 0 ? u : -1, n_b, t, s, s_b, -1);
  tris_[t1].interior = T.interior;
  set_nbr(n_b, t, t1);
  vert_tri_[a] = t;
  vert_tri_[b] = t;
  vert_tri_[c] = t1;
  vert_tri_[v] = t;

  std::vector<EdgeRef> stack = {{t, 2}, {t1, 1}};
  if (u >= 0) {
    const CdtTriangle U = tris_[u];
    int j = 0;
    while (U.nbr[j] != t) ++j;
    const int d = U.v[j];
    const int m_c = U.nbr[(j + 1) % 3], sm_c = U.seg[(j + 1) % 3];
    const int m_b = U.nbr[(j + 2) % 3], sm_b = U.seg[(j + 2) % 3];
    set_tri(u, d, c, v, t1, u1, m_b, s, -1, sm_b);
    set_tri(u1, d, v, b, t, m_c, u, s, sm_c, -1);
    tris_[u1].interior = U.interior;
    set_nbr(m_c, u, u1);
    vert_tri_[d] = u;
    stack.push_back({u, 2});
    stack.push_back({u1, 1});
  }
  legalize(std::move(stack));
  return v;
}

void Cdt::flip(int t, int i) {
  const CdtTriangle T = tris_[t];
  const int p = T.v[i], b = T.v[(i + 1) % 3], c = T.v[(i + 2) % 3];
  const int t_b = T.nbr[(i + 1) % 3], s_tb = T.seg[(i + 1) % 3];
  const int t_c = T.nbr[(i + 2) % 3], s_tc = T.seg[(i + 2) % 3];
  const int u = T.nbr[i];
  const CdtTriangle U = tris_[u];
  int j = 0;
  while (U.nbr[j] != t) ++j;
  const int d = U.v[j];
  const int u_c = U.nbr[(j + 1) % 3], s_uc = U.seg[(j + 1) % 3];
  const int u_b = U.nbr[(j + 2) % 3], s_ub = U.seg[(j + 2) % 3];
  set_tri(t, p, b, d, u_c, u, t_c, s_uc, -1, s_tc);
  set_tri(u, p, d, c, u_b, t_b, t, s_ub, s_tb, -1);
  set_nbr(u_c, u, t);
  set_nbr(t_b, t, u);
  vert_tri_[p] = t;
  vert_tri_[b] = t;
  vert_tri_[d] = t;
  vert_tri_[c] = u;
}

void Cdt::legalize(std::vector<EdgeRef> stack) {
  while (!stack.empty()) {
    const EdgeRef e = stack.back();
    stack.pop_back();
    const CdtTriangle& T = tris_[e.t];
    if (T.seg[e.i] >= 0) continue;
    const int u = T.nbr[e.i];
    if (u < 0) continue;
    const CdtTriangle& U = tris_[u];
    int j = 0;
    while (U.nbr[j] != e.t) ++j;
    const int d = U.v[j];
    if (incircle(P(T.v[0]), P(T.v[1]), P(T.v[2]), P(d)) > 0.0) {
      flip(e.t, e.i);
      stack.push_back({e.t, 0});
      stack.push_back({u, 0});
    }
  }
}

int Cdt::insert_input_vertex(const Vec2& p) {
  const LocResult loc = locate(p, -1);
  int v = -1;
  switch (loc.kind) {
    case LocKind::kVertex: return tris_[loc.t].v[loc.i];
    case LocKind::kFace: v = split_triangle(loc.t, p, VertexKind::kInput, -1); break;
    case LocKind::kEdge: v = split_edge(loc.t, loc.i, p, VertexKind::kInput, -1); break;
    case LocKind::kOutside:
      throw Error(ErrorKind::kInvalidArgument, "vertex outside the triangulation domain");
  }
  ++input_count_;
  return v;
}

void Cdt::insert_segment(int a, int b) { insert_segment_impl(a, b); }

void Cdt::insert_segment_impl(int a0, int b0) {
  auto mark = [&](int a, int b) {
    const int sid = static_cast<int>(segments_.size());
    segments_.push_back({a, b});
    input_segs_[a].push_back(sid);
    input_segs_[b].push_back(sid);
    EdgeRef e = find_edge(a, b);
    if (e.t < 0) e = find_edge(b, a);
    tris_[e.t].seg[e.i] = sid;
    const int u = tris_[e.t].nbr[e.i];
    if (u >= 0) {
      for (int j = 0; j < 3; ++j) {
        if (tris_[u].nbr[j] == e.t) tris_[u].seg[j] = sid;
      }
    }
  };

  std::vector<std::array<int, 2>> work = {{a0, b0}};
  while (!work.empty()) {
    const auto [a, b] = work.back();
    work.pop_back();
    if (a == b) continue;
    if (find_edge(a, b).t >= 0 || find_edge(b, a).t >= 0) {
      mark(a, b);
      continue;
    }
    const Vec2 A = P(a), B = P(b);
    int t0 = -1, w = -1;
    for (int t : star(a)) {
      const int k = index_of(tris_[t], a);
      const int v1 = tris_[t].v[(k + 1) % 3], v2 = tris_[t].v[(k + 2) % 3];
      const double o1 = orient2d(A, P(v1), B);
      const double o2 = orient2d(A, P(v2), B);
      if (o1 == 0.0 && (P(v1) - A).dot(B - A) > 0.0) {
        w = v1;
        break;
      }
      if (o2 == 0.0 && (P(v2) - A).dot(B - A) > 0.0) {
        w = v2;
        break;
      }
      if (o1 > 0.0 && o2 < 0.0) {
        t0 = t;
        break;
      }
    }
    if (w >= 0) {
      mark(a, w);
      work.push_back({w, b});
      continue;
    }
    if (t0 < 0) throw Error(ErrorKind::kInvalidArgument, "segment insertion failed");

    // Collect the edges crossed by a->target; stop early at a collinear vertex.
    std::vector<std::array<int, 2>> crossed;
    int target = b;
    {
      const int k = index_of(tris_[t0], a);
      int x = tris_[t0].v[(k + 1) % 3];  // right of a->b
      int y = tris_[t0].v[(k + 2) % 3];  // left of a->b
      int cur = t0;
      while (true) {
        crossed.push_back({x, y});
        const CdtTriangle& C = tris_[cur];
        int ei = 0;
        while (!((C.v[(ei + 1) % 3] == x && C.v[(ei + 2) % 3] == y) ||
                 (C.v[(ei + 1) % 3] == y && C.v[(ei + 2) % 3] == x)))
          ++ei;
        if (C.seg[ei] >= 0) throw Error(ErrorKind::kInvalidArgument, "boundary segments cross");
        const int u = C.nbr[ei];
        const CdtTriangle& U = tris_[u];
        int j = 0;
        while (U.nbr[j] != cur) ++j;
        const int wv = U.v[j];
        if (wv == b) break;
        const double o = orient2d(A, B, P(wv));
        if (o == 0.0) {
          target = wv;
          work.push_back({wv, b});
          break;
        }
        if (o > 0.0) {
          y = wv;
        } else {
          x = wv;
        }
        cur = u;
      }
    }

    const Vec2 T = P(target);
    std::deque<std::array<int, 2>> queue(crossed.begin(), crossed.end());
    std::vector<std::array<int, 2>> fresh;
    std::size_t guard = 0;
    const std::size_t limit = 64 * (crossed.size() + 4) * (crossed.size() + 4);
    while (!queue.empty()) {
      if (++guard > limit) throw Error(ErrorKind::kInvalidArgument, "boundary segments cross");
      const auto [x, y] = queue.front();
      queue.pop_front();
      EdgeRef e = find_edge(x, y);
      if (e.t < 0) e = find_edge(y, x);
      const CdtTriangle& E = tris_[e.t];
      if (E.seg[e.i] >= 0) throw Error(ErrorKind::kInvalidArgument, "boundary segments cross");
      const int p = E.v[e.i];
      const int u = E.nbr[e.i];
      int j = 0;
      while (tris_[u].nbr[j] != e.t) ++j;
      const int d = tris_[u].v[j];
      const int s1 = sign_of(orient2d(P(p), P(d), P(x)));
      const int s2 = sign_of(orient2d(P(p), P(d), P(y)));
      if (s1 * s2 < 0) {
        flip(e.t, e.i);
        if (p != a && p != target && d != a && d != target && proper_cross(A, T, P(p), P(d))) {
          queue.push_back({p, d});
        } else {
          fresh.push_back({p, d});
        }
      } else {
        queue.push_back({x, y});
      }
    }
    mark(a, target);

    bool swapped = true;
    while (swapped) {
      swapped = false;
      for (auto& edge : fresh) {
        const int x = edge[0], y = edge[1];
        if ((x == a && y == target) || (x == target && y == a)) continue;
        EdgeRef e = find_edge(x, y);
        if (e.t < 0) e = find_edge(y, x);
        if (e.t < 0) continue;
        const CdtTriangle& E = tris_[e.t];
        if (E.seg[e.i] >= 0) continue;
        const int u = E.nbr[e.i];
        if (u < 0) continue;
        int j = 0;
        while (tris_[u].nbr[j] != e.t) ++j;
        const int d = tris_[u].v[j];
        if (incircle(P(E.v[0]), P(E.v[1]), P(E.v[2]), P(d)) > 0.0) {
          const int p = E.v[e.i];
          flip(e.t, e.i);
          edge = {p, d};
          swapped = true;
        }
      }
    }
  }
}

void Cdt::classify_regions() {
  std::vector<int> depth(tris_.size(), -1);
  std::deque<int> dq;
  const int start = vert_tri_[0];
  depth[start] = 0;
  dq.push_back(start);
  while (!dq.empty()) {
    const int t = dq.front();
    dq.pop_front();
    for (int i = 0; i < 3; ++i) {
      const int n = tris_[t].nbr[i];
      if (n < 0) continue;
      const bool crossing = tris_[t].seg[i] >= 0;
      const int nd = depth[t] + (crossing ? 1 : 0);
      if (depth[n] < 0 || nd < depth[n]) {
        depth[n] = nd;
        if (crossing) {
          dq.push_back(n);
        } else {
          dq.push_front(n);
        }
      }
    }
  }
  for (std::size_t t = 0; t < tris_.size(); ++t) tris_[t].interior = depth[t] % 2 == 1;
}

// ---------------------------------------------------------------------------
// Refinement

Cdt::Badness Cdt::badness(int t) const {
  const CdtTriangle& T = tris_[t];
  const Vec2& A = P(T.v[0]);
  const Vec2& B = P(T.v[1]);
  const Vec2& C = P(T.v[2]);
  const double cross = (B.x() - A.x()) * (C.y() - A.y()) - (B.y() - A.y()) * (C.x() - A.x());
  if (0.5 * std::abs(cross) > params_.max_area) return Badness::kArea;
  const double l[3] = {dist2(B, C), dist2(C, A), dist2(A, B)};
  int m = 0;
  if (l[1] < l[m]) m = 1;
  if (l[2] < l[m]) m = 2;
  const Vec2& O = P(T.v[m]);
  const Vec2 e1 = P(T.v[(m + 1) % 3]) - O;
  const Vec2 e2 = P(T.v[(m + 2) % 3]) - O;
  const double dp = e1.dot(e2);
  if (dp > 0.0 && dp * dp > cos2_min_ * e1.squaredNorm() * e2.squaredNorm()) {
    return small_angle_apex(t) >= 0 ? Badness::kApexAngle : Badness::kAngle;
  }
  return Badness::kGood;
}

int Cdt::small_angle_apex(int t) const {
  const CdtTriangle& T = tris_[t];
  const double l[3] = {dist2(P(T.v[1]), P(T.v[2])), dist2(P(T.v[2]), P(T.v[0])),
                       dist2(P(T.v[0]), P(T.v[1]))};
  int m = 0;
  if (l[1] < l[m]) m = 1;
  if (l[2] < l[m]) m = 2;
  const int p = T.v[(m + 1) % 3], q = T.v[(m + 2) % 3];
  auto segs_of = [&](int v) -> std::vector<int> {
    if (verts_[v].kind == VertexKind::kSegment) return {verts_[v].segment};
    if (verts_[v].kind == VertexKind::kInput) return input_segs_[v];
    return {};
  };
  const std::vector<int> sp = segs_of(p), sq = segs_of(q);
  for (int s1 : sp) {
    for (int s2 : sq) {
      if (s1 == s2) continue;
      const auto e1 = segments_[s1], e2 = segments_[s2];
      int apex = -1, o1 = -1, o2 = -1;
      if (e1[0] == e2[0]) apex = e1[0], o1 = e1[1], o2 = e2[1];
      else if (e1[0] == e2[1]) apex = e1[0], o1 = e1[1], o2 = e2[0];
      else if (e1[1] == e2[0]) apex = e1[1], o1 = e1[0], o2 = e2[1];
      else if (e1[1] == e2[1]) apex = e1[1], o1 = e1[0], o2 = e2[0];
      if (apex < 0 || apex == p || apex == q) continue;
      const double dp = (P(p) - P(apex)).norm(), dq = (P(q) - P(apex)).norm();
      if (std::abs(dp - dq) > 1e-3 * std::max(dp, dq)) continue;
      const Vec2 u1 = P(o1) - P(apex), u2 = P(o2) - P(apex);
      const double c = u1.dot(u2) / (u1.norm() * u2.norm());
      if (c > 0.5) return apex;  // apex angle below 60 degrees
    }
  }
  return -1;
}

bool Cdt::encroached(int a, int b, const Vec2& c) const {
  return (P(a) - c).dot(P(b) - c) < 0.0;
}

bool Cdt::subsegment_encroached(int a, int b) const {
  for (const EdgeRef& e : {find_edge(a, b), find_edge(b, a)}) {
    if (e.t < 0 || !tris_[e.t].interior) continue;
    if (encroached(a, b, P(tris_[e.t].v[e.i]))) return true;
  }
  return false;
}

void Cdt::check_budget() const {
  if (verts_.size() - 4 > params_.max_vertices) {
    throw Error(ErrorKind::kRefinementDiverged,
                "vertex budget of " + std::to_string(params_.max_vertices) + " exceeded");
  }
}

void Cdt::queue_triangle(int t) {
  if (tris_[t].interior && badness(t) != Badness::kGood) bad_queue_.push_back(tris_[t].v);
}

void Cdt::split_subsegment(int a, int b) {
  EdgeRef e = find_edge(a, b);
  if (e.t < 0) e = find_edge(b, a);
  if (e.t < 0) return;
  const int sid = tris_[e.t].seg[e.i];
  if (sid < 0) return;
  auto acute = [&](int v) {
    return verts_[v].kind == VertexKind::kInput && input_segs_[v].size() >= 2;
  };
  const bool acute_a = acute(a), acute_b = acute(b);
  Vec2 x;
  if (acute_a != acute_b) {
    const Vec2 from = acute_a ? P(a) : P(b);
    const Vec2 to = acute_a ? P(b) : P(a);
    const double len = (to - from).norm();
    double split = 1.0;
    while (len > 3.0 * split) split *= 2.0;
    while (len < 1.5 * split) split *= 0.5;
    x = from + (to - from) * (split / len);
  } else {
    x = 0.5 * (P(a) + P(b));
  }
  if (x == P(a) || x == P(b)) return;
  const int v = split_edge(e.t, e.i, x, VertexKind::kSegment, sid);
  after_insert(v);
}

void Cdt::after_insert(int v) {
  check_budget();
  const std::vector<int> around = star(v);
  for (int t : around) {
    const CdtTriangle& T = tris_[t];
    if (!T.interior) continue;
    queue_triangle(t);
    const int k = index_of(T, v);
    if (T.seg[k] >= 0) {
      const int a = T.v[(k + 1) % 3], b = T.v[(k + 2) % 3];
      if (encroached(a, b, P(v))) enc_queue_.push_back({a, b, 0});
    }
  }
  for (int t : around) {
    const CdtTriangle& T = tris_[t];
    const int k = index_of(T, v);
    for (int i : {(k + 1) % 3, (k + 2) % 3}) {
      if (T.seg[i] < 0) continue;
      const int a = T.v[(i + 1) % 3], b = T.v[(i + 2) % 3];
      if (subsegment_encroached(a, b)) enc_queue_.push_back({a, b, 0});
    }
  }
}

bool Cdt::try_split_triangle(int t, bool lenient) {
  const int apex = lenient ? small_angle_apex(t) : -1;
  const CdtTriangle& T = tris_[t];
  const Vec2 A = P(T.v[0]), B = P(T.v[1]), C = P(T.v[2]);
  const Vec2 cc = circumcenter(A, B, C);
  if (!std::isfinite(cc.x()) || !std::isfinite(cc.y())) return true;

  // Off-centre: pull the point toward the shortest edge.
  const double l[3] = {dist2(B, C), dist2(C, A), dist2(A, B)};
  int m = 0;
  if (l[1] < l[m]) m = 1;
  if (l[2] < l[m]) m = 2;
  const Vec2 mid = 0.5 * (P(T.v[(m + 1) % 3]) + P(T.v[(m + 2) % 3]));
  const double theta = deg_to_rad(params_.min_angle_deg);
  const double shortest = std::sqrt(l[m]);
  const double off = 0.475 * std::sqrt((1.0 + std::cos(theta)) / (1.0 - std::cos(theta))) * shortest;
  const double dc = (cc - mid).norm();
  const Vec2 dir = (cc - mid) / dc;
  double h = std::min(dc, off);

  if (!lenient) return insert_steiner(t, mid + h * dir, -1) != Attempt::kQueued;
  // Near a small input angle, back off toward the short edge rather than
  // splitting a segment; stop once the new triangle on that edge would itself
  // be too flat.
  const double h_min = 0.5 * shortest * std::tan(theta) * 1.05;
  for (; h >= h_min; h *= 0.75) {
    const Attempt r = insert_steiner(t, mid + h * dir, apex);
    if (r == Attempt::kQueued) return false;
    if (r != Attempt::kBlocked) return true;
  }
  return true;
}

Cdt::Attempt Cdt::insert_steiner(int t, const Vec2& c, int apex) {
  const CdtTriangle& T = tris_[t];
  const Vec2 s = (P(T.v[0]) + P(T.v[1]) + P(T.v[2])) / 3.0;
  int cur = t;
  const std::size_t max_steps = tris_.size() + 16;
  for (std::size_t step = 0;; ++step) {
    if (step > max_steps) return Attempt::kDropped;
    const CdtTriangle& U = tris_[cur];
    double o[3];
    bool inside = true;
    for (int i = 0; i < 3; ++i) {
      o[i] = orient2d(P(U.v[(i + 1) % 3]), P(U.v[(i + 2) % 3]), c);
      if (o[i] < 0.0) inside = false;
    }
    if (inside) break;
    int exit = -1;
    for (int i = 0; i < 3 && exit < 0; ++i) {
      if (o[i] >= 0.0) continue;
      const int s1 = sign_of(orient2d(s, c, P(U.v[(i + 1) % 3])));
      const int s2 = sign_of(orient2d(s, c, P(U.v[(i + 2) % 3])));
      if (s1 * s2 <= 0) exit = i;
    }
    if (exit < 0) {
      for (int i = 0; i < 3; ++i) {
        if (o[i] < 0.0) {
          exit = i;
          break;
        }
      }
    }
    if (U.seg[exit] >= 0) {
      const int a = U.v[(exit + 1) % 3], b = U.v[(exit + 2) % 3];
      if (a == apex || b == apex) return Attempt::kBlocked;
      enc_queue_.push_back({a, b, 1});
      return Attempt::kQueued;
    }
    cur = U.nbr[exit];
    if (cur < 0) return Attempt::kDropped;
  }

  const CdtTriangle& L = tris_[cur];
  int on_edge = -1;
  for (int k = 0; k < 3; ++k) {
    if (P(L.v[k]) == c) return Attempt::kDropped;
  }
  for (int i = 0; i < 3; ++i) {
    if (orient2d(P(L.v[(i + 1) % 3]), P(L.v[(i + 2) % 3]), c) == 0.0) {
      if (on_edge >= 0) return Attempt::kDropped;
      on_edge = i;
    }
  }
  if (on_edge >= 0 && L.seg[on_edge] >= 0) {
    const int a = L.v[(on_edge + 1) % 3], b = L.v[(on_edge + 2) % 3];
    if (a == apex || b == apex) return Attempt::kBlocked;
    enc_queue_.push_back({a, b, 1});
    return Attempt::kQueued;
  }

  // Segments on the boundary of the insertion cavity that c would encroach.
  std::vector<int> cavity = {cur};
  std::vector<char> seen(tris_.size(), 0);
  seen[cur] = 1;
  if (on_edge >= 0 && L.nbr[on_edge] >= 0) {
    cavity.push_back(L.nbr[on_edge]);
    seen[L.nbr[on_edge]] = 1;
  }
  bool blocked = false;
  for (std::size_t k = 0; k < cavity.size(); ++k) {
    const CdtTriangle& K = tris_[cavity[k]];
    for (int i = 0; i < 3; ++i) {
      const int a = K.v[(i + 1) % 3], b = K.v[(i + 2) % 3];
      if (K.seg[i] >= 0) {
        if (encroached(a, b, c)) {
          if (a == apex || b == apex) return Attempt::kBlocked;
          enc_queue_.push_back({a, b, 1});
          blocked = true;
        }
        continue;
      }
      const int n = K.nbr[i];
      if (n < 0 || seen[n]) continue;
      const CdtTriangle& N = tris_[n];
      if (incircle(P(N.v[0]), P(N.v[1]), P(N.v[2]), c) > 0.0) {
        seen[n] = 1;
        cavity.push_back(n);
      }
    }
  }
  if (blocked) return Attempt::kQueued;

  const int v = on_edge >= 0 ? split_edge(cur, on_edge, c, VertexKind::kFree, -1)
                             : split_triangle(cur, c, VertexKind::kFree, -1);
  after_insert(v);
  return Attempt::kInserted;
}

void Cdt::refine(const RefineParams& params) {
  params_ = params;
  const double cm = std::cos(deg_to_rad(params.min_angle_deg));
  cos2_min_ = cm * cm;
  refining_ = true;

  for (std::size_t t = 0; t < tris_.size(); ++t) {
    const CdtTriangle& T = tris_[t];
    if (!T.interior) continue;
    for (int i = 0; i < 3; ++i) {
      if (T.seg[i] < 0) continue;
      if (encroached(T.v[(i + 1) % 3], T.v[(i + 2) % 3], P(T.v[i]))) {
        enc_queue_.push_back({T.v[(i + 1) % 3], T.v[(i + 2) % 3], 0});
      }
    }
  }
  for (std::size_t t = 0; t < tris_.size(); ++t) queue_triangle(static_cast<int>(t));

  while (true) {
    if (!enc_queue_.empty()) {
      const auto [a, b, forced] = enc_queue_.front();
      enc_queue_.pop_front();
      if (forced || subsegment_encroached(a, b)) split_subsegment(a, b);
      continue;
    }
    if (bad_queue_.empty()) break;
    const auto tri = bad_queue_.front();
    bad_queue_.pop_front();
    const EdgeRef e = find_edge(tri[0], tri[1]);
    if (e.t < 0 || tris_[e.t].v[e.i] != tri[2]) continue;
    if (!tris_[e.t].interior) continue;
    const Badness b = badness(e.t);
    if (b == Badness::kGood) continue;
    if (!try_split_triangle(e.t, b == Badness::kApexAngle)) bad_queue_.push_back(tri);
    check_budget();
  }
  refining_ = false;
}

}  // namespace vdfield::detail
