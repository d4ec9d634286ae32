#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "vdfield/types.hpp"

namespace vdfield::detail {

enum class VertexKind : std::uint8_t { kBox, kInput, kSegment, kFree };

struct CdtVertex {
  Vec2 p;
  VertexKind kind;
  int segment = -1;  // owning input segment for kSegment vertices
};

/// Triangle with CCW vertices. Edge i joins v[(i+1)%3] -> v[(i+2)%3];
/// nbr[i] is the triangle across it and seg[i] the input segment it lies on.
struct CdtTriangle {
  std::array<int, 3> v{};
  std::array<int, 3> nbr{-1, -1, -1};
  std::array<int, 3> seg{-1, -1, -1};
  bool interior = false;
};

struct RefineParams {
  double min_angle_deg = 32.5;
  double max_area = 20.0;
  std::size_t max_vertices = 0;
};

/// Incremental constrained Delaunay triangulation inside a bounding box,
/// with Ruppert/Shewchuk style refinement of the interior region.
class Cdt {
 public:
  Cdt(const Vec2& lo, const Vec2& hi);

  /// Inserts a vertex (or returns the existing one at the same position).
  int insert_input_vertex(const Vec2& p);
  void insert_segment(int a, int b);
  /// Marks triangles enclosed by an odd number of constraint loops interior.
  void classify_regions();
  void refine(const RefineParams& params);

  const std::vector<CdtVertex>& vertices() const { return verts_; }
  const std::vector<CdtTriangle>& triangles() const { return tris_; }
  std::size_t input_vertex_count() const { return input_count_; }

 private:
  struct EdgeRef {
    int t = -1;
    int i = -1;
  };
  enum class LocKind { kFace, kEdge, kVertex, kOutside };
  struct LocResult {
    LocKind kind = LocKind::kOutside;
    int t = -1;
    int i = -1;  // edge index or vertex index within t
  };

  const Vec2& P(int v) const { return verts_[v].p; }
  int add_vertex(const Vec2& p, VertexKind kind, int segment);
  int new_triangle();
  void set_nbr(int t, int old_nbr, int new_nbr);
  void set_tri(int t, int a, int b, int c, int na, int nb, int nc, int sa, int sb, int sc);

  LocResult locate(const Vec2& p, int hint);
  EdgeRef find_edge(int a, int b) const;  // directed a->b
  std::vector<int> star(int v) const;

  int split_triangle(int t, const Vec2& p, VertexKind kind, int segment);
  int split_edge(int t, int i, const Vec2& p, VertexKind kind, int segment);
  void flip(int t, int i);
  void legalize(std::vector<EdgeRef> stack);

  void insert_segment_impl(int a, int b);

  // refinement
  // kApexAngle: skinny triangle in the wedge of a small input angle. It is split
  // only when that needs no segment split, since shells around the apex would
  // otherwise cascade.
  enum class Badness { kGood, kAngle, kApexAngle, kArea };
  Badness badness(int t) const;
  // Input vertex whose small angle (< 60 deg) makes t unavoidably skinny, or -1.
  int small_angle_apex(int t) const;
  bool encroached(int a, int b, const Vec2& c) const;
  bool subsegment_encroached(int a, int b) const;
  void split_subsegment(int a, int b);
  bool try_split_triangle(int t, bool lenient);
  enum class Attempt { kInserted, kQueued, kBlocked, kDropped };
  // With apex >= 0, segments incident to it are never split for this point.
  Attempt insert_steiner(int t, const Vec2& c, int apex);
  void after_insert(int v);
  void queue_triangle(int t);
  void check_budget() const;

  std::vector<CdtVertex> verts_;
  std::vector<CdtTriangle> tris_;
  std::vector<int> vert_tri_;
  std::vector<std::array<int, 2>> segments_;  // input segment endpoints
  std::vector<std::vector<int>> input_segs_;  // input vertex -> incident input segments
  std::size_t input_count_ = 0;
  int last_ = 0;
  std::mt19937 rng_{12345};

  RefineParams params_;
  double cos2_min_ = 0.0;
  bool refining_ = false;
  std::deque<std::array<int, 3>> enc_queue_;  // (a, b, forced)
  std::deque<std::array<int, 3>> bad_queue_;
};

}  // namespace vdfield::detail
