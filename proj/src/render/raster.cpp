#include <algorithm>
#include <cmath>
#include <numeric>

#include "kernels/kernels.hpp"
#include "vdfield/error.hpp"
#include "vdfield/parallel.hpp"
#include "vdfield/render.hpp"

namespace vdfield {
namespace {

struct ScreenVertex {
  double u, v, z;
};

/// Calls fn(x, y, depth) for each pixel centre inside the triangle. Depth is
/// interpolated perspective-correctly.
template <typename Fn>
void raster_triangle(const ScreenVertex& a, const ScreenVertex& b, const ScreenVertex& c, int w, int h,
                     int row_lo, int row_hi, Fn&& fn) {
  const double area = (b.u - a.u) * (c.v - a.v) - (b.v - a.v) * (c.u - a.u);
  if (!(std::abs(area) > 1e-12)) return;
  const double lo_u = std::min({a.u, b.u, c.u}), hi_u = std::max({a.u, b.u, c.u});
  const double lo_v = std::min({a.v, b.v, c.v}), hi_v = std::max({a.v, b.v, c.v});
  const int x0 = std::max(0, static_cast<int>(std::ceil(lo_u - 0.5)));
  const int x1 = std::min(w - 1, static_cast<int>(std::floor(hi_u - 0.5)));
  const int y0 = std::max(row_lo, static_cast<int>(std::ceil(lo_v - 0.5)));
  const int y1 = std::min({h - 1, row_hi - 1, static_cast<int>(std::floor(hi_v - 0.5))});
  const double inv = 1.0 / area;
  for (int y = y0; y <= y1; ++y) {
    const double py = y + 0.5;
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5;
      const double w0 = ((b.u - px) * (c.v - py) - (b.v - py) * (c.u - px)) * inv;
      const double w1 = ((c.u - px) * (a.v - py) - (c.v - py) * (a.u - px)) * inv;
      const double w2 = 1.0 - w0 - w1;
      if (w0 < 0 || w1 < 0 || w2 < 0) continue;
      const double iz = w0 / a.z + w1 / b.z + w2 / c.z;
      fn(x, y, 1.0 / iz);
    }
  }
}

/// Camera-frame triangle clipped to z >= z_near, projected and fanned.
std::vector<std::array<ScreenVertex, 3>> clip_project(const Vec3 (&p)[3], const CameraIntrinsics& in,
                                                     double z_near) {
  std::vector<Vec3> poly;
  for (int i = 0; i < 3; ++i) {
    const Vec3& s = p[i];
    const Vec3& e = p[(i + 1) % 3];
    const bool sin = s.z() >= z_near, ein = e.z() >= z_near;
    if (sin) poly.push_back(s);
    if (sin != ein) {
      const double t = (z_near - s.z()) / (e.z() - s.z());
      Vec3 q = s + t * (e - s);
      q.z() = z_near;
      poly.push_back(q);
    }
  }
  std::vector<std::array<ScreenVertex, 3>> out;
  if (poly.size() < 3) return out;
  std::vector<ScreenVertex> sv;
  for (const Vec3& q : poly) sv.push_back({in.ax * q.x() / q.z() + in.cx, in.ay * q.y() / q.z() + in.cy, q.z()});
  for (std::size_t k = 1; k + 1 < sv.size(); ++k) out.push_back({sv[0], sv[k], sv[k + 1]});
  return out;
}

/// Row bands for deterministic parallel rasterisation.
template <typename Fn>
void for_row_bands(int h, Fn&& fn) {
  const int band = 16;
  const std::size_t bands = static_cast<std::size_t>((h + band - 1) / band);
  parallel_for(bands, 1, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      const int lo = static_cast<int>(b) * band;
      fn(lo, std::min(h, lo + band));
    }
  });
}

struct MeshRaster {
  Image<float> depth;
  Image<std::int32_t> face;
};

MeshRaster raster_mesh(const TriMeshModel& model, const CameraPose& pose) {
  const CameraIntrinsics& in = pose.intrinsics;
  std::vector<Vec3> cam(model.vertices.size());
  for (std::size_t i = 0; i < cam.size(); ++i) cam[i] = to_camera(model.vertices[i], pose.extrinsics);
  std::vector<std::vector<std::array<ScreenVertex, 3>>> tris(model.faces.size());
  parallel_for(model.faces.size(), 1024, [&](std::size_t f0, std::size_t f1) {
    for (std::size_t f = f0; f < f1; ++f) {
      const Face& face = model.faces[f];
      const Vec3 p[3] = {cam[face[0]], cam[face[1]], cam[face[2]]};
      tris[f] = clip_project(p, in, pose.z_near());
    }
  });
  MeshRaster r{Image<float>(in.width, in.height, std::numeric_limits<float>::infinity()),
               Image<std::int32_t>(in.width, in.height, -1)};
  Image<double> zbuf(in.width, in.height, std::numeric_limits<double>::infinity());
  for_row_bands(in.height, [&](int lo, int hi) {
    for (std::size_t f = 0; f < tris.size(); ++f) {
      for (const auto& t : tris[f]) {
        raster_triangle(t[0], t[1], t[2], in.width, in.height, lo, hi, [&](int x, int y, double z) {
          if (z < zbuf(x, y)) {
            zbuf(x, y) = z;
            r.face(x, y) = static_cast<std::int32_t>(f);
          }
        });
      }
    }
  });
  for (std::size_t i = 0; i < zbuf.pixels.size(); ++i) r.depth.pixels[i] = static_cast<float>(zbuf.pixels[i]);
  return r;
}

struct Footprint {
  double u, v, depth, c00, c01, c11;
};

std::vector<Footprint> project_splats(const SplatModel& model, const CameraPose& pose) {
  using namespace kernels;
  const std::size_t n = model.gaussians.size();
  const GaussianArrays a = GaussianArrays::from(model);
  std::vector<double> u(n), v(n), d(n), c00(n), c01(n), c11(n);
  const LayerCamera cam = make_layer_camera(pose);
  const KernelTable& table = active();
  parallel_for(n, 16 * kBlock, [&](std::size_t b, std::size_t e) {
    ConstPoints mean{a.x.data() + b, a.y.data() + b, a.z.data() + b};
    ConstSymMats cov;
    for (int k = 0; k < 6; ++k) cov.s[k] = a.cov[k].data() + b;
    Footprints out{u.data() + b, v.data() + b, d.data() + b, c00.data() + b, c01.data() + b, c11.data() + b};
    table.project_gaussians(cam, mean, cov, e - b, out);
  });
  std::vector<Footprint> fp(n);
  for (std::size_t i = 0; i < n; ++i) fp[i] = {u[i], v[i], d[i], c00[i], c01[i], c11[i]};
  return fp;
}

/// Pixels within `extent` standard deviations; fn(x, y, squared Mahalanobis distance).
template <typename Fn>
void raster_ellipse(const Footprint& f, double extent, int w, int row_lo, int row_hi, Fn&& fn) {
  const double det = f.c00 * f.c11 - f.c01 * f.c01;
  if (!(det > 0.0) || !(f.c00 > 0.0)) return;
  const double i00 = f.c11 / det, i01 = -f.c01 / det, i11 = f.c00 / det;
  const double ru = extent * std::sqrt(f.c00), rv = extent * std::sqrt(f.c11);
  const int x0 = std::max(0, static_cast<int>(std::ceil(f.u - ru - 0.5)));
  const int x1 = std::min(w - 1, static_cast<int>(std::floor(f.u + ru - 0.5)));
  const int y0 = std::max(row_lo, static_cast<int>(std::ceil(f.v - rv - 0.5)));
  const int y1 = std::min(row_hi - 1, static_cast<int>(std::floor(f.v + rv - 0.5)));
  const double e2 = extent * extent;
  for (int y = y0; y <= y1; ++y) {
    const double dy = y + 0.5 - f.v;
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - f.u;
      const double m = i00 * dx * dx + 2.0 * i01 * dx * dy + i11 * dy * dy;
      if (m <= e2) fn(x, y, m);
    }
  }
}

void require_visible(const Mask& m) {
  for (std::uint8_t p : m.pixels) {
    if (p) return;
  }
  throw Error(ErrorKind::kNothingVisible, "model covers no pixel from this view");
}

std::uint8_t to_byte(double x) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0));
}

}  // namespace

Mask close3x3(const Mask& m) {
  const int w = m.width, h = m.height;
  Mask d(w, h, 0), out(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool any = false;
      for (int dy = -1; dy <= 1 && !any; ++dy) {
        for (int dx = -1; dx <= 1 && !any; ++dx) any = m.contains(x + dx, y + dy) && m(x + dx, y + dy);
      }
      d(x, y) = any;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool all = true;
      for (int dy = -1; dy <= 1 && all; ++dy) {
        for (int dx = -1; dx <= 1 && all; ++dx) all = !d.contains(x + dx, y + dy) || d(x + dx, y + dy);
      }
      out(x, y) = all;
    }
  }
  return out;
}

Mask render_mask(const SplatModel& model, const CameraPose& pose, const MaskOptions& opt) {
  if (model.gaussians.empty()) throw Error(ErrorKind::kInvalidArgument, "empty model");
  const CameraIntrinsics& in = pose.intrinsics;
  const std::vector<Footprint> fp = project_splats(model, pose);
  Mask m(in.width, in.height, 0);
  for_row_bands(in.height, [&](int lo, int hi) {
    for (std::size_t i = 0; i < fp.size(); ++i) {
      if (model.gaussians[i].opacity < opt.opacity_threshold || !(fp[i].depth > pose.z_near())) continue;
      raster_ellipse(fp[i], opt.sigma_extent, in.width, lo, hi, [&](int x, int y, double) { m(x, y) = 1; });
    }
  });
  if (opt.close) m = close3x3(m);
  require_visible(m);
  return m;
}

Mask render_mask(const TriMeshModel& model, const CameraPose& pose, const MaskOptions& opt) {
  if (model.faces.empty()) throw Error(ErrorKind::kInvalidArgument, "empty model");
  const MeshRaster r = raster_mesh(model, pose);
  Mask m(r.face.width, r.face.height, 0);
  for (std::size_t i = 0; i < m.pixels.size(); ++i) m.pixels[i] = r.face.pixels[i] >= 0;
  if (opt.close) m = close3x3(m);
  require_visible(m);
  return m;
}

Mask render_mask(const AnyModel& model, const CameraPose& pose, const MaskOptions& opt) {
  return std::visit([&](const auto& m) { return render_mask(m, pose, opt); }, model);
}

RgbaImage render_preview(const SplatModel& model, const CameraPose& pose, const PreviewOptions& opt) {
  if (model.gaussians.empty()) throw Error(ErrorKind::kInvalidArgument, "empty model");
  const CameraIntrinsics& in = pose.intrinsics;
  const std::vector<Footprint> fp = project_splats(model, pose);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < fp.size(); ++i) {
    if (fp[i].depth > pose.z_near()) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fp[a].depth > fp[b].depth; });

  const std::size_t npx = static_cast<std::size_t>(in.width) * in.height;
  std::vector<double> rgb(3 * npx, 0.0), alpha(npx, 0.0);
  for_row_bands(in.height, [&](int lo, int hi) {
    for (std::size_t i : order) {
      const Gaussian& g = model.gaussians[i];
      raster_ellipse(fp[i], opt.sigma_extent, in.width, lo, hi, [&](int x, int y, double m) {
        const double a = std::min(0.99, g.opacity * std::exp(-0.5 * m));
        if (a < 1.0 / 255.0) return;
        const std::size_t p = static_cast<std::size_t>(y) * in.width + x;
        for (int c = 0; c < 3; ++c) rgb[3 * p + c] = a * g.color[c] + (1.0 - a) * rgb[3 * p + c];
        alpha[p] = a + (1.0 - a) * alpha[p];
      });
    }
  });
  RgbaImage img(in.width, in.height);
  for (std::size_t p = 0; p < npx; ++p) {
    const double a = alpha[p];
    if (a <= 0.0) continue;
    img.pixels[p] = {to_byte(rgb[3 * p] / a), to_byte(rgb[3 * p + 1] / a), to_byte(rgb[3 * p + 2] / a), to_byte(a)};
  }
  bool any = false;
  for (const Rgba& p : img.pixels) any = any || p.a != 0;
  if (!any) throw Error(ErrorKind::kNothingVisible, "model covers no pixel from this view");
  return img;
}

RgbaImage render_preview(const TriMeshModel& model, const CameraPose& pose, const PreviewOptions& opt) {
  if (model.faces.empty()) throw Error(ErrorKind::kInvalidArgument, "empty model");
  const MeshRaster r = raster_mesh(model, pose);
  std::vector<double> shade(model.faces.size());
  for (std::size_t f = 0; f < model.faces.size(); ++f) {
    const Face& face = model.faces[f];
    const Vec3 a = to_camera(model.vertices[face[0]], pose.extrinsics);
    const Vec3 b = to_camera(model.vertices[face[1]], pose.extrinsics);
    const Vec3 c = to_camera(model.vertices[face[2]], pose.extrinsics);
    const Vec3 n = (b - a).cross(c - a);
    const Vec3 toward = -(a + b + c);
    const double nn = n.norm() * toward.norm();
    shade[f] = 0.25 + 0.75 * (nn > 0 ? std::abs(n.dot(toward)) / nn : 0.0);
  }
  RgbaImage img(r.face.width, r.face.height);
  bool any = false;
  for (std::size_t p = 0; p < img.pixels.size(); ++p) {
    const int f = r.face.pixels[p];
    if (f < 0) continue;
    any = true;
    const double s = shade[static_cast<std::size_t>(f)];
    img.pixels[p] = {to_byte(s * opt.mesh_color.r / 255.0), to_byte(s * opt.mesh_color.g / 255.0),
                     to_byte(s * opt.mesh_color.b / 255.0), opt.mesh_color.a};
  }
  if (!any) throw Error(ErrorKind::kNothingVisible, "model covers no pixel from this view");
  return img;
}

RgbaImage render_preview(const AnyModel& model, const CameraPose& pose, const PreviewOptions& opt) {
  return std::visit([&](const auto& m) { return render_preview(m, pose, opt); }, model);
}

Mask rasterize_rig(const RigMesh2D& rig, int width, int height, bool deformed) {
  Mask m(width, height, 0);
  const std::vector<Vec2>& v = deformed ? rig.deformed_vertices() : rig.rest_vertices();
  for (const Face& f : rig.faces()) {
    const ScreenVertex a{v[f[0]].x(), v[f[0]].y(), 1.0};
    const ScreenVertex b{v[f[1]].x(), v[f[1]].y(), 1.0};
    const ScreenVertex c{v[f[2]].x(), v[f[2]].y(), 1.0};
    raster_triangle(a, b, c, width, height, 0, height, [&](int x, int y, double) { m(x, y) = 1; });
  }
  return m;
}

void draw_rig(RgbaImage& image, const RigMesh2D& rig, bool deformed, Rgba color) {
  const std::vector<Vec2>& v = deformed ? rig.deformed_vertices() : rig.rest_vertices();
  auto line = [&](const Vec2& a, const Vec2& b) {
    const int steps = std::max(1, static_cast<int>(std::ceil((b - a).cwiseAbs().maxCoeff())));
    for (int s = 0; s <= steps; ++s) {
      const Vec2 p = a + (b - a) * (static_cast<double>(s) / steps);
      const int x = static_cast<int>(std::floor(p.x())), y = static_cast<int>(std::floor(p.y()));
      if (image.contains(x, y)) image(x, y) = color;
    }
  };
  for (const auto& e : rig.boundary_edges()) line(v[e[0]], v[e[1]]);
  for (const Face& f : rig.faces()) {
    for (int k = 0; k < 3; ++k) {
      if (f[k] < f[(k + 1) % 3]) line(v[f[k]], v[f[(k + 1) % 3]]);
    }
  }
}

double mask_iou(const Mask& a, const Mask& b) {
  if (a.width != b.width || a.height != b.height) throw Error(ErrorKind::kInvalidArgument, "mask sizes differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const bool x = a.pixels[i] != 0, y = b.pixels[i] != 0;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

RgbaImage mask_to_rgba(const Mask& m) {
  RgbaImage img(m.width, m.height);
  for (std::size_t i = 0; i < m.pixels.size(); ++i) {
    const std::uint8_t v = m.pixels[i] ? 255 : 0;
    img.pixels[i] = {v, v, v, 255};
  }
  return img;
}

}  // namespace vdfield
