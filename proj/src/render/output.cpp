#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "vdfield/error.hpp"
#include "vdfield/io.hpp"
#include "vdfield/render.hpp"

namespace vdfield {
namespace {

void png_write_to_string(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), len);
}

void png_flush_noop(png_structp) {}

struct ReadCursor {
  const std::string* bytes;
  std::size_t pos;
};

void png_read_from_string(png_structp png, png_bytep data, png_size_t len) {
  auto* c = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (c->pos + len > c->bytes->size()) png_error(png, "truncated PNG");
  std::memcpy(data, c->bytes->data() + c->pos, len);
  c->pos += len;
}

}  // namespace

std::string encode_png(const RgbaImage& image) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorKind::kIoError, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::string out;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::kIoError, "PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_write_to_string, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    auto* row = reinterpret_cast<png_bytep>(const_cast<Rgba*>(&image(0, y)));
    png_write_row(png, row);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

RgbaImage decode_png(const std::string& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
    throw ParseError("not a PNG file", 0, ParseError::Unit::kByte);
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorKind::kIoError, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  ReadCursor cur{&bytes, 0};
  RgbaImage img;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("corrupt PNG", cur.pos, ParseError::Unit::kByte);
  }
  png_set_read_fn(png, &cur, png_read_from_string);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_gray_to_rgb(png);
  png_set_add_alpha(png, 0xff, PNG_FILLER_AFTER);
  png_read_update_info(png, info);
  img = RgbaImage(static_cast<int>(png_get_image_width(png, info)), static_cast<int>(png_get_image_height(png, info)));
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) rows[y] = reinterpret_cast<png_bytep>(&img(0, y));
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const std::string& path, const RgbaImage& image) { write_file(path, encode_png(image)); }

std::string encode_pgm(const Mask& m) {
  std::string out = "P5\n" + std::to_string(m.width) + " " + std::to_string(m.height) + "\n255\n";
  for (std::uint8_t p : m.pixels) out.push_back(static_cast<char>(p ? 255 : 0));
  return out;
}

Mask decode_pgm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw ParseError("unsupported PGM header", 0, ParseError::Unit::kByte);
  }
  in.get();
  const std::size_t start = static_cast<std::size_t>(in.tellg());
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() < start + n) throw ParseError("truncated PGM", bytes.size(), ParseError::Unit::kByte);
  Mask m(w, h, 0);
  for (std::size_t i = 0; i < n; ++i) m.pixels[i] = static_cast<unsigned char>(bytes[start + i]) * 2 > maxval;
  return m;
}

Orbit default_orbit(const AnyModel& model, const CameraIntrinsics& intrinsics) {
  const Bounds3 b = bounds(model);
  Orbit o;
  o.target = b.center();
  const double r = b.radius() > 0 ? b.radius() : 1.0;
  const double half = std::min(intrinsics.width / intrinsics.ax, intrinsics.height / intrinsics.ay) * 0.5;
  const double fov_half = std::atan(half);
  o.radius = 1.15 * r / std::sin(fov_half);
  return o;
}

void render_turntable(const AnyModel& model, const DeformationDocument& doc, const TurntableOptions& opt,
                      const std::function<void(const TurntableFrame&)>& sink) {
  if (opt.frames < 2) throw Error(ErrorKind::kInvalidArgument, "turntable needs at least 2 frames");
  for (int i = 0; i < opt.frames; ++i) {
    TurntableFrame f;
    f.index = i;
    f.view = Viewpoint(opt.start_azimuth + kTwoPi * i / opt.frames, opt.polar);
    const CameraPose pose = pose_from_viewpoint(f.view, opt.orbit.radius, opt.orbit.target, opt.intrinsics);
    f.deformed = deform_model(model, doc, f.view, &f.report);
    f.image = render_preview(f.deformed, pose);
    sink(f);
  }
}

std::vector<std::string> write_turntable(const AnyModel& model, const DeformationDocument& doc,
                                         const TurntableOptions& opt, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIoError, "cannot create '" + dir + "': " + ec.message());
  std::vector<std::string> paths;
  render_turntable(model, doc, opt, [&](const TurntableFrame& f) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.png", f.index);
    const std::string path = (std::filesystem::path(dir) / name).string();
    write_png(path, f.image);
    paths.push_back(path);
  });
  return paths;
}

}  // namespace vdfield
