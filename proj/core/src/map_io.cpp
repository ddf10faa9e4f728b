#include "namo/map_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>

namespace namo
{

namespace
{

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream &in)
{
  std::string tok;
  int ch = 0;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) {
        break;
      }
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int parse_int(const std::string &tok, const std::string &what)
{
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) {
      throw MapIoError("bad PGM " + what + ": '" + tok + "'");
    }
    return v;
  } catch (const std::logic_error &) {
    throw MapIoError("bad PGM " + what + ": '" + tok + "'");
  }
}

std::uint8_t classify(double pixel, double maxval)
{
  const double occ = (maxval - pixel) / maxval;
  if (occ > 0.65) {
    return cost::kLethal;
  }
  if (occ < 0.196) {
    return cost::kFree;
  }
  return cost::kUnknown;
}

}  // namespace

CostGrid read_pgm(const std::filesystem::path &path, double resolution, Point2 origin)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw MapIoError("cannot open " + path.string());
  }
  const std::string magic = next_token(in);
  if (magic != "P5" && magic != "P2") {
    throw MapIoError(path.string() + ": not a P5/P2 PGM");
  }
  const int width = parse_int(next_token(in), "width");
  const int height = parse_int(next_token(in), "height");
  const int maxval = parse_int(next_token(in), "maxval");
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    throw MapIoError(path.string() + ": bad PGM header");
  }
  if (!(resolution > 0.0)) {
    throw MapIoError("resolution must be positive");
  }
  CostGrid grid(GridMeta{width, height, resolution, origin});
  const std::size_t n = grid.size();
  std::vector<int> pixels(n);
  if (magic == "P5") {
    const int bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(n * bytes);
    in.read(reinterpret_cast<char *>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
      throw MapIoError(path.string() + ": truncated PGM data");
    }
    for (std::size_t i = 0; i < n; ++i) {
      pixels[i] = bytes == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const std::string tok = next_token(in);
      if (tok.empty()) {
        throw MapIoError(path.string() + ": truncated PGM data");
      }
      pixels[i] = parse_int(tok, "pixel");
    }
  }
  for (int y = 0; y < height; ++y) {
    const int row = height - 1 - y;
    for (int x = 0; x < width; ++x) {
      grid.at({x, row}) = classify(pixels[static_cast<std::size_t>(y) * width + x], maxval);
    }
  }
  return grid;
}

void write_pgm(const CostGrid &grid, const std::filesystem::path &path)
{
  const GridMeta &m = grid.meta();
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw MapIoError("cannot write " + path.string());
  }
  out << "P5\n" << m.width << " " << m.height << "\n255\n";
  std::vector<char> row(static_cast<std::size_t>(m.width));
  for (int r = m.height - 1; r >= 0; --r) {
    for (int c = 0; c < m.width; ++c) {
      const std::uint8_t v = grid.at({c, r});
      std::uint8_t p = static_cast<std::uint8_t>(255 - v);
      if (v == cost::kLethal) {
        p = 0;
      } else if (v == cost::kUnknown) {
        p = 205;
      }
      row[c] = static_cast<char>(p);
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!out) {
    throw MapIoError("write failed: " + path.string());
  }
}

Rgb palette(std::uint8_t c)
{
  switch (c) {
    case cost::kFree: return {255, 255, 255};
    case cost::kUnknown: return {128, 128, 128};
    case cost::kLethal: return {255, 0, 255};
    case cost::kHeavy: return {255, 140, 0};
    case cost::kLight: return {0, 170, 0};
    default: break;
  }
  const double t = static_cast<double>(c) / 253.0;
  return {static_cast<std::uint8_t>(std::lround(255.0 * t)), 0, static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - t)))};
}

Rgb Image::pixel(int x, int y) const
{
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

void Image::set(int x, int y, Rgb c)
{
  if (x < 0 || y < 0 || x >= width || y >= height) {
    return;
  }
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  rgb[i] = c.r;
  rgb[i + 1] = c.g;
  rgb[i + 2] = c.b;
}

namespace
{

struct Raster
{
  const GridMeta &m;
  int scale;
  int height_px;

  int px(double x) const { return static_cast<int>(std::floor((x - m.origin.x) / m.resolution * scale)); }
  int py(double y) const { return height_px - 1 - static_cast<int>(std::floor((y - m.origin.y) / m.resolution * scale)); }
};

void draw_segment(Image &img, int x0, int y0, int x1, int y1, Rgb c)
{
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    img.set(x0, y0, c);
    if (x0 == x1 && y0 == y1) {
      break;
    }
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

Image render_costmap(const CostGrid &grid, const Overlays &overlays, int scale)
{
  const GridMeta &m = grid.meta();
  scale = std::max(1, scale);
  Image img;
  img.width = m.width * scale;
  img.height = m.height * scale;
  img.rgb.assign(static_cast<std::size_t>(img.width) * img.height * 3, 0);
  for (int r = 0; r < m.height; ++r) {
    for (int c = 0; c < m.width; ++c) {
      const Rgb col = palette(grid.at({c, r}));
      const int y0 = (m.height - 1 - r) * scale;
      for (int dy = 0; dy < scale; ++dy) {
        for (int dx = 0; dx < scale; ++dx) {
          img.set(c * scale + dx, y0 + dy, col);
        }
      }
    }
  }

  const Raster ras{m, scale, img.height};
  if (overlays.path) {
    const auto &wp = overlays.path->waypoints;
    for (std::size_t i = 0; i + 1 < wp.size(); ++i) {
      draw_segment(img, ras.px(wp[i].x), ras.py(wp[i].y), ras.px(wp[i + 1].x), ras.py(wp[i + 1].y), kPathColor);
    }
    if (wp.size() == 1) {
      img.set(ras.px(wp[0].x), ras.py(wp[0].y), kPathColor);
    }
  }
  for (const auto &cl : overlays.clusters) {
    if (cl.cells.empty()) {
      continue;
    }
    const int cx = ras.px(cl.centroid.x);
    const int cy = ras.py(cl.centroid.y);
    const int arm = std::max(1, scale);
    draw_segment(img, cx - arm, cy, cx + arm, cy, kCentroidColor);
    draw_segment(img, cx, cy - arm, cx, cy + arm, kCentroidColor);
  }
  if (overlays.robot) {
    const Pose2 &p = overlays.robot->pose;
    const double r = overlays.robot->footprint_radius;
    const int n = 64;
    for (int i = 0; i < n; ++i) {
      const double a0 = 2.0 * M_PI * i / n;
      const double a1 = 2.0 * M_PI * (i + 1) / n;
      draw_segment(
        img, ras.px(p.x + r * std::cos(a0)), ras.py(p.y + r * std::sin(a0)), ras.px(p.x + r * std::cos(a1)),
        ras.py(p.y + r * std::sin(a1)), kRobotColor);
    }
    draw_segment(
      img, ras.px(p.x), ras.py(p.y), ras.px(p.x + r * std::cos(p.theta)), ras.py(p.y + r * std::sin(p.theta)),
      kRobotColor);
  }
  return img;
}

void write_png(const Image &image, const std::filesystem::path &path)
{
  std::unique_ptr<FILE, int (*)(FILE *)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) {
    throw MapIoError("cannot write " + path.string());
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) {
    throw MapIoError("png_create_write_struct failed");
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw MapIoError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw MapIoError("libpng error while writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_compression_level(png, 6);
  png_set_IHDR(
    png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB,
    PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, image.rgb.data() + static_cast<std::size_t>(y) * image.width * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void export_costmap_image(const CostGrid &master, const Overlays &overlays, const std::filesystem::path &path, int scale)
{
  write_png(render_costmap(master, overlays, scale), path);
}

}  // namespace namo
