#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "namo/costmap_layers.hpp"
#include "namo/grid.hpp"
#include "namo/planning.hpp"
#include "namo/world.hpp"

namespace namo
{

class MapIoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Reads a binary (P5) or ASCII (P2) PGM. The first image row is the top of
/// the map. Pixels are thresholded as a trinary occupancy map:
/// occupancy = (255 - p) / 255, > 0.65 is LETHAL, < 0.196 is FREE, anything
/// else UNKNOWN.
CostGrid read_pgm(const std::filesystem::path &path, double resolution, Point2 origin = {});

/// Writes a P5 PGM: FREE 255, LETHAL 0, UNKNOWN 205, other costs 255 - c.
void write_pgm(const CostGrid &grid, const std::filesystem::path &path);

struct Rgb
{
  std::uint8_t r{0}, g{0}, b{0};

  friend bool operator==(const Rgb &, const Rgb &) = default;
};

/// Costmap palette:
///   FREE (0)          white   (255,255,255)
///   UNKNOWN (255)     gray    (128,128,128)
///   LETHAL (254)      magenta (255,0,255)
///   HEAVY (180)       orange  (255,140,0)
///   LIGHT (80)        green   (0,170,0)
///   any other 1..253  blue-to-red ramp, r = 255*t, b = 255*(1-t), t = c/253
Rgb palette(std::uint8_t cost);

// Overlay colors.
inline constexpr Rgb kPathColor{0, 0, 0};
inline constexpr Rgb kRobotColor{230, 200, 0};
inline constexpr Rgb kCentroidColor{0, 90, 255};

struct Image
{
  int width{0};
  int height{0};
  std::vector<std::uint8_t> rgb;  ///< row-major, top row first

  Rgb pixel(int x, int y) const;
  void set(int x, int y, Rgb c);
};

struct Overlays
{
  std::optional<Path> path;
  std::optional<RobotState> robot;
  std::vector<ObstacleCluster> clusters;
};

/// Rasterizes `grid` with `scale` x `scale` pixels per cell, grid row 0 at
/// the bottom of the image. Overlays are drawn on top: path waypoints, the
/// robot footprint circle with a heading tick, and a cross at each visible
/// cluster centroid.
Image render_costmap(const CostGrid &grid, const Overlays &overlays = {}, int scale = 1);

/// 8-bit RGB PNG without timestamps or text chunks, so identical images
/// give identical bytes.
void write_png(const Image &image, const std::filesystem::path &path);

void export_costmap_image(
  const CostGrid &master, const Overlays &overlays, const std::filesystem::path &path, int scale = 1);

}  // namespace namo
