#pragma once

#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace namo
{

/// Cost byte scale shared by every layer. Values 0..254 are traversal costs,
/// 255 means no information.
namespace cost
{
inline constexpr std::uint8_t kFree = 0;
inline constexpr std::uint8_t kLight = 80;
inline constexpr std::uint8_t kHeavy = 180;
inline constexpr std::uint8_t kLethal = 254;
inline constexpr std::uint8_t kUnknown = 255;
}  // namespace cost

struct Point2
{
  double x{0.0};
  double y{0.0};

  friend bool operator==(const Point2 &, const Point2 &) = default;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Pose2
{
  double x{0.0};
  double y{0.0};
  double theta{0.0};

  Point2 position() const { return {x, y}; }
  friend bool operator==(const Pose2 &, const Pose2 &) = default;
};

/// Wraps an angle into (-pi, pi].
double normalize_angle(double a);

struct Cell
{
  int col{0};
  int row{0};

  friend auto operator<=>(const Cell &, const Cell &) = default;
};

/// Grid geometry. Cell (0,0) has its lower-left corner at `origin`; storage
/// is row-major with `index = row * width + col`.
struct GridMeta
{
  int width{0};
  int height{0};
  double resolution{0.0};
  Point2 origin{};

  bool valid() const { return width > 0 && height > 0 && resolution > 0.0; }
  std::size_t size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  bool contains(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < width && c.row < height; }
  std::size_t index(Cell c) const
  {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c.col);
  }
  Cell cell_of(std::size_t idx) const
  {
    return {static_cast<int>(idx % static_cast<std::size_t>(width)), static_cast<int>(idx / static_cast<std::size_t>(width))};
  }
  Point2 cell_center(Cell c) const
  {
    return {origin.x + (c.col + 0.5) * resolution, origin.y + (c.row + 0.5) * resolution};
  }
  /// Length of the grid rectangle's diagonal in meters.
  double diagonal() const { return std::hypot(width * resolution, height * resolution); }

  friend bool operator==(const GridMeta &, const GridMeta &) = default;
};

/// floor((p - origin) / resolution), or nullopt when p lies outside the grid.
std::optional<Cell> world_to_cell(Point2 p, const GridMeta &meta);

class MetaMismatch : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

class CostGrid
{
public:
  CostGrid() = default;
  explicit CostGrid(const GridMeta &meta, std::uint8_t fill = cost::kFree);

  const GridMeta &meta() const { return meta_; }
  std::size_t size() const { return cells_.size(); }

  std::uint8_t operator[](std::size_t idx) const { return cells_[idx]; }
  std::uint8_t &operator[](std::size_t idx) { return cells_[idx]; }
  std::uint8_t at(Cell c) const { return cells_[meta_.index(c)]; }
  std::uint8_t &at(Cell c) { return cells_[meta_.index(c)]; }

  /// Cost at a world point; points outside the grid read as LETHAL.
  std::uint8_t at_world(Point2 p) const;

  std::span<const std::uint8_t> data() const { return cells_; }
  std::span<std::uint8_t> data() { return cells_; }

  void fill(std::uint8_t v);

  friend bool operator==(const CostGrid &, const CostGrid &) = default;

private:
  GridMeta meta_{};
  std::vector<std::uint8_t> cells_;
};

/// Euclidean distance (meters) from each cell center to the nearest
/// LETHAL cell center of the source grid.
struct DistanceField
{
  GridMeta meta{};
  std::vector<double> dist;

  double at(Cell c) const { return dist[meta.index(c)]; }
  double operator[](std::size_t idx) const { return dist[idx]; }
};

/// Exact Euclidean distance transform (separable lower-envelope algorithm).
/// Grids without any LETHAL cell get `meta.diagonal()` everywhere.
DistanceField distance_transform(const CostGrid &static_grid);

/// Sparse replacement costs keyed by cell index.
using CostOverrides = std::map<std::size_t, std::uint8_t>;

/// Layered composition: each master cell is the max over the layers, with
/// LETHAL obstacle marks listed in `movable_overrides` first replaced by the
/// override cost. UNKNOWN survives only where no layer reports a cost > 0.
/// Throws MetaMismatch if the grids disagree on geometry.
CostGrid compose_layers(
  const CostGrid &static_layer, const CostGrid &obstacle_layer, const CostOverrides &movable_overrides,
  const CostGrid &inflated);

}  // namespace namo
