#include "namo/grid.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace namo
{

double normalize_angle(double a)
{
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) {
    a += 2.0 * std::numbers::pi;
  }
  return a;
}

std::optional<Cell> world_to_cell(Point2 p, const GridMeta &meta)
{
  const double fx = std::floor((p.x - meta.origin.x) / meta.resolution);
  const double fy = std::floor((p.y - meta.origin.y) / meta.resolution);
  if (!(fx >= 0.0 && fy >= 0.0 && fx < meta.width && fy < meta.height)) {
    return std::nullopt;
  }
  return Cell{static_cast<int>(fx), static_cast<int>(fy)};
}

CostGrid::CostGrid(const GridMeta &meta, std::uint8_t fill)
: meta_(meta), cells_(meta.size(), fill)
{
  if (!meta.valid()) {
    throw std::invalid_argument("CostGrid: width, height and resolution must be positive");
  }
}

std::uint8_t CostGrid::at_world(Point2 p) const
{
  const auto c = world_to_cell(p, meta_);
  return c ? at(*c) : cost::kLethal;
}

void CostGrid::fill(std::uint8_t v) { std::fill(cells_.begin(), cells_.end(), v); }

namespace
{

constexpr double kFar = 1e20;

// Squared distance transform of a sampled function along one line
// (lower envelope of parabolas). `f` and `d` have the same length.
void edt_1d(std::span<const double> f, std::span<double> d, std::vector<int> &v, std::vector<double> &z)
{
  const int n = static_cast<int>(f.size());
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s = 0.0;
    while (true) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) {
      ++k;
    }
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

DistanceField distance_transform(const CostGrid &static_grid)
{
  const GridMeta &meta = static_grid.meta();
  DistanceField out{meta, std::vector<double>(meta.size(), 0.0)};

  bool any_wall = false;
  std::vector<double> sq(meta.size());
  for (std::size_t i = 0; i < meta.size(); ++i) {
    const bool wall = static_grid[i] == cost::kLethal;
    any_wall = any_wall || wall;
    sq[i] = wall ? 0.0 : kFar;
  }
  if (!any_wall) {
    std::fill(out.dist.begin(), out.dist.end(), meta.diagonal());
    return out;
  }

  const int w = meta.width;
  const int h = meta.height;
  std::vector<int> v;
  std::vector<double> z;

  // Columns first, then rows.
  std::vector<double> f(h);
  std::vector<double> d(h);
  for (int c = 0; c < w; ++c) {
    for (int r = 0; r < h; ++r) {
      f[r] = sq[static_cast<std::size_t>(r) * w + c];
    }
    edt_1d(f, d, v, z);
    for (int r = 0; r < h; ++r) {
      sq[static_cast<std::size_t>(r) * w + c] = d[r];
    }
  }
  f.resize(w);
  d.resize(w);
  for (int r = 0; r < h; ++r) {
    std::span<double> row(sq.data() + static_cast<std::size_t>(r) * w, w);
    std::copy(row.begin(), row.end(), f.begin());
    edt_1d(f, d, v, z);
    std::copy(d.begin(), d.end(), row.begin());
  }

  for (std::size_t i = 0; i < meta.size(); ++i) {
    out.dist[i] = std::sqrt(sq[i]) * meta.resolution;
  }
  return out;
}

CostGrid compose_layers(
  const CostGrid &static_layer, const CostGrid &obstacle_layer, const CostOverrides &movable_overrides,
  const CostGrid &inflated)
{
  const GridMeta &meta = static_layer.meta();
  if (!(obstacle_layer.meta() == meta) || !(inflated.meta() == meta)) {
    throw MetaMismatch("compose_layers: layers disagree on grid geometry");
  }

  CostGrid master(meta, cost::kFree);
  auto known = [](std::uint8_t c) { return c == cost::kUnknown ? std::uint8_t{0} : c; };
  for (std::size_t i = 0; i < meta.size(); ++i) {
    std::uint8_t obstacle = obstacle_layer[i];
    if (obstacle == cost::kLethal) {
      if (auto it = movable_overrides.find(i); it != movable_overrides.end()) {
        obstacle = it->second;
      }
    }
    const std::uint8_t m = std::max({known(static_layer[i]), known(obstacle), known(inflated[i])});
    const bool unknown =
      static_layer[i] == cost::kUnknown || obstacle == cost::kUnknown || inflated[i] == cost::kUnknown;
    master[i] = (m == 0 && unknown) ? cost::kUnknown : m;
  }
  return master;
}

}  // namespace namo
