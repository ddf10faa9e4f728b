#include "namo/costmap_layers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>
#include <unordered_map>

namespace namo
{

std::string_view to_string(CostLevel l)
{
  switch (l) {
    case CostLevel::Light: return "light";
    case CostLevel::Heavy: return "heavy";
    case CostLevel::Lethal: return "lethal";
  }
  return "?";
}

std::uint8_t level_cost(CostLevel l)
{
  switch (l) {
    case CostLevel::Light: return cost::kLight;
    case CostLevel::Heavy: return cost::kHeavy;
    case CostLevel::Lethal: return cost::kLethal;
  }
  return cost::kLethal;
}

namespace
{

// Endpoints are attributed to the cell just beyond the reflecting surface.
constexpr double kEndpointNudge = 1e-4;

// Visits the cells pierced by the segment [0, length] of a ray, in order.
template<typename Fn>
void for_each_cell_on_ray(const GridMeta &m, Point2 o, double dx, double dy, double length, Fn fn)
{
  const double res = m.resolution;
  int c = static_cast<int>(std::floor((o.x - m.origin.x) / res));
  int r = static_cast<int>(std::floor((o.y - m.origin.y) / res));
  const int step_c = dx > 0 ? 1 : -1;
  const int step_r = dy > 0 ? 1 : -1;
  const double inf = std::numeric_limits<double>::infinity();
  auto next_t = [&](int cell, int stepv, double org, double dir, double origin) {
    if (dir == 0.0) {
      return inf;
    }
    return (origin + (stepv > 0 ? cell + 1 : cell) * res - org) / dir;
  };
  double tx = next_t(c, step_c, o.x, dx, m.origin.x);
  double ty = next_t(r, step_r, o.y, dy, m.origin.y);
  if (!m.contains({c, r})) {
    return;
  }
  fn(Cell{c, r});
  while (true) {
    double t;
    if (tx < ty) {
      t = tx;
      c += step_c;
      tx = next_t(c, step_c, o.x, dx, m.origin.x);
    } else {
      t = ty;
      r += step_r;
      ty = next_t(r, step_r, o.y, dy, m.origin.y);
    }
    if (t > length || !m.contains({c, r})) {
      return;
    }
    fn(Cell{c, r});
  }
}

}  // namespace

CostGrid obstacle_layer_update(const Scan &scan, const Pose2 &robot_pose, CostGrid grid)
{
  const GridMeta &m = grid.meta();
  std::vector<std::size_t> marks;
  marks.reserve(scan.rays.size());

  for (const auto &ray : scan.rays) {
    const double a = robot_pose.theta + ray.angle;
    const double dx = std::cos(a);
    const double dy = std::sin(a);
    const bool hit = ray.range < scan.max_range;
    std::optional<Cell> end;
    if (hit) {
      const double t = ray.range + kEndpointNudge;
      end = world_to_cell({robot_pose.x + dx * t, robot_pose.y + dy * t}, m);
    }
    for_each_cell_on_ray(m, robot_pose.position(), dx, dy, hit ? ray.range : scan.max_range, [&](Cell c) {
      if (!end || c != *end) {
        grid.at(c) = cost::kFree;
      }
    });
    if (end) {
      marks.push_back(m.index(*end));
    }
  }
  for (std::size_t i : marks) {
    grid[i] = cost::kLethal;
  }
  return grid;
}

namespace
{

struct DisjointSets
{
  std::vector<std::size_t> parent;

  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

  std::size_t find(std::size_t x)
  {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b)
  {
    a = find(a);
    b = find(b);
    if (a != b) {
      parent[std::max(a, b)] = std::min(a, b);
    }
  }
};

}  // namespace

std::vector<std::vector<std::size_t>> label_clusters(std::span<const std::size_t> cells, const GridMeta &meta)
{
  std::vector<std::size_t> sorted(cells.begin(), cells.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::unordered_map<std::size_t, std::size_t> slot;
  slot.reserve(sorted.size());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    slot.emplace(sorted[k], k);
  }

  DisjointSets sets(sorted.size());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const Cell c = meta.cell_of(sorted[k]);
    // Half of the 8-neighbourhood is enough for an undirected scan.
    static constexpr std::array<std::pair<int, int>, 4> kNeighbours{{{1, 0}, {-1, 1}, {0, 1}, {1, 1}}};
    for (auto [dc, dr] : kNeighbours) {
      const Cell n{c.col + dc, c.row + dr};
      if (!meta.contains(n)) {
        continue;
      }
      if (auto it = slot.find(meta.index(n)); it != slot.end()) {
        sets.unite(k, it->second);
      }
    }
  }

  std::vector<std::vector<std::size_t>> out;
  std::unordered_map<std::size_t, std::size_t> component_of_root;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const std::size_t root = sets.find(k);
    auto [it, inserted] = component_of_root.emplace(root, out.size());
    if (inserted) {
      out.emplace_back();
    }
    out[it->second].push_back(sorted[k]);
  }
  return out;
}

MovableLayerOutput movable_layer_update(
  const CostGrid &obstacle_layer, const CostGrid &static_map, const DistanceField &dfield, ClusterRegistry registry,
  const MovableLayerParams &params, double now, std::span<const CandidateFilter> extra_filters)
{
  const GridMeta &meta = obstacle_layer.meta();
  if (!(static_map.meta() == meta) || !(dfield.meta == meta)) {
    throw MetaMismatch("movable_layer_update: layers disagree on grid geometry");
  }

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < meta.size(); ++i) {
    if (obstacle_layer[i] != cost::kLethal || static_map[i] == cost::kLethal) {
      continue;
    }
    if (dfield[i] < params.wall_distance_threshold) {
      continue;
    }
    if (std::all_of(extra_filters.begin(), extra_filters.end(), [i](const CandidateFilter &f) { return f(i); })) {
      candidates.push_back(i);
    }
  }

  const auto components = label_clusters(candidates, meta);
  std::vector<Point2> centroids;
  centroids.reserve(components.size());
  for (const auto &comp : components) {
    Point2 sum{};
    for (std::size_t i : comp) {
      const Point2 p = meta.cell_center(meta.cell_of(i));
      sum.x += p.x;
      sum.y += p.y;
    }
    centroids.push_back({sum.x / comp.size(), sum.y / comp.size()});
  }

  // Greedy one-to-one matching, nearest first, ties to the lower id.
  std::vector<std::tuple<double, int, std::size_t>> pairs;
  for (const auto &[id, cl] : registry.clusters) {
    for (std::size_t k = 0; k < components.size(); ++k) {
      const double d = distance(cl.centroid, centroids[k]);
      if (d <= params.cluster_match_radius) {
        pairs.emplace_back(d, id, k);
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<int> match(components.size(), 0);
  std::map<int, bool> taken;
  for (const auto &[d, id, k] : pairs) {
    if (match[k] != 0 || taken[id]) {
      continue;
    }
    match[k] = id;
    taken[id] = true;
  }

  for (auto &[id, cl] : registry.clusters) {
    if (!taken[id]) {
      cl.cells.clear();
    }
  }
  for (std::size_t k = 0; k < components.size(); ++k) {
    int id = match[k];
    if (id == 0) {
      id = registry.next_id++;
      registry.clusters[id] = ObstacleCluster{id, {}, {}, CostLevel::Light, now};
    }
    ObstacleCluster &cl = registry.clusters[id];
    cl.cells = components[k];
    cl.centroid = centroids[k];
    cl.last_seen = now;
  }
  std::erase_if(registry.clusters, [&](const auto &kv) { return now - kv.second.last_seen > params.occlusion_memory; });

  MovableLayerOutput out;
  for (const auto &[id, cl] : registry.clusters) {
    for (std::size_t i : cl.cells) {
      out.overrides[i] = level_cost(cl.level);
    }
  }
  out.registry = std::move(registry);
  return out;
}

std::optional<int> apply_escalation(ClusterRegistry &registry, const EscalationEvent &event, double footprint_radius)
{
  const Point2 ahead{
    event.pose.x + footprint_radius * std::cos(event.pose.theta),
    event.pose.y + footprint_radius * std::sin(event.pose.theta)};
  std::optional<int> best;
  double best_d = 2.0 * footprint_radius;
  for (const auto &[id, cl] : registry.clusters) {
    const double d = distance(cl.centroid, ahead);
    if (d < best_d || (!best && d <= best_d)) {
      best = id;
      best_d = d;
    }
  }
  if (best) {
    ObstacleCluster &cl = registry.clusters[*best];
    cl.level = std::max(cl.level, event.level);
  }
  return best;
}

CostGrid inflate(const CostGrid &base, const MovableLayerParams &params)
{
  const GridMeta &m = base.meta();
  struct Offset
  {
    int dc, dr;
    double d;
  };
  std::vector<Offset> kernel;
  const int reach = static_cast<int>(std::ceil(params.inflation_radius / m.resolution));
  for (int dr = -reach; dr <= reach; ++dr) {
    for (int dc = -reach; dc <= reach; ++dc) {
      const double d = m.resolution * std::sqrt(static_cast<double>(dc * dc + dr * dr));
      if ((dc != 0 || dr != 0) && d <= params.inflation_radius + 1e-9) {
        kernel.push_back({dc, dr, d});
      }
    }
  }

  // Contribution tables, built lazily per source cost.
  std::array<std::vector<std::uint8_t>, 256> table;
  auto contributions = [&](std::uint8_t c0) -> const std::vector<std::uint8_t> & {
    auto &t = table[c0];
    if (t.empty()) {
      t.reserve(kernel.size());
      for (const auto &k : kernel) {
        t.push_back(static_cast<std::uint8_t>(std::lround(c0 * std::exp(-params.decay_rate * k.d))));
      }
    }
    return t;
  };

  CostGrid out = base;
  for (int r = 0; r < m.height; ++r) {
    for (int c = 0; c < m.width; ++c) {
      const std::uint8_t c0 = base.at({c, r});
      if (c0 == cost::kFree || c0 == cost::kUnknown) {
        continue;
      }
      const auto &t = contributions(c0);
      for (std::size_t k = 0; k < kernel.size(); ++k) {
        const Cell n{c + kernel[k].dc, r + kernel[k].dr};
        if (!m.contains(n)) {
          continue;
        }
        std::uint8_t &dst = out.at(n);
        if (dst != cost::kUnknown && t[k] > dst) {
          dst = t[k];
        }
      }
    }
  }
  return out;
}

InflationCache::InflationCache(const CostGrid &static_map, MovableLayerParams params) : params_(params), static_known_(static_map)
{
  for (std::size_t i = 0; i < static_known_.size(); ++i) {
    if (static_known_[i] == cost::kUnknown) {
      static_known_[i] = cost::kFree;
    }
  }
  static_inflated_ = namo::inflate(static_known_, params_);
}

CostGrid InflationCache::inflate(const CostGrid &base) const
{
  if (base.meta() != static_known_.meta()) {
    throw MetaMismatch("InflationCache: grid geometry differs from the static map");
  }
  CostGrid delta(base.meta(), cost::kFree);
  bool changed = false;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const std::uint8_t b = base[i];
    const std::uint8_t s = static_known_[i];
    if (b == cost::kUnknown) {
      if (s != cost::kFree) {
        return namo::inflate(base, params_);
      }
      delta[i] = cost::kUnknown;
    } else if (b < s) {
      return namo::inflate(base, params_);
    } else if (b != s) {
      delta[i] = b;
    }
    changed = changed || delta[i] != cost::kFree;
  }
  const CostGrid dyn = changed ? namo::inflate(delta, params_) : delta;
  CostGrid out = base;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] != cost::kUnknown) {
      out[i] = std::max(static_inflated_[i], dyn[i]);
    }
  }
  return out;
}

MovableObstaclesLayer::MovableObstaclesLayer(MovableLayerParams params, double footprint_radius, bool emit_overrides)
: params_(params), footprint_radius_(footprint_radius), emit_overrides_(emit_overrides)
{
}

const CostOverrides &MovableObstaclesLayer::update(
  const CostGrid &obstacle_layer, const CostGrid &static_map, const DistanceField &dfield, double now)
{
  applied_.clear();
  while (!queue_.empty()) {
    const EscalationEvent ev = queue_.front();
    queue_.pop_front();
    applied_.push_back({ev, apply_escalation(registry_, ev, footprint_radius_)});
  }
  auto out = movable_layer_update(obstacle_layer, static_map, dfield, std::move(registry_), params_, now);
  registry_ = std::move(out.registry);
  overrides_ = emit_overrides_ ? std::move(out.overrides) : CostOverrides{};
  return overrides_;
}

}  // namespace namo
