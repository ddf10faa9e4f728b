#include <gtest/gtest.h>

#include <random>
#include <set>

#include "namo/costmap_layers.hpp"
#include "oracles.hpp"

using namespace namo;

namespace
{

CostGrid hallway()
{
  CostGrid g(GridMeta{60, 40, 0.1, {}});
  const GridMeta &m = g.meta();
  for (int c = 0; c < m.width; ++c) {
    g.at({c, 0}) = g.at({c, m.height - 1}) = cost::kLethal;
  }
  for (int r = 0; r < m.height; ++r) {
    g.at({0, r}) = g.at({m.width - 1, r}) = cost::kLethal;
  }
  return g;
}

Scan scan_of(const WorldState &w)
{
  ScanParams p;
  p.range_noise_sigma = 0.0;
  p.n_rays = 720;
  return simulate_lidar(w, p, 1);
}

std::vector<std::size_t> lethal_cells(const CostGrid &g)
{
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == cost::kLethal) {
      out.push_back(i);
    }
  }
  return out;
}

// Marks a filled block of cells as obstacle returns.
CostGrid block(const GridMeta &m, int c0, int r0, int c1, int r1)
{
  CostGrid g(m);
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      g.at({c, r}) = cost::kLethal;
    }
  }
  return g;
}

}  // namespace

TEST(ObstacleLayer, HitMarksEndpointAndClearsBefore)
{
  const GridMeta m{50, 10, 0.1, {}};
  CostGrid grid(m, cost::kUnknown);
  Scan s;
  s.max_range = 4.0;
  s.rays.push_back({0.0, 2.0});
  const Pose2 pose{0.55, 0.55, 0.0};
  grid = obstacle_layer_update(s, pose, grid);
  // Endpoint at x = 2.55 falls in column 25.
  EXPECT_EQ(grid.at({25, 5}), cost::kLethal);
  for (int c = 5; c < 25; ++c) {
    EXPECT_EQ(grid.at({c, 5}), cost::kFree) << c;
  }
  EXPECT_EQ(grid.at({26, 5}), cost::kUnknown);
}

TEST(ObstacleLayer, NoHitRayClearsWithoutMarking)
{
  const GridMeta m{50, 10, 0.1, {}};
  CostGrid grid(m, cost::kLethal);
  Scan s;
  s.max_range = 1.0;
  s.rays.push_back({0.0, 1.0});
  grid = obstacle_layer_update(s, {0.55, 0.55, 0.0}, grid);
  for (int c = 5; c <= 15; ++c) {
    EXPECT_EQ(grid.at({c, 5}), cost::kFree) << c;
  }
  EXPECT_EQ(grid.at({17, 5}), cost::kLethal);  // beyond the ray, untouched
}

TEST(ObstacleLayer, RemovedBodyIsClearedNextUpdate)
{
  WorldState w;
  w.static_map = hallway();
  w.robot.pose = {1.0, 2.0, 0.0};
  w.bodies.push_back({1, Rect{{3.0, 2.0}, {0.2, 0.3}}, Movability::Light});
  CostGrid layer(w.static_map.meta());
  layer = obstacle_layer_update(scan_of(w), w.robot.pose, layer);
  std::set<std::size_t> on_body;
  for (std::size_t i : lethal_cells(layer)) {
    const Point2 p = layer.meta().cell_center(layer.meta().cell_of(i));
    if (std::abs(p.x - 3.0) < 0.5 && std::abs(p.y - 2.0) < 0.6) {
      on_body.insert(i);
    }
  }
  ASSERT_FALSE(on_body.empty());
  w.bodies.clear();
  layer = obstacle_layer_update(scan_of(w), w.robot.pose, layer);
  for (std::size_t i : on_body) {
    EXPECT_NE(layer[i], cost::kLethal);
  }
}

TEST(MovableLayer, BoxInHallwayIsOneLightCluster)
{
  WorldState w;
  w.static_map = hallway();
  w.robot.pose = {1.0, 2.0, 0.0};
  w.bodies.push_back({1, Rect{{3.0, 2.0}, {0.2, 0.3}}, Movability::Light});
  const CostGrid obs = obstacle_layer_update(scan_of(w), w.robot.pose, CostGrid(w.static_map.meta()));
  const DistanceField df = distance_transform(w.static_map);
  const auto out = movable_layer_update(obs, w.static_map, df, {}, MovableLayerParams{}, 0.0);
  ASSERT_EQ(out.registry.clusters.size(), 1u);
  const ObstacleCluster &cl = out.registry.clusters.begin()->second;
  EXPECT_EQ(cl.level, CostLevel::Light);
  EXPECT_FALSE(cl.cells.empty());
  EXPECT_EQ(out.overrides.size(), cl.cells.size());
  for (std::size_t i : cl.cells) {
    EXPECT_EQ(out.overrides.at(i), cost::kLight);
  }
  const CostGrid master = compose_layers(w.static_map, obs, out.overrides, CostGrid(w.static_map.meta()));
  for (std::size_t i : cl.cells) {
    EXPECT_EQ(master[i], cost::kLight);
  }
}

TEST(MovableLayer, DetectionNearWallStaysLethal)
{
  const CostGrid stat = hallway();
  const GridMeta &m = stat.meta();
  CostGrid obs(m);
  obs.at({20, 1}) = cost::kLethal;  // 0.1 m from the bottom wall row
  const DistanceField df = distance_transform(stat);
  ASSERT_NEAR(df.at({20, 1}), 0.1, 1e-12);
  const auto out = movable_layer_update(obs, stat, df, {}, MovableLayerParams{}, 0.0);
  EXPECT_TRUE(out.overrides.empty());
  EXPECT_TRUE(out.registry.clusters.empty());
  EXPECT_EQ(compose_layers(stat, obs, out.overrides, CostGrid(m))[m.index({20, 1})], cost::kLethal);
}

TEST(MovableLayer, OccludedClusterKeepsIdAndLevel)
{
  const CostGrid stat = hallway();
  const GridMeta &m = stat.meta();
  const DistanceField df = distance_transform(stat);
  const MovableLayerParams p;
  auto out = movable_layer_update(block(m, 30, 18, 32, 21), stat, df, {}, p, 0.0);
  ASSERT_EQ(out.registry.clusters.size(), 1u);
  const int id = out.registry.clusters.begin()->first;
  const auto hit = apply_escalation(out.registry, EscalationEvent{CostLevel::Heavy, {2.8, 1.95, 0.0}, 0.0}, 0.3);
  ASSERT_EQ(hit, id);

  out = movable_layer_update(CostGrid(m), stat, df, std::move(out.registry), p, 1.0);
  ASSERT_EQ(out.registry.clusters.size(), 1u);
  EXPECT_TRUE(out.registry.clusters.at(id).cells.empty());
  EXPECT_TRUE(out.overrides.empty());

  out = movable_layer_update(block(m, 31, 18, 33, 21), stat, df, std::move(out.registry), p, 2.0);
  ASSERT_EQ(out.registry.clusters.size(), 1u);
  EXPECT_EQ(out.registry.clusters.begin()->first, id);
  EXPECT_EQ(out.registry.clusters.at(id).level, CostLevel::Heavy);
  for (const auto &[cell, c] : out.overrides) {
    EXPECT_EQ(c, cost::kHeavy);
  }
}

TEST(MovableLayer, OcclusionMemoryExpires)
{
  const CostGrid stat = hallway();
  const GridMeta &m = stat.meta();
  const DistanceField df = distance_transform(stat);
  const MovableLayerParams p;
  auto out = movable_layer_update(block(m, 30, 18, 32, 21), stat, df, {}, p, 0.0);
  const int id = out.registry.clusters.begin()->first;
  out = movable_layer_update(CostGrid(m), stat, df, std::move(out.registry), p, p.occlusion_memory + 0.5);
  EXPECT_TRUE(out.registry.clusters.empty());
  out = movable_layer_update(block(m, 30, 18, 32, 21), stat, df, std::move(out.registry), p, p.occlusion_memory + 1.0);
  ASSERT_EQ(out.registry.clusters.size(), 1u);
  EXPECT_GT(out.registry.clusters.begin()->first, id);  // ids are never reused
}

TEST(MovableLayer, ExtraFilterVetoesCells)
{
  const CostGrid stat = hallway();
  const GridMeta &m = stat.meta();
  const DistanceField df = distance_transform(stat);
  const std::size_t vetoed = m.index({30, 18});
  const CandidateFilter f = [&](std::size_t i) { return i != vetoed; };
  const auto out = movable_layer_update(block(m, 30, 18, 32, 21), stat, df, {}, MovableLayerParams{}, 0.0, {&f, 1});
  EXPECT_EQ(out.overrides.count(vetoed), 0u);
  EXPECT_EQ(out.overrides.size(), 11u);
}

TEST(MovableLayer, NoOverrideNearWallsOnRandomInputs)
{
  std::mt19937_64 rng(77);
  const MovableLayerParams p;
  for (int k = 0; k < 200; ++k) {
    const CostGrid stat = oracle::random_walls(rng, 25, 25, 0.05);
    const CostGrid obs = oracle::random_walls(rng, 25, 25, 0.15);
    const DistanceField df = distance_transform(stat);
    const auto out = movable_layer_update(obs, stat, df, {}, p, 0.0);
    for (const auto &[i, c] : out.overrides) {
      ASSERT_GE(df[i], p.wall_distance_threshold);
      ASSERT_EQ(obs[i], cost::kLethal);
      ASSERT_NE(stat[i], cost::kLethal);
    }
  }
}

TEST(LabelClusters, Empty)
{
  const GridMeta m{5, 5, 0.1, {}};
  EXPECT_TRUE(label_clusters({}, m).empty());
}

TEST(LabelClusters, DiagonalNeighboursJoin)
{
  const GridMeta m{5, 5, 0.1, {}};
  const std::vector<std::size_t> cells{m.index({1, 1}), m.index({2, 2})};
  const auto comps = label_clusters(cells, m);
  ASSERT_EQ(comps.size(), 1u);
  EXPECT_EQ(comps[0].size(), 2u);
}

TEST(LabelClusters, NoWrapAcrossRows)
{
  const GridMeta m{5, 5, 0.1, {}};
  const std::vector<std::size_t> cells{m.index({4, 1}), m.index({0, 2})};
  EXPECT_EQ(label_clusters(cells, m).size(), 2u);
}

TEST(LabelClusters, MatchesFloodFill)
{
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<int> side(1, 24);
  for (int k = 0; k < 250; ++k) {
    const GridMeta m{side(rng), side(rng), 0.1, {}};
    std::uniform_int_distribution<std::size_t> cell(0, m.size() - 1);
    std::vector<std::size_t> cells;
    const std::size_t n = k < 100 ? 50 : cell(rng);
    for (std::size_t i = 0; i < n; ++i) {
      cells.push_back(cell(rng));
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    ASSERT_EQ(label_clusters(cells, m), oracle::flood_fill(cells, m)) << "case " << k;
  }
}

namespace
{

ClusterRegistry registry_with(std::vector<std::pair<Point2, CostLevel>> cl)
{
  ClusterRegistry reg;
  for (const auto &[c, level] : cl) {
    const int id = reg.next_id++;
    reg.clusters[id] = ObstacleCluster{id, {0}, c, level, 0.0};
  }
  return reg;
}

}  // namespace

TEST(ApplyEscalation, LightAheadBecomesHeavy)
{
  ClusterRegistry reg = registry_with({{{1.5, 0.0}, CostLevel::Light}, {{-1.0, 0.0}, CostLevel::Light}});
  const auto id = apply_escalation(reg, {CostLevel::Heavy, {1.0, 0.0, 0.0}, 0.0}, 0.3);
  ASSERT_EQ(id, 1);
  EXPECT_EQ(reg.clusters[1].level, CostLevel::Heavy);
  EXPECT_EQ(reg.clusters[2].level, CostLevel::Light);
}

TEST(ApplyEscalation, IdempotentAndMonotone)
{
  ClusterRegistry reg = registry_with({{{0.4, 0.0}, CostLevel::Heavy}, {{0.0, 0.4}, CostLevel::Lethal}});
  apply_escalation(reg, {CostLevel::Heavy, {0.0, 0.0, 0.0}, 0.0}, 0.3);
  EXPECT_EQ(reg.clusters[1].level, CostLevel::Heavy);
  apply_escalation(reg, {CostLevel::Heavy, {0.0, 0.0, M_PI / 2}, 0.0}, 0.3);
  EXPECT_EQ(reg.clusters[2].level, CostLevel::Lethal);
}

TEST(ApplyEscalation, NothingInRangeIsNoOp)
{
  ClusterRegistry reg = registry_with({{{2.0, 0.0}, CostLevel::Light}});
  EXPECT_FALSE(apply_escalation(reg, {CostLevel::Lethal, {0.0, 0.0, 0.0}, 0.0}, 0.3));
  EXPECT_EQ(reg.clusters[1].level, CostLevel::Light);
}

TEST(ApplyEscalation, ExactlyOneClusterPerEvent)
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 300; ++k) {
    std::vector<std::pair<Point2, CostLevel>> cl;
    for (int i = 0; i < 6; ++i) {
      cl.push_back({{u(rng), u(rng)}, CostLevel::Light});
    }
    ClusterRegistry reg = registry_with(cl);
    const auto id = apply_escalation(reg, {CostLevel::Heavy, {0.0, 0.0, M_PI * u(rng)}, 0.0}, 0.3);
    int raised = 0;
    for (const auto &[cid, c] : reg.clusters) {
      raised += c.level == CostLevel::Heavy;
      if (c.level == CostLevel::Heavy) {
        EXPECT_EQ(id, cid);
      }
    }
    EXPECT_EQ(raised, id ? 1 : 0);
  }
}

TEST(Inflate, LethalCellClosedForm)
{
  CostGrid g(GridMeta{21, 21, 0.05, {}});
  g.at({10, 10}) = cost::kLethal;
  const CostGrid out = inflate(g, MovableLayerParams{});
  EXPECT_EQ(out.at({10, 10}), cost::kLethal);
  EXPECT_EQ(out.at({12, 10}), 154);  // d = 0.1 m: round(254 * e^-0.5)
  EXPECT_EQ(out.at({10, 8}), 154);
}

TEST(Inflate, MaxOfEquidistantSources)
{
  CostGrid g(GridMeta{11, 3, 0.1, {}});
  g.at({3, 1}) = cost::kLight;
  g.at({7, 1}) = cost::kHeavy;
  const CostGrid out = inflate(g, MovableLayerParams{});
  EXPECT_EQ(out.at({5, 1}), static_cast<int>(std::lround(180 * std::exp(-5.0 * 0.2))));
}

TEST(Inflate, NothingBeyondRadius)
{
  CostGrid g(GridMeta{30, 3, 0.1, {}});
  g.at({0, 1}) = cost::kLethal;
  const CostGrid out = inflate(g, MovableLayerParams{});
  EXPECT_GT(out.at({6, 1}), 0);  // d = 0.6, on the radius
  EXPECT_EQ(out.at({7, 1}), 0);
}

TEST(Inflate, UnknownNeitherEmitsNorReceives)
{
  CostGrid g(GridMeta{5, 5, 0.1, {}}, cost::kUnknown);
  g.at({2, 2}) = cost::kFree;
  g.at({0, 0}) = cost::kLethal;
  const CostGrid out = inflate(g, MovableLayerParams{});
  EXPECT_GT(out.at({2, 2}), 0);
  EXPECT_EQ(out.at({1, 1}), cost::kUnknown);
}

TEST(Inflate, MatchesClosedFormOnRandomGrids)
{
  std::mt19937_64 rng(555);
  std::uniform_int_distribution<int> side(1, 32);
  std::uniform_int_distribution<int> val(0, 9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 220; ++k) {
    CostGrid g(GridMeta{side(rng), side(rng), 0.05 + 0.05 * u(rng), {}});
    for (std::size_t i = 0; i < g.size(); ++i) {
      const int v = val(rng);
      g[i] = v == 0   ? cost::kLethal
             : v == 1 ? cost::kLight
             : v == 2 ? cost::kHeavy
             : v == 3 ? static_cast<std::uint8_t>(1 + val(rng) * 20)
             : v == 4 && k % 3 == 0 ? cost::kUnknown
                                    : cost::kFree;
      if (u(rng) < 0.6 && g[i] != cost::kUnknown) {
        g[i] = cost::kFree;
      }
    }
    MovableLayerParams p;
    p.inflation_radius = 0.1 + 0.6 * u(rng);
    p.decay_rate = 0.5 + 8.0 * u(rng);
    ASSERT_EQ(inflate(g, p), oracle::closed_form_inflation(g, p)) << "case " << k;
  }
}

TEST(InflationCache, EqualsFullInflation)
{
  std::mt19937_64 rng(8080);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const MovableLayerParams p;
  for (int k = 0; k < 200; ++k) {
    CostGrid stat = oracle::random_walls(rng, 30, 20, 0.08);
    for (std::size_t i = 0; i < stat.size(); ++i) {
      if (stat[i] == cost::kFree && u(rng) < 0.05) {
        stat[i] = cost::kUnknown;
      }
    }
    const InflationCache cache(stat, p);
    // A base composed on top of the static map: only raises or fills cells.
    CostGrid base = stat;
    for (std::size_t i = 0; i < base.size(); ++i) {
      const double r = u(rng);
      if (r < 0.05) {
        base[i] = std::max<std::uint8_t>(base[i] == cost::kUnknown ? 0 : base[i], cost::kLight);
      } else if (r < 0.08) {
        base[i] = cost::kLethal;
      } else if (r < 0.1 && base[i] == cost::kUnknown) {
        base[i] = cost::kFree;
      }
    }
    ASSERT_EQ(cache.inflate(base), inflate(base, p)) << "case " << k;
    // Inputs outside the cache's assumptions fall back and still agree.
    CostGrid lowered = base;
    lowered[u(rng) * lowered.size()] = cost::kFree;
    ASSERT_EQ(cache.inflate(lowered), inflate(lowered, p)) << "case " << k;
  }
}

TEST(MovableObstaclesLayer, LevelsNeverDecrease)
{
  const CostGrid stat = hallway();
  const GridMeta &m = stat.meta();
  const DistanceField df = distance_transform(stat);
  MovableObstaclesLayer layer(MovableLayerParams{}, 0.3);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::map<int, CostLevel> last;
  for (int t = 0; t < 200; ++t) {
    const int c = 20 + static_cast<int>(10 * u(rng));
    if (u(rng) < 0.2) {
      layer.enqueue({u(rng) < 0.5 ? CostLevel::Heavy : CostLevel::Lethal, {0.1 * c - 0.4, 2.0, 0.0}, 0.1 * t});
    }
    layer.update(u(rng) < 0.1 ? CostGrid(m) : block(m, c, 18, c + 2, 21), stat, df, 0.1 * t);
    for (const auto &[id, cl] : layer.registry().clusters) {
      if (last.count(id)) {
        ASSERT_GE(cl.level, last[id]);
      }
      last[id] = cl.level;
    }
  }
}

TEST(MovableObstaclesLayer, BaselineEmitsNoOverrides)
{
  const CostGrid stat = hallway();
  const DistanceField df = distance_transform(stat);
  MovableObstaclesLayer layer(MovableLayerParams{}, 0.3, false);
  layer.update(block(stat.meta(), 30, 18, 32, 21), stat, df, 0.0);
  EXPECT_TRUE(layer.overrides().empty());
  EXPECT_EQ(layer.registry().clusters.size(), 1u);
}
