#include <benchmark/benchmark.h>

#include <random>

#include "namo/costmap_layers.hpp"
#include "namo/planning.hpp"
#include "namo/trial.hpp"

using namespace namo;

namespace
{

const Scenario &corridor()
{
  static const Scenario s = load_scenario(std::filesystem::path(NAMO_BENCH_SCENARIO_DIR) / "2-b.yaml");
  return s;
}

WorldState world_of(const Scenario &s)
{
  WorldState w;
  w.static_map = s.static_map;
  w.bodies = s.bodies;
  w.robot.pose = s.robot_start;
  return w;
}

}  // namespace

static void BM_DistanceTransform(benchmark::State &state)
{
  const CostGrid &g = corridor().static_map;
  for (auto _ : state) {
    benchmark::DoNotOptimize(distance_transform(g));
  }
}
BENCHMARK(BM_DistanceTransform);

static void BM_Lidar(benchmark::State &state)
{
  const WorldState w = world_of(corridor());
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_lidar(w, ScanParams{}, seed++));
  }
}
BENCHMARK(BM_Lidar);

static void BM_Inflate(benchmark::State &state)
{
  const CostGrid &g = corridor().static_map;
  for (auto _ : state) {
    benchmark::DoNotOptimize(inflate(g, MovableLayerParams{}));
  }
}
BENCHMARK(BM_Inflate);

static void BM_FootprintGrid(benchmark::State &state)
{
  const CostGrid g = inflate(corridor().static_map, MovableLayerParams{});
  for (auto _ : state) {
    benchmark::DoNotOptimize(footprint_grid(g, 0.35));
  }
}
BENCHMARK(BM_FootprintGrid);

static void BM_PlanGlobal(benchmark::State &state)
{
  const Scenario &s = corridor();
  const CostGrid g = footprint_grid(inflate(s.static_map, MovableLayerParams{}), 0.35);
  for (auto _ : state) {
    benchmark::DoNotOptimize(plan_global(g, s.robot_start.position(), s.goal));
  }
}
BENCHMARK(BM_PlanGlobal);

static void BM_LabelClusters(benchmark::State &state)
{
  const GridMeta m{200, 200, 0.1, {}};
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> cell(0, m.size() - 1);
  std::vector<std::size_t> cells(static_cast<std::size_t>(state.range(0)));
  for (auto &c : cells) {
    c = cell(rng);
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  for (auto _ : state) {
    benchmark::DoNotOptimize(label_clusters(cells, m));
  }
}
BENCHMARK(BM_LabelClusters)->Arg(100)->Arg(2000);

static void BM_MppiStep(benchmark::State &state)
{
  const Scenario &s = corridor();
  const CostGrid g = footprint_grid(inflate(s.static_map, MovableLayerParams{}), 0.35);
  const Path path = plan_global(g, s.robot_start.position(), s.goal).path;
  RobotState robot;
  robot.pose = s.robot_start;
  std::mt19937_64 rng(3);
  ControlSequence nominal;
  for (auto _ : state) {
    const MppiResult r = mppi_step(robot, nominal, path, g, MppiParams{}, RobotLimits{}, rng);
    nominal = r.nominal;
    benchmark::DoNotOptimize(r.cmd);
  }
}
BENCHMARK(BM_MppiStep);

static void BM_Trial1a(benchmark::State &state)
{
  const Scenario s = load_scenario(std::filesystem::path(NAMO_BENCH_SCENARIO_DIR) / "1-a.yaml");
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_trial(s, seed++).metrics.success);
  }
}
BENCHMARK(BM_Trial1a)->Unit(benchmark::kMillisecond)->Iterations(3);

BENCHMARK_MAIN();
