#include "namo/trial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "namo/map_io.hpp"
#include "namo/planning.hpp"
#include "namo/progress_checker.hpp"

namespace namo
{

namespace
{

// Clusters are tied to a body when their centroid lies within this distance
// of the body's rectangle (scan returns sit on its faces).
constexpr double kAssociationMargin = 0.25;

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent stream per purpose so that e.g. toggling frame export or
// baseline mode never shifts another stream.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t purpose) { return splitmix64(splitmix64(seed) ^ purpose); }

enum Stream : std::uint64_t { kJitter = 1, kLidar = 2, kMppi = 3, kNoise = 4 };

bool pose_is_clear(const WorldState &w, Point2 p, double r)
{
  if (circle_hits_walls(w.static_map, p, r)) {
    return false;
  }
  return std::none_of(w.bodies.begin(), w.bodies.end(), [&](const MovableBody &b) { return circle_hits_rect(p, r, b.shape); });
}

std::string fmt(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

CostLevel expected_level(Movability m)
{
  switch (m) {
    case Movability::Light: return CostLevel::Light;
    case Movability::Heavy: return CostLevel::Heavy;
    case Movability::Immovable: return CostLevel::Lethal;
  }
  return CostLevel::Lethal;
}

std::optional<int> associate_body(Point2 p, const std::vector<MovableBody> &bodies, double margin)
{
  std::optional<int> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto &b : bodies) {
    const Point2 q = b.shape.closest_point(p);
    if (distance(p, q) > margin) {
      continue;
    }
    const double d = distance(p, b.shape.center);
    if (d < best_d || (d == best_d && best && b.id < *best)) {
      best = b.id;
      best_d = d;
    }
  }
  return best;
}

TrialMetrics compute_metrics(const TrialLog &log)
{
  TrialMetrics m;
  m.seed = log.seed;
  m.success = log.reached_goal && log.end_time <= log.timeout;
  m.nav_time = log.end_time;
  m.escalation_log = log.escalations;

  std::map<int, bool> contacted;
  for (const auto &b : log.bodies) {
    m.final_levels[b.id] = CostLevel::Light;
    contacted[b.id] = false;
  }
  for (const auto &t : log.ticks) {
    for (const auto &[id, level] : t.body_levels) {
      auto it = m.final_levels.find(id);
      if (it != m.final_levels.end()) {
        it->second = std::max(it->second, level);
      }
    }
    for (int id : t.touching) {
      contacted[id] = true;
    }
  }
  m.movability_correct = true;
  for (const auto &b : log.bodies) {
    const CostLevel got = m.final_levels[b.id];
    const bool ok = contacted[b.id] ? got == expected_level(b.movability) : got == CostLevel::Light;
    m.movability_correct = m.movability_correct && ok;
  }
  return m;
}

TrialResult run_trial(const Scenario &sc, std::uint64_t seed, const TrialOptions &options)
{
  const Params &P = sc.params;
  const bool baseline = options.baseline.value_or(sc.baseline_mode);
  const double dt = P.sim.dt;
  const double radius = P.robot.footprint_radius;
  const GridMeta &meta = sc.static_map.meta();

  TrialResult result;
  TrialLog &log = result.log;
  log.scenario = sc.name;
  log.seed = seed;
  log.baseline = baseline;
  log.timeout = P.sim.timeout;
  log.bodies = sc.bodies;

  WorldState world;
  world.static_map = sc.static_map;
  world.bodies = sc.bodies;
  world.robot.pose = sc.robot_start;
  world.robot.footprint_radius = radius;
  const WorldParams wparams{P.robot, P.push};

  std::mt19937_64 jitter_rng(stream_seed(seed, kJitter));
  if (sc.start_jitter_xy > 0.0 || sc.start_jitter_theta > 0.0) {
    std::normal_distribution<double> gxy(0.0, sc.start_jitter_xy);
    std::normal_distribution<double> gth(0.0, sc.start_jitter_theta);
    for (int attempt = 0; attempt < 20; ++attempt) {
      Pose2 p = sc.robot_start;
      p.x += sc.start_jitter_xy > 0.0 ? gxy(jitter_rng) : 0.0;
      p.y += sc.start_jitter_xy > 0.0 ? gxy(jitter_rng) : 0.0;
      p.theta = normalize_angle(p.theta + (sc.start_jitter_theta > 0.0 ? gth(jitter_rng) : 0.0));
      if (pose_is_clear(world, p.position(), radius)) {
        world.robot.pose = p;
        break;
      }
    }
  }
  std::mt19937_64 mppi_rng(stream_seed(seed, kMppi));
  std::mt19937_64 noise_rng(stream_seed(seed, kNoise));
  const std::uint64_t lidar_seed = stream_seed(seed, kLidar);

  const DistanceField dfield = distance_transform(sc.static_map);
  const InflationCache inflation(sc.static_map, P.movable_layer);
  const CostGrid no_inflation(meta, cost::kFree);
  CostGrid obstacle(meta, cost::kFree);
  MovableObstaclesLayer layer(P.movable_layer, radius, !baseline);
  ProgressChecker checker(P.checker);
  // Dilating by half a cell more than the radius keeps the footprint off
  // lethal cells whose centers sit just outside the radius.
  const double clearance = radius + 0.5 * meta.resolution;

  ControlSequence nominal(static_cast<std::size_t>(std::max(1, P.mppi.horizon)));
  std::deque<Command> recovery;
  Path path;
  bool have_path = false;
  bool need_replan = true;
  bool nopath_recovered = false;
  double last_plan = -std::numeric_limits<double>::infinity();
  Pose2 drift{};

  if (!options.frames_dir.empty()) {
    std::filesystem::create_directories(options.frames_dir);
  }

  for (std::uint64_t tick = 0;; ++tick) {
    const double now = world.time;
    Pose2 est = world.robot.pose;
    est.x += drift.x;
    est.y += drift.y;
    est.theta = normalize_angle(est.theta + drift.theta);

    // Perception and costmap.
    const Scan scan = simulate_lidar(world, P.lidar, splitmix64(lidar_seed + tick));
    obstacle = obstacle_layer_update(scan, est, std::move(obstacle));
    const CostOverrides &overrides = layer.update(obstacle, sc.static_map, dfield, now);
    const CostGrid base = compose_layers(sc.static_map, obstacle, overrides, no_inflation);
    const CostGrid master = compose_layers(sc.static_map, obstacle, overrides, inflation.inflate(base));

    const auto &clusters = layer.registry().clusters;
    for (const auto &a : layer.applied()) {
      EscalationRecord rec{a.event.time, a.event.level, a.event.pose, a.cluster_id, std::nullopt};
      if (a.cluster_id) {
        const auto it = clusters.find(*a.cluster_id);
        if (it != clusters.end()) {
          rec.body_id = associate_body(it->second.centroid, world.bodies, kAssociationMargin);
        }
      }
      log.escalations.push_back(rec);
    }

    TickRecord rec;
    rec.time = now;
    rec.pose = world.robot.pose;
    for (const auto &[id, cl] : clusters) {
      rec.cluster_levels.emplace_back(id, cl.level);
      if (!cl.cells.empty()) {
        if (const auto body = associate_body(cl.centroid, world.bodies, kAssociationMargin)) {
          rec.body_levels.emplace_back(*body, cl.level);
        }
      }
    }

    if (distance(world.robot.pose.position(), sc.goal) <= P.sim.goal_tolerance) {
      log.reached_goal = true;
      log.end_time = now;
      log.ticks.push_back(std::move(rec));
      break;
    }
    if (now >= P.sim.timeout - 1e-9) {
      log.end_time = now;
      log.ticks.push_back(std::move(rec));
      break;
    }

    // Planning.
    const CostGrid plan_grid = footprint_grid(master, clearance);
    if (recovery.empty() && (need_replan || now - last_plan >= P.sim.replan_period - 1e-9)) {
      PlanResult plan = plan_global(plan_grid, est.position(), sc.goal, P.planner);
      if (plan.status == PlanStatus::StartBlocked) {
        if (const auto s = nearest_traversable(plan_grid, est.position(), P.sim.start_search_radius)) {
          plan = plan_global(plan_grid, *s, sc.goal, P.planner);
        }
      }
      last_plan = now;
      need_replan = false;
      if (plan.ok()) {
        path = std::move(plan.path);
        have_path = true;
        nopath_recovered = false;
      } else {
        have_path = false;
        if (!nopath_recovered) {
          const auto seq = recovery_backup(world.robot, P.sim.recovery_duration, dt, P.sim.recovery_speed);
          recovery.assign(seq.begin(), seq.end());
          nopath_recovered = true;
        }
      }
    }

    // Control.
    Command cmd{};
    const bool recovering = !recovery.empty();
    if (recovering) {
      cmd = recovery.front();
      recovery.pop_front();
      if (recovery.empty()) {
        need_replan = true;
        std::fill(nominal.begin(), nominal.end(), Command{});
      }
    } else if (have_path) {
      RobotState seen = world.robot;
      seen.pose = est;
      const MppiResult r = mppi_step(seen, nominal, path, plan_grid, P.mppi, P.robot, mppi_rng);
      if (r.degenerate) {
        const auto seq = recovery_backup(world.robot, P.sim.recovery_duration, dt, P.sim.recovery_speed);
        recovery.assign(seq.begin(), seq.end());
        std::fill(nominal.begin(), nominal.end(), Command{});
        if (!recovery.empty()) {
          cmd = recovery.front();
          recovery.pop_front();
        }
      } else {
        cmd = r.cmd;
        nominal = r.nominal;
      }
    }

    if (!options.frames_dir.empty()) {
      Overlays ov;
      if (have_path) {
        ov.path = path;
      }
      ov.robot = world.robot;
      for (const auto &[id, cl] : clusters) {
        ov.clusters.push_back(cl);
      }
      char name[32];
      std::snprintf(name, sizeof name, "frame_%05llu.png", static_cast<unsigned long long>(tick));
      export_costmap_image(master, ov, options.frames_dir / name, options.frame_scale);
    }

    world = step(world, cmd, dt, wparams);

    double measured = std::abs(world.robot.v);
    if (P.noise.speed_sigma > 0.0) {
      measured = std::max(0.0, measured + std::normal_distribution<double>(0.0, P.noise.speed_sigma)(noise_rng));
    }
    if (P.noise.pose_sigma_xy > 0.0) {
      std::normal_distribution<double> g(0.0, P.noise.pose_sigma_xy);
      drift.x += g(noise_rng);
      drift.y += g(noise_rng);
    }
    if (P.noise.pose_sigma_theta > 0.0) {
      drift.theta += std::normal_distribution<double>(0.0, P.noise.pose_sigma_theta)(noise_rng);
    }

    // Backing up is not judged: the look-ahead point would name the wrong obstacle.
    const Command judged = recovering || !recovery.empty() ? Command{} : cmd;
    if (auto ev = checker.update({measured, judged.v, judged.w, world.time, est})) {
      layer.enqueue(*ev);
      need_replan = true;
      if (ev->level == CostLevel::Lethal) {
        const auto seq = recovery_backup(world.robot, P.sim.recovery_duration, dt, P.sim.recovery_speed);
        recovery.assign(seq.begin(), seq.end());
      }
    }

    rec.cmd = cmd;
    rec.measured_speed = measured;
    rec.recovering = recovering;
    rec.touching = world.touching;
    log.ticks.push_back(std::move(rec));
  }

  result.metrics = compute_metrics(log);
  return result;
}

BatchSummary summarize(const std::string &scenario, const std::vector<TrialMetrics> &adaptive, const std::vector<TrialMetrics> &baseline)
{
  BatchSummary s;
  s.scenario = scenario;
  s.n_trials = static_cast<int>(adaptive.size());
  auto mean_time = [](const std::vector<TrialMetrics> &v) -> std::optional<double> {
    double sum = 0.0;
    int n = 0;
    for (const auto &m : v) {
      if (m.success) {
        sum += m.nav_time;
        ++n;
      }
    }
    return n > 0 ? std::optional<double>(sum / n) : std::nullopt;
  };
  auto rate = [](const std::vector<TrialMetrics> &v, auto pred) {
    if (v.empty()) {
      return 0.0;
    }
    const auto n = std::count_if(v.begin(), v.end(), pred);
    return 100.0 * static_cast<double>(n) / static_cast<double>(v.size());
  };
  s.success_rate = rate(adaptive, [](const TrialMetrics &m) { return m.success; });
  s.baseline_success_rate = rate(baseline, [](const TrialMetrics &m) { return m.success; });
  s.movability_accuracy = rate(adaptive, [](const TrialMetrics &m) { return m.movability_correct; });
  s.mean_time_adaptive = mean_time(adaptive);
  s.mean_time_baseline = mean_time(baseline);
  return s;
}

BatchSummary run_batch(const Scenario &scenario, int n_trials, std::uint64_t seed0)
{
  if (n_trials < 1) {
    throw std::invalid_argument("run_batch: n_trials must be at least 1");
  }
  std::vector<TrialMetrics> adaptive;
  std::vector<TrialMetrics> baseline;
  for (int i = 0; i < n_trials; ++i) {
    const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(i);
    adaptive.push_back(run_trial(scenario, seed, TrialOptions{false, {}, 4}).metrics);
    baseline.push_back(run_trial(scenario, seed, TrialOptions{true, {}, 4}).metrics);
  }
  return summarize(scenario.name, adaptive, baseline);
}

std::string csv_header()
{
  return "scenario,n_trials,success_rate,baseline_success_rate,mean_time_adaptive,mean_time_baseline,movability_accuracy";
}

std::string csv_row(const BatchSummary &s)
{
  std::ostringstream o;
  o << s.scenario << ',' << s.n_trials << ',' << fmt(s.success_rate) << ',' << fmt(s.baseline_success_rate) << ','
    << (s.mean_time_adaptive ? fmt(*s.mean_time_adaptive) : std::string("n/a")) << ','
    << (s.mean_time_baseline ? fmt(*s.mean_time_baseline) : std::string("Impossible")) << ','
    << fmt(s.movability_accuracy);
  return o.str();
}

std::string format_metrics(const TrialMetrics &m)
{
  std::ostringstream o;
  o << "seed " << m.seed << "\n";
  o << "success " << (m.success ? "true" : "false") << "\n";
  o << "nav_time " << fmt(m.nav_time) << "\n";
  o << "movability_correct " << (m.movability_correct ? "true" : "false") << "\n";
  for (const auto &[id, level] : m.final_levels) {
    o << "final_level " << id << " " << to_string(level) << "\n";
  }
  for (const auto &e : m.escalation_log) {
    o << "escalation " << fmt(e.time) << " " << to_string(e.level) << " cluster "
      << (e.cluster_id ? std::to_string(*e.cluster_id) : "-") << " body " << (e.body_id ? std::to_string(*e.body_id) : "-")
      << " pose " << fmt(e.pose.x) << " " << fmt(e.pose.y) << " " << fmt(e.pose.theta) << "\n";
  }
  return o.str();
}

std::string format_log(const TrialLog &log)
{
  std::ostringstream o;
  o << "scenario " << log.scenario << "\nseed " << log.seed << "\nbaseline " << (log.baseline ? "true" : "false")
    << "\ntimeout " << fmt(log.timeout) << "\n";
  for (const auto &b : log.bodies) {
    o << "body " << b.id << " " << to_string(b.movability) << " " << fmt(b.shape.center.x) << " " << fmt(b.shape.center.y)
      << " " << fmt(b.shape.half.x) << " " << fmt(b.shape.half.y) << "\n";
  }
  for (const auto &t : log.ticks) {
    o << "tick " << fmt(t.time) << " pose " << fmt(t.pose.x) << " " << fmt(t.pose.y) << " " << fmt(t.pose.theta) << " cmd "
      << fmt(t.cmd.v) << " " << fmt(t.cmd.w) << " speed " << fmt(t.measured_speed) << (t.recovering ? " recovering" : "");
    for (int id : t.touching) {
      o << " touch " << id;
    }
    for (const auto &[id, level] : t.body_levels) {
      o << " body_level " << id << " " << to_string(level);
    }
    o << "\n";
  }
  for (const auto &e : log.escalations) {
    o << "escalation " << fmt(e.time) << " " << to_string(e.level) << " cluster "
      << (e.cluster_id ? std::to_string(*e.cluster_id) : "-") << " body " << (e.body_id ? std::to_string(*e.body_id) : "-")
      << "\n";
  }
  o << "reached_goal " << (log.reached_goal ? "true" : "false") << "\nend_time " << fmt(log.end_time) << "\n";
  return o.str();
}

}  // namespace namo
