#include "namo/planning.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

namespace namo
{

std::string_view to_string(PlanStatus s)
{
  switch (s) {
    case PlanStatus::Ok: return "ok";
    case PlanStatus::NoPath: return "no_path";
    case PlanStatus::StartBlocked: return "start_blocked";
  }
  return "?";
}

namespace
{

struct Move
{
  int dc, dr;
  double length;  // in cells
};

constexpr double kSqrt2 = 1.4142135623730951;
constexpr Move kMoves[8] = {
  {1, 0, 1.0}, {-1, 0, 1.0}, {0, 1, 1.0}, {0, -1, 1.0},
  {1, 1, kSqrt2}, {-1, 1, kSqrt2}, {1, -1, kSqrt2}, {-1, -1, kSqrt2}};

}  // namespace

PlanResult plan_global(const CostGrid &master, Point2 start, Point2 goal, const PlannerParams &params)
{
  const GridMeta &m = master.meta();
  PlanResult result;
  const auto s = world_to_cell(start, m);
  if (!s || !traversable(master.at(*s))) {
    result.status = PlanStatus::StartBlocked;
    return result;
  }
  const auto g = world_to_cell(goal, m);
  if (!g || !traversable(master.at(*g))) {
    result.status = PlanStatus::NoPath;
    return result;
  }

  const std::size_t n = m.size();
  const std::size_t src = m.index(*s);
  const std::size_t dst = m.index(*g);
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> pred(n, kNone);
  std::vector<bool> done(n, false);

  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  dist[src] = 0.0;
  open.push({0.0, src});
  while (!open.empty()) {
    const auto [d, u] = open.top();
    open.pop();
    if (done[u]) {
      continue;
    }
    done[u] = true;
    if (u == dst) {
      break;
    }
    const Cell cu = m.cell_of(u);
    for (const Move &mv : kMoves) {
      const Cell cv{cu.col + mv.dc, cu.row + mv.dr};
      if (!m.contains(cv)) {
        continue;
      }
      const std::size_t v = m.index(cv);
      if (done[v] || !traversable(master[v])) {
        continue;
      }
      const double nd = d + edge_weight(mv.length * m.resolution, master[v], params.w_cost);
      if (nd < dist[v]) {
        dist[v] = nd;
        pred[v] = u;
        open.push({nd, v});
      } else if (nd == dist[v] && u < pred[v]) {
        pred[v] = u;
      }
    }
  }

  if (!done[dst]) {
    result.status = PlanStatus::NoPath;
    return result;
  }
  std::vector<Point2> rev;
  for (std::size_t v = dst; v != kNone; v = pred[v]) {
    rev.push_back(m.cell_center(m.cell_of(v)));
  }
  result.status = PlanStatus::Ok;
  result.path.waypoints.assign(rev.rbegin(), rev.rend());
  result.path.total_cost = dist[dst];
  return result;
}

CostGrid footprint_grid(const CostGrid &master, double radius)
{
  const GridMeta &m = master.meta();
  const int w = m.width;
  const int h = m.height;
  const int reach = static_cast<int>(std::floor(radius / m.resolution + 1e-9));
  // The disk as one horizontal half-width per row offset.
  std::vector<int> half(2 * reach + 1, -1);
  for (int dr = -reach; dr <= reach; ++dr) {
    for (int dc = 0; dc <= reach; ++dc) {
      if (m.resolution * std::hypot(dc, dr) <= radius + 1e-9) {
        half[dr + reach] = dc;
      }
    }
  }

  // UNKNOWN never contributes, so read it as FREE.
  std::vector<std::uint8_t> known(master.size());
  for (std::size_t i = 0; i < known.size(); ++i) {
    known[i] = master[i] == cost::kUnknown ? cost::kFree : master[i];
  }
  // Row-wise sliding max for each half-width in use.
  std::vector<std::vector<std::uint8_t>> rowmax(reach + 1);
  for (int hw : half) {
    if (hw < 0 || !rowmax[hw].empty()) {
      continue;
    }
    auto &rm = rowmax[hw];
    rm.assign(known.size(), cost::kFree);
    for (int r = 0; r < h; ++r) {
      const std::uint8_t *src = known.data() + static_cast<std::size_t>(r) * w;
      std::uint8_t *dst = rm.data() + static_cast<std::size_t>(r) * w;
      for (int c = 0; c < w; ++c) {
        std::uint8_t v = cost::kFree;
        for (int k = std::max(0, c - hw); k <= std::min(w - 1, c + hw); ++k) {
          v = std::max(v, src[k]);
        }
        dst[c] = v;
      }
    }
  }

  CostGrid out = master;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      if (out[i] == cost::kUnknown || out[i] == cost::kLethal) {
        continue;
      }
      std::uint8_t v = out[i];
      for (int dr = -reach; dr <= reach && v != cost::kLethal; ++dr) {
        const int rr = r + dr;
        const int hw = half[dr + reach];
        if (rr < 0 || rr >= h || hw < 0) {
          continue;
        }
        v = std::max(v, rowmax[hw][static_cast<std::size_t>(rr) * w + c]);
      }
      out[i] = v;
    }
  }
  return out;
}

std::optional<Point2> nearest_traversable(const CostGrid &grid, Point2 p, double max_distance)
{
  const GridMeta &m = grid.meta();
  const int reach = static_cast<int>(std::ceil(max_distance / m.resolution)) + 1;
  const int pc = static_cast<int>(std::floor((p.x - m.origin.x) / m.resolution));
  const int pr = static_cast<int>(std::floor((p.y - m.origin.y) / m.resolution));
  std::optional<Point2> best;
  double best_d = max_distance;
  for (int r = pr - reach; r <= pr + reach; ++r) {
    for (int c = pc - reach; c <= pc + reach; ++c) {
      if (!m.contains({c, r}) || !traversable(grid.at({c, r}))) {
        continue;
      }
      const Point2 q = m.cell_center({c, r});
      const double d = distance(p, q);
      if (d < best_d || (!best && d <= best_d)) {
        best = q;
        best_d = d;
      }
    }
  }
  return best;
}

double rollout_cost(
  std::span<const Pose2> poses, std::span<const Command> controls, std::span<const Point2> path, const CostGrid &master,
  const MppiWeights &weights, RolloutContext context)
{
  double total = 0.0;
  bool escaping = context.started_in_lethal;
  for (std::size_t k = 0; k < poses.size(); ++k) {
    const Pose2 &p = poses[k];
    double d2 = std::numeric_limits<double>::infinity();
    for (const Point2 &q : path) {
      const double dx = p.x - q.x;
      const double dy = p.y - q.y;
      d2 = std::min(d2, dx * dx + dy * dy);
    }
    if (path.empty()) {
      d2 = 0.0;
    }
    const std::uint8_t c = master.at_world(p.position());
    escaping = escaping && !traversable(c);
    if (escaping) {
      total += weights.costmap;
    } else if (!traversable(c)) {
      total += kLethalPenalty;
    } else if (!(context.path_ends_at_goal && !path.empty() && distance(p.position(), path.back()) <= weights.near_goal_distance)) {
      total += weights.costmap * (static_cast<double>(c) / 254.0);
    }
    total += weights.path * d2;
    if (k < controls.size()) {
      total += weights.effort * (controls[k].v * controls[k].v + controls[k].w * controls[k].w);
    }
  }
  if (!poses.empty() && !path.empty()) {
    const double dg = distance(poses.back().position(), path.back());
    total += weights.goal * dg * dg;
  }
  return total;
}

std::span<const Point2> path_window(const Path &path, Point2 from, double length)
{
  const auto &wp = path.waypoints;
  if (wp.empty()) {
    return {};
  }
  std::size_t nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < wp.size(); ++i) {
    const double d = distance(from, wp[i]);
    if (d < best) {
      best = d;
      nearest = i;
    }
  }
  std::size_t last = nearest;
  double acc = 0.0;
  while (last + 1 < wp.size()) {
    acc += distance(wp[last], wp[last + 1]);
    if (acc > length) {
      break;
    }
    ++last;
  }
  return std::span<const Point2>(wp).subspan(nearest, last - nearest + 1);
}

MppiResult mppi_step(
  const RobotState &robot, const ControlSequence &nominal_in, const Path &path, const CostGrid &master,
  const MppiParams &params, const RobotLimits &limits, std::mt19937_64 &rng)
{
  const int horizon = std::max(1, params.horizon);
  const int samples = std::max(1, params.n_samples);
  ControlSequence nominal = nominal_in;
  nominal.resize(static_cast<std::size_t>(horizon), nominal.empty() ? Command{} : nominal.back());

  const auto window = path_window(path, robot.pose.position(), limits.v_max * horizon * params.dt + params.lookahead_margin);

  RolloutContext context;
  context.started_in_lethal = !traversable(master.at_world(robot.pose.position()));
  context.path_ends_at_goal = !window.empty() && &window.back() == &path.waypoints.back();
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double rho = std::clamp(params.noise_correlation, 0.0, 0.999);
  const double fresh_scale = std::sqrt(1.0 - rho * rho);
  std::vector<Command> controls(static_cast<std::size_t>(samples) * horizon);
  std::vector<double> costs(static_cast<std::size_t>(samples));
  std::vector<Pose2> poses(static_cast<std::size_t>(horizon));

  for (int k = 0; k < samples; ++k) {
    std::span<Command> u(controls.data() + static_cast<std::size_t>(k) * horizon, horizon);
    Pose2 pose = robot.pose;
    double ev = 0.0;
    double ew = 0.0;
    for (int t = 0; t < horizon; ++t) {
      Command c = nominal[t];
      if (k > 0) {
        // Stationary AR(1): every step keeps the stated sigma.
        const double keep = t == 0 ? 0.0 : rho;
        const double fresh = t == 0 ? 1.0 : fresh_scale;
        ev = keep * ev + fresh * gauss(rng);
        ew = keep * ew + fresh * gauss(rng);
        c.v += params.sigma_v * ev;
        c.w += params.sigma_w * ew;
      }
      c.v = std::clamp(c.v, -limits.v_max, limits.v_max);
      c.w = std::clamp(c.w, -limits.w_max, limits.w_max);
      u[t] = c;
      pose = integrate_unicycle(pose, c, params.dt);
      poses[t] = pose;
    }
    costs[k] = rollout_cost(poses, u, window, master, params.weights, context);
  }

  MppiResult result;
  const double best = *std::min_element(costs.begin(), costs.end());
  result.best_cost = best;
  if (best >= kLethalPenalty) {
    result.degenerate = true;
    result.nominal.assign(static_cast<std::size_t>(horizon), Command{});
    return result;
  }

  std::vector<double> weights(costs.size());
  double norm = 0.0;
  for (std::size_t k = 0; k < costs.size(); ++k) {
    weights[k] = std::exp(-(costs[k] - best) / params.temperature);
    norm += weights[k];
  }
  ControlSequence avg(static_cast<std::size_t>(horizon));
  for (int k = 0; k < samples; ++k) {
    const double wk = weights[k] / norm;
    if (wk == 0.0) {
      continue;
    }
    for (int t = 0; t < horizon; ++t) {
      const Command &c = controls[static_cast<std::size_t>(k) * horizon + t];
      avg[t].v += wk * c.v;
      avg[t].w += wk * c.w;
    }
  }
  result.cmd = avg.front();
  result.nominal.assign(avg.begin() + 1, avg.end());
  result.nominal.push_back(avg.back());
  return result;
}

ControlSequence recovery_backup(const RobotState &, double duration, double dt, double speed)
{
  const auto n = static_cast<std::size_t>(std::max(0L, std::lround(duration / dt)));
  return ControlSequence(n, Command{speed, 0.0});
}

}  // namespace namo
