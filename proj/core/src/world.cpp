#include "namo/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace namo
{

namespace
{

constexpr double kOverlapEps = 1e-9;
// Free travel shorter than this counts as starting in contact.
constexpr double kContactTol = 1e-3;
constexpr double kProbe = 2e-3;
constexpr double kSampleStep = 0.01;

struct Vec
{
  double x, y;
};

Point2 offset(Point2 p, Vec u, double s) { return {p.x + u.x * s, p.y + u.y * s}; }

Rect shifted(const Rect &r, Vec u, double s) { return {offset(r.center, u, s), r.half}; }

// Largest s in [0, len] such that `blocked(s)` is false for the sampled
// prefix; refined by bisection at the first blocked sample.
template<typename Blocked>
double free_travel(double len, Blocked blocked)
{
  if (len <= 0.0) {
    return 0.0;
  }
  double last_free = 0.0;
  const int n = std::max(1, static_cast<int>(std::ceil(len / kSampleStep)));
  for (int i = 1; i <= n; ++i) {
    const double s = (i == n) ? len : len * i / n;
    if (!blocked(s)) {
      last_free = s;
      continue;
    }
    double lo = last_free;
    double hi = s;
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      (blocked(mid) ? hi : lo) = mid;
    }
    return lo;
  }
  return len;
}

bool robot_blocked(
  const WorldState &w, Point2 center, double radius, const std::vector<bool> &ignore)
{
  if (circle_hits_walls(w.static_map, center, radius)) {
    return true;
  }
  for (std::size_t i = 0; i < w.bodies.size(); ++i) {
    if (!ignore[i] && circle_hits_rect(center, radius, w.bodies[i].shape)) {
      return true;
    }
  }
  return false;
}

}  // namespace

std::string_view to_string(Movability m)
{
  switch (m) {
    case Movability::Light: return "light";
    case Movability::Heavy: return "heavy";
    case Movability::Immovable: return "immovable";
  }
  return "?";
}

Point2 Rect::closest_point(Point2 p) const
{
  return {std::clamp(p.x, min_x(), max_x()), std::clamp(p.y, min_y(), max_y())};
}

double PushModel::kappa(Movability m) const
{
  switch (m) {
    case Movability::Light: return kappa_light;
    case Movability::Heavy: return kappa_heavy;
    case Movability::Immovable: return kappa_immovable;
  }
  return 0.0;
}

Pose2 integrate_unicycle(const Pose2 &pose, Command cmd, double dt)
{
  const double mid = pose.theta + 0.5 * cmd.w * dt;
  return {pose.x + cmd.v * std::cos(mid) * dt, pose.y + cmd.v * std::sin(mid) * dt, normalize_angle(pose.theta + cmd.w * dt)};
}

std::pair<double, double> resolve_push(const RobotState &, const MovableBody &body, double v_cmd, const PushModel &model)
{
  const double v = model.kappa(body.movability) * v_cmd;
  return {v, v};
}

bool circle_hits_rect(Point2 center, double radius, const Rect &rect)
{
  const Point2 q = rect.closest_point(center);
  return std::hypot(center.x - q.x, center.y - q.y) < radius - kOverlapEps;
}

bool rects_overlap(const Rect &a, const Rect &b)
{
  return a.min_x() < b.max_x() - kOverlapEps && b.min_x() < a.max_x() - kOverlapEps &&
         a.min_y() < b.max_y() - kOverlapEps && b.min_y() < a.max_y() - kOverlapEps;
}

bool circle_hits_walls(const CostGrid &walls, Point2 center, double radius)
{
  const GridMeta &m = walls.meta();
  const double res = m.resolution;
  const int c0 = static_cast<int>(std::floor((center.x - radius - m.origin.x) / res));
  const int c1 = static_cast<int>(std::floor((center.x + radius - m.origin.x) / res));
  const int r0 = static_cast<int>(std::floor((center.y - radius - m.origin.y) / res));
  const int r1 = static_cast<int>(std::floor((center.y + radius - m.origin.y) / res));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const Rect cell{m.cell_center({c, r}), {0.5 * res, 0.5 * res}};
      if (!circle_hits_rect(center, radius, cell)) {
        continue;
      }
      // Outside the map counts as wall.
      if (!m.contains({c, r}) || walls.at({c, r}) == cost::kLethal) {
        return true;
      }
    }
  }
  return false;
}

bool rect_hits_walls(const CostGrid &walls, const Rect &rect)
{
  const GridMeta &m = walls.meta();
  const double res = m.resolution;
  const int c0 = static_cast<int>(std::floor((rect.min_x() - m.origin.x) / res));
  const int c1 = static_cast<int>(std::floor((rect.max_x() - m.origin.x) / res));
  const int r0 = static_cast<int>(std::floor((rect.min_y() - m.origin.y) / res));
  const int r1 = static_cast<int>(std::floor((rect.max_y() - m.origin.y) / res));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const Rect cell{m.cell_center({c, r}), {0.5 * res, 0.5 * res}};
      if (!rects_overlap(rect, cell)) {
        continue;
      }
      if (!m.contains({c, r}) || walls.at({c, r}) == cost::kLethal) {
        return true;
      }
    }
  }
  return false;
}

WorldState step(const WorldState &world, Command cmd, double dt, const WorldParams &params)
{
  WorldState next = world;
  next.touching.clear();
  dt = std::clamp(dt, 1e-6, 0.1);
  const RobotLimits &lim = params.limits;
  const double v = std::clamp(cmd.v, -lim.v_max, lim.v_max);
  const double w = std::clamp(cmd.w, -lim.w_max, lim.w_max);
  const double radius = world.robot.footprint_radius;

  const Pose2 &pose = world.robot.pose;
  const double heading = pose.theta + 0.5 * w * dt;
  const double sign = v < 0.0 ? -1.0 : 1.0;
  const Vec u{sign * std::cos(heading), sign * std::sin(heading)};
  const double len = std::abs(v) * dt;
  const std::size_t nb = world.bodies.size();

  Point2 pos = pose.position();
  double travelled = 0.0;
  std::set<int> touching;

  if (len > 0.0) {
    const std::vector<bool> none(nb, false);
    double free = free_travel(len, [&](double s) { return robot_blocked(world, offset(pos, u, s), radius, none); });
    if (free >= len) {
      pos = offset(pos, u, len);
      travelled = len;
    } else {
      if (free < kContactTol) {
        free = 0.0;
      }
      pos = offset(pos, u, free);
      travelled = free;
      const double remaining = len - free;

      // What stops the robot at the contact point.
      const Point2 probe = offset(pos, u, kProbe);
      bool blocked = circle_hits_walls(world.static_map, probe, radius);
      std::vector<bool> in_chain(nb, false);
      std::vector<std::size_t> chain;
      for (std::size_t i = 0; i < nb; ++i) {
        const Rect &shape = world.bodies[i].shape;
        if (!circle_hits_rect(probe, radius, shape)) {
          continue;
        }
        touching.insert(world.bodies[i].id);
        const Point2 q = shape.closest_point(pos);
        const double nx = q.x - pos.x;
        const double ny = q.y - pos.y;
        const double nn = std::hypot(nx, ny);
        const double cos_angle = nn > 0.0 ? (nx * u.x + ny * u.y) / nn : 1.0;
        if (cos_angle < std::cos(params.push.max_contact_angle) - 1e-12) {
          blocked = true;
        }
        in_chain[i] = true;
        chain.push_back(i);
      }

      // Bodies hit by pushed bodies join the chain.
      for (std::size_t k = 0; k < chain.size() && !blocked; ++k) {
        const Rect moved = shifted(world.bodies[chain[k]].shape, u, remaining);
        for (std::size_t j = 0; j < nb; ++j) {
          if (!in_chain[j] && rects_overlap(moved, world.bodies[j].shape)) {
            in_chain[j] = true;
            chain.push_back(j);
          }
        }
      }

      double kappa = 1.0;
      for (std::size_t i : chain) {
        kappa = std::min(kappa, params.push.kappa(world.bodies[i].movability));
      }
      if (!blocked && !chain.empty() && kappa > 0.0) {
        const double push_len = kappa * remaining;
        std::vector<bool> ignore_for_robot = in_chain;
        double g = free_travel(push_len, [&](double s) { return robot_blocked(world, offset(pos, u, s), radius, ignore_for_robot); });
        for (std::size_t i : chain) {
          const Rect &shape = world.bodies[i].shape;
          g = std::min(g, free_travel(push_len, [&](double s) {
            const Rect r = shifted(shape, u, s);
            if (rect_hits_walls(world.static_map, r)) {
              return true;
            }
            for (std::size_t j = 0; j < nb; ++j) {
              if (!in_chain[j] && rects_overlap(r, world.bodies[j].shape)) {
                return true;
              }
            }
            return false;
          }));
        }
        // A chain that cannot move at all is jammed.
        if (g > 0.0) {
          pos = offset(pos, u, g);
          travelled += g;
          for (std::size_t i : chain) {
            next.bodies[i].shape = shifted(world.bodies[i].shape, u, g);
          }
        }
      }
    }
  }

  next.robot.pose = {pos.x, pos.y, normalize_angle(pose.theta + w * dt)};
  next.robot.v = sign * travelled / dt;
  next.robot.w = w;
  next.time = world.time + dt;
  next.touching.assign(touching.begin(), touching.end());
  return next;
}

std::vector<double> beam_angles(const ScanParams &params)
{
  std::vector<double> out(static_cast<std::size_t>(std::max(params.n_rays, 0)));
  if (out.empty()) {
    return out;
  }
  const bool full_circle = params.fov >= 2.0 * 3.141592653589793 - 1e-9;
  const double step = (full_circle || out.size() == 1) ? params.fov / static_cast<double>(out.size())
                                                       : params.fov / static_cast<double>(out.size() - 1);
  const double start = out.size() == 1 ? 0.0 : -0.5 * params.fov;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = start + step * static_cast<double>(i);
  }
  return out;
}

namespace
{

// Slab test; returns the entry distance along the ray or +inf.
double ray_rect(Point2 o, double dx, double dy, const Rect &r)
{
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  const double lo[2] = {r.min_x(), r.min_y()};
  const double hi[2] = {r.max_x(), r.max_y()};
  const double org[2] = {o.x, o.y};
  const double dir[2] = {dx, dy};
  for (int a = 0; a < 2; ++a) {
    if (dir[a] == 0.0) {
      if (org[a] < lo[a] || org[a] > hi[a]) {
        return std::numeric_limits<double>::infinity();
      }
      continue;
    }
    double ta = (lo[a] - org[a]) / dir[a];
    double tb = (hi[a] - org[a]) / dir[a];
    if (ta > tb) {
      std::swap(ta, tb);
    }
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return t0;
}

// Grid traversal (Amanatides & Woo). Returns entry distance into the first
// LETHAL cell, or +inf once the ray leaves the grid or passes max_range.
double ray_walls(const CostGrid &walls, Point2 o, double dx, double dy, double max_range)
{
  const GridMeta &m = walls.meta();
  const double res = m.resolution;
  const double gx = (o.x - m.origin.x) / res;
  const double gy = (o.y - m.origin.y) / res;
  int c = static_cast<int>(std::floor(gx));
  int r = static_cast<int>(std::floor(gy));
  if (!m.contains({c, r})) {
    return std::numeric_limits<double>::infinity();
  }
  if (walls.at({c, r}) == cost::kLethal) {
    return 0.0;
  }
  const int step_c = dx > 0 ? 1 : -1;
  const int step_r = dy > 0 ? 1 : -1;
  const double inf = std::numeric_limits<double>::infinity();
  // Boundary crossings computed from absolute cell edges to avoid drift.
  auto next_t = [&](int cell, int stepv, double org, double dir, double origin) {
    if (dir == 0.0) {
      return inf;
    }
    const double edge = origin + (stepv > 0 ? cell + 1 : cell) * res;
    return (edge - org) / dir;
  };
  double tx = next_t(c, step_c, o.x, dx, m.origin.x);
  double ty = next_t(r, step_r, o.y, dy, m.origin.y);
  while (true) {
    double t;
    if (tx < ty) {
      t = tx;
      c += step_c;
    } else {
      t = ty;
      r += step_r;
    }
    if (t > max_range || !m.contains({c, r})) {
      return inf;
    }
    if (walls.at({c, r}) == cost::kLethal) {
      return t;
    }
    if (tx < ty) {
      tx = next_t(c, step_c, o.x, dx, m.origin.x);
    } else {
      ty = next_t(r, step_r, o.y, dy, m.origin.y);
    }
  }
}

}  // namespace

double cast_ray(const WorldState &world, Point2 origin, double heading, double max_range)
{
  const double dx = std::cos(heading);
  const double dy = std::sin(heading);
  double t = ray_walls(world.static_map, origin, dx, dy, max_range);
  for (const auto &b : world.bodies) {
    t = std::min(t, ray_rect(origin, dx, dy, b.shape));
  }
  return t <= max_range ? t : max_range;
}

Scan simulate_lidar(const WorldState &world, const ScanParams &params, std::uint64_t rng_seed)
{
  Scan scan;
  scan.max_range = params.max_range;
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const Pose2 &p = world.robot.pose;
  for (double a : beam_angles(params)) {
    double range = cast_ray(world, p.position(), p.theta + a, params.max_range);
    if (range < params.max_range && params.range_noise_sigma > 0.0) {
      range += params.range_noise_sigma * noise(rng);
      range = std::clamp(range, 1e-3, params.max_range);
    }
    scan.rays.push_back({a, range});
  }
  return scan;
}

}  // namespace namo
