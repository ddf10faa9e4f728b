#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "namo/grid.hpp"

namespace namo
{

/// Ground-truth movability of a simulated body.
enum class Movability { Light, Heavy, Immovable };

std::string_view to_string(Movability m);

/// Axis-aligned rectangle, center and half-extents in meters.
struct Rect
{
  Point2 center{};
  Point2 half{};

  double min_x() const { return center.x - half.x; }
  double max_x() const { return center.x + half.x; }
  double min_y() const { return center.y - half.y; }
  double max_y() const { return center.y + half.y; }
  bool contains(Point2 p) const
  {
    return p.x >= min_x() && p.x <= max_x() && p.y >= min_y() && p.y <= max_y();
  }
  Point2 closest_point(Point2 p) const;
};

struct MovableBody
{
  int id{0};
  Rect shape{};
  Movability movability{Movability::Light};
};

struct RobotState
{
  Pose2 pose{};
  double v{0.0};  ///< achieved linear velocity of the last step [m/s]
  double w{0.0};  ///< achieved angular velocity of the last step [rad/s]
  double footprint_radius{0.3};
};

struct RobotLimits
{
  double v_max{1.0};
  double w_max{1.5};
  double footprint_radius{0.3};
};

/// Quasi-static push model: a pushed chain of bodies moves with the robot at
/// kappa * v_cmd, where kappa is the smallest coefficient in the chain.
struct PushModel
{
  double kappa_light{0.85};
  double kappa_heavy{0.25};
  double kappa_immovable{0.0};
  double max_contact_angle{0.7853981633974483};  ///< 45 deg

  double kappa(Movability m) const;
};

struct WorldParams
{
  RobotLimits limits{};
  PushModel push{};
};

struct WorldState
{
  CostGrid static_map;  ///< walls are LETHAL cells
  std::vector<MovableBody> bodies;
  RobotState robot{};
  double time{0.0};
  std::vector<int> touching;  ///< body ids in contact with the robot during the last step
};

struct Command
{
  double v{0.0};
  double w{0.0};

  friend bool operator==(const Command &, const Command &) = default;
};

/// Unicycle update with the heading taken at the middle of the interval.
Pose2 integrate_unicycle(const Pose2 &pose, Command cmd, double dt);

/// Coupled robot/body speeds for a push. Pure lookup of the push model.
std::pair<double, double> resolve_push(const RobotState &robot, const MovableBody &body, double v_cmd, const PushModel &model);

/// Advances the world by one tick. Commands are clamped to the velocity
/// limits and dt to (0, 0.1]. Motion into walls, immovable or jammed bodies,
/// or obliquely contacted bodies is stopped at contact.
WorldState step(const WorldState &world, Command cmd, double dt, const WorldParams &params = {});

// Geometry queries used by the simulator and by scenario validation.
bool circle_hits_walls(const CostGrid &walls, Point2 center, double radius);
bool rect_hits_walls(const CostGrid &walls, const Rect &rect);
bool circle_hits_rect(Point2 center, double radius, const Rect &rect);
bool rects_overlap(const Rect &a, const Rect &b);

struct ScanParams
{
  int n_rays{360};
  double fov{6.283185307179586};
  double max_range{8.0};
  double range_noise_sigma{0.01};
};

struct ScanRay
{
  double angle{0.0};  ///< robot frame [rad]
  double range{0.0};  ///< [m]; max_range means no return
};

struct Scan
{
  std::vector<ScanRay> rays;
  double max_range{0.0};
};

/// Evenly spaced beam angles over the field of view, centered on the heading.
std::vector<double> beam_angles(const ScanParams &params);

/// Exact distance along a world-frame ray to the first wall cell or body
/// surface; returns `max_range` when nothing is hit within it.
double cast_ray(const WorldState &world, Point2 origin, double heading, double max_range);

/// Planar LiDAR from the robot center. Ranges get Gaussian noise and are
/// clamped to (0, max_range]; rays without a return report max_range.
Scan simulate_lidar(const WorldState &world, const ScanParams &params, std::uint64_t rng_seed);

}  // namespace namo
