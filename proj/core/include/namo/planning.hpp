#pragma once

#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "namo/grid.hpp"
#include "namo/world.hpp"

namespace namo
{

struct Path
{
  std::vector<Point2> waypoints;
  double total_cost{0.0};
};

struct PlannerParams
{
  double w_cost{8.0};
};

enum class PlanStatus { Ok, NoPath, StartBlocked };

std::string_view to_string(PlanStatus s);

struct PlanResult
{
  PlanStatus status{PlanStatus::NoPath};
  Path path;

  bool ok() const { return status == PlanStatus::Ok; }
};

/// Edge weight of a move into `cell_cost` covering `step_length` meters.
inline double edge_weight(double step_length, std::uint8_t cell_cost, double w_cost)
{
  return step_length * (1.0 + w_cost * (static_cast<double>(cell_cost) / 254.0));
}

inline bool traversable(std::uint8_t c) { return c != cost::kLethal && c != cost::kUnknown; }

/// Cost-weighted Dijkstra over the 8-connected grid. LETHAL and UNKNOWN cells
/// are untraversable. Equal-cost ties resolve to the smaller predecessor index.
PlanResult plan_global(const CostGrid &master, Point2 start, Point2 goal, const PlannerParams &params = {});

/// Footprint cost: every known cell takes the max cost over the known cells
/// whose centers lie within `radius` of its own center. UNKNOWN cells stay
/// UNKNOWN. Planning and control on this grid keep a circular footprint of
/// that radius off lethal space and price everything it would overlap.
CostGrid footprint_grid(const CostGrid &master, double radius);

/// Nearest traversable cell to `p` within `max_distance`, searched ring by ring.
std::optional<Point2> nearest_traversable(const CostGrid &grid, Point2 p, double max_distance);

using ControlSequence = std::vector<Command>;

struct MppiWeights
{
  double path{2.0};
  double costmap{3.0};
  double goal{5.0};
  double effort{0.1};
  double near_goal_distance{0.5};
};

struct MppiParams
{
  int horizon{30};
  double dt{0.1};
  int n_samples{256};
  double sigma_v{0.2};
  double sigma_w{0.4};
  double temperature{0.1};
  /// Step-to-step correlation of the sampling noise (AR(1), per-step sigma
  /// unchanged), 0 for white noise. Correlated samples tie the first command
  /// to where the whole rollout ends up.
  double noise_correlation{0.95};
  MppiWeights weights{};
  /// Extra path length kept past the horizon's reach when slicing the path.
  double lookahead_margin{0.5};
};

inline constexpr double kLethalPenalty = 1e6;

/// How a rollout relates to the robot's situation.
struct RolloutContext
{
  /// The robot's own cell is already lethal.
  bool started_in_lethal{false};
  /// The last path point is the navigation goal, not just the end of a window.
  bool path_ends_at_goal{true};
};

/// Stage plus terminal cost of one rollout. `poses[k]` is the state after
/// applying `controls[k]`; the goal is the last point of `path`. Poses on
/// LETHAL, UNKNOWN or off-grid cells add kLethalPenalty each.
///
/// With `started_in_lethal`, the leading poses that have not yet left lethal
/// space are charged the full cell cost instead: a robot already touching
/// lethal space can still rank the ways out of it. When the path ends at the
/// goal, poses within `near_goal_distance` of it pay no cell cost, so a goal
/// next to a wall or a box is not a worse place to stop than its surroundings.
double rollout_cost(
  std::span<const Pose2> poses, std::span<const Command> controls, std::span<const Point2> path, const CostGrid &master,
  const MppiWeights &weights, RolloutContext context = {});

struct MppiResult
{
  Command cmd{};
  ControlSequence nominal;
  bool degenerate{false};  ///< every rollout hit lethal space; use recovery_backup
  double best_cost{0.0};
};

/// One MPPI iteration around `nominal` (resized to the horizon if needed).
/// Samples include the unperturbed nominal. The returned nominal is the
/// softmin-weighted average shifted by one step.
MppiResult mppi_step(
  const RobotState &robot, const ControlSequence &nominal, const Path &path, const CostGrid &master, const MppiParams &params,
  const RobotLimits &limits, std::mt19937_64 &rng);

/// Local slice of `path` starting at the waypoint nearest to `from` and
/// extending `length` meters along the path.
std::span<const Point2> path_window(const Path &path, Point2 from, double length);

/// Constant reverse command for `duration` seconds, one entry per `dt`.
ControlSequence recovery_backup(const RobotState &robot, double duration = 1.5, double dt = 0.1, double speed = -0.3);

}  // namespace namo
