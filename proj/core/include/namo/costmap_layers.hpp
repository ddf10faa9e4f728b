#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "namo/grid.hpp"
#include "namo/world.hpp"

namespace namo
{

/// Estimated movability of an unmapped obstacle. Ordered: Light < Heavy < Lethal.
enum class CostLevel : std::uint8_t { Light = 0, Heavy = 1, Lethal = 2 };

std::string_view to_string(CostLevel l);
std::uint8_t level_cost(CostLevel l);

/// Escalation request carried on the heavy/lethal channel.
struct EscalationEvent
{
  CostLevel level{CostLevel::Heavy};
  Pose2 pose{};
  double time{0.0};
};

struct ObstacleCluster
{
  int id{0};
  std::vector<std::size_t> cells;  ///< empty while occluded
  Point2 centroid{};
  CostLevel level{CostLevel::Light};
  double last_seen{0.0};
};

struct ClusterRegistry
{
  std::map<int, ObstacleCluster> clusters;
  int next_id{1};
};

struct MovableLayerParams
{
  double wall_distance_threshold{0.3};
  double cluster_match_radius{0.4};
  double occlusion_memory{5.0};
  double inflation_radius{0.6};
  double decay_rate{5.0};
};

/// Extra veto on candidate cells (cell index -> keep?). Runs after the
/// distance-to-wall filter.
using CandidateFilter = std::function<bool(std::size_t)>;

/// Raytrace clearing then endpoint marking. `grid` is the persistent
/// obstacle layer; the updated copy is returned.
CostGrid obstacle_layer_update(const Scan &scan, const Pose2 &robot_pose, CostGrid grid);

/// Partition of `cells` into maximal 8-connected components. Each component
/// is sorted; components are ordered by their smallest cell index.
std::vector<std::vector<std::size_t>> label_clusters(std::span<const std::size_t> cells, const GridMeta &meta);

struct MovableLayerOutput
{
  CostOverrides overrides;
  ClusterRegistry registry;
};

/// Differencing against the static map, wall filter, clustering and
/// persistent-id matching. Returns the cost overrides for currently
/// visible clusters and the updated registry.
MovableLayerOutput movable_layer_update(
  const CostGrid &obstacle_layer, const CostGrid &static_map, const DistanceField &dfield, ClusterRegistry registry,
  const MovableLayerParams &params, double now, std::span<const CandidateFilter> extra_filters = {});

/// Raises the cluster nearest to the point one footprint radius ahead of the
/// robot (and within two radii of it) to at least `event.level`. Returns the
/// id of the affected cluster, or nullopt when none is in range.
std::optional<int> apply_escalation(ClusterRegistry &registry, const EscalationEvent &event, double footprint_radius);

/// Soft exponential inflation. Every cell with cost in 1..254 is a source;
/// cells within `inflation_radius` receive round(c0 * exp(-decay_rate * d)).
/// Output cells hold the max over contributions and their own cost. UNKNOWN
/// cells neither emit nor receive.
CostGrid inflate(const CostGrid &base, const MovableLayerParams &params);

/// inflate() split into a part computed once from the static map and a
/// per-call part over the cells that differ from it. Returns exactly
/// inflate(base) when base is cellwise >= the static map (ignoring static
/// UNKNOWN cells), which compose_layers guarantees; any other input falls
/// back to a full inflate().
class InflationCache
{
public:
  InflationCache(const CostGrid &static_map, MovableLayerParams params);

  CostGrid inflate(const CostGrid &base) const;

private:
  MovableLayerParams params_;
  CostGrid static_known_;  ///< static map with UNKNOWN read as FREE
  CostGrid static_inflated_;
};

/// Stateful wrapper used by the control loop: owns the registry and an
/// ordered escalation queue that is drained at the start of each update.
class MovableObstaclesLayer
{
public:
  MovableObstaclesLayer(MovableLayerParams params, double footprint_radius, bool emit_overrides = true);

  void enqueue(const EscalationEvent &event) { queue_.push_back(event); }

  struct Applied
  {
    EscalationEvent event;
    std::optional<int> cluster_id;
  };

  /// Drains queued escalations, then runs movable_layer_update.
  const CostOverrides &update(const CostGrid &obstacle_layer, const CostGrid &static_map, const DistanceField &dfield, double now);

  const ClusterRegistry &registry() const { return registry_; }
  const CostOverrides &overrides() const { return overrides_; }
  /// Escalations applied by the most recent update().
  const std::vector<Applied> &applied() const { return applied_; }

private:
  MovableLayerParams params_;
  double footprint_radius_;
  bool emit_overrides_;
  ClusterRegistry registry_;
  CostOverrides overrides_;
  std::deque<EscalationEvent> queue_;
  std::vector<Applied> applied_;
};

}  // namespace namo
