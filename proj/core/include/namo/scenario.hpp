#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "namo/config.hpp"
#include "namo/grid.hpp"
#include "namo/world.hpp"

namespace namo
{

class ValidationError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct Scenario
{
  std::string name;
  std::string description;
  CostGrid static_map;
  Pose2 robot_start{};
  Point2 goal{};
  std::vector<MovableBody> bodies;
  Params params{};
  bool baseline_mode{false};
  /// Per-trial Gaussian perturbation of the start pose (sigma, m and rad).
  double start_jitter_xy{0.0};
  double start_jitter_theta{0.0};
};

/// Parses a scenario document. `base_dir` resolves a relative `map.pgm` path.
/// Throws ParseError (with line and field) on malformed input and
/// ValidationError when the parsed scenario violates an invariant.
Scenario parse_scenario(std::string_view yaml, const std::filesystem::path &base_dir, const std::string &source = "<scenario>");

Scenario load_scenario(const std::filesystem::path &path);

/// Start and goal inside the map on free cells, start footprint clear of
/// walls and bodies, bodies inside the map, off the walls and disjoint,
/// unique body ids, positive sizes.
void validate(const Scenario &scenario);

/// Static map from ASCII rows, first row at the top: '#' wall, '.' or ' '
/// free, '?' unknown. All rows must have equal length.
CostGrid grid_from_ascii(const std::vector<std::string> &rows, double resolution, Point2 origin = {});

}  // namespace namo
