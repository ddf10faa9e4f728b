#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "namo/costmap_layers.hpp"
#include "namo/planning.hpp"
#include "namo/progress_checker.hpp"
#include "namo/world.hpp"

namespace namo
{

struct SimParams
{
  double dt{0.1};
  double timeout{180.0};
  double goal_tolerance{0.25};
  double replan_period{2.0};
  double recovery_duration{1.5};
  double recovery_speed{-0.3};
  /// How far to look for a free start cell when the robot sits in inflated lethal space.
  double start_search_radius{0.6};
};

/// Optional localization/odometry noise; all zero by default.
struct NoiseParams
{
  double pose_sigma_xy{0.0};
  double pose_sigma_theta{0.0};
  double speed_sigma{0.0};
};

/// Every tunable of the pipeline. Defaults are the shipped configuration.
struct Params
{
  RobotLimits robot{};
  PushModel push{};
  ScanParams lidar{};
  MovableLayerParams movable_layer{};
  CheckerParams checker{};
  PlannerParams planner{};
  MppiParams mppi{};
  SimParams sim{};
  NoiseParams noise{};
};

class ParseError : public std::runtime_error
{
public:
  ParseError(const std::string &source, int line, const std::string &field, const std::string &what);

  int line() const { return line_; }
  const std::string &field() const { return field_; }

private:
  int line_;
  std::string field_;
};

/// Applies a YAML config document (sections robot, push, lidar, movable_layer,
/// checker, planner, mppi, sim, noise) on top of `params`. Unknown sections or
/// keys are errors.
void apply_config_text(Params &params, std::string_view yaml, const std::string &source = "<config>");
void apply_config_file(Params &params, const std::filesystem::path &path);

/// Dotted names of every overridable key, e.g. "checker.drop_ratio".
std::vector<std::string> config_keys();

/// Full parameter set as a YAML document.
std::string dump_config(const Params &params);

}  // namespace namo
