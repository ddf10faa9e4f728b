#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "namo/costmap_layers.hpp"
#include "namo/scenario.hpp"

namespace namo
{

struct EscalationRecord
{
  double time{0.0};
  CostLevel level{CostLevel::Heavy};
  Pose2 pose{};
  std::optional<int> cluster_id;  ///< cluster the event landed on
  std::optional<int> body_id;     ///< ground-truth body under that cluster
};

struct TickRecord
{
  double time{0.0};
  Pose2 pose{};
  Command cmd{};
  double measured_speed{0.0};
  bool recovering{false};
  std::vector<int> touching;
  /// (body id, level) for every visible cluster that sits on a body.
  std::vector<std::pair<int, CostLevel>> body_levels;
  /// (cluster id, level) for every tracked cluster.
  std::vector<std::pair<int, CostLevel>> cluster_levels;
};

/// Everything the metrics are computed from.
struct TrialLog
{
  std::string scenario;
  std::uint64_t seed{0};
  bool baseline{false};
  double timeout{0.0};
  bool reached_goal{false};
  double end_time{0.0};
  std::vector<MovableBody> bodies;  ///< ground truth at start
  std::vector<TickRecord> ticks;
  std::vector<EscalationRecord> escalations;
};

struct TrialMetrics
{
  bool success{false};
  double nav_time{0.0};
  std::map<int, CostLevel> final_levels;
  bool movability_correct{false};
  std::vector<EscalationRecord> escalation_log;
  std::uint64_t seed{0};
};

/// Level a correct classifier assigns to a body of the given class.
CostLevel expected_level(Movability m);

/// Pure function of the log. A body's final level is the highest level any
/// cluster on it reached; bodies never seen stay Light. Contacted bodies are
/// correct when their final level matches expected_level(); never-contacted
/// bodies are correct only while still Light.
TrialMetrics compute_metrics(const TrialLog &log);

/// Ground-truth body whose rectangle, grown by `margin`, contains `p`;
/// nearest center wins, then lower id.
std::optional<int> associate_body(Point2 p, const std::vector<MovableBody> &bodies, double margin);

struct TrialOptions
{
  /// Overrides the scenario's baseline_mode when set.
  std::optional<bool> baseline;
  /// Write one costmap PNG per tick here when non-empty.
  std::filesystem::path frames_dir;
  int frame_scale{4};
};

struct TrialResult
{
  TrialMetrics metrics;
  TrialLog log;
};

/// Closed loop until the goal tolerance is reached or the timeout expires.
/// Deterministic for a given scenario, seed and options.
TrialResult run_trial(const Scenario &scenario, std::uint64_t seed, const TrialOptions &options = {});

struct BatchSummary
{
  std::string scenario;
  int n_trials{0};
  double success_rate{0.0};           ///< adaptive, percent
  double baseline_success_rate{0.0};  ///< percent
  std::optional<double> mean_time_adaptive;  ///< over successful trials; nullopt if none
  std::optional<double> mean_time_baseline;  ///< nullopt means Impossible
  double movability_accuracy{0.0};    ///< adaptive, percent
};

/// Aggregates per-trial metrics. Mean times average the successful trials.
BatchSummary summarize(const std::string &scenario, const std::vector<TrialMetrics> &adaptive, const std::vector<TrialMetrics> &baseline);

/// Seeds seed0 .. seed0 + n_trials - 1, each in adaptive and baseline mode.
/// Throws std::invalid_argument when n_trials < 1.
BatchSummary run_batch(const Scenario &scenario, int n_trials, std::uint64_t seed0);

std::string csv_header();
std::string csv_row(const BatchSummary &s);

/// Line-oriented text dump of one trial's metrics.
std::string format_metrics(const TrialMetrics &m);

/// Line-oriented text dump of the trajectory and escalation logs.
std::string format_log(const TrialLog &log);

}  // namespace namo
