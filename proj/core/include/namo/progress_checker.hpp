#pragma once

#include <optional>
#include <string_view>

#include "namo/costmap_layers.hpp"

namespace namo
{

struct CheckerParams
{
  double drop_ratio{0.3};
  double freeze_window{0.8};
  double settling_period{2.0};
  double cooldown{3.0};
  double stall_speed{0.02};
  double stall_window{1.5};
  double rotation_omega_threshold{0.3};
  /// Commanded speeds below this are intentional slow motion and never judged.
  double min_command_speed{0.05};
  /// The ratio condition must stay clear this long to end an obstruction episode.
  double episode_clear_time{0.5};
  /// Smoothing factor of the cruise-speed estimate.
  double baseline_alpha{0.1};
};

enum class CheckerPhase { Settling, Monitoring, Cooldown };

std::string_view to_string(CheckerPhase p);

struct CheckerState
{
  CheckerPhase phase{CheckerPhase::Settling};
  std::optional<double> started_at;
  std::optional<double> below_since;
  std::optional<double> stalled_since;
  std::optional<double> clear_since;
  double baseline_speed{0.0};
  std::optional<double> last_trigger;
  bool episode_active{false};
  bool lethal_sent{false};
};

struct CheckerInput
{
  double measured_speed{0.0};
  double cmd_v{0.0};
  double cmd_w{0.0};
  double now{0.0};
  Pose2 pose{};  ///< copied into emitted events
};

struct CheckerOutput
{
  CheckerState state;
  std::optional<EscalationEvent> event;
};

/// One tick of the slow-pose progress checker. Pure function of its inputs.
///
/// A Heavy event fires when the measured speed stays below
/// drop_ratio * |cmd_v| for freeze_window seconds. That opens an obstruction
/// episode; while it lasts, a measured speed under stall_speed for
/// stall_window seconds fires one Lethal event. The episode closes once the
/// ratio condition has been clear for episode_clear_time. Nothing fires during
/// the settling period, during in-place rotation, for commands slower than
/// min_command_speed, or within cooldown of the previous event.
CheckerOutput update(const CheckerState &state, const CheckerParams &params, const CheckerInput &in);

class ProgressChecker
{
public:
  explicit ProgressChecker(CheckerParams params) : params_(params) {}

  std::optional<EscalationEvent> update(const CheckerInput &in)
  {
    auto out = namo::update(state_, params_, in);
    state_ = out.state;
    return out.event;
  }

  const CheckerState &state() const { return state_; }
  const CheckerParams &params() const { return params_; }

private:
  CheckerParams params_;
  CheckerState state_{};
};

}  // namespace namo
