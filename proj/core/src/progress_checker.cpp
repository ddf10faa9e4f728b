#include "namo/progress_checker.hpp"

#include <algorithm>
#include <cmath>

namespace namo
{

namespace
{

// Tick times are sums of dt; absorb the rounding when comparing durations.
constexpr double kTimeEps = 1e-9;

bool elapsed(const std::optional<double> &since, double now, double window)
{
  return since && now - *since >= window - kTimeEps;
}

}  // namespace

std::string_view to_string(CheckerPhase p)
{
  switch (p) {
    case CheckerPhase::Settling: return "settling";
    case CheckerPhase::Monitoring: return "monitoring";
    case CheckerPhase::Cooldown: return "cooldown";
  }
  return "?";
}

CheckerOutput update(const CheckerState &state, const CheckerParams &params, const CheckerInput &in)
{
  CheckerOutput out{state, std::nullopt};
  CheckerState &s = out.state;
  const double now = in.now;
  const double measured = std::max(0.0, in.measured_speed);
  const double cmd = std::abs(in.cmd_v);

  if (!s.started_at) {
    s.started_at = now;
  }
  if (!elapsed(s.started_at, now, params.settling_period)) {
    s.phase = CheckerPhase::Settling;
    s.below_since.reset();
    s.stalled_since.reset();
    return out;
  }

  const bool rotating = cmd < params.min_command_speed && std::abs(in.cmd_w) > params.rotation_omega_threshold;
  const bool judged = !rotating && cmd >= params.min_command_speed;
  const bool below = judged && measured < params.drop_ratio * cmd;
  const bool stalled = judged && measured < params.stall_speed;

  if (judged && !below) {
    s.baseline_speed += params.baseline_alpha * (measured - s.baseline_speed);
  }

  if (below) {
    if (!s.below_since) {
      s.below_since = now;
    }
  } else {
    s.below_since.reset();
  }

  if (s.episode_active) {
    if (below) {
      s.clear_since.reset();
    } else if (!s.clear_since) {
      s.clear_since = now;
    }
    if (elapsed(s.clear_since, now, params.episode_clear_time)) {
      s.episode_active = false;
      s.lethal_sent = false;
      s.clear_since.reset();
      s.stalled_since.reset();
    }
  }

  if (s.episode_active && stalled) {
    if (!s.stalled_since) {
      s.stalled_since = now;
    }
  } else {
    s.stalled_since.reset();
  }

  const bool cooled = !s.last_trigger || elapsed(s.last_trigger, now, params.cooldown);
  if (cooled) {
    if (s.episode_active && !s.lethal_sent && elapsed(s.stalled_since, now, params.stall_window)) {
      out.event = EscalationEvent{CostLevel::Lethal, in.pose, now};
      s.lethal_sent = true;
    } else if (!s.episode_active && elapsed(s.below_since, now, params.freeze_window)) {
      out.event = EscalationEvent{CostLevel::Heavy, in.pose, now};
      s.episode_active = true;
      s.lethal_sent = false;
      s.clear_since.reset();
      s.below_since.reset();
      // The stall clock starts at the Heavy trigger.
      s.stalled_since = stalled ? std::optional<double>(now) : std::nullopt;
    }
  }
  if (out.event) {
    s.last_trigger = now;
  }

  s.phase = (s.last_trigger && !elapsed(s.last_trigger, now, params.cooldown)) ? CheckerPhase::Cooldown
                                                                              : CheckerPhase::Monitoring;
  return out;
}

}  // namespace namo
