#include "namo/config.hpp"

#include "config_yaml.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace namo
{

ParseError::ParseError(const std::string &source, int line, const std::string &field, const std::string &what)
: std::runtime_error(source + ":" + std::to_string(line) + ": " + (field.empty() ? "" : field + ": ") + what),
  line_(line),
  field_(field)
{
}

namespace
{

constexpr double kDeg = 3.14159265358979323846 / 180.0;

struct Binding
{
  const char *section;
  const char *key;
  std::function<double &(Params &)> ref;
  double scale{1.0};  // stored = scale * file value
};

#define NAMO_BIND(sec, key, expr) Binding{sec, key, [](Params &p) -> double & { return expr; }}

const std::vector<Binding> &bindings()
{
  static const std::vector<Binding> table = [] {
    std::vector<Binding> b{
      NAMO_BIND("robot", "v_max", p.robot.v_max),
      NAMO_BIND("robot", "w_max", p.robot.w_max),
      NAMO_BIND("robot", "footprint_radius", p.robot.footprint_radius),
      NAMO_BIND("push", "kappa_light", p.push.kappa_light),
      NAMO_BIND("push", "kappa_heavy", p.push.kappa_heavy),
      NAMO_BIND("push", "kappa_immovable", p.push.kappa_immovable),
      NAMO_BIND("lidar", "fov", p.lidar.fov),
      NAMO_BIND("lidar", "max_range", p.lidar.max_range),
      NAMO_BIND("lidar", "range_noise_sigma", p.lidar.range_noise_sigma),
      NAMO_BIND("movable_layer", "wall_distance_threshold", p.movable_layer.wall_distance_threshold),
      NAMO_BIND("movable_layer", "cluster_match_radius", p.movable_layer.cluster_match_radius),
      NAMO_BIND("movable_layer", "occlusion_memory", p.movable_layer.occlusion_memory),
      NAMO_BIND("movable_layer", "inflation_radius", p.movable_layer.inflation_radius),
      NAMO_BIND("movable_layer", "decay_rate", p.movable_layer.decay_rate),
      NAMO_BIND("checker", "drop_ratio", p.checker.drop_ratio),
      NAMO_BIND("checker", "freeze_window", p.checker.freeze_window),
      NAMO_BIND("checker", "settling_period", p.checker.settling_period),
      NAMO_BIND("checker", "cooldown", p.checker.cooldown),
      NAMO_BIND("checker", "stall_speed", p.checker.stall_speed),
      NAMO_BIND("checker", "stall_window", p.checker.stall_window),
      NAMO_BIND("checker", "rotation_omega_threshold", p.checker.rotation_omega_threshold),
      NAMO_BIND("checker", "min_command_speed", p.checker.min_command_speed),
      NAMO_BIND("checker", "episode_clear_time", p.checker.episode_clear_time),
      NAMO_BIND("checker", "baseline_alpha", p.checker.baseline_alpha),
      NAMO_BIND("planner", "w_cost", p.planner.w_cost),
      NAMO_BIND("mppi", "dt", p.mppi.dt),
      NAMO_BIND("mppi", "sigma_v", p.mppi.sigma_v),
      NAMO_BIND("mppi", "sigma_w", p.mppi.sigma_w),
      NAMO_BIND("mppi", "temperature", p.mppi.temperature),
      NAMO_BIND("mppi", "noise_correlation", p.mppi.noise_correlation),
      NAMO_BIND("mppi", "w_path", p.mppi.weights.path),
      NAMO_BIND("mppi", "w_costmap", p.mppi.weights.costmap),
      NAMO_BIND("mppi", "w_goal", p.mppi.weights.goal),
      NAMO_BIND("mppi", "w_effort", p.mppi.weights.effort),
      NAMO_BIND("mppi", "near_goal_distance", p.mppi.weights.near_goal_distance),
      NAMO_BIND("mppi", "lookahead_margin", p.mppi.lookahead_margin),
      NAMO_BIND("sim", "dt", p.sim.dt),
      NAMO_BIND("sim", "timeout", p.sim.timeout),
      NAMO_BIND("sim", "goal_tolerance", p.sim.goal_tolerance),
      NAMO_BIND("sim", "replan_period", p.sim.replan_period),
      NAMO_BIND("sim", "recovery_duration", p.sim.recovery_duration),
      NAMO_BIND("sim", "recovery_speed", p.sim.recovery_speed),
      NAMO_BIND("sim", "start_search_radius", p.sim.start_search_radius),
      NAMO_BIND("noise", "pose_sigma_xy", p.noise.pose_sigma_xy),
      NAMO_BIND("noise", "pose_sigma_theta", p.noise.pose_sigma_theta),
      NAMO_BIND("noise", "speed_sigma", p.noise.speed_sigma),
    };
    Binding angle = NAMO_BIND("push", "max_contact_angle_deg", p.push.max_contact_angle);
    angle.scale = kDeg;
    b.push_back(angle);
    return b;
  }();
  return table;
}

#undef NAMO_BIND

// Integer-valued keys are kept apart from the double table.
struct IntBinding
{
  const char *section;
  const char *key;
  int &(*ref)(Params &);
};

const std::vector<IntBinding> &int_bindings()
{
  static const std::vector<IntBinding> table{
    {"lidar", "n_rays", [](Params &p) -> int & { return p.lidar.n_rays; }},
    {"mppi", "horizon", [](Params &p) -> int & { return p.mppi.horizon; }},
    {"mppi", "n_samples", [](Params &p) -> int & { return p.mppi.n_samples; }},
  };
  return table;
}

int line_of(const YAML::Node &n) { return n.Mark().line + 1; }

}  // namespace

namespace detail
{

void apply_config_node(Params &params, const YAML::Node &root, const std::string &source)
{
  if (!root || root.IsNull()) {
    return;
  }
  if (!root.IsMap()) {
    throw ParseError(source, line_of(root), "", "config must be a mapping of sections");
  }
  for (const auto &sec : root) {
    const std::string sname = sec.first.as<std::string>();
    const YAML::Node &body = sec.second;
    bool known_section = false;
    for (const auto &b : bindings()) {
      known_section = known_section || sname == b.section;
    }
    for (const auto &b : int_bindings()) {
      known_section = known_section || sname == b.section;
    }
    if (!known_section) {
      throw ParseError(source, line_of(sec.first), sname, "unknown config section");
    }
    if (body.IsNull()) {
      continue;
    }
    if (!body.IsMap()) {
      throw ParseError(source, line_of(body), sname, "section must be a mapping");
    }
    for (const auto &kv : body) {
      const std::string key = kv.first.as<std::string>();
      const std::string field = sname + "." + key;
      bool matched = false;
      for (const auto &b : bindings()) {
        if (sname != b.section || key != b.key) {
          continue;
        }
        double v = 0.0;
        try {
          v = kv.second.as<double>();
        } catch (const YAML::Exception &) {
          throw ParseError(source, line_of(kv.second), field, "expected a number");
        }
        if (!std::isfinite(v)) {
          throw ParseError(source, line_of(kv.second), field, "value must be finite");
        }
        b.ref(params) = v * b.scale;
        matched = true;
      }
      for (const auto &b : int_bindings()) {
        if (sname != b.section || key != b.key) {
          continue;
        }
        int v = 0;
        try {
          v = kv.second.as<int>();
        } catch (const YAML::Exception &) {
          throw ParseError(source, line_of(kv.second), field, "expected an integer");
        }
        if (v < 1) {
          throw ParseError(source, line_of(kv.second), field, "must be at least 1");
        }
        b.ref(params) = v;
        matched = true;
      }
      if (!matched) {
        throw ParseError(source, line_of(kv.first), field, "unknown config key");
      }
    }
  }
}

}  // namespace detail

void apply_config_text(Params &params, std::string_view yaml, const std::string &source)
{
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::ParserException &e) {
    throw ParseError(source, e.mark.line + 1, "", e.msg);
  }
  detail::apply_config_node(params, root, source);
}

void apply_config_file(Params &params, const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in) {
    throw ParseError(path.string(), 0, "", "cannot open file");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(params, ss.str(), path.string());
}

std::vector<std::string> config_keys()
{
  std::vector<std::string> keys;
  for (const auto &b : bindings()) {
    keys.push_back(std::string(b.section) + "." + b.key);
  }
  for (const auto &b : int_bindings()) {
    keys.push_back(std::string(b.section) + "." + b.key);
  }
  return keys;
}

std::string dump_config(const Params &params)
{
  Params copy = params;
  YAML::Emitter out;
  out.SetDoublePrecision(15);
  out << YAML::BeginMap;
  std::string current;
  auto open = [&](const std::string &section) {
    if (section != current) {
      if (!current.empty()) {
        out << YAML::EndMap;
      }
      out << YAML::Key << section << YAML::Value << YAML::BeginMap;
      current = section;
    }
  };
  for (const char *section :
       {"robot", "push", "lidar", "movable_layer", "checker", "planner", "mppi", "sim", "noise"}) {
    for (const auto &b : int_bindings()) {
      if (std::string_view(b.section) == section) {
        open(section);
        out << YAML::Key << b.key << YAML::Value << b.ref(copy);
      }
    }
    for (const auto &b : bindings()) {
      if (std::string_view(b.section) == section) {
        open(section);
        out << YAML::Key << b.key << YAML::Value << b.ref(copy) / b.scale;
      }
    }
  }
  if (!current.empty()) {
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace namo
