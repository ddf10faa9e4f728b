// namo_sim: run, batch and render front end for the namo library.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "namo/config.hpp"
#include "namo/map_io.hpp"
#include "namo/scenario.hpp"
#include "namo/trial.hpp"

namespace fs = std::filesystem;

namespace
{

fs::path scenario_dir()
{
  if (const char *env = std::getenv("NAMO_SCENARIO_DIR")) {
    return env;
  }
  return NAMO_DEFAULT_SCENARIO_DIR;
}

// A name such as "1-a" resolves against the bundled scenario directory.
namo::Scenario resolve_scenario(const std::string &arg, const std::string &config)
{
  fs::path p = arg;
  if (!fs::exists(p)) {
    p = scenario_dir() / (arg + ".yaml");
  }
  namo::Scenario sc = namo::load_scenario(p);
  if (!config.empty()) {
    namo::apply_config_file(sc.params, config);
    namo::validate(sc);
  }
  return sc;
}

std::vector<std::string> split_list(const std::string &s)
{
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Navigation among movable obstacles: simulation harness"};
  app.require_subcommand(1);

  std::string scenario;
  std::string config;
  std::uint64_t seed = 0;
  bool baseline = false;
  std::string frames;
  std::string log_path;
  int frame_scale = 4;
  auto *run = app.add_subcommand("run", "Run one trial; exit code 0 when the goal is reached");
  run->add_option("--scenario", scenario, "Bundled scenario name or path to a scenario file")->required();
  run->add_option("--seed", seed, "Trial seed");
  run->add_flag("--baseline", baseline, "Disable the movable layer's overrides");
  run->add_option("--export-frames", frames, "Write one costmap PNG per tick into DIR");
  run->add_option("--frame-scale", frame_scale, "Pixels per cell in exported frames")->check(CLI::Range(1, 32));
  run->add_option("--config", config, "YAML parameter overrides");
  run->add_option("--log", log_path, "Write the trajectory/escalation log to FILE");

  std::string scenarios = "1-a,1-b,1-c,2-a,2-b,2-c,3";
  int trials = 20;
  std::uint64_t seed0 = 0;
  std::string out = "results.csv";
  auto *bench = app.add_subcommand("bench", "Adaptive and baseline batches per scenario, summarized as CSV");
  bench->add_option("--scenarios", scenarios, "Comma-separated scenario names or paths");
  bench->add_option("--trials", trials, "Trials per scenario and mode")->check(CLI::PositiveNumber);
  bench->add_option("--seed0", seed0, "First seed");
  bench->add_option("--out", out, "CSV output path");
  bench->add_option("--config", config, "YAML parameter overrides");

  std::string input;
  std::string png_out;
  double resolution = 0.05;
  int scale = 1;
  auto *render = app.add_subcommand("render", "Render a PGM map or a scenario's static map to PNG");
  render->add_option("input", input, "PGM file, scenario file or bundled scenario name")->required();
  render->add_option("--out", png_out, "PNG output path")->required();
  render->add_option("--resolution", resolution, "Cell size for PGM input [m]");
  render->add_option("--scale", scale, "Pixels per cell")->check(CLI::Range(1, 64));

  std::string cfg_scenario;
  auto *show = app.add_subcommand("config", "Print the effective parameters as YAML");
  show->add_option("--scenario", cfg_scenario, "Start from this scenario's parameters");
  show->add_option("--config", config, "YAML parameter overrides");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const namo::Scenario sc = resolve_scenario(scenario, config);
      namo::TrialOptions opts;
      if (baseline) {
        opts.baseline = true;
      }
      opts.frames_dir = frames;
      opts.frame_scale = frame_scale;
      const namo::TrialResult r = namo::run_trial(sc, seed, opts);
      std::cout << "scenario " << sc.name << "\n" << namo::format_metrics(r.metrics);
      if (!log_path.empty()) {
        std::ofstream(log_path) << namo::format_log(r.log);
      }
      return r.metrics.success ? 0 : 1;
    }
    if (*bench) {
      std::ostringstream csv;
      csv << namo::csv_header() << "\n";
      std::cout << namo::csv_header() << "\n";
      for (const auto &name : split_list(scenarios)) {
        const namo::Scenario sc = resolve_scenario(name, config);
        const std::string row = namo::csv_row(namo::run_batch(sc, trials, seed0));
        csv << row << "\n";
        std::cout << row << std::endl;
      }
      std::ofstream f(out, std::ios::binary);
      if (!f) {
        std::cerr << "cannot write " << out << "\n";
        return 1;
      }
      f << csv.str();
      return 0;
    }
    if (*show) {
      namo::Params params;
      if (!cfg_scenario.empty()) {
        params = resolve_scenario(cfg_scenario, "").params;
      }
      if (!config.empty()) {
        namo::apply_config_file(params, config);
      }
      std::cout << namo::dump_config(params);
      return 0;
    }
    if (*render) {
      namo::Overlays ov;
      namo::CostGrid grid;
      fs::path p = input;
      const std::string ext = p.extension().string();
      if (ext == ".pgm") {
        grid = namo::read_pgm(p, resolution);
      } else {
        const namo::Scenario sc = resolve_scenario(input, "");
        grid = sc.static_map;
        namo::RobotState robot;
        robot.pose = sc.robot_start;
        robot.footprint_radius = sc.params.robot.footprint_radius;
        ov.robot = robot;
      }
      namo::export_costmap_image(grid, ov, png_out, scale);
      return 0;
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
