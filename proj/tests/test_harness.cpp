#include <gtest/gtest.h>

#include "namo/trial.hpp"

using namespace namo;

namespace
{

const std::filesystem::path kScenarios{NAMO_TEST_SCENARIO_DIR};

std::string minimal(const std::string &goal = "[1.5, 0.5]", const std::string &extra = "")
{
  return "name: t\n"
         "map:\n"
         "  resolution: 0.1\n"
         "  rows: |\n"
         "    ######################\n"
         "    #....................#\n"
         "    #....................#\n"
         "    #....................#\n"
         "    #....................#\n"
         "    #....................#\n"
         "    #....................#\n"
         "    #....................#\n"
         "    #....................#\n"
         "    ######################\n"
         "start: {x: 0.5, y: 0.5, theta: 0.0}\n"
         "goal: " + goal + "\n" + extra;
}

// 3.0 x 2.0 m of open floor.
std::string open_room()
{
  std::string doc = "name: room\nmap:\n  resolution: 0.1\n  rows: |\n";
  const std::string wall(32, '#');
  const std::string row = "#" + std::string(30, '.') + "#";
  doc += "    " + wall + "\n";
  for (int r = 0; r < 20; ++r) {
    doc += "    " + row + "\n";
  }
  doc += "    " + wall + "\n";
  return doc + "start: {x: 0.6, y: 1.1, theta: 0.0}\ngoal: [2.6, 1.1]\n";
}

TrialLog synthetic_log()
{
  TrialLog log;
  log.seed = 7;
  log.timeout = 100.0;
  log.reached_goal = true;
  log.end_time = 40.0;
  log.bodies = {{1, Rect{{5.0, 2.0}, {0.3, 0.3}}, Movability::Heavy}, {2, Rect{{8.0, 2.0}, {0.3, 0.3}}, Movability::Light}};
  TickRecord a;
  a.time = 10.0;
  a.touching = {1};
  a.body_levels = {{1, CostLevel::Light}, {2, CostLevel::Light}};
  TickRecord b = a;
  b.time = 12.0;
  b.body_levels = {{1, CostLevel::Heavy}};
  TickRecord c = a;
  c.time = 13.0;
  c.touching = {};
  c.body_levels = {{1, CostLevel::Light}};  // a second cluster on the same body
  log.ticks = {a, b, c};
  log.escalations = {{12.0, CostLevel::Heavy, {4.5, 2.0, 0.0}, 3, 1}};
  return log;
}

}  // namespace

TEST(Scenario, ParsesMinimalDocument)
{
  const Scenario s = parse_scenario(minimal(), ".");
  EXPECT_EQ(s.name, "t");
  EXPECT_EQ(s.static_map.meta().width, 22);
  EXPECT_EQ(s.static_map.meta().height, 10);
  EXPECT_EQ(s.static_map.at({0, 9}), cost::kLethal);
  EXPECT_EQ(s.goal, (Point2{1.5, 0.5}));
  EXPECT_FALSE(s.baseline_mode);
  EXPECT_NO_THROW(validate(s));
}

TEST(Scenario, GoalInsideWallFailsValidation)
{
  EXPECT_THROW(validate(parse_scenario(minimal("[0.05, 0.05]"), ".")), ValidationError);
}

TEST(Scenario, BodyRulesValidated)
{
  const auto with = [](const std::string &bodies) { return parse_scenario(minimal("[1.5, 0.5]", "bodies:\n" + bodies), "."); };
  EXPECT_NO_THROW(validate(with("  - {id: 1, center: [1.2, 0.5], half_extents: [0.1, 0.1], class: light}\n")));
  EXPECT_THROW(
    validate(with("  - {id: 1, center: [1.2, 0.5], half_extents: [0.1, 0.1], class: light}\n"
                  "  - {id: 1, center: [1.8, 0.6], half_extents: [0.05, 0.05], class: heavy}\n")),
    ValidationError);
  EXPECT_THROW(validate(with("  - {id: 1, center: [0.6, 0.5], half_extents: [0.1, 0.1], class: light}\n")), ValidationError);
  EXPECT_THROW(validate(with("  - {id: 1, center: [1.2, 0.1], half_extents: [0.1, 0.1], class: light}\n")), ValidationError);
  EXPECT_THROW(with("  - {id: 1, center: [1.2, 0.5], half_extents: [0.1, 0.1], class: glass}\n"), ParseError);
}

TEST(Scenario, ParseErrorsCarryLineAndField)
{
  try {
    parse_scenario(minimal("[1.5, 0.5]", "colour: red\n"), ".", "s.yaml");
    FAIL();
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line(), 17);
    EXPECT_EQ(e.field(), "colour");
  }
  try {
    parse_scenario(minimal("[1.5]"), ".", "s.yaml");
    FAIL();
  } catch (const ParseError &e) {
    EXPECT_EQ(e.field(), "goal");
  }
  EXPECT_THROW(parse_scenario(minimal("[1.5, 0.5]", "params:\n  checker:\n    nope: 1\n"), "."), ParseError);
}

TEST(Scenario, ParamsOverrideDefaults)
{
  const Scenario s = parse_scenario(minimal("[1.5, 0.5]", "params:\n  checker:\n    drop_ratio: 0.4\n"), ".");
  EXPECT_EQ(s.params.checker.drop_ratio, 0.4);
}

TEST(Scenario, AsciiGridRowsTopFirst)
{
  const CostGrid g = grid_from_ascii({"#?", ". "}, 0.1);
  EXPECT_EQ(g.at({0, 1}), cost::kLethal);
  EXPECT_EQ(g.at({1, 1}), cost::kUnknown);
  EXPECT_EQ(g.at({0, 0}), cost::kFree);
  EXPECT_EQ(g.at({1, 0}), cost::kFree);
  EXPECT_THROW(grid_from_ascii({"##", "#"}, 0.1), ValidationError);
}

TEST(Scenario, BundledLayouts)
{
  const Scenario a = load_scenario(kScenarios / "1-a.yaml");
  ASSERT_EQ(a.bodies.size(), 1u);
  EXPECT_EQ(a.bodies[0].movability, Movability::Light);
  EXPECT_EQ(a.bodies[0].shape.center, (Point2{6.0, 2.0}));
  const Scenario b = load_scenario(kScenarios / "2-b.yaml");
  ASSERT_EQ(b.bodies.size(), 3u);
  EXPECT_EQ(b.bodies[0].movability, Movability::Heavy);
  EXPECT_EQ(b.bodies[1].movability, Movability::Light);
  EXPECT_EQ(b.bodies[2].movability, Movability::Immovable);
  for (const char *name : {"1-a", "1-b", "1-c", "2-a", "2-b", "2-c", "3"}) {
    EXPECT_NO_THROW(validate(load_scenario(kScenarios / (std::string(name) + ".yaml")))) << name;
  }
}

TEST(Metrics, ExpectedLevels)
{
  EXPECT_EQ(expected_level(Movability::Light), CostLevel::Light);
  EXPECT_EQ(expected_level(Movability::Heavy), CostLevel::Heavy);
  EXPECT_EQ(expected_level(Movability::Immovable), CostLevel::Lethal);
}

TEST(Metrics, ComputedFromLog)
{
  const TrialLog log = synthetic_log();
  const TrialMetrics m = compute_metrics(log);
  EXPECT_TRUE(m.success);
  EXPECT_EQ(m.nav_time, 40.0);
  EXPECT_EQ(m.seed, 7u);
  EXPECT_EQ(m.final_levels.at(1), CostLevel::Heavy);
  EXPECT_EQ(m.final_levels.at(2), CostLevel::Light);
  EXPECT_TRUE(m.movability_correct);
  ASSERT_EQ(m.escalation_log.size(), 1u);
  EXPECT_EQ(m.escalation_log[0].body_id, 1);
  // Pure: same log, same answer.
  const TrialMetrics again = compute_metrics(log);
  EXPECT_EQ(again.final_levels, m.final_levels);
  EXPECT_EQ(again.movability_correct, m.movability_correct);
}

TEST(Metrics, WrongLevelsAreIncorrect)
{
  TrialLog log = synthetic_log();
  log.ticks.back().body_levels.push_back({2, CostLevel::Heavy});  // untouched light body escalated
  EXPECT_FALSE(compute_metrics(log).movability_correct);
  log = synthetic_log();
  log.ticks[1].body_levels = {{1, CostLevel::Lethal}};
  EXPECT_FALSE(compute_metrics(log).movability_correct);
  log = synthetic_log();
  log.reached_goal = false;
  EXPECT_FALSE(compute_metrics(log).success);
  log = synthetic_log();
  log.end_time = 100.5;
  EXPECT_FALSE(compute_metrics(log).success);
}

TEST(Metrics, AssociateBodyNearestWins)
{
  const std::vector<MovableBody> bodies{{4, Rect{{1.0, 0.0}, {0.2, 0.2}}, Movability::Light}, {2, Rect{{1.6, 0.0}, {0.2, 0.2}}, Movability::Light}};
  EXPECT_EQ(associate_body({1.25, 0.0}, bodies, 0.25), 4);
  EXPECT_EQ(associate_body({1.3, 0.0}, bodies, 0.25), 2);
  EXPECT_EQ(associate_body({1.3, 3.0}, bodies, 0.25), std::nullopt);
}

TEST(Summary, SingleTrial)
{
  TrialMetrics ok;
  ok.success = true;
  ok.nav_time = 30.0;
  ok.movability_correct = true;
  TrialMetrics fail;
  const BatchSummary s = summarize("x", {ok}, {fail});
  EXPECT_EQ(s.n_trials, 1);
  EXPECT_EQ(s.success_rate, 100.0);
  EXPECT_EQ(s.baseline_success_rate, 0.0);
  EXPECT_EQ(s.mean_time_adaptive, 30.0);
  EXPECT_FALSE(s.mean_time_baseline);
  EXPECT_EQ(s.movability_accuracy, 100.0);
  EXPECT_EQ(csv_row(s), "x,1,100.000,0.000,30.000,Impossible,100.000");
}

TEST(Summary, MeanTimeOverSuccessesOnly)
{
  TrialMetrics a, b, c;
  a.success = b.success = true;
  a.nav_time = 10.0;
  b.nav_time = 20.0;
  c.nav_time = 180.0;
  const BatchSummary s = summarize("x", {a, b, c}, {a});
  EXPECT_NEAR(*s.mean_time_adaptive, 15.0, 1e-12);
  EXPECT_NEAR(s.success_rate, 200.0 / 3.0, 1e-12);
}

TEST(Summary, CsvHeaderColumns)
{
  EXPECT_EQ(
    csv_header(), "scenario,n_trials,success_rate,baseline_success_rate,mean_time_adaptive,mean_time_baseline,movability_accuracy");
}

TEST(Batch, RejectsEmptyBatch)
{
  const Scenario s = parse_scenario(minimal(), ".");
  EXPECT_THROW(run_batch(s, 0, 0), std::invalid_argument);
}

TEST(Trial, ReachesGoalInOpenRoom)
{
  const Scenario s = parse_scenario(open_room(), ".");
  const TrialResult r = run_trial(s, 0);
  EXPECT_TRUE(r.metrics.success);
  EXPECT_LT(r.metrics.nav_time, 10.0);
  EXPECT_TRUE(r.log.escalations.empty());
}

TEST(Trial, DeterministicPerSeed)
{
  const Scenario s = load_scenario(kScenarios / "1-a.yaml");
  const TrialResult a = run_trial(s, 3);
  const TrialResult b = run_trial(s, 3);
  EXPECT_EQ(format_log(a.log), format_log(b.log));
  EXPECT_EQ(format_metrics(a.metrics), format_metrics(b.metrics));
  const TrialResult c = run_trial(s, 4);
  EXPECT_NE(format_log(a.log), format_log(c.log));
}

TEST(Trial, LightBoxPushedWithoutEscalation)
{
  const TrialResult r = run_trial(load_scenario(kScenarios / "1-a.yaml"), 0);
  EXPECT_TRUE(r.metrics.success);
  EXPECT_TRUE(r.log.escalations.empty());
  EXPECT_TRUE(r.metrics.movability_correct);
}

TEST(Trial, ImmovableBoxEscalatesHeavyThenLethal)
{
  const TrialResult r = run_trial(load_scenario(kScenarios / "1-c.yaml"), 0);
  EXPECT_TRUE(r.metrics.success);
  std::vector<CostLevel> on_body;
  for (const auto &e : r.log.escalations) {
    if (e.body_id == 1) {
      on_body.push_back(e.level);
    }
  }
  ASSERT_GE(on_body.size(), 2u);
  EXPECT_EQ(on_body[0], CostLevel::Heavy);
  EXPECT_EQ(on_body[1], CostLevel::Lethal);
  EXPECT_EQ(r.metrics.final_levels.at(1), CostLevel::Lethal);
}

TEST(Trial, BaselineCannotCrossBlockedCorridor)
{
  TrialOptions o;
  o.baseline = true;
  const TrialResult r = run_trial(load_scenario(kScenarios / "2-a.yaml"), 0, o);
  EXPECT_FALSE(r.metrics.success);
  EXPECT_TRUE(r.log.escalations.empty());
  EXPECT_TRUE(r.log.baseline);
}
