#include <algorithm>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "smallcar/sim/scenario.hpp"

using namespace smallcar;
using namespace smallcar::sim;
using nlohmann::json;

TEST(Schedule, Evaluate) {
  EXPECT_EQ(evaluate(StepSchedule{1.0, 0.1, 0.4}, 0.999), 0.1);
  EXPECT_EQ(evaluate(StepSchedule{1.0, 0.1, 0.4}, 1.0), 0.4);
  const PiecewiseSchedule p{{0.5, 1.0, 2.0}, {0.2, -0.3, 0.0}};
  EXPECT_EQ(evaluate(p, 0.0), 0.2);
  EXPECT_EQ(evaluate(p, 0.5), 0.2);
  EXPECT_EQ(evaluate(p, 1.5), -0.3);
  EXPECT_EQ(evaluate(p, 10.0), 0.0);
  EXPECT_NEAR(evaluate(SineSchedule{0.5, 0.25, 0.0, 0.1}, 1.0), 0.6, 1e-15);
  EXPECT_EQ(peak_magnitude(SineSchedule{0.5, 1.0, 0.0, -0.25}), 0.75);
  EXPECT_EQ(peak_magnitude(p), 0.3);
}

TEST(Scenario, Validation) {
  Scenario s;
  EXPECT_NO_THROW(validate(s));
  s.dt = 0.0;
  EXPECT_THROW(validate(s), ScenarioError);
  s.dt = 0.051;
  EXPECT_THROW(validate(s), ScenarioError);
  s.dt = 0.05;
  EXPECT_NO_THROW(validate(s));
  s.duration = -1.0;
  EXPECT_THROW(validate(s), ScenarioError);
  s = Scenario{};
  s.throttle = StepSchedule{0.5, 0.0, 1.2};
  EXPECT_THROW(validate(s), ScenarioError);
  s = Scenario{};
  s.steering = PiecewiseSchedule{{1.0, 0.5}, {0.0, 0.1}};
  EXPECT_THROW(validate(s), ScenarioError);
  s = Scenario{};
  s.steering = PiecewiseSchedule{{0.0}, {0.0, 0.1}};
  EXPECT_THROW(validate(s), ScenarioError);
  s = Scenario{};
  s.blend_speed = -0.1;
  EXPECT_THROW(validate(s), ScenarioError);
}

TEST(Scenario, SampleCount) {
  Scenario s;
  s.duration = 2.0;
  s.dt = 0.01;
  EXPECT_EQ(s.sample_count(), 201u);
}

TEST(Scenario, JsonRoundTrip) {
  for (const auto& s : scenario_library()) {
    const auto j = to_json(s);
    const auto back = scenario_from_json(json::parse(j.dump()));
    EXPECT_EQ(to_json(back), j) << s.name;
  }
  Scenario s;
  s.name = "custom";
  s.model = ModelKind::kDynamic;
  s.slip = SlipFormulation::kNormalized;
  s.steering = SineSchedule{0.3, 1.5, 0.2, -0.1};
  s.initial = {1.0, -2.0, 0.5, 1.5, 0.1, -0.2};
  EXPECT_EQ(to_json(scenario_from_json(to_json(s))), to_json(s));
}

TEST(Scenario, JsonDefaultsAndErrors) {
  const auto s = scenario_from_json(json{{"duration", 3.0}, {"dt", 0.02}});
  EXPECT_EQ(s.model, ModelKind::kKinematic);
  EXPECT_EQ(evaluate(s.throttle, 1.0), 0.0);
  try {
    scenario_from_json(json{{"duration", 3.0}});
    FAIL();
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find("dt"), std::string::npos);
  }
  EXPECT_THROW(scenario_from_json(json{{"duration", 3.0}, {"dt", 0.0}}), ScenarioError);
  EXPECT_THROW(scenario_from_json(json{{"duration", 3.0}, {"dt", 0.01}, {"model", "hover"}}), ScenarioError);
  EXPECT_THROW(scenario_from_json(json{{"duration", 3.0}, {"dt", 0.01}, {"throttle", {{"type", "ramp"}}}}),
               ScenarioError);
  EXPECT_THROW(scenario_from_json(json::array()), ScenarioError);
}

TEST(Library, StepBattery) {
  const auto v = step_throttle_battery();
  ASSERT_EQ(v.size(), 6u);
  for (const auto& s : v) {
    EXPECT_EQ(s.tag, "step");
    EXPECT_EQ(evaluate(s.throttle, 0.0), 0.0);
    EXPECT_GT(evaluate(s.throttle, 1.0), 0.0);
    EXPECT_EQ(evaluate(s.throttle, s.duration - 0.1), 0.0);
  }
}

TEST(Library, CoastDownAlternatesLaunchAndRelease) {
  LibraryOptions o;
  o.coast_cycles = 3;
  const auto s = coast_down(o);
  EXPECT_DOUBLE_EQ(s.duration, 12.0);
  EXPECT_EQ(evaluate(s.throttle, 0.5), 0.25);
  EXPECT_EQ(evaluate(s.throttle, 2.0), 0.0);
  EXPECT_EQ(evaluate(s.throttle, 4.5), 0.3);
  EXPECT_EQ(evaluate(s.throttle, 11.0), 0.0);
}

TEST(Library, SteeringBatteryCoversRange) {
  const auto v = constant_steering_battery();
  ASSERT_EQ(v.size(), 11u);
  EXPECT_EQ(evaluate(v.front().steering, 0.0), -1.0);
  EXPECT_EQ(evaluate(v.back().steering, 0.0), 1.0);
  EXPECT_NEAR(evaluate(v[5].steering, 0.0), 0.0, 1e-15);
}

TEST(Library, CircularRampReachesTopThrottle) {
  const auto v = mocap_circular_battery();
  ASSERT_EQ(v.size(), 2u);
  for (const auto& s : v) {
    EXPECT_TRUE(s.record_mocap);
    EXPECT_EQ(s.model, ModelKind::kDynamic);
    EXPECT_EQ(evaluate(s.throttle, 0.0), 0.2);
    EXPECT_DOUBLE_EQ(evaluate(s.throttle, s.duration - s.dt), 0.4);
    double prev = 0.0;
    for (double t = 0.0; t < s.duration; t += 0.1) {
      EXPECT_GE(evaluate(s.throttle, t), prev);
      prev = evaluate(s.throttle, t);
    }
  }
}

TEST(Library, NamesAreUniqueAndAllValid) {
  const auto v = scenario_library();
  std::vector<std::string> names;
  for (const auto& s : v) {
    EXPECT_NO_THROW(validate(s));
    names.push_back(s.name);
  }
  std::sort(names.begin(), names.end());
  EXPECT_EQ(std::adjacent_find(names.begin(), names.end()), names.end());
}
