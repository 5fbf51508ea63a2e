#include <sstream>

#include <gtest/gtest.h>

#include "smallcar/reference.hpp"
#include "smallcar/sim/validate.hpp"

using namespace smallcar;
using namespace smallcar::sim;

namespace {

sysid::CsvTable table_of(const Trajectory& traj, const Geometry& g) {
  std::ostringstream out;
  write_trajectory_csv(out, traj, g);
  std::istringstream in(out.str());
  return sysid::load_table(in, "traj.csv");
}

Scenario circle(double throttle, ModelKind model) {
  Scenario s;
  s.name = "circle";
  s.duration = 8.0;
  s.model = model;
  s.slip = SlipFormulation::kNormalized;
  s.throttle = constant_schedule(throttle);
  s.steering = constant_schedule(0.5);
  return s;
}

}  // namespace

TEST(ValidateOneStep, OwnNoiselessLogIsReproduced) {
  const auto p = reference::params();
  for (ModelKind m : {ModelKind::kKinematic, ModelKind::kDynamic}) {
    auto sc = circle(0.3, m);
    sc.steering = SineSchedule{0.6, 0.5, 0.0, 0.0};
    const auto traj = simulate(sc, p);
    const auto r = validate_one_step(table_of(traj, p.geometry), p, m, sc.slip, sc.blend_speed);
    EXPECT_EQ(r.state_source, "recorded");
    EXPECT_EQ(r.input_source, "recorded");
    EXPECT_EQ(r.steps, traj.size() - 1);
    for (const auto& c : r.channels) EXPECT_LT(c.rms, 1e-6) << to_string(m) << " " << c.name;
    EXPECT_LT(r.lateral_rms, 1e-6);
  }
}

TEST(ValidateOneStep, ReplaysDelaysWhenAppliedInputsAbsent) {
  const auto p = reference::params();
  const auto sc = circle(0.3, ModelKind::kKinematic);
  const auto traj = simulate(sc, p);
  std::ostringstream out;
  sysid::RawLog log = trajectory_to_log(traj, p.geometry, NoiseSpec{}, false);
  sysid::write_log(out, log);
  std::string csv = out.str();
  // append the recorded kinematic state columns only
  std::istringstream lines(csv);
  std::string line, merged;
  std::size_t k = 0;
  std::getline(lines, line);
  merged = line + ",x,y,eta,v\n";
  while (std::getline(lines, line)) {
    const auto& s = traj.kinematic[k++];
    merged += line + "," + sysid::format_double(s.x) + "," + sysid::format_double(s.y) + "," +
              sysid::format_double(s.eta) + "," + sysid::format_double(s.v) + "\n";
  }
  std::istringstream in(merged);
  const auto r = validate_one_step(sysid::load_table(in), p, ModelKind::kKinematic);
  EXPECT_EQ(r.input_source, "delayed commands");
  for (const auto& c : r.channels) EXPECT_LT(c.rms, 1e-6) << c.name;
}

TEST(ValidateOneStep, StateMismatchIsExplicit) {
  const auto p = reference::params();
  const auto log = synthesize_log(circle(0.3, ModelKind::kKinematic), p, NoiseSpec{});
  std::ostringstream out;
  sysid::write_log(out, log);
  std::istringstream in(out.str());
  const auto table = sysid::load_table(in);
  EXPECT_THROW(validate_one_step(table, p, ModelKind::kKinematic), StateMismatchError);
  EXPECT_THROW(validate_one_step(table, p, ModelKind::kDynamic), StateMismatchError);
}

TEST(ValidateOneStep, KinematicLateralErrorGrowsWithSpeed) {
  const auto p = reference::params();
  std::vector<double> lateral;
  for (double throttle : {0.2, 0.3, 0.4}) {
    const auto traj = simulate(circle(throttle, ModelKind::kDynamic), p);
    const auto r = validate_one_step(table_of(traj, p.geometry), p, ModelKind::kKinematic);
    EXPECT_EQ(r.state_source, "estimated");
    lateral.push_back(r.lateral_rms);
  }
  EXPECT_LT(lateral[0], lateral[1]);
  EXPECT_LT(lateral[1], lateral[2]);
}

TEST(ValidateOneStep, DynamicStateEstimatedFromMocap) {
  const auto p = reference::params();
  const auto sc = circle(0.3, ModelKind::kDynamic);
  const auto log = synthesize_log([&] { auto s = sc; s.record_mocap = true; return s; }(), p, NoiseSpec{});
  std::ostringstream out;
  sysid::write_log(out, log);
  std::istringstream in(out.str());
  const auto r = validate_one_step(sysid::load_table(in), p, ModelKind::kDynamic, sc.slip);
  EXPECT_EQ(r.state_source, "estimated");
  EXPECT_EQ(r.input_source, "delayed commands");
  EXPECT_LT(r.lateral_rms, 1e-3);
}
