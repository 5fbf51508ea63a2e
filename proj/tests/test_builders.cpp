#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "smallcar/reference.hpp"
#include "smallcar/sim/scenario.hpp"
#include "smallcar/sim/simulate.hpp"
#include "smallcar/sysid/builders.hpp"

using namespace smallcar;
using namespace smallcar::sysid;

namespace {

RawLog constant_log(std::size_t n, double dt, double tau, double s, double v) {
  RawLog log;
  for (std::size_t i = 0; i < n; ++i) {
    log.t.push_back(static_cast<double>(i) * dt);
    log.tau.push_back(tau);
    log.s.push_back(s);
    log.v_enc.push_back(v);
    log.omega_imu.push_back(0.0);
  }
  return log;
}

RawLog noiseless(const sim::Scenario& sc, const VehicleParams& p) { return sim::synthesize_log(sc, p, {}); }

double rms(const std::vector<double>& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return std::sqrt(s / static_cast<double>(r.size()));
}

}  // namespace

// --- friction ---------------------------------------------------------------

TEST(FrictionDataset, NoCoastingRowsIsError) {
  const std::vector<RawLog> logs{constant_log(100, 0.01, 0.3, 0.0, 1.0)};
  EXPECT_THROW(build_friction_dataset(logs, 1.67), InsufficientDataError);
}

TEST(FrictionDataset, RestRowsExcluded) {
  const std::vector<RawLog> logs{constant_log(100, 0.01, 0.0, 0.0, 0.0)};
  EXPECT_THROW(build_friction_dataset(logs, 1.67), InsufficientDataError);
}

TEST(FrictionDataset, RejectsBadMass) {
  const std::vector<RawLog> logs{constant_log(100, 0.01, 0.0, 0.0, 1.0)};
  EXPECT_THROW(build_friction_dataset(logs, 0.0), ConfigError);
}

TEST(FrictionDataset, CoastDownLabelsFollowFrictionCurve) {
  const auto p = reference::params();
  sim::LibraryOptions o;
  o.coast_cycles = 8;
  const std::vector<RawLog> logs{noiseless(sim::coast_down(o), p)};
  const auto data = build_friction_dataset(logs, p.geometry.m);
  ASSERT_GT(data.rows(), 100u);
  std::vector<double> r;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double v = data.x(i)[0];
    EXPECT_GT(v, kMinSpeed);
    r.push_back(data.y(i)[0] - friction_force(v, p.friction));
  }
  // Smoothing rounds the knee of the curve near rest; elsewhere labels are exact.
  EXPECT_LT(rms(r), 0.02 * std::abs(friction_force(3.0, p.friction)));
}

// --- motor ------------------------------------------------------------------

TEST(MotorDataset, OnlyPoweredRows) {
  const auto p = reference::params();
  const std::vector<RawLog> logs{noiseless(sim::step_throttle_battery()[3], p)};
  const auto data = build_motor_dataset(logs, p.geometry.m, p.friction);
  ASSERT_GT(data.rows(), 0u);
  for (std::size_t i = 0; i < data.rows(); ++i) EXPECT_GT(data.x(i)[0], 0.0);
}

TEST(MotorDataset, NoPoweredRowsIsError) {
  const std::vector<RawLog> logs{constant_log(100, 0.01, 0.0, 0.0, 1.0)};
  EXPECT_THROW(build_motor_dataset(logs, 1.67, reference::friction()), InsufficientDataError);
}

TEST(MotorDataset, ZeroNoiseLabelsMatchMotorForce) {
  auto p = reference::params();
  p.delays.long_delay = 0.0;
  sim::LibraryOptions o;
  o.dt = 1e-4;
  o.step_hold = 2.0;
  o.step_coast = 0.5;
  std::vector<RawLog> logs;
  for (const auto& sc : sim::step_throttle_battery(o)) logs.push_back(noiseless(sc, p));
  // The launch from rest crosses the steep friction knee; 50 ms of guard rows
  // after each throttle change keep the finite-difference error out of the labels.
  PreprocessOptions pre;
  pre.transition_guard = 500;
  const auto data = build_motor_dataset(logs, p.geometry.m, p.friction, pre);
  std::vector<double> r;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    r.push_back(data.y(i)[0] - motor_force(data.x(i)[0], data.x(i)[1], p.motor));
  }
  EXPECT_LT(rms(r), 1e-6);
}

TEST(MotorDataset, NoisyLabelsMatchWithinNoise) {
  const auto p = reference::params();
  std::vector<RawLog> logs;
  std::uint64_t seed = 1;
  for (const auto& sc : sim::step_throttle_battery()) logs.push_back(sim::synthesize_log(sc, p, {0.02, 0, 0, 0, seed++}));
  const auto data = build_motor_dataset(logs, p.geometry.m, p.friction);
  double mean = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    mean += data.y(i)[0] - motor_force(data.x(i)[0], data.x(i)[1], p.motor);
  }
  mean /= static_cast<double>(data.rows());
  EXPECT_LT(std::abs(mean), 0.05);
}

// --- steering ---------------------------------------------------------------

TEST(SteeringEstimate, ZeroYawRate) {
  const std::vector<double> om{0.0}, v{1.0};
  EXPECT_EQ(estimate_steering_angle_series(om, v, 0.2).delta[0], 0.0);
}

TEST(SteeringEstimate, DirectEvaluation) {
  const std::vector<double> om{1.0}, v{1.0};
  EXPECT_NEAR(estimate_steering_angle_series(om, v, 0.2).delta[0], 0.1974, 5e-5);
  EXPECT_DOUBLE_EQ(estimate_steering_angle_series(om, v, 0.2).delta[0], std::atan(0.2));
}

TEST(SteeringEstimate, InvertsKinematicYaw) {
  const double l = reference::wheelbase();
  for (double delta = -0.49; delta < 0.5; delta += 0.07) {
    const std::vector<double> v{1.3};
    const std::vector<double> om{1.3 * std::tan(delta) / l};
    EXPECT_NEAR(estimate_steering_angle_series(om, v, l).delta[0], delta, 1e-14);
  }
}

TEST(SteeringEstimate, FlagsSlowRows) {
  const std::vector<double> om{1.0, 1.0, 1.0}, v{1.0, 0.05, 0.0};
  const auto est = estimate_steering_angle_series(om, v, 0.2);
  EXPECT_TRUE(est.valid[0]);
  EXPECT_FALSE(est.valid[1]);
  EXPECT_FALSE(est.valid[2]);
  EXPECT_EQ(est.rejected, 2u);
  EXPECT_TRUE(std::isnan(est.delta[2]));
}

TEST(SteeringDataset, OneRowPerSegment) {
  const auto p = reference::params();
  std::vector<RawLog> logs;
  for (const auto& sc : sim::constant_steering_battery()) logs.push_back(noiseless(sc, p));
  const auto built = build_steering_dataset(logs, p.geometry.l);
  ASSERT_EQ(built.data.rows(), 11u);
  for (std::size_t i = 0; i < built.data.rows(); ++i) {
    const double s = built.data.x(i)[0];
    EXPECT_NEAR(s, -1.0 + 0.2 * static_cast<double>(i), 1e-12);
    EXPECT_NEAR(built.data.y(i)[0], steering_angle(s, p.steering), 1e-5) << s;
  }
  EXPECT_TRUE(built.warnings.empty());
}

TEST(SteeringDataset, NoisyRoundTrip) {
  const auto p = reference::params();
  std::vector<RawLog> logs;
  std::uint64_t seed = 100;
  for (const auto& sc : sim::constant_steering_battery()) {
    logs.push_back(sim::synthesize_log(sc, p, {0.02, 0.02, 0, 0, seed++}));
  }
  const auto built = build_steering_dataset(logs, p.geometry.l);
  ASSERT_EQ(built.data.rows(), 11u);
  for (std::size_t i = 0; i < built.data.rows(); ++i) {
    EXPECT_NEAR(built.data.y(i)[0], steering_angle(built.data.x(i)[0], p.steering), 0.01);
  }
}

TEST(SteeringDataset, SlowSegmentExcludedWithWarning) {
  const auto p = reference::params();
  std::vector<RawLog> logs;
  for (const auto& sc : sim::constant_steering_battery()) logs.push_back(noiseless(sc, p));
  logs.push_back(constant_log(600, 0.01, 0.05, 0.3, 0.01));
  const auto built = build_steering_dataset(logs, p.geometry.l);
  EXPECT_EQ(built.data.rows(), 11u);
  ASSERT_EQ(built.warnings.size(), 1u);
  EXPECT_NE(built.warnings[0].find("speed below threshold"), std::string::npos);
}

TEST(SteeringDataset, NothingSteadyIsError) {
  const std::vector<RawLog> logs{constant_log(600, 0.01, 0.0, 0.3, 0.0)};
  EXPECT_THROW(build_steering_dataset(logs, 0.19), InsufficientDataError);
}

// --- force labels -------------------------------------------------------------

TEST(ForceLabels, ClosedFormAtZeroHeading) {
  const auto g = reference::geometry();
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 100; ++k) {
    const double ax = u(rng), ay = u(rng), wd = 10.0 * u(rng);
    const auto f = solve_force_labels(0.0, ax, ay, wd, g);
    ASSERT_TRUE(f);
    const double front = (g.I_z * wd + g.l_r * g.m * ay) / (g.l_f + g.l_r);
    const double rear = (g.l_f * g.m * ay - g.I_z * wd) / (g.l_f + g.l_r);
    EXPECT_LT(std::abs(f->F_yf - front), 1e-10 * std::max(1.0, std::abs(front)));
    EXPECT_LT(std::abs(f->F_yr - rear), 1e-10 * std::max(1.0, std::abs(rear)));
    EXPECT_LT(std::abs(f->F_x - g.m * ax), 1e-10 * std::max(1.0, std::abs(g.m * ax)));
  }
}

TEST(ForceLabels, SatisfyEquationsOfMotion) {
  const auto g = reference::geometry();
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 100; ++k) {
    const double eta = u(rng) * 2.0, ax = u(rng), ay = u(rng), wd = 10.0 * u(rng);
    const auto f = solve_force_labels(eta, ax, ay, wd, g);
    ASSERT_TRUE(f);
    const double lat = f->F_yf + f->F_yr;
    EXPECT_NEAR(std::cos(eta) * f->F_x - std::sin(eta) * lat, g.m * ax, 1e-12);
    EXPECT_NEAR(std::sin(eta) * f->F_x + std::cos(eta) * lat, g.m * ay, 1e-12);
    EXPECT_NEAR(g.l_f * f->F_yf - g.l_r * f->F_yr, g.I_z * wd, 1e-12);
  }
}

TEST(ForceLabels, DegenerateGeometryIsSingular) {
  Geometry g = reference::geometry();
  g.l_f = g.l_r = 0.0;
  EXPECT_FALSE(solve_force_labels(0.3, 1.0, 1.0, 1.0, g));
}

// --- tire dataset -------------------------------------------------------------

TEST(TireDataset, MissingMocapIsError) {
  const std::vector<RawLog> logs{constant_log(100, 0.01, 0.3, 0.0, 1.0)};
  EXPECT_THROW(build_tire_dataset(logs, reference::params()), ConfigError);
}

TEST(TireDataset, StraightConstantSpeedGivesZeroLabels) {
  RawLog log = constant_log(300, 0.01, 0.3, -reference::steering().c_t, 1.0);
  log.mocap = MocapTrack{};
  const double eta = 0.7;
  for (double t : log.t) {
    log.mocap->x.push_back(1.0 + t * std::cos(eta));
    log.mocap->y.push_back(-2.0 + t * std::sin(eta));
    log.mocap->eta.push_back(eta);
  }
  const std::vector<RawLog> logs{log};
  const auto data = build_tire_dataset(logs, reference::params());
  ASSERT_GT(data.front.rows(), 200u);
  for (std::size_t i = 0; i < data.front.rows(); ++i) {
    EXPECT_NEAR(data.front.y(i)[0], 0.0, 1e-9);
    EXPECT_NEAR(data.rear.y(i)[0], 0.0, 1e-9);
    EXPECT_NEAR(data.front.x(i)[0], 0.0, 1e-9);
  }
}

TEST(TireDataset, CircularRunLiesOnTireCurves) {
  const auto p = reference::params();
  std::vector<RawLog> logs;
  for (const auto& sc : sim::mocap_circular_battery()) logs.push_back(noiseless(sc, p));
  const auto data = build_tire_dataset(logs, p);
  ASSERT_GT(data.front.rows(), 500u);
  std::vector<double> rf, rr;
  for (std::size_t i = 0; i < data.front.rows(); ++i) {
    rf.push_back(data.front.y(i)[0] - pacejka_lateral(data.front.x(i)[0], p.tire));
    rr.push_back(data.rear.y(i)[0] - rear_lateral(data.rear.x(i)[0], p.tire.C_r));
  }
  EXPECT_LT(rms(rf), 0.01 * p.tire.D);
  EXPECT_LT(rms(rr), 0.01 * p.tire.D);
}

TEST(Unwrap, RemovesJumps) {
  const std::vector<double> a{3.0, -3.0, -2.9, 3.1};
  const auto u = sysid::detail::unwrap(a);
  EXPECT_NEAR(u[1], -3.0 + 2.0 * std::numbers::pi, 1e-15);
  EXPECT_NEAR(u[3], 3.1, 1e-15);
}
