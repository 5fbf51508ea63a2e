#pragma once

// Fixed-step simulation of the kinematic and dynamic bicycle models under a
// scenario, with actuation delays, and synthesis of noisy driving logs.

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "smallcar/models.hpp"
#include "smallcar/sim/delay_line.hpp"
#include "smallcar/sim/integrator.hpp"
#include "smallcar/sim/scenario.hpp"
#include "smallcar/sysid/log.hpp"

namespace smallcar::sim {

inline constexpr double kDivergenceLimit = 1e6;

/// Sampled run of one scenario. Sample k holds the state at t[k] and the
/// inputs applied from t[k] to t[k+1].
struct Trajectory {
  ModelKind model = ModelKind::kKinematic;
  double dt = 0.0;
  std::vector<double> t;
  std::vector<KinematicState> kinematic;  // filled for kinematic runs
  std::vector<DynamicState> dynamic;      // filled for dynamic runs
  std::vector<ControlInput> commanded;    // schedule output (pre-delay)
  std::vector<ControlInput> applied;      // post-delay
  std::vector<double> delta;              // steering angle of the applied input [rad]
  std::vector<double> force;              // longitudinal motor + friction force [N]
  std::vector<double> speed;              // v (kinematic) or v_x (dynamic) [m/s]
  std::vector<double> yaw_rate;           // [rad/s]

  [[nodiscard]] std::size_t size() const { return t.size(); }

  /// CoM pose at sample k (the kinematic state is referenced to the rear axle).
  [[nodiscard]] std::array<double, 3> com_pose(std::size_t k, const Geometry& g) const {
    if (model == ModelKind::kDynamic) return {dynamic[k].x, dynamic[k].y, dynamic[k].eta};
    const auto& s = kinematic[k];
    return {s.x + g.l_r * std::cos(s.eta), s.y + g.l_r * std::sin(s.eta), s.eta};
  }
};

class SimulationError : public std::runtime_error {
public:
  SimulationError(const std::string& what, Trajectory partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  [[nodiscard]] const Trajectory& partial() const { return partial_; }

private:
  Trajectory partial_;
};

namespace detail {

template <std::size_t N>
bool diverged(const std::array<double, N>& x) {
  for (double v : x) {
    if (!std::isfinite(v) || std::abs(v) > kDivergenceLimit) return true;
  }
  return false;
}

/// Scenario initial states give the CoM; the kinematic state is referenced to the rear axle.
inline KinematicState kinematic_initial(const DynamicState& d, const Geometry& g) {
  return {d.x - g.l_r * std::cos(d.eta), d.y - g.l_r * std::sin(d.eta), d.eta, d.v_x};
}

/// Projects lateral velocity and yaw rate onto the rear-axle no-slip constraint.
inline DynamicState project_no_slip(DynamicState s, double delta, const Geometry& g) {
  const double k = std::tan(delta) / g.l;
  s.omega = s.v_x * k;
  s.v_y = g.l_r * s.omega;
  return s;
}

}  // namespace detail

inline Trajectory simulate(const Scenario& scenario, const VehicleParams& params) {
  validate(scenario);
  validate(params.friction);
  validate(params.motor);
  validate(params.steering);
  validate(params.geometry);
  validate(params.delays);
  if (scenario.model == ModelKind::kDynamic) validate(params.tire);

  const Geometry& g = params.geometry;
  const double dt = scenario.dt;
  const std::size_t n = scenario.sample_count();

  DelayLine steer_line(params.delays.steer_delay, dt, 0.0);
  DelayLine long_line(params.delays.long_delay, dt, 0.0);

  Trajectory traj;
  traj.model = scenario.model;
  traj.dt = dt;
  traj.t.reserve(n);

  KinematicState kin = detail::kinematic_initial(scenario.initial, g);
  DynamicState dyn = scenario.initial;

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const ControlInput cmd{evaluate(scenario.throttle, t), evaluate(scenario.steering, t)};
    const ControlInput app{long_line.push_pop(cmd.tau), steer_line.push_pop(cmd.s)};
    const double delta = steering_angle(app.s, params.steering);

    traj.t.push_back(t);
    traj.commanded.push_back(cmd);
    traj.applied.push_back(app);
    traj.delta.push_back(delta);

    if (scenario.model == ModelKind::kKinematic) {
      const double force = longitudinal_force(app.tau, kin.v, params);
      traj.kinematic.push_back(kin);
      traj.force.push_back(force);
      traj.speed.push_back(kin.v);
      traj.yaw_rate.push_back(kin.v * std::tan(delta) / g.l);
      if (k + 1 == n) break;

      auto rhs = [&](const std::array<double, 4>& x) {
        const auto s = KinematicState::from_array(x);
        return kinematic_rhs(s, delta, longitudinal_force(app.tau, s.v, params), g);
      };
      std::array<double, 4> next{};
      try {
        next = integrate_rk4<4>(rhs, kin.to_array(), dt, t);
      } catch (const IntegrationError& e) {
        throw SimulationError(std::string("simulation diverged: ") + e.what(), std::move(traj));
      }
      if (detail::diverged(next)) {
        throw SimulationError("simulation diverged at t=" + std::to_string(t + dt), std::move(traj));
      }
      kin = KinematicState::from_array(next);
    } else {
      const bool no_slip = scenario.slip == SlipFormulation::kNormalized && dyn.v_x < scenario.blend_speed;
      if (no_slip) dyn = detail::project_no_slip(dyn, delta, g);
      const double force = longitudinal_force(app.tau, dyn.v_x, params);
      traj.dynamic.push_back(dyn);
      traj.force.push_back(force);
      traj.speed.push_back(dyn.v_x);
      traj.yaw_rate.push_back(dyn.omega);
      if (k + 1 == n) break;

      auto rhs = [&](const std::array<double, 6>& x) {
        const auto s = DynamicState::from_array(x);
        const double f = longitudinal_force(app.tau, s.v_x, params);
        return no_slip ? dynamic_rhs_no_slip(s, delta, f, g) : dynamic_rhs(s, delta, f, params, scenario.slip);
      };
      std::array<double, 6> next{};
      try {
        next = integrate_rk4<6>(rhs, dyn.to_array(), dt, t);
      } catch (const std::exception& e) {
        throw SimulationError(std::string("simulation diverged: ") + e.what(), std::move(traj));
      }
      if (detail::diverged(next)) {
        throw SimulationError("simulation diverged at t=" + std::to_string(t + dt), std::move(traj));
      }
      dyn = DynamicState::from_array(next);
    }
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Log synthesis

/// Additive Gaussian sensor noise; standard deviations in SI units.
struct NoiseSpec {
  double v_enc = 0.0;
  double omega_imu = 0.0;
  double mocap_xy = 0.0;
  double mocap_eta = 0.0;
  std::uint64_t seed = 0;
};

inline void validate(const NoiseSpec& n) {
  for (double s : {n.v_enc, n.omega_imu, n.mocap_xy, n.mocap_eta}) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("NoiseSpec: std devs must be >= 0");
  }
}

/// Converts a trajectory into what the robot would record: commanded inputs,
/// encoder speed, IMU yaw rate and, when `with_mocap`, the CoM pose.
inline sysid::RawLog trajectory_to_log(const Trajectory& traj, const Geometry& g, const NoiseSpec& noise,
                                       bool with_mocap) {
  validate(noise);
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  auto noisy = [&](double value, double sigma) { return sigma > 0.0 ? value + sigma * unit(rng) : value; };

  sysid::RawLog log;
  const std::size_t n = traj.size();
  log.t = traj.t;
  log.tau.reserve(n);
  log.s.reserve(n);
  log.v_enc.reserve(n);
  log.omega_imu.reserve(n);
  if (with_mocap) log.mocap.emplace();
  for (std::size_t k = 0; k < n; ++k) {
    log.tau.push_back(traj.commanded[k].tau);
    log.s.push_back(traj.commanded[k].s);
    log.v_enc.push_back(noisy(traj.speed[k], noise.v_enc));
    log.omega_imu.push_back(noisy(traj.yaw_rate[k], noise.omega_imu));
    if (with_mocap) {
      const auto pose = traj.com_pose(k, g);
      log.mocap->x.push_back(noisy(pose[0], noise.mocap_xy));
      log.mocap->y.push_back(noisy(pose[1], noise.mocap_xy));
      log.mocap->eta.push_back(noisy(pose[2], noise.mocap_eta));
    }
  }
  return log;
}

inline sysid::RawLog synthesize_log(const Scenario& scenario, const VehicleParams& params,
                                    const NoiseSpec& noise) {
  validate(noise);
  const Trajectory traj = simulate(scenario, params);
  return trajectory_to_log(traj, params.geometry, noise, scenario.record_mocap);
}

// ---------------------------------------------------------------------------
// Trajectory CSV: the log dialect followed by applied inputs and state columns.

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const Geometry& g) {
  using sysid::format_double;
  out << "t,tau,s,v_enc,omega_imu,x_t,y_t,eta_t,tau_applied,s_applied,delta,force";
  if (traj.model == ModelKind::kKinematic) {
    out << ",x,y,eta,v\n";
  } else {
    out << ",x,y,eta,v_x,v_y,omega\n";
  }
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto pose = traj.com_pose(k, g);
    out << format_double(traj.t[k]) << ',' << format_double(traj.commanded[k].tau) << ','
        << format_double(traj.commanded[k].s) << ',' << format_double(traj.speed[k]) << ','
        << format_double(traj.yaw_rate[k]) << ',' << format_double(pose[0]) << ','
        << format_double(pose[1]) << ',' << format_double(pose[2]) << ','
        << format_double(traj.applied[k].tau) << ',' << format_double(traj.applied[k].s) << ','
        << format_double(traj.delta[k]) << ',' << format_double(traj.force[k]);
    if (traj.model == ModelKind::kKinematic) {
      for (double v : traj.kinematic[k].to_array()) out << ',' << format_double(v);
    } else {
      for (double v : traj.dynamic[k].to_array()) out << ',' << format_double(v);
    }
    out << '\n';
  }
}

}  // namespace smallcar::sim
