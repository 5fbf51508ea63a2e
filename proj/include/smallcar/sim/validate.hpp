#pragma once

// One-step-ahead validation of a model against a recorded log: from the
// observed state at each sample, integrate one step with the applied inputs
// and compare against the observed state at the next sample.

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "smallcar/models.hpp"
#include "smallcar/sim/delay_line.hpp"
#include "smallcar/sim/integrator.hpp"
#include "smallcar/sim/scenario.hpp"
#include "smallcar/sim/simulate.hpp"
#include "smallcar/sysid/builders.hpp"
#include "smallcar/sysid/log.hpp"
#include "smallcar/sysid/signal.hpp"

namespace smallcar::sim {

/// The log does not carry what the requested model needs as state.
class StateMismatchError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct ChannelRms {
  std::string name;
  double rms = 0.0;
};

struct ValidationReport {
  ModelKind model = ModelKind::kKinematic;
  std::string state_source;  // "recorded" or "estimated"
  std::string input_source;  // "recorded" or "delayed commands"
  std::size_t steps = 0;
  std::vector<ChannelRms> channels;
  double lateral_rms = 0.0;  // position error normal to the observed heading [m]
};

namespace detail {

inline bool has_all(const sysid::CsvTable& t, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    if (!t.has(n)) return false;
  }
  return true;
}

/// Applied inputs per sample, replaying the commanded inputs through the
/// actuation delays unless the table records them.
inline std::pair<std::vector<ControlInput>, std::string> applied_inputs(const sysid::CsvTable& table,
                                                                        const sysid::RawLog& log,
                                                                        const Delays& delays) {
  std::vector<ControlInput> out(log.size());
  if (has_all(table, {"tau_applied", "s_applied"})) {
    const auto& tau = *table.column("tau_applied");
    const auto& s = *table.column("s_applied");
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = {tau[k], s[k]};
    return {out, "recorded"};
  }
  const double dt = sysid::uniform_dt(log);
  DelayLine steer(delays.steer_delay, dt, 0.0);
  DelayLine lon(delays.long_delay, dt, 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = {lon.push_pop(log.tau[k]), steer.push_pop(log.s[k])};
  return {out, "delayed commands"};
}

inline std::pair<std::vector<KinematicState>, std::string> kinematic_states(const sysid::CsvTable& table,
                                                                            const sysid::RawLog& log,
                                                                            const Geometry& g) {
  std::vector<KinematicState> out(log.size());
  if (has_all(table, {"x", "y", "eta", "v"})) {
    const auto &x = *table.column("x"), &y = *table.column("y"), &eta = *table.column("eta"), &v = *table.column("v");
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = {x[k], y[k], eta[k], v[k]};
    return {out, "recorded"};
  }
  if (!log.mocap) {
    throw StateMismatchError("kinematic validation needs the pose: log has neither state nor mocap columns");
  }
  const auto eta = sysid::detail::unwrap(log.mocap->eta);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = {log.mocap->x[k] - g.l_r * std::cos(eta[k]), log.mocap->y[k] - g.l_r * std::sin(eta[k]), eta[k],
              log.v_enc[k]};
  }
  return {out, "estimated"};
}

inline std::pair<std::vector<DynamicState>, std::string> dynamic_states(const sysid::CsvTable& table,
                                                                        const sysid::RawLog& log) {
  std::vector<DynamicState> out(log.size());
  if (has_all(table, {"x", "y", "eta", "v_x", "v_y", "omega"})) {
    const auto &x = *table.column("x"), &y = *table.column("y"), &eta = *table.column("eta");
    const auto &vx = *table.column("v_x"), &vy = *table.column("v_y"), &om = *table.column("omega");
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = {x[k], y[k], eta[k], vx[k], vy[k], om[k]};
    return {out, "recorded"};
  }
  if (!log.mocap) {
    throw StateMismatchError("dynamic validation needs mocap columns (x_t, y_t, eta_t) or recorded state");
  }
  if (log.size() < 3) throw StateMismatchError("dynamic validation needs at least 3 samples");
  const auto eta = sysid::detail::unwrap(log.mocap->eta);
  const auto xd = sysid::differentiate(log.mocap->x, log.t);
  const auto yd = sysid::differentiate(log.mocap->y, log.t);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto body = body_frame_velocity({xd[k], yd[k]}, eta[k]);
    out[k] = {log.mocap->x[k], log.mocap->y[k], eta[k], body[0], body[1], log.omega_imu[k]};
  }
  return {out, "estimated"};
}

template <std::size_t N>
void accumulate(std::array<double, N>& sq, const std::array<double, N>& pred, const std::array<double, N>& obs) {
  for (std::size_t i = 0; i < N; ++i) sq[i] += (pred[i] - obs[i]) * (pred[i] - obs[i]);
}

inline double lateral_error(double xp, double yp, double xo, double yo, double eta) {
  return -std::sin(eta) * (xp - xo) + std::cos(eta) * (yp - yo);
}

}  // namespace detail

inline ValidationReport validate_one_step(const sysid::CsvTable& table, const VehicleParams& params, ModelKind model,
                                          SlipFormulation slip = SlipFormulation::kLiteral,
                                          double blend_speed = 0.3, const std::string& source = "log") {
  const sysid::RawLog log = sysid::log_from_table(table, source);
  if (log.size() < 2) throw StateMismatchError("validation needs at least 2 samples");
  validate(params.friction);
  validate(params.motor);
  validate(params.steering);
  validate(params.geometry);
  validate(params.delays);
  if (model == ModelKind::kDynamic) validate(params.tire);
  const Geometry& g = params.geometry;

  ValidationReport report;
  report.model = model;
  auto [inputs, input_source] = detail::applied_inputs(table, log, params.delays);
  report.input_source = input_source;
  const std::size_t steps = log.size() - 1;
  report.steps = steps;
  double lateral_sq = 0.0;

  if (model == ModelKind::kKinematic) {
    auto [states, state_source] = detail::kinematic_states(table, log, g);
    report.state_source = state_source;
    std::array<double, 4> sq{};
    for (std::size_t k = 0; k < steps; ++k) {
      const double dt = log.t[k + 1] - log.t[k];
      const double delta = steering_angle(inputs[k].s, params.steering);
      const double tau = inputs[k].tau;
      auto rhs = [&](const std::array<double, 4>& x) {
        const auto s = KinematicState::from_array(x);
        return kinematic_rhs(s, delta, longitudinal_force(tau, s.v, params), g);
      };
      const auto pred = integrate_rk4<4>(rhs, states[k].to_array(), dt, log.t[k]);
      const auto obs = states[k + 1].to_array();
      detail::accumulate(sq, pred, obs);
      const double e = detail::lateral_error(pred[0], pred[1], obs[0], obs[1], obs[2]);
      lateral_sq += e * e;
    }
    const char* names[] = {"x", "y", "eta", "v"};
    for (std::size_t i = 0; i < 4; ++i) report.channels.push_back({names[i], std::sqrt(sq[i] / double(steps))});
  } else {
    auto [states, state_source] = detail::dynamic_states(table, log);
    report.state_source = state_source;
    std::array<double, 6> sq{};
    for (std::size_t k = 0; k < steps; ++k) {
      const double dt = log.t[k + 1] - log.t[k];
      const double delta = steering_angle(inputs[k].s, params.steering);
      const double tau = inputs[k].tau;
      const bool no_slip = slip == SlipFormulation::kNormalized && states[k].v_x < blend_speed;
      const DynamicState start = no_slip ? detail::project_no_slip(states[k], delta, g) : states[k];
      auto rhs = [&](const std::array<double, 6>& x) {
        const auto s = DynamicState::from_array(x);
        const double f = longitudinal_force(tau, s.v_x, params);
        return no_slip ? dynamic_rhs_no_slip(s, delta, f, g) : dynamic_rhs(s, delta, f, params, slip);
      };
      auto pred = integrate_rk4<6>(rhs, start.to_array(), dt, log.t[k]);
      // Below the blend speed the simulator holds the no-slip constraint at
      // every sample, so the prediction lands on it too.
      if (slip == SlipFormulation::kNormalized && pred[3] < blend_speed) {
        const double next_delta = steering_angle(inputs[k + 1].s, params.steering);
        pred = detail::project_no_slip(DynamicState::from_array(pred), next_delta, g).to_array();
      }
      const auto obs = states[k + 1].to_array();
      detail::accumulate(sq, pred, obs);
      const double e = detail::lateral_error(pred[0], pred[1], obs[0], obs[1], obs[2]);
      lateral_sq += e * e;
    }
    const char* names[] = {"x", "y", "eta", "v_x", "v_y", "omega"};
    for (std::size_t i = 0; i < 6; ++i) report.channels.push_back({names[i], std::sqrt(sq[i] / double(steps))});
  }
  report.lateral_rms = std::sqrt(lateral_sq / double(steps));
  return report;
}

}  // namespace smallcar::sim
