#pragma once

// Builds the training sets of each sub-model from driving logs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smallcar/models.hpp"
#include "smallcar/sysid/dataset.hpp"
#include "smallcar/sysid/errors.hpp"
#include "smallcar/sysid/log.hpp"
#include "smallcar/sysid/signal.hpp"

namespace smallcar::sysid {

/// Below this speed, rows that divide by or invert the velocity are rejected.
inline constexpr double kMinSpeed = 0.05;  // m/s

struct PreprocessOptions {
  std::size_t smooth_window = 5;        // moving average applied to encoder speed
  std::size_t mocap_window = 5;         // moving average applied to mocap pose and velocity
  double v_min = kMinSpeed;             // m/s
  std::size_t transition_guard = 0;     // rows dropped around input changes; 0 = automatic
  double steady_window = 0.5;           // s, rolling window for steering steadiness
  double steady_rel_tol = 0.05;         // rolling std(omega) / |mean(omega)|
  double steady_abs_floor = 0.05;       // rad/s, steadiness floor for near-zero yaw rates
  SlipFormulation slip = SlipFormulation::kLiteral;
};

namespace detail {

inline std::size_t effective_guard(const PreprocessOptions& o, std::size_t window) {
  return o.transition_guard > 0 ? o.transition_guard : window / 2 + 2;
}

/// True for rows at least `guard` samples away from both log ends and from
/// any change of the commanded throttle or steering.
inline std::vector<bool> steady_input_mask(const RawLog& log, std::size_t guard) {
  const std::size_t n = log.size();
  std::vector<bool> ok(n, true);
  auto block = [&](std::size_t center) {
    const std::size_t lo = center > guard ? center - guard : 0;
    const std::size_t hi = std::min(n - 1, center + guard);
    for (std::size_t i = lo; i <= hi; ++i) ok[i] = false;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (i < guard || i + guard >= n) ok[i] = false;
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (log.tau[i] != log.tau[i - 1] || log.s[i] != log.s[i - 1]) {
      block(i - 1);
      block(i);
    }
  }
  return ok;
}

inline std::size_t clamp_window(std::size_t window, std::size_t n) {
  if (window <= n) return window;
  return n % 2 == 1 ? n : n - 1;
}

struct LongitudinalSignals {
  std::vector<double> v;  // smoothed encoder speed
  std::vector<double> a;  // its time derivative
  std::vector<bool> usable;
};

inline LongitudinalSignals longitudinal_signals(const RawLog& log, const PreprocessOptions& o) {
  if (log.size() < 3) throw InsufficientDataError("log shorter than 3 samples");
  const std::size_t w = clamp_window(o.smooth_window, log.size());
  LongitudinalSignals sig;
  sig.v = smooth(log.v_enc, w);
  sig.a = differentiate(sig.v, log.t);
  sig.usable = steady_input_mask(log, effective_guard(o, w));
  return sig;
}

inline std::vector<double> unwrap(std::span<const double> angle) {
  std::vector<double> out(angle.begin(), angle.end());
  double offset = 0.0;
  for (std::size_t i = 1; i < out.size(); ++i) {
    const double jump = angle[i] - angle[i - 1];
    if (jump > std::numbers::pi) offset -= 2.0 * std::numbers::pi;
    if (jump < -std::numbers::pi) offset += 2.0 * std::numbers::pi;
    out[i] = angle[i] + offset;
  }
  return out;
}

}  // namespace detail

/// X = [v], Y = [m dv/dt] over coasting rows (tau == 0, v > v_min), where the
/// total longitudinal force equals the friction force.
inline Dataset build_friction_dataset(std::span<const RawLog> logs, double mass,
                                      const PreprocessOptions& opts = {}) {
  if (!(mass > 0.0)) throw ConfigError("build_friction_dataset: mass must be > 0");
  Dataset data({{"v", "m/s"}}, {{"F_friction", "N"}});
  for (const RawLog& log : logs) {
    const auto sig = detail::longitudinal_signals(log, opts);
    // A coasting run ends once the speed first drops to v_min: friction cannot
    // restart a stopped vehicle, so later rows are sensor noise around rest.
    // The stop is detected on a wider average so that the cut does not select
    // rows by the noise in their own regressor.
    const auto wide = smooth(log.v_enc, detail::clamp_window(3 * opts.smooth_window, log.size()));
    bool stopped = false;
    for (std::size_t i = 0; i < log.size(); ++i) {
      if (log.tau[i] != 0.0) {
        stopped = false;
        continue;
      }
      if (!(wide[i] > opts.v_min)) stopped = true;
      if (stopped || !sig.usable[i] || !(sig.v[i] > opts.v_min)) continue;
      data.add_row({sig.v[i]}, {mass * sig.a[i]});
    }
  }
  if (data.empty()) throw InsufficientDataError("build_friction_dataset: no coasting data (tau == 0, v > v_min)");
  return data;
}

/// X = [tau, v], Y = [m dv/dt - F_f(v)] over powered rows (tau > 0).
inline Dataset build_motor_dataset(std::span<const RawLog> logs, double mass, const FrictionParams& friction,
                                   const PreprocessOptions& opts = {}) {
  if (!(mass > 0.0)) throw ConfigError("build_motor_dataset: mass must be > 0");
  Dataset data({{"tau", "1"}, {"v", "m/s"}}, {{"F_motor", "N"}});
  for (const RawLog& log : logs) {
    const auto sig = detail::longitudinal_signals(log, opts);
    for (std::size_t i = 0; i < log.size(); ++i) {
      if (!sig.usable[i] || !(log.tau[i] > 0.0)) continue;
      data.add_row({log.tau[i], sig.v[i]}, {mass * sig.a[i] - friction_force(sig.v[i], friction)});
    }
  }
  if (data.empty()) throw InsufficientDataError("build_motor_dataset: no powered data (tau > 0)");
  return data;
}

struct SteeringAngleEstimate {
  std::vector<double> delta;  // NaN where rejected
  std::vector<bool> valid;
  std::size_t rejected = 0;
};

/// Inverts the kinematic yaw equation: delta = atan(l omega / v). Rows with
/// v <= v_min are flagged invalid.
inline SteeringAngleEstimate estimate_steering_angle_series(std::span<const double> omega,
                                                            std::span<const double> v, double wheelbase,
                                                            double v_min = kMinSpeed) {
  if (omega.size() != v.size()) throw ConfigError("estimate_steering_angle_series: length mismatch");
  if (!(wheelbase > 0.0)) throw ConfigError("estimate_steering_angle_series: wheelbase must be > 0");
  SteeringAngleEstimate out;
  out.delta.resize(v.size());
  out.valid.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] > v_min) {
      out.delta[i] = std::atan(wheelbase * omega[i] / v[i]);
      out.valid[i] = true;
    } else {
      out.delta[i] = std::nan("");
      out.valid[i] = false;
      ++out.rejected;
    }
  }
  return out;
}

struct SteeringDatasetResult {
  Dataset data;
  std::vector<std::string> warnings;
};

/// One row per constant-steering segment: X = [s], Y = [mean delta] over the
/// samples where the yaw rate is steady.
inline SteeringDatasetResult build_steering_dataset(std::span<const RawLog> logs, double wheelbase,
                                                    const PreprocessOptions& opts = {}) {
  SteeringDatasetResult result{Dataset({{"s", "1"}}, {{"delta", "rad"}}), {}};
  std::size_t log_index = 0;
  for (const RawLog& log : logs) {
    const std::size_t n = log.size();
    if (n < 3) {
      result.warnings.push_back("log " + std::to_string(log_index++) + ": too short");
      continue;
    }
    const double dt = (log.t.back() - log.t.front()) / static_cast<double>(n - 1);
    const auto half = static_cast<std::size_t>(std::llround(0.5 * opts.steady_window / dt));
    const auto w = detail::clamp_window(opts.smooth_window, n);
    const auto v = smooth(log.v_enc, w);
    const auto est = estimate_steering_angle_series(log.omega_imu, v, wheelbase, opts.v_min);

    std::size_t begin = 0;
    while (begin < n) {
      std::size_t end = begin + 1;
      while (end < n && log.s[end] == log.s[begin]) ++end;
      const double s_value = log.s[begin];

      double sum = 0.0;
      std::size_t count = 0;
      std::size_t slow = 0;
      for (std::size_t i = begin + half; i + half < end; ++i) {
        bool valid = true;
        double mean = 0.0;
        for (std::size_t j = i - half; j <= i + half; ++j) {
          valid = valid && est.valid[j];
          mean += log.omega_imu[j];
        }
        if (!valid) {
          ++slow;
          continue;
        }
        const double len = static_cast<double>(2 * half + 1);
        mean /= len;
        double var = 0.0;
        for (std::size_t j = i - half; j <= i + half; ++j) var += (log.omega_imu[j] - mean) * (log.omega_imu[j] - mean);
        const double sd = std::sqrt(var / len);
        if (sd < std::max(opts.steady_rel_tol * std::abs(mean), opts.steady_abs_floor)) {
          sum += est.delta[i];
          ++count;
        }
      }
      const std::string where = "log " + std::to_string(log_index) + " segment s=" + format_double(s_value);
      if (count == 0) {
        result.warnings.push_back(where + (slow > 0 ? ": speed below threshold, excluded" : ": no steady samples, excluded"));
      } else {
        result.data.add_row({s_value}, {sum / static_cast<double>(count)});
      }
      begin = end;
    }
    ++log_index;
  }
  if (result.data.empty()) throw InsufficientDataError("build_steering_dataset: no steady constant-steering segments");
  return result;
}

/// Vehicle-frame forces from the absolute-frame equations of motion.
struct ForceLabels {
  double F_x = 0.0;   // total longitudinal, vehicle frame
  double F_yf = 0.0;  // front lateral, vehicle frame
  double F_yr = 0.0;  // rear lateral, vehicle frame
};

/// Solves
///   [cos eta  -sin eta  -sin eta] [F_x ]   [m a_x       ]
///   [sin eta   cos eta   cos eta] [F_yf] = [m a_y       ]
///   [0         l_f      -l_r    ] [F_yr]   [I_z domega  ]
/// Returns nullopt when the system is numerically singular.
inline std::optional<ForceLabels> solve_force_labels(double eta, double a_x, double a_y, double omega_dot,
                                                     const Geometry& g) {
  const double c = std::cos(eta);
  const double s = std::sin(eta);
  const std::array<std::array<double, 3>, 3> M = {{{c, -s, -s}, {s, c, c}, {0.0, g.l_f, -g.l_r}}};
  const std::array<double, 3> b = {g.m * a_x, g.m * a_y, g.I_z * omega_dot};

  auto det3 = [](const std::array<std::array<double, 3>, 3>& A) {
    return A[0][0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1]) - A[0][1] * (A[1][0] * A[2][2] - A[1][2] * A[2][0]) +
           A[0][2] * (A[1][0] * A[2][1] - A[1][1] * A[2][0]);
  };
  const double det = det3(M);
  if (!(std::abs(det) > 1e-9 * (g.l_f + g.l_r))) return std::nullopt;
  std::array<double, 3> sol{};
  for (std::size_t col = 0; col < 3; ++col) {
    auto A = M;
    for (std::size_t r = 0; r < 3; ++r) A[r][col] = b[r];
    sol[col] = det3(A) / det;
  }
  return ForceLabels{sol[0], sol[1], sol[2]};
}

struct TireDatasets {
  Dataset front;  // X = [alpha_f], Y = [tire-frame front lateral force]
  Dataset rear;   // X = [alpha_r], Y = [rear lateral force]
  std::size_t singular_rows = 0;
};

/// Differentiates the mocap pose twice, solves the equations of motion for
/// the axle forces and pairs them with the slip angles. `params` supplies the
/// geometry, the steering map and the steering delay.
inline TireDatasets build_tire_dataset(std::span<const RawLog> logs, const VehicleParams& params,
                                       const PreprocessOptions& opts = {}) {
  const Geometry& g = params.geometry;
  TireDatasets out{Dataset({{"alpha_f", "rad"}}, {{"F_yf", "N"}}), Dataset({{"alpha_r", "rad"}}, {{"F_yr", "N"}}), 0};
  for (const RawLog& log : logs) {
    if (!log.mocap) throw ConfigError("build_tire_dataset: log has no mocap columns");
    const std::size_t n = log.size();
    if (n < 3) throw InsufficientDataError("build_tire_dataset: log shorter than 3 samples");
    const std::size_t w = detail::clamp_window(opts.mocap_window, n);

    const auto x = smooth(log.mocap->x, w);
    const auto y = smooth(log.mocap->y, w);
    const auto eta = smooth(detail::unwrap(log.mocap->eta), w);
    const auto vx_abs = smooth(differentiate(x, log.t), w);
    const auto vy_abs = smooth(differentiate(y, log.t), w);
    const auto omega = smooth(differentiate(eta, log.t), w);
    const auto ax_abs = differentiate(vx_abs, log.t);
    const auto ay_abs = differentiate(vy_abs, log.t);
    const auto omega_dot = differentiate(omega, log.t);

    const double dt = (log.t.back() - log.t.front()) / static_cast<double>(n - 1);
    const auto lag = static_cast<std::size_t>(std::llround(params.delays.steer_delay / dt));
    const auto usable = detail::steady_input_mask(log, 2 * w + 2);

    for (std::size_t i = lag; i < n; ++i) {
      if (!usable[i] || (i >= lag && !usable[i - lag])) continue;
      const auto v_body = body_frame_velocity({vx_abs[i], vy_abs[i]}, eta[i]);
      if (!(v_body[0] > opts.v_min)) continue;
      const double delta = steering_angle(log.s[i - lag], params.steering);
      const DynamicState state{x[i], y[i], eta[i], v_body[0], v_body[1], omega[i]};
      const SlipAngles slip = slip_angles(state, delta, g, opts.slip);

      const auto labels = solve_force_labels(eta[i], ax_abs[i], ay_abs[i], omega_dot[i], g);
      if (!labels) {
        ++out.singular_rows;
        continue;
      }
      // The drive force is shared equally by both axles.
      const double F_xf = 0.5 * labels->F_x;
      const double front = std::sin(-delta) * F_xf + std::cos(-delta) * labels->F_yf;
      out.front.add_row({slip.front}, {front});
      out.rear.add_row({slip.rear}, {labels->F_yr});
    }
  }
  if (out.front.empty()) throw InsufficientDataError("build_tire_dataset: no usable mocap rows");
  return out;
}

}  // namespace smallcar::sysid
