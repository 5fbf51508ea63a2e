#pragma once

// Parameterized sub-models as fitted by the identification pipeline. Each
// model maps one dataset row to a scalar prediction and supplies the analytic
// gradient of that prediction with respect to its parameter vector.

#include <array>
#include <cmath>
#include <span>
#include <string_view>

#include "smallcar/models.hpp"

namespace smallcar::sysid {

template <typename M>
concept SubModel = requires(const M& m, std::span<const double> x, std::span<const double> p,
                            std::span<double> g) {
  { M::kParamCount } -> std::convertible_to<std::size_t>;
  { m.predict(x, p) } -> std::convertible_to<double>;
  m.gradient(x, p, g);
};

/// Row: [v]. Params: [a, b, c].
struct FrictionModel {
  static constexpr std::size_t kParamCount = 3;
  static constexpr std::array<std::string_view, 3> kNames = {"a", "b", "c"};

  static FrictionParams unpack(std::span<const double> p) { return {p[0], p[1], p[2]}; }
  static std::array<double, 3> pack(const FrictionParams& f) { return {f.a, f.b, f.c}; }

  [[nodiscard]] double predict(std::span<const double> x, std::span<const double> p) const {
    return friction_force(x[0], unpack(p));
  }
  void gradient(std::span<const double> x, std::span<const double> p, std::span<double> g) const {
    const double v = x[0];
    g[0] = -std::tanh(p[1] * v);
    g[1] = -p[0] * v * smallcar::detail::sech2(p[1] * v);
    g[2] = -v;
  }
};

/// Row: [tau, v]. Params: [d, e, g].
struct MotorModel {
  static constexpr std::size_t kParamCount = 3;
  static constexpr std::array<std::string_view, 3> kNames = {"d", "e", "g"};

  static MotorParams unpack(std::span<const double> p) { return {p[0], p[1], p[2]}; }
  static std::array<double, 3> pack(const MotorParams& m) { return {m.d, m.e, m.g}; }

  [[nodiscard]] double predict(std::span<const double> x, std::span<const double> p) const {
    return motor_force(x[0], x[1], unpack(p));
  }
  void gradient(std::span<const double> x, std::span<const double> p, std::span<double> g) const {
    const double tau = x[0];
    const double v = x[1];
    const double thr = smooth_positive_throttle(tau, p[2]);
    g[0] = thr;
    g[1] = -v * thr;
    g[2] = (p[0] - v * p[1]) * smooth_positive_throttle_du(tau, p[2]);
  }
};

/// Row: [s]. Params: [a_t, b_t, c_t, d_t, e_t].
struct SteeringModel {
  static constexpr std::size_t kParamCount = 5;
  static constexpr std::array<std::string_view, 5> kNames = {"a_t", "b_t", "c_t", "d_t", "e_t"};

  static SteeringParams unpack(std::span<const double> p) { return {p[0], p[1], p[2], p[3], p[4]}; }
  static std::array<double, 5> pack(const SteeringParams& s) {
    return {s.a_t, s.b_t, s.c_t, s.d_t, s.e_t};
  }

  [[nodiscard]] double predict(std::span<const double> x, std::span<const double> p) const {
    return steering_angle(x[0], unpack(p));
  }
  void gradient(std::span<const double> x, std::span<const double> p, std::span<double> g) const {
    const double u = x[0] + p[2];
    const double w = steering_weight(x[0], p[2]);
    const double dw = 0.5 * kSteeringWeightSharpness * smallcar::detail::sech2(kSteeringWeightSharpness * u);
    const double tb = std::tanh(p[1] * u);
    const double te = std::tanh(p[4] * u);
    g[0] = w * tb;
    g[1] = w * p[0] * u * smallcar::detail::sech2(p[1] * u);
    g[2] = dw * (p[0] * tb - p[3] * te) + w * p[0] * p[1] * smallcar::detail::sech2(p[1] * u) +
           (1.0 - w) * p[3] * p[4] * smallcar::detail::sech2(p[4] * u);
    g[3] = (1.0 - w) * te;
    g[4] = (1.0 - w) * p[3] * u * smallcar::detail::sech2(p[4] * u);
  }
};

/// Row: [alpha_f]. Params: [D, C, B, E].
struct FrontTireModel {
  static constexpr std::size_t kParamCount = 4;
  static constexpr std::array<std::string_view, 4> kNames = {"D", "C", "B", "E"};

  static std::array<double, 4> pack(const TireParams& t) { return {t.D, t.C, t.B, t.E}; }

  [[nodiscard]] double predict(std::span<const double> x, std::span<const double> p) const {
    return pacejka_lateral(x[0], TireParams{p[0], p[1], p[2], p[3], 1.0});
  }
  void gradient(std::span<const double> x, std::span<const double> p, std::span<double> g) const {
    const double alpha = x[0];
    const double D = p[0];
    const double C = p[1];
    const double B = p[2];
    const double E = p[3];
    const double ba = B * alpha;
    const double atan_ba = std::atan(ba);
    const double phi = ba - E * (ba - atan_ba);
    const double theta = std::atan(phi);
    const double cos_term = std::cos(C * theta);
    const double dphi_common = D * cos_term * C / (1.0 + phi * phi);
    g[0] = std::sin(C * theta);
    g[1] = D * cos_term * theta;
    g[2] = dphi_common * alpha * (1.0 - E + E / (1.0 + ba * ba));
    g[3] = dphi_common * -(ba - atan_ba);
  }
};

/// Row: [alpha_r]. Params: [C_r].
struct RearTireModel {
  static constexpr std::size_t kParamCount = 1;
  static constexpr std::array<std::string_view, 1> kNames = {"C_r"};

  [[nodiscard]] double predict(std::span<const double> x, std::span<const double> p) const {
    return rear_lateral(x[0], p[0]);
  }
  void gradient(std::span<const double> x, std::span<const double> /*p*/, std::span<double> g) const {
    g[0] = x[0];
  }
};

}  // namespace smallcar::sysid
