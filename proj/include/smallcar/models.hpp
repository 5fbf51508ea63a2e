#pragma once

// Vehicle sub-models for small-scale car-like robots: longitudinal friction and
// motor curves, the steering map, lateral tire forces, and the kinematic and
// dynamic bicycle model right-hand sides. Everything in this header is a pure
// function of its arguments.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace smallcar {

/// Thrown when a model input or parameter set violates its domain.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Fixed sharpness constants of the smooth switching terms. These are part of
// the model structure, not fitting parameters.
inline constexpr double kThrottleSharpness = 100.0;
inline constexpr double kSteeringWeightSharpness = 30.0;

/// Longitudinal friction F_f(v) = -(a tanh(b v) + c v).
struct FrictionParams {
  double a = 0.0;  // force scale [N]
  double b = 0.0;  // velocity sharpness [s/m]
  double c = 0.0;  // viscous coefficient [N s/m]
};

/// Motor force F_m(tau, v) = (d - e v) * smooth_max(0, tau + g).
struct MotorParams {
  double d = 0.0;  // stall-force scale [N]
  double e = 0.0;  // back-EMF slope [N s/m]
  double g = 0.0;  // throttle dead-zone offset, in (-1, 0]
};

/// Steering map: weighted sum of two tanh curves sharing the input offset c_t.
struct SteeringParams {
  double a_t = 0.0;
  double b_t = 0.0;
  double c_t = 0.0;
  double d_t = 0.0;
  double e_t = 0.0;
};

/// Front Pacejka coefficients plus the rear linear cornering coefficient.
struct TireParams {
  double D = 0.0;
  double C = 0.0;
  double B = 0.0;
  double E = 0.0;
  double C_r = 0.0;
};

struct Geometry {
  double m = 0.0;    // mass [kg]
  double l = 0.0;    // wheelbase [m]
  double l_f = 0.0;  // CoM to front axle [m]
  double l_r = 0.0;  // CoM to rear axle [m]
  double w = 0.0;    // width [m]
  double I_z = 0.0;  // yaw inertia [kg m^2]
};

struct Delays {
  double steer_delay = 0.0;  // [s]
  double long_delay = 0.0;   // [s]
};

struct VehicleParams {
  FrictionParams friction;
  MotorParams motor;
  SteeringParams steering;
  TireParams tire;
  Geometry geometry;
  Delays delays;
};

struct ControlInput {
  double tau = 0.0;  // throttle in [-1, 1]
  double s = 0.0;    // steering input in [-1, 1]
};

/// Rear-axle pose and longitudinal speed.
struct KinematicState {
  double x = 0.0;
  double y = 0.0;
  double eta = 0.0;
  double v = 0.0;

  static constexpr std::size_t size = 4;
  [[nodiscard]] std::array<double, 4> to_array() const { return {x, y, eta, v}; }
  static KinematicState from_array(const std::array<double, 4>& a) {
    return {a[0], a[1], a[2], a[3]};
  }
};

/// CoM pose plus body-frame velocities and yaw rate.
struct DynamicState {
  double x = 0.0;
  double y = 0.0;
  double eta = 0.0;
  double v_x = 0.0;
  double v_y = 0.0;
  double omega = 0.0;

  static constexpr std::size_t size = 6;
  [[nodiscard]] std::array<double, 6> to_array() const { return {x, y, eta, v_x, v_y, omega}; }
  static DynamicState from_array(const std::array<double, 6>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
  }
};

/// Which slip-angle formula the dynamic model uses.
///
/// `kLiteral` evaluates alpha_f = delta - atan(v_y + omega l_f) without dividing by
/// v_x; this is the form the reference parameter set was identified with.
/// `kNormalized` is the textbook definition alpha_f = delta - atan((v_y + omega l_f) / v_x).
enum class SlipFormulation { kLiteral, kNormalized };

inline constexpr double kMinNormalizedSpeed = 1e-3;

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

inline bool finite_all(std::initializer_list<double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline double sech2(double x) {
  const double c = std::cosh(x);
  return std::isfinite(c) ? 1.0 / (c * c) : 0.0;
}

}  // namespace detail

inline void validate(const FrictionParams& p) {
  detail::require(detail::finite_all({p.a, p.b, p.c}), "friction: non-finite parameter");
  detail::require(p.a > 0.0, "friction: a must be > 0");
  detail::require(p.b > 0.0, "friction: b must be > 0");
  detail::require(p.c >= 0.0, "friction: c must be >= 0");
}

inline void validate(const MotorParams& p) {
  detail::require(detail::finite_all({p.d, p.e, p.g}), "motor: non-finite parameter");
  detail::require(p.d > 0.0, "motor: d must be > 0");
  detail::require(p.e > 0.0, "motor: e must be > 0");
  detail::require(p.g > -1.0 && p.g <= 0.0, "motor: g must lie in (-1, 0]");
}

inline void validate(const SteeringParams& p) {
  detail::require(detail::finite_all({p.a_t, p.b_t, p.c_t, p.d_t, p.e_t}),
                  "steering: non-finite parameter");
  detail::require(p.a_t > 0.0 && p.d_t > 0.0, "steering: angle scales must be > 0");
  detail::require(p.b_t > 0.0 && p.e_t > 0.0, "steering: input gains must be > 0");
  detail::require(std::abs(p.c_t) < 1.0, "steering: |c_t| must be < 1");
}

inline void validate(const TireParams& p) {
  detail::require(detail::finite_all({p.D, p.C, p.B, p.E, p.C_r}), "tire: non-finite parameter");
  detail::require(p.D > 0.0 && p.B > 0.0 && p.C > 0.0, "tire: D, B, C must be > 0");
  detail::require(p.C_r > 0.0, "tire: C_r must be > 0");
}

inline void validate(const Geometry& g) {
  detail::require(detail::finite_all({g.m, g.l, g.l_f, g.l_r, g.w, g.I_z}),
                  "geometry: non-finite field");
  detail::require(g.m > 0.0, "geometry: m must be > 0");
  detail::require(g.l > 0.0 && g.l_f > 0.0 && g.l_r > 0.0, "geometry: lengths must be > 0");
  detail::require(std::abs(g.l_f + g.l_r - g.l) <= 1e-9 * g.l, "geometry: l must equal l_f + l_r");
  detail::require(g.w > 0.0, "geometry: w must be > 0");
  detail::require(g.I_z > 0.0, "geometry: I_z must be > 0");
}

inline void validate(const Delays& d) {
  detail::require(std::isfinite(d.steer_delay) && d.steer_delay >= 0.0 && d.steer_delay < 1.0,
                  "delays: steer_delay must lie in [0, 1) s");
  detail::require(std::isfinite(d.long_delay) && d.long_delay >= 0.0 && d.long_delay < 1.0,
                  "delays: long_delay must lie in [0, 1) s");
}

inline void validate(const VehicleParams& p) {
  validate(p.friction);
  validate(p.motor);
  validate(p.steering);
  validate(p.tire);
  validate(p.geometry);
  validate(p.delays);
}

inline void validate(const ControlInput& u) {
  detail::require(std::isfinite(u.tau) && std::abs(u.tau) <= 1.0, "input: tau must lie in [-1, 1]");
  detail::require(std::isfinite(u.s) && std::abs(u.s) <= 1.0, "input: s must lie in [-1, 1]");
}

// ---------------------------------------------------------------------------
// Curves

/// Uniform-mass rectangle l x w: I_z = m (l^2 + w^2) / 12.
inline double rectangle_inertia(double m, double l, double w) {
  if (!(m > 0.0) || !(l > 0.0) || !(w > 0.0)) {
    throw DomainError("rectangle_inertia: mass, length and width must be positive");
  }
  return m * (l * l + w * w) / 12.0;
}

/// Geometry with the CoM at mid-wheelbase and rectangle yaw inertia.
inline Geometry make_geometry(double m, double l, double w) {
  return Geometry{m, l, 0.5 * l, 0.5 * l, w, rectangle_inertia(m, l, w)};
}

inline double friction_force(double v, const FrictionParams& p) {
  return -(p.a * std::tanh(p.b * v) + v * p.c);
}

/// d friction_force / d v
inline double friction_force_dv(double v, const FrictionParams& p) {
  return -(p.a * p.b * detail::sech2(p.b * v) + p.c);
}

/// Continuously differentiable stand-in for max(0, tau + g).
inline double smooth_positive_throttle(double tau, double g) {
  const double u = tau + g;
  return u * 0.5 * (std::tanh(kThrottleSharpness * u) + 1.0);
}

/// d smooth_positive_throttle / d tau (equal to the derivative w.r.t. g).
inline double smooth_positive_throttle_du(double tau, double g) {
  const double u = tau + g;
  const double k = kThrottleSharpness;
  return 0.5 * (std::tanh(k * u) + 1.0) + 0.5 * k * u * detail::sech2(k * u);
}

inline double motor_force(double tau, double v, const MotorParams& p) {
  return (p.d - v * p.e) * smooth_positive_throttle(tau, p.g);
}

inline double motor_force_dtau(double tau, double v, const MotorParams& p) {
  return (p.d - v * p.e) * smooth_positive_throttle_du(tau, p.g);
}

inline double motor_force_dv(double tau, double /*v*/, const MotorParams& p) {
  return -p.e * smooth_positive_throttle(tau, p.g);
}

/// Speed at which the motor force vanishes for every throttle.
inline double no_load_speed(const MotorParams& p) { return p.d / p.e; }

/// Blending weight between the two steering sigmoids.
inline double steering_weight(double s, double c_t) {
  return 0.5 * (std::tanh(kSteeringWeightSharpness * (s + c_t)) + 1.0);
}

inline double steering_angle(double s, const SteeringParams& p) {
  const double u = s + p.c_t;
  const double w = steering_weight(s, p.c_t);
  return w * p.a_t * std::tanh(p.b_t * u) + (1.0 - w) * p.d_t * std::tanh(p.e_t * u);
}

inline double steering_angle_ds(double s, const SteeringParams& p) {
  const double u = s + p.c_t;
  const double w = steering_weight(s, p.c_t);
  const double dw = 0.5 * kSteeringWeightSharpness * detail::sech2(kSteeringWeightSharpness * u);
  const double left = p.a_t * std::tanh(p.b_t * u);
  const double right = p.d_t * std::tanh(p.e_t * u);
  return dw * (left - right) + w * p.a_t * p.b_t * detail::sech2(p.b_t * u) +
         (1.0 - w) * p.d_t * p.e_t * detail::sech2(p.e_t * u);
}

/// Pacejka magic formula D sin(C atan(B a - E (B a - atan(B a)))).
inline double pacejka_lateral(double alpha, const TireParams& p) {
  const double ba = p.B * alpha;
  const double phi = ba - p.E * (ba - std::atan(ba));
  return p.D * std::sin(p.C * std::atan(phi));
}

inline double pacejka_lateral_dalpha(double alpha, const TireParams& p) {
  const double ba = p.B * alpha;
  const double phi = ba - p.E * (ba - std::atan(ba));
  const double dphi = p.B * (1.0 - p.E + p.E / (1.0 + ba * ba));
  return p.D * std::cos(p.C * std::atan(phi)) * p.C / (1.0 + phi * phi) * dphi;
}

inline double rear_lateral(double alpha, double C_r) { return C_r * alpha; }

// ---------------------------------------------------------------------------
// Kinematics

struct SlipAngles {
  double front = 0.0;
  double rear = 0.0;
};

inline SlipAngles slip_angles(const DynamicState& x, double delta, const Geometry& g,
                              SlipFormulation form = SlipFormulation::kLiteral) {
  double front_arg = x.v_y + x.omega * g.l_f;
  double rear_arg = x.v_y - x.omega * g.l_r;
  if (form == SlipFormulation::kNormalized) {
    if (!(x.v_x > kMinNormalizedSpeed)) {
      throw DomainError("slip_angles: normalized slip needs v_x > " +
                        std::to_string(kMinNormalizedSpeed) + " m/s");
    }
    front_arg /= x.v_x;
    rear_arg /= x.v_x;
  }
  return {-std::atan(front_arg) + delta, -std::atan(rear_arg)};
}

/// Rotates an absolute-frame velocity into the body frame of heading eta.
inline std::array<double, 2> body_frame_velocity(std::array<double, 2> v_abs, double eta) {
  const double c = std::cos(eta);
  const double s = std::sin(eta);
  return {c * v_abs[0] + s * v_abs[1], -s * v_abs[0] + c * v_abs[1]};
}

/// Kinematic bicycle model about the rear axle. `total_force` is F_m + F_f.
inline std::array<double, 4> kinematic_rhs(const KinematicState& x, double delta,
                                           double total_force, const Geometry& g) {
  if (!(std::abs(delta) < 0.5 * std::numbers::pi)) {
    throw DomainError("kinematic_rhs: |delta| must be < pi/2");
  }
  return {x.v * std::cos(x.eta), x.v * std::sin(x.eta), x.v * std::tan(delta) / g.l,
          total_force / g.m};
}

/// Tire-frame forces evaluated while computing the dynamic model derivative.
struct TireForces {
  SlipAngles slip;
  double front_lateral = 0.0;       // tire frame
  double rear_lateral = 0.0;        // tire frame
  double front_longitudinal = 0.0;  // tire frame
  double rear_longitudinal = 0.0;   // tire frame
};

inline TireForces tire_forces(const DynamicState& x, double delta, double total_force,
                              const VehicleParams& p,
                              SlipFormulation form = SlipFormulation::kLiteral) {
  TireForces f;
  f.slip = slip_angles(x, delta, p.geometry, form);
  f.front_lateral = pacejka_lateral(f.slip.front, p.tire);
  f.rear_lateral = rear_lateral(f.slip.rear, p.tire.C_r);
  // Four-wheel drive: the longitudinal force is split equally between axles.
  f.front_longitudinal = 0.5 * total_force;
  f.rear_longitudinal = 0.5 * total_force;
  return f;
}

/// Dynamic bicycle model. `total_force` is the motor plus friction force,
/// shared equally by the two axles.
inline std::array<double, 6> dynamic_rhs(const DynamicState& x, double delta, double total_force,
                                         const VehicleParams& p,
                                         SlipFormulation form = SlipFormulation::kLiteral) {
  const Geometry& g = p.geometry;
  const TireForces f = tire_forces(x, delta, total_force, p, form);
  const double cd = std::cos(delta);
  const double sd = std::sin(delta);
  const double ce = std::cos(x.eta);
  const double se = std::sin(x.eta);
  const double front_lat_body = f.front_lateral * cd + f.front_longitudinal * sd;
  return {
      x.v_x * ce - x.v_y * se,
      x.v_x * se + x.v_y * ce,
      x.omega,
      (f.rear_longitudinal + f.front_longitudinal * cd - f.front_lateral * sd) / g.m + x.omega * x.v_y,
      (f.rear_lateral + front_lat_body) / g.m - x.omega * x.v_x,
      (g.l_f * front_lat_body - g.l_r * f.rear_lateral) / g.I_z,
  };
}

/// Kinematic motion expressed in dynamic-state coordinates: the lateral
/// velocity and yaw rate follow the no-slip constraint of the rear axle.
/// Used by the simulator below the blend speed.
inline std::array<double, 6> dynamic_rhs_no_slip(const DynamicState& x, double delta,
                                                 double total_force, const Geometry& g) {
  const double k = std::tan(delta) / g.l;
  const double ce = std::cos(x.eta);
  const double se = std::sin(x.eta);
  const double a = total_force / g.m;
  return {x.v_x * ce - x.v_y * se, x.v_x * se + x.v_y * ce, x.omega, a, g.l_r * k * a, k * a};
}

/// Longitudinal force at speed v for throttle tau: motor plus friction.
inline double longitudinal_force(double tau, double v, const VehicleParams& p) {
  return motor_force(tau, v, p.motor) + friction_force(v, p.friction);
}

}  // namespace smallcar
