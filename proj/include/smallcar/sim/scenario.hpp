#pragma once

// Scripted driving experiments: input schedules, scenario definitions, their
// JSON form, and the library of identification experiments.
//
// Scenario JSON:
//   {
//     "name": "step_0.30", "tag": "step", "model": "kinematic" | "dynamic",
//     "duration": 6.0, "dt": 0.01, "mocap": false, "slip": "literal" | "normalized",
//     "throttle": <schedule>, "steering": <schedule>,
//     "initial": {"x": 0, "y": 0, "eta": 0, "v_x": 0, "v_y": 0, "omega": 0}
//   }
//   <schedule> := {"type": "step", "time": t, "before": u0, "after": u1}
//              |  {"type": "piecewise", "times": [...], "values": [...]}
//              |  {"type": "sine", "amplitude": A, "frequency": f, "phase": p, "offset": o}

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "smallcar/models.hpp"

namespace smallcar::sim {

/// Invalid scenario definition; `path()` locates the offending JSON field.
class ScenarioError : public std::invalid_argument {
public:
  ScenarioError(const std::string& path, const std::string& what)
      : std::invalid_argument(path + ": " + what), path_(path) {}
  [[nodiscard]] const std::string& path() const { return path_; }

private:
  std::string path_;
};

struct StepSchedule {
  double time = 0.0;
  double before = 0.0;
  double after = 0.0;
};

/// Piecewise-constant: values[k] holds on [times[k], times[k+1]); values[0]
/// also holds before times[0].
struct PiecewiseSchedule {
  std::vector<double> times;
  std::vector<double> values;
};

struct SineSchedule {
  double amplitude = 0.0;
  double frequency = 0.0;  // Hz
  double phase = 0.0;      // rad
  double offset = 0.0;
};

using Schedule = std::variant<StepSchedule, PiecewiseSchedule, SineSchedule>;

inline Schedule constant_schedule(double value) { return StepSchedule{0.0, value, value}; }

inline double evaluate(const Schedule& schedule, double t) {
  struct Visitor {
    double t;
    double operator()(const StepSchedule& s) const { return t < s.time ? s.before : s.after; }
    double operator()(const PiecewiseSchedule& s) const {
      const auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
      const auto k = it == s.times.begin() ? 0 : static_cast<std::size_t>(it - s.times.begin()) - 1;
      return s.values[k];
    }
    double operator()(const SineSchedule& s) const {
      return s.offset + s.amplitude * std::sin(2.0 * std::numbers::pi * s.frequency * t + s.phase);
    }
  };
  return std::visit(Visitor{t}, schedule);
}

/// Largest |value| the schedule can produce.
inline double peak_magnitude(const Schedule& schedule) {
  struct Visitor {
    double operator()(const StepSchedule& s) const { return std::max(std::abs(s.before), std::abs(s.after)); }
    double operator()(const PiecewiseSchedule& s) const {
      double m = 0.0;
      for (double v : s.values) m = std::max(m, std::abs(v));
      return m;
    }
    double operator()(const SineSchedule& s) const { return std::abs(s.offset) + std::abs(s.amplitude); }
  };
  return std::visit(Visitor{}, schedule);
}

enum class ModelKind { kKinematic, kDynamic };

inline const char* to_string(ModelKind k) { return k == ModelKind::kKinematic ? "kinematic" : "dynamic"; }

struct Scenario {
  std::string name;
  std::string tag;  // experiment type, e.g. "step", "coast", "steer", "sine", "mocap"
  double duration = 1.0;
  double dt = 0.01;
  Schedule throttle = constant_schedule(0.0);
  Schedule steering = constant_schedule(0.0);
  ModelKind model = ModelKind::kKinematic;
  // Initial state in dynamic coordinates; the kinematic model reads x, y, eta
  // as the rear-axle pose and v_x as its speed.
  DynamicState initial;
  bool record_mocap = false;
  SlipFormulation slip = SlipFormulation::kLiteral;
  double blend_speed = 0.3;  // m/s, normalized slip only

  [[nodiscard]] std::size_t sample_count() const {
    return static_cast<std::size_t>(std::llround(duration / dt)) + 1;
  }
};

namespace detail {

inline void check_schedule(const Schedule& schedule, const std::string& path) {
  if (const auto* p = std::get_if<PiecewiseSchedule>(&schedule)) {
    if (p->values.empty()) throw ScenarioError(path + ".values", "must not be empty");
    if (p->times.size() != p->values.size()) {
      throw ScenarioError(path + ".times", "must have one entry per value");
    }
    for (std::size_t i = 1; i < p->times.size(); ++i) {
      if (!(p->times[i] > p->times[i - 1])) {
        throw ScenarioError(path + ".times", "must be strictly increasing");
      }
    }
  }
  if (const auto* s = std::get_if<SineSchedule>(&schedule)) {
    if (!(s->frequency >= 0.0)) throw ScenarioError(path + ".frequency", "must be >= 0");
  }
  const double peak = peak_magnitude(schedule);
  if (!std::isfinite(peak) || peak > 1.0) {
    throw ScenarioError(path, "schedule values must lie in [-1, 1]");
  }
}

}  // namespace detail

inline void validate(const Scenario& s) {
  if (!(s.duration > 0.0) || !std::isfinite(s.duration)) {
    throw ScenarioError("scenario.duration", "must be > 0");
  }
  if (!(s.dt > 0.0 && s.dt <= 0.05)) throw ScenarioError("scenario.dt", "must lie in (0, 0.05] s");
  detail::check_schedule(s.throttle, "scenario.throttle");
  detail::check_schedule(s.steering, "scenario.steering");
  const auto init = s.initial.to_array();
  for (double v : init) {
    if (!std::isfinite(v)) throw ScenarioError("scenario.initial", "must be finite");
  }
  if (!(s.blend_speed >= 0.0)) throw ScenarioError("scenario.blend_speed", "must be >= 0");
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline double number_at(const nlohmann::json& j, const char* key, const std::string& path,
                        std::optional<double> fallback = std::nullopt) {
  const auto it = j.find(key);
  if (it == j.end()) {
    if (fallback) return *fallback;
    throw ScenarioError(path + "." + key, "missing");
  }
  if (!it->is_number()) throw ScenarioError(path + "." + key, "must be a number");
  return it->get<double>();
}

inline std::vector<double> numbers_at(const nlohmann::json& j, const char* key, const std::string& path) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array()) throw ScenarioError(path + "." + key, "must be an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < it->size(); ++i) {
    if (!(*it)[i].is_number()) {
      throw ScenarioError(path + "." + key + "[" + std::to_string(i) + "]", "must be a number");
    }
    out.push_back((*it)[i].get<double>());
  }
  return out;
}

}  // namespace detail

inline Schedule schedule_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ScenarioError(path, "must be an object");
  const auto type = j.find("type");
  if (type == j.end() || !type->is_string()) throw ScenarioError(path + ".type", "missing schedule type");
  const auto name = type->get<std::string>();
  if (name == "step") {
    return StepSchedule{detail::number_at(j, "time", path), detail::number_at(j, "before", path),
                        detail::number_at(j, "after", path)};
  }
  if (name == "piecewise") {
    return PiecewiseSchedule{detail::numbers_at(j, "times", path), detail::numbers_at(j, "values", path)};
  }
  if (name == "sine") {
    return SineSchedule{detail::number_at(j, "amplitude", path), detail::number_at(j, "frequency", path),
                        detail::number_at(j, "phase", path, 0.0), detail::number_at(j, "offset", path, 0.0)};
  }
  throw ScenarioError(path + ".type", "unknown schedule type '" + name + "'");
}

inline nlohmann::json to_json(const Schedule& schedule) {
  struct Visitor {
    nlohmann::json operator()(const StepSchedule& s) const {
      return {{"type", "step"}, {"time", s.time}, {"before", s.before}, {"after", s.after}};
    }
    nlohmann::json operator()(const PiecewiseSchedule& s) const {
      return {{"type", "piecewise"}, {"times", s.times}, {"values", s.values}};
    }
    nlohmann::json operator()(const SineSchedule& s) const {
      return {{"type", "sine"},   {"amplitude", s.amplitude}, {"frequency", s.frequency},
              {"phase", s.phase}, {"offset", s.offset}};
    }
  };
  return std::visit(Visitor{}, schedule);
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  const std::string root = "scenario";
  if (!j.is_object()) throw ScenarioError(root, "must be an object");
  Scenario s;
  if (auto it = j.find("name"); it != j.end()) {
    if (!it->is_string()) throw ScenarioError(root + ".name", "must be a string");
    s.name = it->get<std::string>();
  }
  if (auto it = j.find("tag"); it != j.end()) {
    if (!it->is_string()) throw ScenarioError(root + ".tag", "must be a string");
    s.tag = it->get<std::string>();
  }
  s.duration = detail::number_at(j, "duration", root);
  s.dt = detail::number_at(j, "dt", root);
  if (auto it = j.find("model"); it != j.end()) {
    const auto m = it->is_string() ? it->get<std::string>() : std::string{};
    if (m == "kinematic") {
      s.model = ModelKind::kKinematic;
    } else if (m == "dynamic") {
      s.model = ModelKind::kDynamic;
    } else {
      throw ScenarioError(root + ".model", "must be \"kinematic\" or \"dynamic\"");
    }
  }
  if (auto it = j.find("slip"); it != j.end()) {
    const auto m = it->is_string() ? it->get<std::string>() : std::string{};
    if (m == "literal") {
      s.slip = SlipFormulation::kLiteral;
    } else if (m == "normalized") {
      s.slip = SlipFormulation::kNormalized;
    } else {
      throw ScenarioError(root + ".slip", "must be \"literal\" or \"normalized\"");
    }
  }
  if (auto it = j.find("mocap"); it != j.end()) {
    if (!it->is_boolean()) throw ScenarioError(root + ".mocap", "must be a boolean");
    s.record_mocap = it->get<bool>();
  }
  s.blend_speed = detail::number_at(j, "blend_speed", root, s.blend_speed);
  if (auto it = j.find("throttle"); it != j.end()) s.throttle = schedule_from_json(*it, root + ".throttle");
  if (auto it = j.find("steering"); it != j.end()) s.steering = schedule_from_json(*it, root + ".steering");
  if (auto it = j.find("initial"); it != j.end()) {
    const std::string p = root + ".initial";
    if (!it->is_object()) throw ScenarioError(p, "must be an object");
    s.initial = DynamicState{detail::number_at(*it, "x", p, 0.0),   detail::number_at(*it, "y", p, 0.0),
                             detail::number_at(*it, "eta", p, 0.0), detail::number_at(*it, "v_x", p, 0.0),
                             detail::number_at(*it, "v_y", p, 0.0), detail::number_at(*it, "omega", p, 0.0)};
  }
  validate(s);
  return s;
}

inline nlohmann::json to_json(const Scenario& s) {
  return {
      {"name", s.name},
      {"tag", s.tag},
      {"model", to_string(s.model)},
      {"duration", s.duration},
      {"dt", s.dt},
      {"mocap", s.record_mocap},
      {"slip", s.slip == SlipFormulation::kLiteral ? "literal" : "normalized"},
      {"blend_speed", s.blend_speed},
      {"throttle", to_json(s.throttle)},
      {"steering", to_json(s.steering)},
      {"initial",
       {{"x", s.initial.x},
        {"y", s.initial.y},
        {"eta", s.initial.eta},
        {"v_x", s.initial.v_x},
        {"v_y", s.initial.v_y},
        {"omega", s.initial.omega}}},
  };
}

// ---------------------------------------------------------------------------
// Identification experiments

struct LibraryOptions {
  double dt = 0.01;
  // Step-throttle battery: hold each level, then release and coast.
  std::vector<double> step_levels = {0.15, 0.2, 0.25, 0.3, 0.35, 0.4};
  double step_start = 0.5;
  double step_hold = 4.0;
  double step_coast = 4.0;
  // Coast-down: repeated launch / zero-throttle cycles in one run. The launch
  // level cycles through coast_launch_levels.
  std::vector<double> coast_launch_levels = {0.25, 0.3, 0.35, 0.4};
  double coast_launch = 1.5;
  double coast_duration = 2.5;
  std::size_t coast_cycles = 120;
  // Constant-steering battery.
  double steer_grid_step = 0.2;
  double steer_throttle = 0.3;
  double steer_duration = 6.0;
  // Low-frequency sinusoidal steering.
  double sine_amplitude = 0.8;
  double sine_frequency = 0.5;
  double sine_throttle = 0.3;
  double sine_duration = 12.0;
  // Constant steering with a slowly rising throttle staircase (dynamic model, mocap).
  std::vector<double> mocap_steering = {-0.5, 0.5};
  double mocap_start_throttle = 0.2;
  double mocap_top_throttle = 0.4;
  std::size_t mocap_stairs = 5;
  double mocap_duration = 15.0;
  SlipFormulation slip = SlipFormulation::kLiteral;
};

namespace detail {

inline std::string level_name(const char* prefix, double value) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s_%+.2f", prefix, value);
  return buf;
}

}  // namespace detail

inline std::vector<Scenario> step_throttle_battery(const LibraryOptions& o = {}) {
  std::vector<Scenario> out;
  for (double level : o.step_levels) {
    Scenario s;
    s.name = detail::level_name("step", level);
    s.tag = "step";
    s.dt = o.dt;
    s.duration = o.step_start + o.step_hold + o.step_coast;
    s.throttle = PiecewiseSchedule{{0.0, o.step_start, o.step_start + o.step_hold}, {0.0, level, 0.0}};
    out.push_back(std::move(s));
  }
  return out;
}

inline Scenario coast_down(const LibraryOptions& o = {}) {
  Scenario s;
  s.name = "coast_down";
  s.tag = "coast";
  s.dt = o.dt;
  const std::size_t cycles = std::max<std::size_t>(o.coast_cycles, 1);
  const double period = o.coast_launch + o.coast_duration;
  PiecewiseSchedule pulses;
  for (std::size_t k = 0; k < cycles; ++k) {
    const double level = o.coast_launch_levels.empty() ? 0.4 : o.coast_launch_levels[k % o.coast_launch_levels.size()];
    pulses.times.push_back(static_cast<double>(k) * period);
    pulses.values.push_back(level);
    pulses.times.push_back(static_cast<double>(k) * period + o.coast_launch);
    pulses.values.push_back(0.0);
  }
  s.duration = static_cast<double>(cycles) * period;
  s.throttle = std::move(pulses);
  return s;
}

inline std::vector<Scenario> constant_steering_battery(const LibraryOptions& o = {}) {
  std::vector<Scenario> out;
  const auto count = static_cast<std::size_t>(std::llround(2.0 / o.steer_grid_step));
  for (std::size_t i = 0; i <= count; ++i) {
    const double s_value = std::clamp(-1.0 + static_cast<double>(i) * o.steer_grid_step, -1.0, 1.0);
    Scenario s;
    s.name = detail::level_name("steer", s_value);
    s.tag = "steer";
    s.dt = o.dt;
    s.duration = o.steer_duration;
    s.throttle = constant_schedule(o.steer_throttle);
    s.steering = constant_schedule(s_value);
    out.push_back(std::move(s));
  }
  return out;
}

inline Scenario sinusoidal_steering(const LibraryOptions& o = {}) {
  Scenario s;
  s.name = "sine_steering";
  s.tag = "sine";
  s.dt = o.dt;
  s.duration = o.sine_duration;
  s.throttle = constant_schedule(o.sine_throttle);
  s.steering = SineSchedule{o.sine_amplitude, o.sine_frequency, 0.0, 0.0};
  return s;
}

/// Throttle staircase from start to top level, the last stair beginning
/// before the end of the run.
inline std::vector<Scenario> mocap_circular_battery(const LibraryOptions& o = {}) {
  std::vector<Scenario> out;
  PiecewiseSchedule stairs;
  const std::size_t n = std::max<std::size_t>(o.mocap_stairs, 1);
  for (std::size_t k = 0; k < n; ++k) {
    const double frac = n == 1 ? 1.0 : static_cast<double>(k) / static_cast<double>(n - 1);
    stairs.times.push_back(o.mocap_duration * static_cast<double>(k) / static_cast<double>(n));
    stairs.values.push_back(o.mocap_start_throttle + frac * (o.mocap_top_throttle - o.mocap_start_throttle));
  }
  for (double s_value : o.mocap_steering) {
    Scenario s;
    s.name = detail::level_name("mocap", s_value);
    s.tag = "mocap";
    s.dt = o.dt;
    s.duration = o.mocap_duration;
    s.model = ModelKind::kDynamic;
    s.record_mocap = true;
    s.slip = o.slip;
    s.throttle = stairs;
    s.steering = constant_schedule(s_value);
    out.push_back(std::move(s));
  }
  return out;
}

/// Every identification experiment, in pipeline order.
inline std::vector<Scenario> scenario_library(const LibraryOptions& o = {}) {
  std::vector<Scenario> out = step_throttle_battery(o);
  out.push_back(coast_down(o));
  for (auto& s : constant_steering_battery(o)) out.push_back(std::move(s));
  out.push_back(sinusoidal_steering(o));
  for (auto& s : mocap_circular_battery(o)) out.push_back(std::move(s));
  return out;
}

}  // namespace smallcar::sim
