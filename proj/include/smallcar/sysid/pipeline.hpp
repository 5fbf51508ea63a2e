#pragma once

// Staged identification: friction -> motor -> steering map -> steering delay
// -> tires. Each stage isolates one sub-model using the experiment type that
// excites it, and consumes the results of the stages before it.

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "smallcar/models.hpp"
#include "smallcar/sysid/builders.hpp"
#include "smallcar/sysid/log.hpp"
#include "smallcar/sysid/optim.hpp"
#include "smallcar/sysid/params_io.hpp"
#include "smallcar/sysid/signal.hpp"
#include "smallcar/sysid/submodels.hpp"

namespace smallcar::sysid {

enum class Experiment { kCoast, kStep, kSteer, kSine, kMocap };

inline const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::kCoast: return "coast";
    case Experiment::kStep: return "step";
    case Experiment::kSteer: return "steer";
    case Experiment::kSine: return "sine";
    case Experiment::kMocap: return "mocap";
  }
  return "?";
}

inline std::optional<Experiment> experiment_from_string(const std::string& s) {
  for (auto e : {Experiment::kCoast, Experiment::kStep, Experiment::kSteer, Experiment::kSine, Experiment::kMocap}) {
    if (s == to_string(e)) return e;
  }
  return std::nullopt;
}

struct TaggedLog {
  std::string name;
  Experiment type = Experiment::kStep;
  RawLog log;
};

enum class Stage { kFriction, kMotor, kSteering, kDelay, kTire };

inline constexpr std::array<Stage, 5> kAllStages = {Stage::kFriction, Stage::kMotor, Stage::kSteering,
                                                    Stage::kDelay, Stage::kTire};

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::kFriction: return "friction";
    case Stage::kMotor: return "motor";
    case Stage::kSteering: return "steering";
    case Stage::kDelay: return "delay";
    case Stage::kTire: return "tire";
  }
  return "?";
}

inline std::optional<Stage> stage_from_string(const std::string& s) {
  for (auto st : kAllStages) {
    if (s == to_string(st)) return st;
  }
  return std::nullopt;
}

inline FitConfig default_friction_fit() {
  FitConfig c;
  c.initial = {1.0, 10.0, 0.1};
  c.lower = {0.01, 0.1, 0.0};
  c.upper = {10.0, 50.0, 5.0};
  return c;
}

inline FitConfig default_motor_fit() {
  FitConfig c;
  c.initial = {20.0, 5.0, -0.1};
  c.lower = {0.1, 0.01, -0.9};
  c.upper = {100.0, 50.0, 0.0};
  return c;
}

inline FitConfig default_steering_fit() {
  FitConfig c;
  c.initial = {1.0, 1.0, 0.0, 1.0, 1.0};
  c.lower = {0.01, 0.01, -0.5, 0.01, 0.01};
  c.upper = {5.0, 5.0, 0.5, 5.0, 5.0};
  return c;
}

inline FitConfig default_front_tire_fit() {
  FitConfig c;
  c.initial = {3.0, 1.0, 1.0, 0.0};
  c.lower = {0.1, 0.1, 0.01, -10.0};
  c.upper = {20.0, 3.0, 20.0, 1.0};
  return c;
}

inline FitConfig default_rear_tire_fit() {
  FitConfig c;
  c.initial = {1.0};
  c.lower = {0.001};
  c.upper = {50.0};
  return c;
}

struct PipelineConfig {
  Geometry geometry;
  PreprocessOptions preprocess;
  FitConfig friction = default_friction_fit();
  FitConfig motor = default_motor_fit();
  FitConfig steering = default_steering_fit();
  FitConfig front_tire = default_front_tire_fit();
  FitConfig rear_tire = default_rear_tire_fit();
  std::set<Stage> stages = {kAllStages.begin(), kAllStages.end()};
  double max_delay = kDefaultMaxDelay;
  // Longitudinal actuation delay is not identified from logs; this value is carried through.
  double long_delay = 0.01;
};

enum class StageStatus { kCompleted, kSkipped, kFailed, kNotRequested };

inline const char* to_string(StageStatus s) {
  switch (s) {
    case StageStatus::kCompleted: return "completed";
    case StageStatus::kSkipped: return "skipped";
    case StageStatus::kFailed: return "failed";
    case StageStatus::kNotRequested: return "not_requested";
  }
  return "?";
}

struct StageReport {
  Stage stage = Stage::kFriction;
  StageStatus status = StageStatus::kNotRequested;
  std::string message;
  std::size_t rows = 0;
  std::vector<FitResult> fits;  // one per fitted curve (two for the tire stage)
  std::vector<std::string> warnings;
};

struct PipelineResult {
  ParamsDocument params;
  std::vector<StageReport> stages;
  std::optional<Dataset> friction_data;
  std::optional<Dataset> motor_data;
  std::optional<Dataset> steering_data;
  std::optional<TireDatasets> tire_data;
  std::optional<DelayEstimate> delay;

  [[nodiscard]] const StageReport& report(Stage s) const {
    for (const auto& r : stages) {
      if (r.stage == s) return r;
    }
    throw std::out_of_range("no report for stage");
  }
  /// True when every requested stage completed.
  [[nodiscard]] bool complete() const {
    return std::all_of(stages.begin(), stages.end(), [](const StageReport& r) {
      return r.status == StageStatus::kCompleted || r.status == StageStatus::kNotRequested;
    });
  }
};

namespace detail {

inline std::vector<RawLog> select_logs(std::span<const TaggedLog> logs, std::initializer_list<Experiment> types) {
  std::vector<RawLog> out;
  for (const auto& l : logs) {
    if (std::find(types.begin(), types.end(), l.type) != types.end()) out.push_back(l.log);
  }
  return out;
}

/// Command and measured steering angles over the longest run with v > v_min.
struct DelaySeries {
  std::vector<double> command;
  std::vector<double> measured;
  double dt = 0.0;
};

inline DelaySeries delay_series(const RawLog& log, const SteeringParams& steering, const Geometry& g,
                                const PreprocessOptions& o) {
  const std::size_t w = clamp_window(o.smooth_window, log.size());
  const auto v = smooth(log.v_enc, w);
  const auto est = estimate_steering_angle_series(log.omega_imu, v, g.l, o.v_min);
  std::size_t best_begin = 0;
  std::size_t best_len = 0;
  for (std::size_t i = 0; i < log.size();) {
    if (!est.valid[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < log.size() && est.valid[j]) ++j;
    if (j - i > best_len) {
      best_len = j - i;
      best_begin = i;
    }
    i = j;
  }
  DelaySeries out;
  out.dt = uniform_dt(log);
  for (std::size_t i = best_begin; i < best_begin + best_len; ++i) {
    out.command.push_back(steering_angle(log.s[i], steering));
    out.measured.push_back(est.delta[i]);
  }
  return out;
}

}  // namespace detail

inline PipelineResult fit_pipeline(std::span<const TaggedLog> logs, const PipelineConfig& config) {
  if (logs.empty()) throw InsufficientDataError("fit_pipeline: no logs supplied");
  validate(config.geometry);
  const Geometry& g = config.geometry;
  const PreprocessOptions& pre = config.preprocess;

  PipelineResult result;
  result.params.geometry = g;

  auto requested = [&](Stage s) { return config.stages.count(s) > 0; };
  auto completed = [&](Stage s) {
    for (const auto& r : result.stages) {
      if (r.stage == s) return r.status == StageStatus::kCompleted;
    }
    return false;
  };
  auto run_stage = [&](Stage stage, std::initializer_list<Stage> needs, auto&& body) {
    StageReport report;
    report.stage = stage;
    if (!requested(stage)) {
      result.stages.push_back(report);
      return;
    }
    for (Stage need : needs) {
      if (!completed(need)) {
        report.status = StageStatus::kFailed;
        report.message = std::string("requires the ") + to_string(need) + " stage, which did not complete";
        result.stages.push_back(report);
        return;
      }
    }
    try {
      body(report);
    } catch (const InsufficientDataError& e) {
      report.status = StageStatus::kFailed;
      report.message = e.what();
    } catch (const FitError& e) {
      report.status = StageStatus::kFailed;
      report.message = std::string("fit failed: ") + e.what();
    }
    result.stages.push_back(report);
  };
  auto skip_if_missing = [&](StageReport& report, const std::vector<RawLog>& selected, const char* what) {
    if (!selected.empty()) return false;
    report.status = StageStatus::kSkipped;
    report.message = std::string("unavailable: no ") + what + " logs";
    return true;
  };

  run_stage(Stage::kFriction, {}, [&](StageReport& report) {
    const auto selected = detail::select_logs(logs, {Experiment::kCoast, Experiment::kStep});
    if (skip_if_missing(report, selected, "coast-down or step-throttle")) return;
    Dataset data = build_friction_dataset(selected, g.m, pre);
    const FitResult fit = adam_fit(make_objective(FrictionModel{}, data), config.friction);
    result.params.friction = FrictionModel::unpack(fit.params);
    report.rows = data.rows();
    report.fits.push_back(fit);
    report.status = StageStatus::kCompleted;
    result.friction_data = std::move(data);
  });

  run_stage(Stage::kMotor, {Stage::kFriction}, [&](StageReport& report) {
    const auto selected = detail::select_logs(logs, {Experiment::kStep, Experiment::kCoast});
    if (skip_if_missing(report, selected, "step-throttle")) return;
    Dataset data = build_motor_dataset(selected, g.m, *result.params.friction, pre);
    const FitResult fit = adam_fit(make_objective(MotorModel{}, data), config.motor);
    result.params.motor = MotorModel::unpack(fit.params);
    report.rows = data.rows();
    report.fits.push_back(fit);
    report.status = StageStatus::kCompleted;
    result.motor_data = std::move(data);
  });

  run_stage(Stage::kSteering, {}, [&](StageReport& report) {
    const auto selected = detail::select_logs(logs, {Experiment::kSteer});
    if (skip_if_missing(report, selected, "constant-steering")) return;
    auto built = build_steering_dataset(selected, g.l, pre);
    const FitResult fit = adam_fit(make_objective(SteeringModel{}, built.data), config.steering);
    result.params.steering = SteeringModel::unpack(fit.params);
    report.rows = built.data.rows();
    report.fits.push_back(fit);
    report.warnings = std::move(built.warnings);
    report.status = StageStatus::kCompleted;
    result.steering_data = std::move(built.data);
  });

  run_stage(Stage::kDelay, {Stage::kSteering}, [&](StageReport& report) {
    const auto selected = detail::select_logs(logs, {Experiment::kSine});
    if (skip_if_missing(report, selected, "sinusoidal-steering")) return;
    // Longest log gives the most correlation support.
    const auto longest = std::max_element(selected.begin(), selected.end(),
                                          [](const RawLog& a, const RawLog& b) { return a.size() < b.size(); });
    const auto series = detail::delay_series(*longest, *result.params.steering, g, pre);
    try {
      const auto est = estimate_delay_xcorr_detailed(series.command, series.measured, series.dt, config.max_delay);
      result.delay = est;
      result.params.delays = Delays{est.delay, config.long_delay};
      report.rows = series.command.size();
      report.status = StageStatus::kCompleted;
    } catch (const UndefinedCorrelationError& e) {
      report.status = StageStatus::kFailed;
      report.message = e.what();
    }
  });

  run_stage(Stage::kTire, {Stage::kSteering, Stage::kDelay}, [&](StageReport& report) {
    const auto selected = detail::select_logs(logs, {Experiment::kMocap});
    if (skip_if_missing(report, selected, "motion-capture")) return;
    if (std::any_of(selected.begin(), selected.end(), [](const RawLog& l) { return !l.has_mocap(); })) {
      report.status = StageStatus::kFailed;
      report.message = "a mocap-tagged log has no mocap columns";
      return;
    }
    VehicleParams partial;
    partial.geometry = g;
    partial.steering = *result.params.steering;
    partial.delays = *result.params.delays;
    TireDatasets data = build_tire_dataset(selected, partial, pre);
    const FitResult front = adam_fit(make_objective(FrontTireModel{}, data.front), config.front_tire);
    const FitResult rear = adam_fit(make_objective(RearTireModel{}, data.rear), config.rear_tire);
    result.params.tire = TireParams{front.params[0], front.params[1], front.params[2], front.params[3], rear.params[0]};
    report.rows = data.front.rows();
    report.fits = {front, rear};
    if (data.singular_rows > 0) {
      report.warnings.push_back(std::to_string(data.singular_rows) + " near-singular rows dropped");
    }
    report.status = StageStatus::kCompleted;
    result.tire_data = std::move(data);
  });

  return result;
}

}  // namespace smallcar::sysid
