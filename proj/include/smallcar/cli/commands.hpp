#pragma once

// The fit / simulate / generate / validate subcommands as plain functions, so
// that the executable in tools/ only parses arguments. Each returns a process
// exit status and writes diagnostics to `err`.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smallcar/models.hpp"
#include "smallcar/plot/svg.hpp"
#include "smallcar/reference.hpp"
#include "smallcar/sim/scenario.hpp"
#include "smallcar/sim/simulate.hpp"
#include "smallcar/sim/validate.hpp"
#include "smallcar/sysid/params_io.hpp"
#include "smallcar/sysid/pipeline.hpp"

namespace smallcar::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "smallcar";
inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int {
  kOk = 0,
  kIncomplete = 1,  // ran, but a requested stage did not complete
  kInputError = 2,  // bad arguments, unreadable or malformed input
  kOutputError = 3, // cannot write results
};

enum class Verbosity { kQuiet, kNormal, kVerbose };

/// Options shared by every subcommand.
struct CommonOptions {
  std::uint64_t seed = 0;
  Verbosity verbosity = Verbosity::kNormal;
};

class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class OutputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// File helpers

namespace detail {

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw OutputError("cannot write " + p.string());
  out << content;
  out.close();
  if (!out) throw OutputError("error writing " + p.string());
}

inline void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw OutputError("cannot create directory " + dir.string());
}

/// FNV-1a, recorded in run manifests to identify inputs by content.
inline std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline nlohmann::json parse_json(const std::string& text, const fs::path& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(source.string() + ": invalid JSON: " + e.what());
  }
}

inline std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

inline sysid::ParamsDocument load_params(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw InputError("parameter file not found: " + p.string());
  try {
    return sysid::params_from_json(parse_json(read_file(p), p));
  } catch (const sysid::ParamsFormatError& e) {
    throw InputError(p.string() + ": " + e.what());
  }
}

inline ordered_json input_record(const fs::path& p) {
  return ordered_json{{"path", p.generic_string()}, {"fnv1a64", content_hash(read_file(p))}};
}

inline ordered_json run_header(const char* command, const CommonOptions& common) {
  return ordered_json{{"tool", kToolName}, {"version", kToolVersion}, {"command", command}, {"seed", common.seed}};
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

struct Logger {
  std::ostream& err;
  Verbosity level;
  void info(const std::string& m) const {
    if (level != Verbosity::kQuiet) err << m << '\n';
  }
  void debug(const std::string& m) const {
    if (level == Verbosity::kVerbose) err << m << '\n';
  }
  void warn(const std::string& m) const { err << "warning: " << m << '\n'; }
  void error(const std::string& m) const { err << "error: " << m << '\n'; }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Log discovery: manifest.json or one directory per experiment type.

struct LogSet {
  std::vector<sysid::TaggedLog> logs;
  std::vector<fs::path> files;
  std::optional<Geometry> geometry;  // from the manifest, when it records one
  std::string tagging;               // "manifest" or "directories"
};

inline LogSet discover_logs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("log directory not found: " + dir.string());
  LogSet set;
  std::vector<std::pair<fs::path, sysid::Experiment>> entries;
  const fs::path manifest = dir / "manifest.json";
  if (fs::is_regular_file(manifest)) {
    set.tagging = "manifest";
    const auto j = detail::parse_json(detail::read_file(manifest), manifest);
    const auto logs = j.find("logs");
    if (logs == j.end() || !logs->is_array()) throw InputError(manifest.string() + ": 'logs' must be an array");
    for (std::size_t i = 0; i < logs->size(); ++i) {
      const auto& e = (*logs)[i];
      const std::string where = manifest.string() + ": logs[" + std::to_string(i) + "]";
      if (!e.is_object() || !e.contains("file") || !e["file"].is_string() || !e.contains("type") ||
          !e["type"].is_string()) {
        throw InputError(where + ": needs string fields 'file' and 'type'");
      }
      const auto type = sysid::experiment_from_string(e["type"].get<std::string>());
      if (!type) throw InputError(where + ": unknown experiment type '" + e["type"].get<std::string>() + "'");
      entries.emplace_back(dir / e["file"].get<std::string>(), *type);
    }
    if (const auto g = j.find("geometry"); g != j.end() && g->is_object()) {
      nlohmann::json doc{{"schema_version", sysid::kParamsSchemaVersion}, {"geometry", *g}};
      try {
        set.geometry = sysid::params_from_json(doc).geometry;
      } catch (const sysid::ParamsFormatError& e) {
        throw InputError(manifest.string() + ": " + e.what());
      }
    }
  } else {
    set.tagging = "directories";
    for (const char* name : {"coast", "step", "steer", "sine", "mocap"}) {
      const fs::path sub = dir / name;
      if (!fs::is_directory(sub)) continue;
      std::vector<fs::path> csvs;
      for (const auto& f : fs::directory_iterator(sub)) {
        if (f.is_regular_file() && f.path().extension() == ".csv") csvs.push_back(f.path());
      }
      std::sort(csvs.begin(), csvs.end());
      for (auto& p : csvs) entries.emplace_back(p, *sysid::experiment_from_string(name));
    }
  }
  if (entries.empty()) throw InputError("no logs found in " + dir.string());
  for (const auto& [path, type] : entries) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    set.logs.push_back({path.filename().string(), type, sysid::load_log(in, path.string())});
    set.files.push_back(path);
  }
  return set;
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
  fs::path logs;
  fs::path out;
  std::optional<std::set<sysid::Stage>> stages;  // empty optional = all, missing data tolerated
  std::optional<fs::path> geometry;              // parameter file to take geometry from
  SlipFormulation slip = SlipFormulation::kLiteral;
};

namespace detail {

inline ordered_json stage_json(const sysid::StageReport& r) {
  ordered_json fits = ordered_json::array();
  for (const auto& f : r.fits) {
    fits.push_back({{"iterations", f.iterations}, {"final_loss", f.final_loss}, {"converged", f.converged}});
  }
  return ordered_json{{"stage", sysid::to_string(r.stage)}, {"status", sysid::to_string(r.status)},
                      {"message", r.message},                {"rows", r.rows},
                      {"fits", fits},                        {"warnings", r.warnings}};
}

inline void write_loss_trace(const fs::path& p, const sysid::FitResult& f) {
  std::string csv = "iteration,loss\n";
  for (std::size_t i = 0; i < f.loss_trace.size(); ++i) {
    csv += std::to_string(i) + "," + sysid::format_double(f.loss_trace[i]) + "\n";
  }
  write_file(p, csv);
}

inline std::vector<double> input_column(const sysid::Dataset& d, std::size_t c) {
  std::vector<double> out(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) out[i] = d.x(i)[c];
  return out;
}

inline std::vector<double> label_column(const sysid::Dataset& d, std::size_t c) {
  std::vector<double> out(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) out[i] = d.y(i)[c];
  return out;
}

template <typename F>
plot::Series curve(const std::string& label, double lo, double hi, F f) {
  plot::Series s{label, linspace(lo, hi, 201), {}, plot::Style::kLine, "#d62728"};
  for (double x : s.x) s.y.push_back(f(x));
  return s;
}

inline std::pair<double, double> extent(const std::vector<double>& v, double lo, double hi) {
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return {lo, hi};
}

/// Data-vs-fit SVGs for each identified curve; returns the written files.
inline std::vector<fs::path> write_fit_plots(const fs::path& dir, const std::string& stem,
                                             const sysid::PipelineResult& r) {
  std::vector<fs::path> files;
  auto emit = [&](const std::string& name, const plot::Chart& chart, const std::vector<plot::Series>& s) {
    const fs::path p = dir / (stem + "_" + name + ".svg");
    write_file(p, plot::render_svg(chart, s));
    files.push_back(p);
  };
  const auto& d = r.params;
  if (r.friction_data && d.friction) {
    const auto v = input_column(*r.friction_data, 0);
    const auto [lo, hi] = extent(v, 0.0, 0.0);
    emit("friction", {"Friction force", "v [m/s]", "F_f [N]"},
         {{"data", v, label_column(*r.friction_data, 0), plot::Style::kPoints, "#1f77b4"},
          curve("fit", 0.0, hi, [&](double x) { return friction_force(x, *d.friction); })});
  }
  if (r.motor_data && d.motor) {
    const auto tau = input_column(*r.motor_data, 0);
    const auto v = input_column(*r.motor_data, 1);
    std::vector<plot::Series> s{{"data", v, label_column(*r.motor_data, 0), plot::Style::kPoints, "#1f77b4"}};
    const auto [lo, hi] = extent(v, 0.0, 0.0);
    std::set<double> levels(tau.begin(), tau.end());
    std::size_t shown = 0;
    for (double level : levels) {
      if (++shown > 8) break;
      auto c = curve("fit tau=" + sysid::format_double(level), 0.0, hi,
                     [&](double x) { return motor_force(level, x, *d.motor); });
      c.color.clear();
      s.push_back(std::move(c));
    }
    emit("motor", {"Motor force", "v [m/s]", "F_m [N]"}, s);
  }
  if (r.steering_data && d.steering) {
    emit("steering", {"Steering map", "s", "delta [rad]"},
         {{"data", input_column(*r.steering_data, 0), label_column(*r.steering_data, 0), plot::Style::kPoints,
           "#1f77b4"},
          curve("fit", -1.0, 1.0, [&](double x) { return steering_angle(x, *d.steering); })});
  }
  if (r.tire_data && d.tire) {
    const auto af = input_column(r.tire_data->front, 0);
    const auto [flo, fhi] = extent(af, 0.0, 0.0);
    emit("tire_front", {"Front lateral force", "alpha_f [rad]", "F_yf [N]"},
         {{"data", af, label_column(r.tire_data->front, 0), plot::Style::kPoints, "#1f77b4"},
          curve("fit", flo, fhi, [&](double x) { return pacejka_lateral(x, *d.tire); })});
    const auto ar = input_column(r.tire_data->rear, 0);
    const auto [rlo, rhi] = extent(ar, 0.0, 0.0);
    emit("tire_rear", {"Rear lateral force", "alpha_r [rad]", "F_yr [N]"},
         {{"data", ar, label_column(r.tire_data->rear, 0), plot::Style::kPoints, "#1f77b4"},
          curve("fit", rlo, rhi, [&](double x) { return rear_lateral(x, d.tire->C_r); })});
  }
  return files;
}

}  // namespace detail

inline int cmd_fit(const FitOptions& opt, const CommonOptions& common, std::ostream& err) {
  const detail::Logger log{err, common.verbosity};
  try {
    LogSet set = discover_logs(opt.logs);
    log.info("loaded " + std::to_string(set.logs.size()) + " logs (" + set.tagging + ")");

    sysid::PipelineConfig config;
    std::string geometry_source;
    if (opt.geometry) {
      config.geometry = detail::load_params(*opt.geometry).geometry;
      geometry_source = opt.geometry->generic_string();
    } else if (set.geometry) {
      config.geometry = *set.geometry;
      geometry_source = "manifest";
    } else {
      config.geometry = reference::geometry();
      geometry_source = "reference";
      log.warn("no geometry supplied; using the reference vehicle geometry");
    }
    config.preprocess.slip = opt.slip;
    if (opt.stages) config.stages = *opt.stages;

    const auto result = sysid::fit_pipeline(set.logs, config);

    const fs::path out_dir = opt.out.has_parent_path() ? opt.out.parent_path() : fs::path(".");
    detail::ensure_directory(out_dir);
    const std::string stem = opt.out.stem().string();
    detail::write_file(opt.out, detail::dump(sysid::to_json(result.params)));

    std::vector<fs::path> artifacts;
    for (const auto& r : result.stages) {
      for (std::size_t i = 0; i < r.fits.size(); ++i) {
        std::string name = std::string(sysid::to_string(r.stage));
        if (r.stage == sysid::Stage::kTire) name += i == 0 ? "_front" : "_rear";
        const fs::path p = out_dir / (stem + "_loss_" + name + ".csv");
        detail::write_loss_trace(p, r.fits[i]);
        artifacts.push_back(p);
      }
    }
    for (auto& p : detail::write_fit_plots(out_dir, stem, result)) artifacts.push_back(p);

    // Without --stages, a stage with no logs is a warning; with --stages it
    // is a failure of the run.
    bool ok = true;
    std::size_t completed = 0;
    ordered_json stages = ordered_json::array();
    for (const auto& r : result.stages) {
      stages.push_back(detail::stage_json(r));
      for (const auto& w : r.warnings) log.warn(std::string(sysid::to_string(r.stage)) + ": " + w);
      switch (r.status) {
        case sysid::StageStatus::kCompleted:
          ++completed;
          log.info(std::string(sysid::to_string(r.stage)) + ": completed (" + std::to_string(r.rows) + " rows)");
          break;
        case sysid::StageStatus::kSkipped:
          if (opt.stages) {
            ok = false;
            log.error(std::string(sysid::to_string(r.stage)) + ": " + r.message);
          } else {
            log.warn(std::string(sysid::to_string(r.stage)) + ": " + r.message + "; group marked absent");
          }
          break;
        case sysid::StageStatus::kFailed:
          ok = false;
          log.error(std::string(sysid::to_string(r.stage)) + ": " + r.message);
          break;
        case sysid::StageStatus::kNotRequested: break;
      }
    }
    if (completed == 0) ok = false;

    ordered_json report{{"exit_status", ok ? kOk : kIncomplete},
                        {"absent_groups", result.params.absent_groups()},
                        {"stages", stages}};
    if (result.delay) {
      report["delay"] = {{"lag_samples", result.delay->lag_samples},
                         {"delay", result.delay->delay},
                         {"correlation", result.delay->correlation}};
    }
    const fs::path report_path = out_dir / (stem + "_report.json");
    detail::write_file(report_path, detail::dump(report));

    ordered_json inputs = ordered_json::array();
    for (const auto& f : set.files) inputs.push_back(detail::input_record(f));
    ordered_json stage_names = ordered_json::array();
    for (auto s : config.stages) stage_names.push_back(sysid::to_string(s));
    ordered_json outputs = ordered_json::array({opt.out.generic_string(), report_path.generic_string()});
    for (const auto& p : artifacts) outputs.push_back(p.generic_string());
    auto manifest = detail::run_header("fit", common);
    manifest["inputs"] = {{"logs", opt.logs.generic_string()}, {"tagging", set.tagging}, {"files", inputs}};
    manifest["settings"] = {{"stages", stage_names},
                            {"stages_explicit", opt.stages.has_value()},
                            {"geometry_source", geometry_source},
                            {"smooth_window", config.preprocess.smooth_window},
                            {"mocap_window", config.preprocess.mocap_window},
                            {"v_min", config.preprocess.v_min},
                            {"slip", opt.slip == SlipFormulation::kLiteral ? "literal" : "normalized"},
                            {"max_delay", config.max_delay},
                            {"long_delay", config.long_delay},
                            {"optimizer", "adam"},
                            {"max_iterations", config.friction.max_iterations}};
    manifest["outputs"] = outputs;
    detail::write_file(out_dir / (stem + "_run.json"), detail::dump(manifest));
    return ok ? kOk : kIncomplete;
  } catch (const sysid::ParseError& e) {
    log.error(e.what());
    return kInputError;
  } catch (const InputError& e) {
    log.error(e.what());
    return kInputError;
  } catch (const OutputError& e) {
    log.error(e.what());
    return kOutputError;
  } catch (const std::exception& e) {
    log.error(e.what());
    return kInputError;
  }
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  fs::path params;
  fs::path scenario;
  fs::path out;
};

namespace detail {

inline std::vector<fs::path> write_trajectory_plots(const fs::path& dir, const sim::Trajectory& traj,
                                                    const Geometry& g) {
  std::vector<fs::path> files;
  std::vector<double> x(traj.size()), y(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto p = traj.com_pose(k, g);
    x[k] = p[0];
    y[k] = p[1];
  }
  plot::Chart path_chart{"Path (CoM)", "x [m]", "y [m]"};
  path_chart.equal_aspect = true;
  write_file(dir / "path.svg", plot::render_svg(path_chart, {{"path", x, y, plot::Style::kLine, ""}}));
  files.push_back(dir / "path.svg");

  struct Channel {
    const char* file;
    const char* title;
    const char* unit;
    std::vector<plot::Series> series;
  };
  std::vector<double> tau_cmd, tau_app, s_cmd, s_app;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    tau_cmd.push_back(traj.commanded[k].tau);
    tau_app.push_back(traj.applied[k].tau);
    s_cmd.push_back(traj.commanded[k].s);
    s_app.push_back(traj.applied[k].s);
  }
  const char* speed_label = traj.model == sim::ModelKind::kKinematic ? "v" : "v_x";
  std::vector<Channel> channels{
      {"speed.svg", "Speed", "[m/s]", {{speed_label, traj.t, traj.speed, plot::Style::kLine, ""}}},
      {"yaw_rate.svg", "Yaw rate", "[rad/s]", {{"omega", traj.t, traj.yaw_rate, plot::Style::kLine, ""}}},
      {"steering.svg", "Steering angle", "[rad]", {{"delta", traj.t, traj.delta, plot::Style::kLine, ""}}},
      {"force.svg", "Longitudinal force", "[N]", {{"F", traj.t, traj.force, plot::Style::kLine, ""}}},
      {"inputs.svg",
       "Inputs",
       "[1]",
       {{"tau commanded", traj.t, tau_cmd, plot::Style::kLine, ""},
        {"tau applied", traj.t, tau_app, plot::Style::kLine, ""},
        {"s commanded", traj.t, s_cmd, plot::Style::kLine, ""},
        {"s applied", traj.t, s_app, plot::Style::kLine, ""}}},
  };
  if (traj.model == sim::ModelKind::kDynamic) {
    std::vector<double> vy;
    for (const auto& s : traj.dynamic) vy.push_back(s.v_y);
    channels.push_back({"lateral_velocity.svg", "Lateral velocity", "[m/s]",
                        {{"v_y", traj.t, vy, plot::Style::kLine, ""}}});
  }
  for (const auto& c : channels) {
    write_file(dir / c.file,
               plot::render_svg({c.title, "t [s]", std::string(c.title) + " " + c.unit}, c.series));
    files.push_back(dir / c.file);
  }
  return files;
}

}  // namespace detail

inline int cmd_simulate(const SimulateOptions& opt, const CommonOptions& common, std::ostream& err) {
  const detail::Logger log{err, common.verbosity};
  try {
    const auto doc = detail::load_params(opt.params);
    if (!fs::is_regular_file(opt.scenario)) throw InputError("scenario file not found: " + opt.scenario.string());
    sim::Scenario scenario;
    try {
      scenario = sim::scenario_from_json(detail::parse_json(detail::read_file(opt.scenario), opt.scenario));
    } catch (const sim::ScenarioError& e) {
      throw InputError(opt.scenario.string() + ": " + e.what());
    }
    const bool need_tire = scenario.model == sim::ModelKind::kDynamic;
    VehicleParams params;
    try {
      params = doc.to_vehicle_params(!need_tire);
    } catch (const sysid::ParamsFormatError& e) {
      throw InputError(opt.params.string() + ": " + e.what());
    }

    detail::ensure_directory(opt.out);
    std::optional<sim::Trajectory> traj;
    std::string failure;
    try {
      traj = sim::simulate(scenario, params);
    } catch (const sim::SimulationError& e) {
      traj = e.partial();
      failure = e.what();
    }
    std::ostringstream csv;
    sim::write_trajectory_csv(csv, *traj, params.geometry);
    detail::write_file(opt.out / "trajectory.csv", csv.str());
    std::vector<fs::path> files{opt.out / "trajectory.csv"};
    if (traj->size() > 0) {
      for (auto& p : detail::write_trajectory_plots(opt.out, *traj, params.geometry)) files.push_back(p);
    }

    auto manifest = detail::run_header("simulate", common);
    manifest["inputs"] = {{"params", detail::input_record(opt.params)},
                          {"scenario", detail::input_record(opt.scenario)}};
    manifest["settings"] = {{"model", sim::to_string(scenario.model)},
                            {"slip", scenario.slip == SlipFormulation::kLiteral ? "literal" : "normalized"},
                            {"blend_speed", scenario.blend_speed},
                            {"dt", scenario.dt},
                            {"integrator", "rk4, zero-order hold on inputs"},
                            {"delay_steps", {{"steer", sim::DelayLine(params.delays.steer_delay, scenario.dt).length()},
                                             {"long", sim::DelayLine(params.delays.long_delay, scenario.dt).length()}}}};
    ordered_json outputs = ordered_json::array();
    for (const auto& p : files) outputs.push_back(p.generic_string());
    manifest["outputs"] = outputs;
    manifest["samples"] = traj->size();
    manifest["status"] = failure.empty() ? "ok" : failure;
    detail::write_file(opt.out / "run.json", detail::dump(manifest));
    if (!failure.empty()) {
      log.error(failure);
      return kIncomplete;
    }
    log.info("wrote " + std::to_string(traj->size()) + " samples to " + (opt.out / "trajectory.csv").string());
    return kOk;
  } catch (const InputError& e) {
    log.error(e.what());
    return kInputError;
  } catch (const OutputError& e) {
    log.error(e.what());
    return kOutputError;
  } catch (const std::exception& e) {
    log.error(e.what());
    return kInputError;
  }
}

// ---------------------------------------------------------------------------
// generate

struct GenerateOptions {
  fs::path params;
  fs::path noise;
  fs::path out;
};

inline sim::NoiseSpec noise_from_json(const nlohmann::json& j, const std::string& source) {
  if (!j.is_object()) throw InputError(source + ": noise spec must be a JSON object");
  sim::NoiseSpec n;
  auto get = [&](const char* key, double& dst) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    if (!it->is_number()) throw InputError(source + ": " + key + " must be a number");
    dst = it->get<double>();
  };
  get("v_enc", n.v_enc);
  get("omega_imu", n.omega_imu);
  get("mocap_xy", n.mocap_xy);
  get("mocap_eta", n.mocap_eta);
  for (const auto& [key, value] : j.items()) {
    if (key != "v_enc" && key != "omega_imu" && key != "mocap_xy" && key != "mocap_eta") {
      throw InputError(source + ": unknown noise field '" + key + "'");
    }
  }
  try {
    sim::validate(n);
  } catch (const std::invalid_argument& e) {
    throw InputError(source + ": " + e.what());
  }
  return n;
}

/// Noise seed of the i-th scenario, derived from the run seed.
inline std::uint64_t scenario_seed(std::uint64_t run_seed, std::size_t index) {
  return detail::splitmix64(run_seed ^ detail::splitmix64(static_cast<std::uint64_t>(index) + 1));
}

inline int cmd_generate(const GenerateOptions& opt, const CommonOptions& common, std::ostream& err) {
  const detail::Logger log{err, common.verbosity};
  try {
    const auto doc = detail::load_params(opt.params);
    VehicleParams params;
    try {
      params = doc.to_vehicle_params(false);
    } catch (const sysid::ParamsFormatError& e) {
      throw InputError(opt.params.string() + ": " + e.what());
    }
    if (!fs::is_regular_file(opt.noise)) throw InputError("noise file not found: " + opt.noise.string());
    const auto noise_json = detail::parse_json(detail::read_file(opt.noise), opt.noise);
    sim::NoiseSpec noise = noise_from_json(noise_json, opt.noise.string());

    detail::ensure_directory(opt.out);
    const sim::LibraryOptions library;
    const auto scenarios = sim::scenario_library(library);
    ordered_json entries = ordered_json::array();
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      const auto& sc = scenarios[i];
      noise.seed = scenario_seed(common.seed, i);
      const auto raw = sim::synthesize_log(sc, params, noise);
      std::ostringstream csv;
      sysid::write_log(csv, raw);
      const std::string file = sc.name + ".csv";
      detail::write_file(opt.out / file, csv.str());
      entries.push_back({{"file", file}, {"type", sc.tag}, {"noise_seed", noise.seed}, {"scenario", sim::to_json(sc)}});
      log.debug("wrote " + file);
    }
    const auto pj = sysid::to_json(doc);
    ordered_json manifest = detail::run_header("generate", common);
    manifest["inputs"] = {{"params", detail::input_record(opt.params)}, {"noise", detail::input_record(opt.noise)}};
    manifest["noise"] = {{"v_enc", noise.v_enc},
                         {"omega_imu", noise.omega_imu},
                         {"mocap_xy", noise.mocap_xy},
                         {"mocap_eta", noise.mocap_eta}};
    manifest["geometry"] = pj["geometry"];
    manifest["params"] = pj;
    manifest["logs"] = entries;
    detail::write_file(opt.out / "manifest.json", detail::dump(manifest));
    log.info("wrote " + std::to_string(scenarios.size()) + " logs to " + opt.out.string());
    return kOk;
  } catch (const InputError& e) {
    log.error(e.what());
    return kInputError;
  } catch (const OutputError& e) {
    log.error(e.what());
    return kOutputError;
  } catch (const std::exception& e) {
    log.error(e.what());
    return kInputError;
  }
}

// ---------------------------------------------------------------------------
// validate

struct ValidateOptions {
  fs::path params;
  fs::path log;
  std::optional<sim::ModelKind> model;  // empty: both models, each where the log allows
  SlipFormulation slip = SlipFormulation::kLiteral;
  std::optional<fs::path> out;          // report file; stdout when absent
};

inline ordered_json report_json(const sim::ValidationReport& r) {
  ordered_json rms = ordered_json::object();
  for (const auto& c : r.channels) rms[c.name] = c.rms;
  return ordered_json{{"model", sim::to_string(r.model)}, {"state_source", r.state_source},
                      {"input_source", r.input_source},   {"steps", r.steps},
                      {"rms", rms},                       {"lateral_rms", r.lateral_rms}};
}

inline int cmd_validate(const ValidateOptions& opt, const CommonOptions& common, std::ostream& out,
                        std::ostream& err) {
  const detail::Logger log{err, common.verbosity};
  try {
    const auto doc = detail::load_params(opt.params);
    if (!fs::is_regular_file(opt.log)) throw InputError("log file not found: " + opt.log.string());
    std::ifstream in(opt.log, std::ios::binary);
    const auto table = sysid::load_table(in, opt.log.string());

    std::vector<sim::ModelKind> models;
    if (opt.model) {
      models.push_back(*opt.model);
    } else {
      models = {sim::ModelKind::kKinematic, sim::ModelKind::kDynamic};
    }
    ordered_json results = ordered_json::array();
    std::size_t succeeded = 0;
    for (auto m : models) {
      VehicleParams params;
      try {
        params = doc.to_vehicle_params(m == sim::ModelKind::kKinematic);
      } catch (const sysid::ParamsFormatError& e) {
        if (opt.model) throw InputError(opt.params.string() + ": " + e.what());
        results.push_back({{"model", sim::to_string(m)}, {"unavailable", e.what()}});
        continue;
      }
      try {
        const auto r = sim::validate_one_step(table, params, m, opt.slip, 0.3, opt.log.string());
        results.push_back(report_json(r));
        ++succeeded;
      } catch (const sim::StateMismatchError& e) {
        if (opt.model) throw;
        results.push_back({{"model", sim::to_string(m)}, {"unavailable", e.what()}});
        log.warn(std::string(sim::to_string(m)) + ": " + e.what());
      }
    }
    ordered_json report = detail::run_header("validate", common);
    report["inputs"] = {{"params", detail::input_record(opt.params)}, {"log", detail::input_record(opt.log)}};
    report["settings"] = {{"slip", opt.slip == SlipFormulation::kLiteral ? "literal" : "normalized"},
                          {"blend_speed", 0.3}};
    report["results"] = results;
    const std::string text = detail::dump(report);
    if (opt.out) {
      if (opt.out->has_parent_path()) detail::ensure_directory(opt.out->parent_path());
      detail::write_file(*opt.out, text);
    } else {
      out << text;
    }
    return succeeded > 0 ? kOk : kIncomplete;
  } catch (const sysid::ParseError& e) {
    log.error(e.what());
    return kInputError;
  } catch (const sim::StateMismatchError& e) {
    log.error(e.what());
    return kInputError;
  } catch (const InputError& e) {
    log.error(e.what());
    return kInputError;
  } catch (const OutputError& e) {
    log.error(e.what());
    return kOutputError;
  } catch (const std::exception& e) {
    log.error(e.what());
    return kInputError;
  }
}

}  // namespace smallcar::cli
