#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "smallcar/cli/commands.hpp"

namespace {

using namespace smallcar;

std::set<sysid::Stage> parse_stages(const std::string& list) {
  std::set<sysid::Stage> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto stage = sysid::stage_from_string(item);
    if (!stage) throw CLI::ValidationError("--stages", "unknown stage '" + item + "'");
    out.insert(*stage);
  }
  if (out.empty()) throw CLI::ValidationError("--stages", "no stages given");
  return out;
}

SlipFormulation parse_slip(const std::string& s) {
  return s == "normalized" ? SlipFormulation::kNormalized : SlipFormulation::kLiteral;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small-scale car model identification and simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cli::kToolVersion);

  cli::CommonOptions common;
  bool verbose = false;
  bool quiet = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Seed recorded in outputs (and used for noise by generate)");
    sub->add_flag("-v,--verbose", verbose, "More progress output");
    sub->add_flag("-q,--quiet", quiet, "Only warnings and errors");
  };

  cli::FitOptions fit;
  std::string stages;
  std::string fit_slip = "literal";
  std::string fit_geometry;
  auto* fit_cmd = app.add_subcommand("fit", "Identify parameters from tagged driving logs");
  fit_cmd->add_option("--logs", fit.logs, "Log directory (manifest.json or per-type subdirectories)")->required();
  fit_cmd->add_option("--out", fit.out, "Output parameter JSON")->required();
  fit_cmd->add_option("--stages", stages, "Comma-separated subset of friction,motor,steering,delay,tire");
  fit_cmd->add_option("--geometry", fit_geometry, "Parameter JSON whose geometry group is used")
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--slip", fit_slip, "Slip-angle formulation")
      ->check(CLI::IsMember({"literal", "normalized"}));
  add_common(fit_cmd);

  cli::SimulateOptions simulate;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a scenario");
  sim_cmd->add_option("--params", simulate.params, "Parameter JSON")->required();
  sim_cmd->add_option("--scenario", simulate.scenario, "Scenario JSON")->required();
  sim_cmd->add_option("--out", simulate.out, "Output directory")->required();
  add_common(sim_cmd);

  cli::GenerateOptions generate;
  auto* gen_cmd = app.add_subcommand("generate", "Synthesize the identification log suite");
  gen_cmd->add_option("--params", generate.params, "Parameter JSON")->required();
  gen_cmd->add_option("--noise", generate.noise, "Noise JSON (v_enc, omega_imu, mocap_xy, mocap_eta)")->required();
  gen_cmd->add_option("--out", generate.out, "Output directory")->required();
  add_common(gen_cmd);

  cli::ValidateOptions validate;
  std::string model;
  std::string val_slip = "literal";
  std::string val_out;
  auto* val_cmd = app.add_subcommand("validate", "One-step-ahead prediction error against a log");
  val_cmd->add_option("--params", validate.params, "Parameter JSON")->required();
  val_cmd->add_option("--log", validate.log, "Log CSV")->required();
  val_cmd->add_option("--model", model, "kinematic or dynamic (default: both)")
      ->check(CLI::IsMember({"kinematic", "dynamic"}));
  val_cmd->add_option("--slip", val_slip, "Slip-angle formulation")->check(CLI::IsMember({"literal", "normalized"}));
  val_cmd->add_option("--report", val_out, "Write the JSON report here instead of stdout");
  add_common(val_cmd);

  try {
    app.parse(argc, argv);
    if (fit_cmd->parsed() && !stages.empty()) fit.stages = parse_stages(stages);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  common.verbosity = quiet ? cli::Verbosity::kQuiet : verbose ? cli::Verbosity::kVerbose : cli::Verbosity::kNormal;

  if (fit_cmd->parsed()) {
    fit.slip = parse_slip(fit_slip);
    if (!fit_geometry.empty()) fit.geometry = fit_geometry;
    return cli::cmd_fit(fit, common, std::cerr);
  }
  if (sim_cmd->parsed()) return cli::cmd_simulate(simulate, common, std::cerr);
  if (gen_cmd->parsed()) return cli::cmd_generate(generate, common, std::cerr);
  validate.slip = parse_slip(val_slip);
  if (!model.empty()) validate.model = model == "dynamic" ? sim::ModelKind::kDynamic : sim::ModelKind::kKinematic;
  if (!val_out.empty()) validate.out = val_out;
  return cli::cmd_validate(validate, common, std::cout, std::cerr);
}
