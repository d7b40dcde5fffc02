// Command-line front end: plan expansion, execution against an endpoint or
// the built-in simulator, and report emission over the trial log.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "posaudit/errors.hpp"
#include "posaudit/report.hpp"
#include "posaudit/runner.hpp"
#include "posaudit/scenario.hpp"
#include "posaudit/serialization.hpp"

namespace {

using namespace posaudit;

constexpr int kExitOk = 0;
constexpr int kExitIncomplete = 1;
constexpr int kExitBadConfig = 2;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::vector<double> temperatures;
  std::string endpoint_url;
  std::string model_name;
  bool force_simulator = false;
};

// Overrides are applied to the config document before parsing, so the
// recorded digest always describes the effective configuration.
ScenarioConfig load_with_overrides(const std::string& path, const Overrides& ov) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read scenario config: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("scenario config " + path + " unparseable: " + e.what());
  }
  if (ov.seed) doc["seed"] = *ov.seed;
  if (!ov.temperatures.empty()) doc["temperatures"] = ov.temperatures;
  if (!ov.endpoint_url.empty()) doc["endpoint"]["base_url"] = ov.endpoint_url;
  if (!ov.model_name.empty()) doc["endpoint"]["model_name"] = ov.model_name;
  if (ov.force_simulator) doc["endpoint"]["base_url"] = "sim:";
  try {
    return scenario_from_json(doc);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

RunManifest manifest_from_plan(const ExperimentPlan& plan) {
  RunManifest m;
  m.scenario_id = plan.scenario_id;
  m.config_digest = plan.config_digest;
  m.endpoint = "-";
  m.seed = plan.seed;
  m.planned_trials = plan.total_trials();
  for (const auto& cell : plan.cells) {
    auto it = cell.metadata.find("kind");
    m.cells_by_kind[it == cell.metadata.end() ? "unspecified" : it->second] +=
        cell.repetitions;
  }
  return m;
}

int cmd_plan(const std::string& config_path, const Overrides& ov,
             const std::string& out_path, bool tier_validation) {
  const auto cfg = load_with_overrides(config_path, ov);
  const auto plan = tier_validation ? cfg.build_tier_validation() : cfg.build_plan();
  save_plan(plan, out_path);
  const auto manifest = make_manifest(cfg, plan);
  for (const auto& [kind, trials] : manifest.cells_by_kind)
    std::cout << kind << ": " << trials << " trials\n";
  std::cout << "total: " << manifest.planned_trials << " trials -> " << out_path << "\n";
  return kExitOk;
}

int cmd_run(const std::string& config_path, const Overrides& ov,
            const std::string& plan_path, const std::string& log_path) {
  const auto cfg = load_with_overrides(config_path, ov);
  const auto plan = load_plan(plan_path);
  auto client = cfg.make_client();
  const auto summary = run_plan(plan, cfg.prompt_templates, client, log_path);
  std::cerr << "planned " << summary.planned << ", already logged "
            << summary.already_logged << ", dispatched " << summary.dispatched
            << ", valid " << summary.valid << ", failed " << summary.failed << "\n";
  if (!summary.unexecuted_keys.empty()) {
    std::cerr << summary.unexecuted_keys.size() << " trials unexecuted:\n";
    for (const auto& key : summary.unexecuted_keys) std::cerr << "  " << key << "\n";
    return kExitIncomplete;
  }
  return kExitOk;
}

int cmd_analyze(const std::string& plan_path, const std::string& log_path,
                const std::string& out_dir, const std::string& config_path,
                const ClassifierThresholds& th, std::uint64_t bootstrap_seed,
                bool to_stdout) {
  const auto plan = load_plan(plan_path);
  const auto log = load_log(log_path);
  if (log.empty()) throw ValidationError("trial log is empty: " + log_path);
  const auto bundle = build_report(log, plan.options, th, bootstrap_seed);
  RunManifest manifest = manifest_from_plan(plan);
  if (!config_path.empty())
    manifest = make_manifest(load_with_overrides(config_path, {}), plan);
  if (to_stdout) {
    std::cout << summary_to_json(bundle, manifest).dump(2) << "\n";
  } else {
    write_report(bundle, manifest, out_dir);
    std::cout << "report written to " << out_dir << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Position-bias audit toolkit for choice-making language models"};
  app.require_subcommand(1);

  std::string config_path, plan_path, log_path, out_path, out_dir;
  Overrides ov;
  ClassifierThresholds th;
  std::uint64_t bootstrap_seed = 0;
  bool tier_validation = false;

  auto add_overrides = [&](CLI::App* cmd) {
    cmd->add_option("--seed", ov.seed, "Root seed override");
    cmd->add_option("--temps", ov.temperatures, "Temperature set override");
    cmd->add_option("--endpoint", ov.endpoint_url, "Endpoint base URL override");
    cmd->add_option("--model", ov.model_name, "Model name override");
  };

  auto* plan_cmd = app.add_subcommand("plan", "Expand a scenario config into a plan file");
  plan_cmd->add_option("--config", config_path, "Scenario config path")->required();
  plan_cmd->add_option("--out", out_path, "Plan output path")->required();
  plan_cmd->add_flag("--tier-validation", tier_validation,
                     "Emit the adjacent-tier validation plan instead");
  add_overrides(plan_cmd);

  auto* run_cmd = app.add_subcommand("run", "Execute a plan against the configured endpoint");
  run_cmd->add_option("--config", config_path, "Scenario config path")->required();
  run_cmd->add_option("--plan", plan_path, "Plan file")->required();
  run_cmd->add_option("--log", log_path, "Trial log path (appended, resumable)")->required();
  add_overrides(run_cmd);

  auto* sim_cmd = app.add_subcommand("simulate", "Execute a plan against the simulator");
  sim_cmd->add_option("--config", config_path, "Scenario config path")->required();
  sim_cmd->add_option("--plan", plan_path, "Plan file")->required();
  sim_cmd->add_option("--log", log_path, "Trial log path")->required();
  add_overrides(sim_cmd);

  auto add_thresholds = [&](CLI::App* cmd) {
    cmd->add_option("--eps0", th.eps0, "Half-width of the approximate band at T=0");
    cmd->add_option("--alpha", th.alpha, "Significance level");
    cmd->add_option("--min-n", th.min_n, "Minimum valid trials per estimate");
    cmd->add_option("--bootstrap-seed", bootstrap_seed, "Bootstrap resampling seed");
    cmd->add_option("--config", config_path, "Scenario config, for manifest details");
  };

  auto* analyze_cmd = app.add_subcommand("analyze", "Reduce a trial log to report files");
  analyze_cmd->add_option("--plan", plan_path, "Plan file")->required();
  analyze_cmd->add_option("--log", log_path, "Trial log path")->required();
  analyze_cmd->add_option("--out", out_dir, "Report output directory")->required();
  add_thresholds(analyze_cmd);

  auto* report_cmd = app.add_subcommand("report", "Print the structured summary to stdout");
  report_cmd->add_option("--plan", plan_path, "Plan file")->required();
  report_cmd->add_option("--log", log_path, "Trial log path")->required();
  add_thresholds(report_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (plan_cmd->parsed()) return cmd_plan(config_path, ov, out_path, tier_validation);
    if (run_cmd->parsed()) return cmd_run(config_path, ov, plan_path, log_path);
    if (sim_cmd->parsed()) {
      ov.force_simulator = true;
      return cmd_run(config_path, ov, plan_path, log_path);
    }
    if (analyze_cmd->parsed())
      return cmd_analyze(plan_path, log_path, out_dir, config_path, th, bootstrap_seed,
                         false);
    if (report_cmd->parsed())
      return cmd_analyze(plan_path, log_path, "", config_path, th, bootstrap_seed, true);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIncomplete;
  }
  return kExitOk;
}
