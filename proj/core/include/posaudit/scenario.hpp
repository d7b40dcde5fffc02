#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "posaudit/client.hpp"
#include "posaudit/plan_builders.hpp"
#include "posaudit/rum.hpp"

namespace posaudit {

enum class ScenarioKind { colors, resumes };

ScenarioKind scenario_kind_from_string(const std::string& s);
std::string to_string(ScenarioKind k);

/// Parsed scenario file: everything needed to expand a plan, talk to an
/// endpoint, and (optionally) drive the built-in simulator.
struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::colors;
  std::string scenario_id;
  std::uint64_t seed = 0;
  std::vector<double> temperatures{0.0, 0.5, 1.0};
  std::map<std::string, std::string> prompt_templates;
  EndpointConfig endpoint;
  std::optional<RandomUtilityConfig> simulator;
  std::uint64_t sim_root_seed = 0;
  ColorPlanSpec color_spec;    // populated when kind == colors
  ResumePlanSpec resume_spec;  // populated when kind == resumes
  int tier_validation_reps = 50;
  std::string config_digest;  // canonical-form digest of the source document

  ExperimentPlan build_plan() const;
  ExperimentPlan build_tier_validation() const;  // colors only
  ProviderClient make_client() const;
};

/// Digest of the canonical (sorted-key) serialization, so formatting and
/// field order in the source file do not matter.
std::string config_digest_of(const nlohmann::json& doc);

ScenarioConfig scenario_from_json(const nlohmann::json& doc);

/// Throws ValidationError with the file path in the message on parse or
/// schema problems.
ScenarioConfig load_scenario(const std::string& path);

}  // namespace posaudit
