#pragma once

#include <string>

#include <json.hpp>

#include "posaudit/choice_model.hpp"
#include "posaudit/runner.hpp"

namespace posaudit {

/// Plan file schema; ordered_json keeps emission byte-stable.
nlohmann::ordered_json plan_to_json(const ExperimentPlan& plan);
ExperimentPlan plan_from_json(const nlohmann::json& doc);

void save_plan(const ExperimentPlan& plan, const std::string& path);
ExperimentPlan load_plan(const std::string& path);

/// One self-describing JSON object per log line.
nlohmann::ordered_json trial_record_to_json(const TrialRecord& rec);
TrialRecord trial_record_from_json(const nlohmann::json& doc);

}  // namespace posaudit
