#include "posaudit/serialization.hpp"

#include <fstream>

#include "posaudit/errors.hpp"

namespace posaudit {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json metadata_to_json(const std::map<std::string, std::string>& m) {
  ordered_json out = ordered_json::object();
  for (const auto& [k, v] : m) out[k] = v;
  return out;
}

std::map<std::string, std::string> metadata_from_json(const json& doc) {
  std::map<std::string, std::string> out;
  for (auto it = doc.begin(); it != doc.end(); ++it) out[it.key()] = it.value().get<std::string>();
  return out;
}

}  // namespace

ordered_json plan_to_json(const ExperimentPlan& plan) {
  ordered_json doc;
  doc["schema"] = "posaudit.plan.v1";
  doc["scenario_id"] = plan.scenario_id;
  doc["provenance"] = {{"config_digest", plan.config_digest}, {"seed", plan.seed}};
  ordered_json options = ordered_json::object();
  for (const auto& [id, opt] : plan.options) {
    options[id] = {{"label", opt.label},
                   {"presentation", opt.presentation},
                   {"tier", {{"name", opt.tier.name}, {"rank", opt.tier.rank}}},
                   {"metadata", metadata_to_json(opt.metadata)}};
  }
  doc["options"] = std::move(options);
  ordered_json cells = ordered_json::array();
  for (const auto& cell : plan.cells) {
    cells.push_back({{"arrangement", cell.arrangement.option_ids},
                     {"temperature", cell.temperature},
                     {"repetitions", cell.repetitions},
                     {"prompt_template_id", cell.prompt_template_id},
                     {"group_id", cell.group_id},
                     {"metadata", metadata_to_json(cell.metadata)}});
  }
  doc["cells"] = std::move(cells);
  return doc;
}

ExperimentPlan plan_from_json(const json& doc) {
  if (doc.value("schema", "") != "posaudit.plan.v1")
    throw ValidationError("not a posaudit plan file (bad or missing schema tag)");
  ExperimentPlan plan;
  plan.scenario_id = doc.at("scenario_id").get<std::string>();
  plan.config_digest = doc.at("provenance").at("config_digest").get<std::string>();
  plan.seed = doc.at("provenance").at("seed").get<std::uint64_t>();
  for (auto it = doc.at("options").begin(); it != doc.at("options").end(); ++it) {
    OptionItem opt;
    opt.id = it.key();
    opt.label = it.value().at("label").get<std::string>();
    opt.presentation = it.value().at("presentation").get<std::string>();
    opt.tier.name = it.value().at("tier").at("name").get<std::string>();
    opt.tier.rank = it.value().at("tier").at("rank").get<int>();
    opt.metadata = metadata_from_json(it.value().at("metadata"));
    plan.options.emplace(opt.id, std::move(opt));
  }
  for (const auto& c : doc.at("cells")) {
    PlanCell cell;
    cell.arrangement.option_ids = c.at("arrangement").get<std::vector<std::string>>();
    cell.temperature = c.at("temperature").get<double>();
    cell.repetitions = c.at("repetitions").get<int>();
    cell.prompt_template_id = c.at("prompt_template_id").get<std::string>();
    cell.group_id = c.at("group_id").get<std::string>();
    cell.metadata = metadata_from_json(c.at("metadata"));
    plan.cells.push_back(std::move(cell));
  }
  return plan;
}

void save_plan(const ExperimentPlan& plan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write plan file: " + path);
  out << plan_to_json(plan).dump(2) << '\n';
}

ExperimentPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read plan file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("plan file unparseable: " + std::string(e.what()));
  }
  return plan_from_json(doc);
}

ordered_json trial_record_to_json(const TrialRecord& rec) {
  ordered_json doc;
  doc["trial_key"] = rec.trial_key;
  doc["scenario_id"] = rec.scenario_id;
  doc["cell_index"] = rec.cell_index;
  doc["repetition"] = rec.repetition;
  doc["option_ids"] = rec.option_ids;
  doc["labels"] = rec.labels;
  doc["temperature"] = rec.temperature;
  doc["group_id"] = rec.group_id;
  doc["metadata"] = metadata_to_json(rec.metadata);
  doc["raw_text"] = rec.raw_text;
  if (const auto* ok = std::get_if<ResolvedChoice>(&rec.resolution)) {
    doc["resolution"] = {{"status", "resolved"},
                         {"option_id", ok->chosen_option_id},
                         {"match_kind", to_string(ok->match_kind)},
                         {"residual", ok->residual_text}};
  } else {
    const auto& fail = std::get<ResolutionFailure>(rec.resolution);
    doc["resolution"] = {{"status", "failed"}, {"reason", to_string(fail.reason)}};
  }
  doc["from_cache"] = rec.from_cache;
  doc["attempt_count"] = rec.attempt_count;
  doc["latency_ms"] = rec.latency_ms;
  doc["timestamp_ms"] = rec.timestamp_ms;
  return doc;
}

TrialRecord trial_record_from_json(const json& doc) {
  TrialRecord rec;
  rec.trial_key = doc.at("trial_key").get<std::string>();
  rec.scenario_id = doc.at("scenario_id").get<std::string>();
  rec.cell_index = doc.at("cell_index").get<std::size_t>();
  rec.repetition = doc.at("repetition").get<int>();
  rec.option_ids = doc.at("option_ids").get<std::vector<std::string>>();
  rec.labels = doc.at("labels").get<std::vector<std::string>>();
  rec.temperature = doc.at("temperature").get<double>();
  rec.group_id = doc.at("group_id").get<std::string>();
  rec.metadata = metadata_from_json(doc.at("metadata"));
  rec.raw_text = doc.at("raw_text").get<std::string>();
  const auto& res = doc.at("resolution");
  if (res.at("status") == "resolved") {
    ResolvedChoice ok;
    ok.trial_key = rec.trial_key;
    ok.chosen_option_id = res.at("option_id").get<std::string>();
    const std::string kind = res.at("match_kind").get<std::string>();
    if (kind == "exact")
      ok.match_kind = MatchKind::exact;
    else if (kind == "normalized")
      ok.match_kind = MatchKind::normalized;
    else if (kind == "unique-substring")
      ok.match_kind = MatchKind::unique_substring;
    else
      throw ValidationError("unknown match kind in log: " + kind);
    ok.residual_text = res.value("residual", "");
    rec.resolution = std::move(ok);
  } else {
    ResolutionFailure fail;
    fail.trial_key = rec.trial_key;
    const std::string reason = res.at("reason").get<std::string>();
    if (reason == "no_match")
      fail.reason = FailureReason::no_match;
    else if (reason == "ambiguous")
      fail.reason = FailureReason::ambiguous;
    else if (reason == "refusal")
      fail.reason = FailureReason::refusal;
    else if (reason == "empty")
      fail.reason = FailureReason::empty;
    else
      throw ValidationError("unknown failure reason in log: " + reason);
    rec.resolution = fail;
  }
  rec.from_cache = doc.value("from_cache", false);
  rec.attempt_count = doc.value("attempt_count", 0);
  rec.latency_ms = doc.value("latency_ms", 0.0);
  rec.timestamp_ms = doc.value("timestamp_ms", std::int64_t{0});
  return rec;
}

}  // namespace posaudit
