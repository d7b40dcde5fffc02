#include "posaudit/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "posaudit/errors.hpp"
#include "posaudit/hash.hpp"

namespace posaudit {

using nlohmann::json;

ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "colors") return ScenarioKind::colors;
  if (s == "resumes") return ScenarioKind::resumes;
  throw ValidationError("unknown scenario kind: " + s);
}

std::string to_string(ScenarioKind k) {
  return k == ScenarioKind::colors ? "colors" : "resumes";
}

std::string config_digest_of(const json& doc) {
  // nlohmann::json keeps object keys sorted, so dump() is already canonical.
  return to_hex(fnv1a64(doc.dump()));
}

namespace {

std::string slug(const std::string& s) {
  std::string out;
  for (char c : s)
    out += c == ' ' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

EndpointConfig parse_endpoint(const json& doc) {
  EndpointConfig cfg;
  cfg.base_url = doc.at("base_url").get<std::string>();
  cfg.model_name = doc.value("model_name", "default");
  cfg.auth_env = doc.value("auth_env", "");
  cfg.max_concurrency = doc.value("max_concurrency", 8);
  cfg.timeout_s = doc.value("timeout_s", 30.0);
  cfg.cache_dir = doc.value("cache_dir", "");
  cfg.max_tokens = doc.value("max_tokens", 16);
  cfg.rate_limit_rps = doc.value("rate_limit_rps", 0.0);
  if (doc.contains("retry")) {
    const auto& r = doc.at("retry");
    cfg.retry.max_attempts = r.value("max_attempts", 3);
    cfg.retry.backoff_initial_ms = r.value("backoff_initial_ms", 250);
    cfg.retry.backoff_factor = r.value("backoff_factor", 2.0);
  }
  cfg.validate();
  return cfg;
}

RandomUtilityConfig parse_simulator(const json& doc) {
  RandomUtilityConfig cfg;
  for (auto it = doc.at("utilities").begin(); it != doc.at("utilities").end(); ++it)
    cfg.utilities[it.key()] = it.value().get<double>();
  cfg.position_boosts = doc.at("position_boosts").get<std::vector<double>>();
  cfg.noise_width_coeff = doc.value("noise_width_coeff", 0.4);
  if (doc.contains("reference_mode")) {
    ReferenceMode rm;
    rm.gamma = doc.at("reference_mode").at("gamma").get<double>();
    rm.r = doc.at("reference_mode").at("r").get<double>();
    cfg.reference_mode = rm;
  }
  return cfg;
}

void parse_colors(const json& doc, ScenarioConfig& cfg) {
  auto& spec = cfg.color_spec;
  spec.scenario_id = cfg.scenario_id;
  spec.seed = cfg.seed;
  spec.config_digest = cfg.config_digest;
  spec.temperatures = cfg.temperatures;
  spec.reps_pair = doc.value("reps_pair", 50);
  spec.reps_triple = doc.value("reps_triple", 40);
  cfg.tier_validation_reps = doc.value("tier_validation_reps", 50);
  int rank = 0;
  for (const auto& t : doc.at("tiers")) {
    ColorTierSet tier_set;
    tier_set.tier.name = t.at("name").get<std::string>();
    tier_set.tier.rank = rank++;
    for (const auto& label : t.at("options")) {
      OptionItem opt;
      opt.label = label.get<std::string>();
      opt.id = slug(opt.label);
      opt.presentation = opt.label;
      tier_set.options.push_back(std::move(opt));
    }
    spec.tiers.push_back(std::move(tier_set));
  }
}

/// Makes each requested "First Last" pairing exist in the seeded pool by
/// swapping last names between the persona carrying that first name and the
/// persona carrying that last name. Deterministic, keeps the 1:1 matching.
void pin_pair_names(std::vector<PersonaProfile>& pool,
                    const std::vector<std::string>& pair_names) {
  for (const auto& full : pair_names) {
    const auto space = full.find(' ');
    if (space == std::string::npos)
      throw ValidationError("pair name must be 'First Last': " + full);
    const std::string first = full.substr(0, space);
    const std::string last = full.substr(space + 1);
    auto holder_of_first = std::find_if(pool.begin(), pool.end(), [&](const auto& p) {
      return p.first_name == first;
    });
    auto holder_of_last = std::find_if(pool.begin(), pool.end(), [&](const auto& p) {
      return p.last_name == last;
    });
    if (holder_of_first == pool.end() || holder_of_last == pool.end())
      throw ValidationError("pair name not coverable by the persona pool: " + full);
    std::swap(holder_of_first->last_name, holder_of_last->last_name);
  }
}

void parse_resumes(const json& doc, ScenarioConfig& cfg) {
  auto& spec = cfg.resume_spec;
  spec.scenario_id = cfg.scenario_id;
  spec.seed = cfg.seed;
  spec.config_digest = cfg.config_digest;
  spec.temperatures = cfg.temperatures;
  spec.mode = resume_mode_from_string(doc.value("mode", "same_gender"));
  spec.professions = doc.at("professions").get<std::vector<std::string>>();
  int rank = 0;
  for (const auto& name : doc.at("tiers"))
    spec.tiers.push_back({name.get<std::string>(), rank++});
  for (auto it = doc.at("resumes").begin(); it != doc.at("resumes").end(); ++it)
    spec.resumes[it.key()] = it.value().get<std::vector<std::vector<std::string>>>();

  const auto female_first = doc.at("female_first_names").get<std::vector<std::string>>();
  const auto male_first = doc.at("male_first_names").get<std::vector<std::string>>();
  const auto last = doc.at("last_names").get<std::vector<std::string>>();
  spec.female_personas = build_personas(female_first, last, Gender::female,
                                        derive_seed(cfg.seed, "personas|female"));
  spec.male_personas = build_personas(male_first, last, Gender::male,
                                      derive_seed(cfg.seed, "personas|male"));
  if (doc.contains("pair_female_names")) {
    spec.pair_female_names = doc.at("pair_female_names").get<std::vector<std::string>>();
    pin_pair_names(spec.female_personas, spec.pair_female_names);
  }
  if (doc.contains("pair_male_names")) {
    spec.pair_male_names = doc.at("pair_male_names").get<std::vector<std::string>>();
    pin_pair_names(spec.male_personas, spec.pair_male_names);
  }
}

}  // namespace

ScenarioConfig scenario_from_json(const json& doc) {
  ScenarioConfig cfg;
  try {
    cfg.config_digest = config_digest_of(doc);
    cfg.kind = scenario_kind_from_string(doc.at("kind").get<std::string>());
    cfg.scenario_id = doc.at("scenario_id").get<std::string>();
    cfg.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("temperatures"))
      cfg.temperatures = doc.at("temperatures").get<std::vector<double>>();
    if (cfg.temperatures.empty())
      throw ValidationError("temperature set must be non-empty");
    for (auto it = doc.at("prompt_templates").begin(); it != doc.at("prompt_templates").end();
         ++it)
      cfg.prompt_templates[it.key()] = it.value().get<std::string>();
    cfg.endpoint = parse_endpoint(doc.at("endpoint"));
    if (doc.contains("simulator")) {
      cfg.simulator = parse_simulator(doc.at("simulator"));
      cfg.sim_root_seed = doc.at("simulator").value("root_seed", cfg.seed);
    }
    if (cfg.kind == ScenarioKind::colors)
      parse_colors(doc.at("colors"), cfg);
    else
      parse_resumes(doc.at("resumes"), cfg);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scenario config invalid: ") + e.what());
  }
  if (cfg.endpoint.is_simulator() && !cfg.simulator)
    throw ValidationError("simulator endpoint configured without a 'simulator' section");
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read scenario config: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("scenario config " + path + " unparseable: " + e.what());
  }
  try {
    return scenario_from_json(doc);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

ExperimentPlan ScenarioConfig::build_plan() const {
  return kind == ScenarioKind::colors ? build_color_plan(color_spec)
                                      : build_resume_plan(resume_spec);
}

ExperimentPlan ScenarioConfig::build_tier_validation() const {
  if (kind != ScenarioKind::colors)
    throw ValidationError("tier validation plans are defined for color scenarios only");
  return build_tier_validation_plan(color_spec, tier_validation_reps);
}

ProviderClient ScenarioConfig::make_client() const {
  if (endpoint.is_simulator()) {
    if (!simulator)
      throw ValidationError("simulator endpoint configured without a 'simulator' section");
    return ProviderClient(endpoint, *simulator, sim_root_seed);
  }
  return ProviderClient(endpoint);
}

}  // namespace posaudit
