#include "posaudit/plan_builders.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "posaudit/errors.hpp"
#include "posaudit/hash.hpp"
#include "posaudit/resolver.hpp"

namespace posaudit {

ResumeMode resume_mode_from_string(const std::string& s) {
  if (s == "same_gender") return ResumeMode::same_gender;
  if (s == "cross_gender") return ResumeMode::cross_gender;
  if (s == "triplewise") return ResumeMode::triplewise;
  throw ValidationError("unknown resume mode: " + s);
}

std::string to_string(ResumeMode m) {
  switch (m) {
    case ResumeMode::same_gender: return "same_gender";
    case ResumeMode::cross_gender: return "cross_gender";
    case ResumeMode::triplewise: return "triplewise";
  }
  return "?";
}

namespace {

void add_option(ExperimentPlan& plan, OptionItem item) {
  if (item.label.empty()) throw ValidationError("option label empty: " + item.id);
  auto [it, inserted] = plan.options.emplace(item.id, std::move(item));
  if (!inserted) return;  // same option referenced by multiple cells
}

void check_labels_resolvable(const ExperimentPlan& plan) {
  for (const auto& cell : plan.cells) {
    std::set<std::string> normalized;
    for (const auto& id : cell.arrangement.option_ids) {
      const auto norm = normalize_text(plan.option(id).label);
      if (!normalized.insert(norm).second)
        throw ValidationError("labels collide after normalization in arrangement: " + norm);
    }
  }
}

void emit_permutation_block(ExperimentPlan& plan, const std::vector<std::string>& ids,
                            double temperature, int reps, const std::string& template_id,
                            std::map<std::string, std::string> metadata) {
  const auto group = make_group_id(ids);
  for (const auto& arr : enumerate_arrangements(ids)) {
    PlanCell cell;
    cell.arrangement = arr;
    cell.temperature = temperature;
    cell.repetitions = reps;
    cell.prompt_template_id = template_id;
    cell.group_id = group;
    cell.metadata = metadata;
    plan.cells.push_back(std::move(cell));
  }
}

void emit_single(ExperimentPlan& plan, std::vector<std::string> ids, double temperature,
                 const std::string& template_id,
                 std::map<std::string, std::string> metadata) {
  PlanCell cell;
  cell.arrangement.option_ids = std::move(ids);
  cell.temperature = temperature;
  cell.repetitions = 1;
  cell.prompt_template_id = template_id;
  cell.group_id = make_group_id(cell.arrangement.option_ids);
  cell.metadata = std::move(metadata);
  plan.cells.push_back(std::move(cell));
}

void validate_color_tiers(const std::vector<ColorTierSet>& tiers) {
  if (tiers.empty()) throw ValidationError("color plan needs at least one tier");
  std::set<int> ranks;
  for (const auto& t : tiers) {
    if (t.options.size() != 3)
      throw ValidationError("tier '" + t.tier.name + "' must have exactly 3 options, has " +
                            std::to_string(t.options.size()));
    ranks.insert(t.tier.rank);
  }
  if (ranks.size() != tiers.size() || *ranks.begin() != 0 ||
      *ranks.rbegin() != static_cast<int>(tiers.size()) - 1)
    throw ValidationError("tier ranks must be consecutive from 0");
}

}  // namespace

ExperimentPlan build_color_plan(const ColorPlanSpec& spec) {
  validate_color_tiers(spec.tiers);
  if (spec.reps_pair < 0 || spec.reps_triple < 0)
    throw ValidationError("repetition counts must be non-negative");

  ExperimentPlan plan;
  plan.scenario_id = spec.scenario_id;
  plan.config_digest = spec.config_digest;
  plan.seed = spec.seed;

  for (const auto& tier : spec.tiers) {
    for (auto opt : tier.options) {
      opt.tier = tier.tier;
      if (opt.presentation.empty()) opt.presentation = opt.label;
      add_option(plan, std::move(opt));
    }
    for (double t : spec.temperatures) {
      std::map<std::string, std::string> meta{{"tier", tier.tier.name}};
      if (spec.reps_pair > 0) {
        meta["kind"] = "pairwise";
        emit_permutation_block(plan,
                               {tier.options[0].id, tier.options[1].id}, t,
                               spec.reps_pair, spec.pair_template_id, meta);
      }
      if (spec.reps_triple > 0) {
        meta["kind"] = "triplewise";
        emit_permutation_block(
            plan, {tier.options[0].id, tier.options[1].id, tier.options[2].id}, t,
            spec.reps_triple, spec.triple_template_id, meta);
      }
    }
  }
  check_labels_resolvable(plan);
  return plan;
}

ExperimentPlan build_tier_validation_plan(const ColorPlanSpec& spec, int reps) {
  validate_color_tiers(spec.tiers);
  if (spec.tiers.size() < 2)
    throw ValidationError("tier validation needs at least two tiers");
  if (reps < 1) throw ValidationError("tier validation reps must be >= 1");

  auto tiers = spec.tiers;
  std::sort(tiers.begin(), tiers.end(),
            [](const auto& a, const auto& b) { return a.tier.rank < b.tier.rank; });

  ExperimentPlan plan;
  plan.scenario_id = spec.scenario_id + ":tier-validation";
  plan.config_digest = spec.config_digest;
  plan.seed = spec.seed;
  for (const auto& tier : tiers)
    for (auto opt : tier.options) {
      opt.tier = tier.tier;
      if (opt.presentation.empty()) opt.presentation = opt.label;
      add_option(plan, std::move(opt));
    }

  for (std::size_t i = 0; i + 1 < tiers.size(); ++i) {
    for (const auto& hi : tiers[i].options)
      for (const auto& lo : tiers[i + 1].options)
        for (double t : spec.temperatures)
          emit_permutation_block(plan, {hi.id, lo.id}, t, reps, spec.pair_template_id,
                                 {{"kind", "tier_validation"},
                                  {"tier_high", tiers[i].tier.name},
                                  {"tier_low", tiers[i + 1].tier.name}});
  }
  check_labels_resolvable(plan);
  return plan;
}

namespace {

std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) out += c == ' ' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const PersonaProfile& find_persona(const std::vector<PersonaProfile>& pool,
                                   const std::string& full_name) {
  for (const auto& p : pool)
    if (p.full_name() == full_name) return p;
  throw ValidationError("persona not in pool: " + full_name);
}

std::string persona_block(const PersonaProfile& p) {
  return "Name: " + p.full_name() + "\nEmail: " + p.contact.at("email") +
         "\nPhone: " + p.contact.at("phone") + "\nState: " + p.state + "\n";
}

// Resume option bound to a persona. The label is the persona's full name,
// which is what the model is asked to answer with.
OptionItem make_resume_option(const std::string& profession, const QualityTier& tier,
                              std::size_t core_index, const std::string& core_text,
                              const PersonaProfile& persona) {
  OptionItem o;
  o.id = "r|" + slug(profession) + "|" + slug(tier.name) + "|" + std::to_string(core_index) +
         "|" + slug(persona.full_name());
  o.label = persona.full_name();
  o.presentation = persona_block(persona) + core_text;
  o.tier = tier;
  o.metadata = {{"profession", profession},
                {"tier", tier.name},
                {"core", std::to_string(core_index)},
                {"persona", persona.full_name()},
                {"gender", to_string(persona.gender)}};
  return o;
}

const std::vector<std::vector<std::string>>& profession_resumes(
    const ResumePlanSpec& spec, const std::string& profession) {
  auto it = spec.resumes.find(profession);
  if (it == spec.resumes.end())
    throw ValidationError("no resumes configured for profession: " + profession);
  if (it->second.size() < spec.tiers.size())
    throw ValidationError("profession '" + profession + "' lacks resumes for all tiers");
  return it->second;
}

}  // namespace

ExperimentPlan build_resume_plan(const ResumePlanSpec& spec) {
  if (spec.professions.empty() || spec.tiers.empty())
    throw ValidationError("resume plan needs professions and tiers");
  {
    std::set<int> ranks;
    for (const auto& t : spec.tiers) ranks.insert(t.rank);
    if (ranks.size() != spec.tiers.size() || *ranks.begin() != 0 ||
        *ranks.rbegin() != static_cast<int>(spec.tiers.size()) - 1)
      throw ValidationError("tier ranks must be consecutive from 0");
  }

  ExperimentPlan plan;
  plan.scenario_id = spec.scenario_id;
  plan.config_digest = spec.config_digest;
  plan.seed = spec.seed;

  const bool pairwise = spec.mode != ResumeMode::triplewise;
  if (pairwise) {
    if (spec.pair_female_names.size() != 4 || spec.pair_male_names.size() != 4)
      throw ValidationError("pairwise resume modes need exactly 4 names per gender");
  } else {
    if (spec.female_personas.size() != spec.male_personas.size())
      throw ValidationError("triplewise mode needs equal female and male pools");
    if (spec.female_personas.empty() || spec.female_personas.size() % 3 != 0)
      throw ValidationError("triplewise mode needs a persona pool divisible by 3");
  }

  // (persona bound to resume 1, persona bound to resume 2) pairs per
  // gender-structure of the mode; each pair expands to 2 presentation orders.
  for (const auto& profession : spec.professions) {
    const auto& tier_resumes = profession_resumes(spec, profession);
    for (const auto& tier : spec.tiers) {
      const auto& cores = tier_resumes[static_cast<std::size_t>(tier.rank)];

      if (spec.mode == ResumeMode::same_gender) {
        if (cores.size() < 2)
          throw ValidationError("same_gender mode needs >= 2 core resumes per tier");
        for (Gender g : {Gender::female, Gender::male}) {
          const auto& names =
              g == Gender::female ? spec.pair_female_names : spec.pair_male_names;
          const auto& pool =
              g == Gender::female ? spec.female_personas : spec.male_personas;
          for (std::size_t i = 0; i < names.size(); ++i) {
            for (std::size_t j = i + 1; j < names.size(); ++j) {
              for (int assignment = 0; assignment < 2; ++assignment) {
                const auto& p1 = find_persona(pool, assignment == 0 ? names[i] : names[j]);
                const auto& p2 = find_persona(pool, assignment == 0 ? names[j] : names[i]);
                auto o1 = make_resume_option(profession, tier, 0, cores[0], p1);
                auto o2 = make_resume_option(profession, tier, 1, cores[1], p2);
                const std::string id1 = o1.id, id2 = o2.id;
                add_option(plan, std::move(o1));
                add_option(plan, std::move(o2));
                for (double t : spec.temperatures) {
                  std::map<std::string, std::string> meta{
                      {"kind", "pairwise_same_gender"},
                      {"profession", profession},
                      {"tier", tier.name},
                      {"gender", to_string(g)}};
                  emit_single(plan, {id1, id2}, t, spec.pair_template_id, meta);
                  emit_single(plan, {id2, id1}, t, spec.pair_template_id, meta);
                }
              }
            }
          }
        }
      } else if (spec.mode == ResumeMode::cross_gender) {
        if (cores.size() < 2)
          throw ValidationError("cross_gender mode needs >= 2 core resumes per tier");
        for (const auto& fname : spec.pair_female_names) {
          for (const auto& mname : spec.pair_male_names) {
            for (int assignment = 0; assignment < 2; ++assignment) {
              const auto& p1 = assignment == 0 ? find_persona(spec.female_personas, fname)
                                               : find_persona(spec.male_personas, mname);
              const auto& p2 = assignment == 0 ? find_persona(spec.male_personas, mname)
                                               : find_persona(spec.female_personas, fname);
              auto o1 = make_resume_option(profession, tier, 0, cores[0], p1);
              auto o2 = make_resume_option(profession, tier, 1, cores[1], p2);
              const std::string id1 = o1.id, id2 = o2.id;
              add_option(plan, std::move(o1));
              add_option(plan, std::move(o2));
              for (double t : spec.temperatures) {
                std::map<std::string, std::string> meta{
                    {"kind", "pairwise_cross_gender"},
                    {"profession", profession},
                    {"tier", tier.name}};
                emit_single(plan, {id1, id2}, t, spec.pair_template_id, meta);
                emit_single(plan, {id2, id1}, t, spec.pair_template_id, meta);
              }
            }
          }
        }
      } else {  // triplewise
        if (cores.size() < 3)
          throw ValidationError("triplewise mode needs >= 3 core resumes per tier");
        for (Gender g : {Gender::female, Gender::male}) {
          const auto& pool =
              g == Gender::female ? spec.female_personas : spec.male_personas;
          const auto bindings = assign_personas(
              3, pool.size(),
              derive_seed(spec.seed, "assign|" + profession + "|" + tier.name + "|" +
                                         to_string(g)));
          const std::size_t n_groups = pool.size() / 3;
          for (std::size_t group = 0; group < n_groups; ++group) {
            std::vector<std::string> ids(3);
            for (const auto& b : bindings) {
              if (b.group != group) continue;
              auto opt = make_resume_option(profession, tier, b.core_index,
                                            cores[b.core_index], pool[b.persona_index]);
              ids[b.core_index] = opt.id;
              add_option(plan, std::move(opt));
            }
            for (double t : spec.temperatures)
              emit_permutation_block(plan, ids, t, 1, spec.triple_template_id,
                                     {{"kind", "triplewise"},
                                      {"profession", profession},
                                      {"tier", tier.name},
                                      {"gender", to_string(g)}});
          }
        }
      }
    }
  }
  check_labels_resolvable(plan);
  return plan;
}

}  // namespace posaudit
