#pragma once

#include "posaudit/choice_model.hpp"

namespace posaudit {

/// One tier's color set; pairwise comparisons use the first two options.
struct ColorTierSet {
  QualityTier tier;
  std::vector<OptionItem> options;  // exactly 3
};

struct ColorPlanSpec {
  std::string scenario_id;
  std::vector<ColorTierSet> tiers;
  int reps_pair = 50;
  int reps_triple = 40;
  std::vector<double> temperatures{0.0, 0.5, 1.0};
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string pair_template_id = "color_pair";
  std::string triple_template_id = "color_triple";
};

/// Per tier and temperature: both orders of (color 1, color 2) x reps_pair,
/// plus all 6 orders of the triple x reps_triple.
ExperimentPlan build_color_plan(const ColorPlanSpec& spec);

enum class ResumeMode { same_gender, cross_gender, triplewise };

ResumeMode resume_mode_from_string(const std::string& s);
std::string to_string(ResumeMode m);

struct ResumePlanSpec {
  std::string scenario_id;
  std::vector<std::string> professions;  // 4
  std::vector<QualityTier> tiers;        // 4
  /// resumes[profession][tier rank] -> core resume texts for that cell
  /// (>= 2 for pairwise modes, >= 3 for triplewise).
  std::map<std::string, std::vector<std::vector<std::string>>> resumes;
  std::vector<PersonaProfile> female_personas;
  std::vector<PersonaProfile> male_personas;
  /// Full names of the 4+4 personas used by the pairwise modes; must exist
  /// in the pools above.
  std::vector<std::string> pair_female_names;
  std::vector<std::string> pair_male_names;
  ResumeMode mode = ResumeMode::same_gender;
  std::vector<double> temperatures{0.0, 0.5, 1.0};
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string pair_template_id = "resume_pair";
  std::string triple_template_id = "resume_triple";
};

/// Trial counts per temperature: same_gender 768, cross_gender 1024,
/// triplewise 960 (with the default 4 professions x 4 tiers).
ExperimentPlan build_resume_plan(const ResumePlanSpec& spec);

/// Adjacent-tier pairwise comparisons used to validate tier labels: every
/// option of each tier against every option of the next lower tier, both
/// orders, reps repetitions each.
ExperimentPlan build_tier_validation_plan(const ColorPlanSpec& spec, int reps);

}  // namespace posaudit
