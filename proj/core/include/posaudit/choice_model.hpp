#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace posaudit {

struct QualityTier {
  std::string name;
  int rank = 0;  // 0 = highest
};

enum class Gender { female, male };

std::string to_string(Gender g);

struct PersonaProfile {
  std::string first_name;
  std::string last_name;
  Gender gender = Gender::female;
  std::string state;  // two-letter region code
  std::map<std::string, std::string> contact;

  std::string full_name() const { return first_name + " " + last_name; }
};

/// One comparable thing: a color, or a (core resume, persona) binding.
/// `label` is the text the model is expected to answer with; `presentation`
/// is what gets substituted into the prompt (equal to label for colors).
struct OptionItem {
  std::string id;
  std::string label;
  std::string presentation;
  QualityTier tier;
  std::map<std::string, std::string> metadata;
};

/// Ordered presentation of 2-4 distinct options; positions are 1..k implicit.
struct Arrangement {
  std::vector<std::string> option_ids;

  std::size_t arity() const { return option_ids.size(); }
};

struct PlanCell {
  Arrangement arrangement;
  double temperature = 0.0;
  int repetitions = 1;
  std::string prompt_template_id;
  /// Canonical key of the unordered option tuple; trials sharing a group_id
  /// are permutations of the same set and are tallied together.
  std::string group_id;
  std::map<std::string, std::string> metadata;
};

struct ExperimentPlan {
  std::string scenario_id;
  std::vector<PlanCell> cells;
  std::map<std::string, OptionItem> options;  // id -> item
  std::string config_digest;
  std::uint64_t seed = 0;

  std::int64_t total_trials() const;
  const OptionItem& option(const std::string& id) const;
};

/// All k! orderings of the given ids, lexicographic in position indices of
/// the input order (input order itself comes first).
std::vector<Arrangement> enumerate_arrangements(const std::vector<std::string>& option_ids);

std::string make_group_id(const std::vector<std::string>& option_ids);

/// Deterministic, seeded persona construction: first names shuffled and
/// matched 1:1 with last names; contact details synthesized from name + seed.
std::vector<PersonaProfile> build_personas(const std::vector<std::string>& first_names,
                                           const std::vector<std::string>& last_names,
                                           Gender gender, std::uint64_t seed);

/// (core resume index, persona) bindings: the pool is split into
/// |personas| / |core_resumes| groups, each using every persona exactly once.
struct PersonaBinding {
  std::size_t core_index = 0;
  std::size_t persona_index = 0;
  std::size_t group = 0;  // which triple/tuple this binding belongs to
};

std::vector<PersonaBinding> assign_personas(std::size_t n_core, std::size_t n_personas,
                                            std::uint64_t seed);

}  // namespace posaudit
