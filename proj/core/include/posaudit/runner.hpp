#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "posaudit/choice_model.hpp"
#include "posaudit/client.hpp"
#include "posaudit/resolver.hpp"

namespace posaudit {

struct TrialRecord {
  std::string trial_key;
  std::string scenario_id;
  std::size_t cell_index = 0;
  int repetition = 0;
  std::vector<std::string> option_ids;  // presented order
  std::vector<std::string> labels;      // aligned with option_ids
  double temperature = 0.0;
  std::string group_id;
  std::map<std::string, std::string> metadata;
  std::string raw_text;
  Resolution resolution;
  bool from_cache = false;
  int attempt_count = 0;
  double latency_ms = 0.0;
  std::int64_t timestamp_ms = 0;  // 0 for simulator and cache hits

  bool valid() const { return std::holds_alternative<ResolvedChoice>(resolution); }
  const std::string* chosen_id() const {
    if (auto* r = std::get_if<ResolvedChoice>(&resolution)) return &r->chosen_option_id;
    return nullptr;
  }
};

std::string make_trial_key(const std::string& scenario_id, std::size_t cell_index,
                           int repetition);

/// Per-permutation tallies within one (option tuple, temperature) group.
struct PermutationTally {
  std::vector<std::string> order;  // presented option ids
  std::map<std::string, std::int64_t> chosen_counts;
  /// Valid chosen ids in log order; retained so estimates can trim to the
  /// minimum per-permutation count deterministically.
  std::vector<std::string> chosen_sequence;
  std::int64_t n_valid = 0;
  std::int64_t n_failed = 0;
};

struct TallyTable {
  std::string group_id;
  double temperature = 0.0;
  std::vector<std::string> option_tuple;  // sorted ids
  std::map<std::string, std::string> metadata;
  std::vector<PermutationTally> permutations;

  std::int64_t n_valid() const;
  std::int64_t n_failed() const;
  /// Counts of how often the option at each presented position was chosen,
  /// pooled over permutations.
  std::vector<std::int64_t> position_marginals() const;
  const PermutationTally* find_order(const std::vector<std::string>& order) const;
};

struct SelectionEstimate {
  std::string option_a;
  std::string option_b;
  double temperature = 0.0;
  double p_hat = 0.0;     // empirical Pr[a | {a,b}, t], balanced over both orders
  std::int64_t k = 0;     // times a was chosen among the n balanced trials
  std::int64_t n = 0;
  std::int64_t trimmed = 0;  // valid trials dropped to restore order balance
};

struct RunSummary {
  std::int64_t planned = 0;
  std::int64_t already_logged = 0;
  std::int64_t dispatched = 0;
  std::int64_t valid = 0;
  std::int64_t failed = 0;
  std::vector<std::string> unexecuted_keys;  // trials with no completion at all

  bool complete() const { return unexecuted_keys.empty(); }
};

/// Executes every planned trial that is not yet in the log at `log_path`,
/// appending one record per trial. Idempotent by trial_key: re-running with a
/// complete log dispatches nothing.
RunSummary run_plan(const ExperimentPlan& plan,
                    const std::map<std::string, std::string>& prompt_templates,
                    ProviderClient& client, const std::string& log_path);

std::vector<TrialRecord> load_log(const std::string& log_path);

std::string render_prompt(const std::map<std::string, std::string>& templates,
                          const ExperimentPlan& plan, const PlanCell& cell);

/// Groups records by (option tuple, temperature); deterministic order.
std::vector<TallyTable> tally(const std::vector<TrialRecord>& records);

/// Pooled Pr[a | {a,b}, t] with per-order trimming to the minimum valid count.
SelectionEstimate estimate_selection(const std::vector<TallyTable>& tallies,
                                     const std::string& option_a,
                                     const std::string& option_b, double temperature);

}  // namespace posaudit
