#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "posaudit/analyzer.hpp"
#include "posaudit/runner.hpp"
#include "posaudit/scenario.hpp"

namespace posaudit {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest {
  std::string scenario_id;
  std::string config_digest;
  std::string endpoint;  // base URL + model name
  std::uint64_t seed = 0;
  std::int64_t planned_trials = 0;
  std::map<std::string, std::int64_t> cells_by_kind;  // metadata "kind" -> trials
  std::string tool_version = kToolVersion;
};

RunManifest make_manifest(const ScenarioConfig& cfg, const ExperimentPlan& plan);

nlohmann::ordered_json manifest_to_json(const RunManifest& m);

/// One aggregate row per (kind, tier, temperature) over arity-2 tallies:
/// position marginals with the binomial test and Cohen's h vs 0.5.
struct PairwiseRow {
  std::string kind;
  std::string tier;
  double temperature = 0.0;
  std::vector<std::int64_t> position_counts;  // size 2
  std::int64_t n_valid = 0;
  double h = 0.0;
  double p_value = 1.0;
  std::string bias;  // primacy / recency / none
};

/// Same for arity-3 tallies: chi-square against uniform thirds, Cramér's V.
struct TriplewiseRow {
  std::string kind;
  std::string tier;
  double temperature = 0.0;
  std::vector<std::int64_t> position_counts;  // size 3
  std::int64_t n_valid = 0;
  double chi_square = 0.0;
  double cramers_v = 0.0;
  double p_value = 1.0;
  std::string bias;  // primacy / recency / centrality / none (+ "bimodal" note)
  bool bimodal = false;
};

struct ClassificationRow {
  std::string option_a;
  std::string option_b;
  std::string tier;
  std::string result;  // class name, or "insufficient"
  std::optional<std::string> winner;
  double p0 = 0.0, p1 = 0.0;
  std::int64_t n0 = 0, n1 = 0;
  double p_value1 = 1.0;
};

struct FailureSummary {
  std::int64_t valid = 0;
  std::int64_t failed = 0;
  std::map<std::string, std::int64_t> by_reason;

  double failure_rate() const {
    const auto total = valid + failed;
    return total == 0 ? 0.0 : static_cast<double>(failed) / static_cast<double>(total);
  }
};

struct ReportBundle {
  std::vector<PairwiseRow> pairwise;
  std::vector<TriplewiseRow> triplewise;
  std::vector<ClassificationRow> classification;
  std::optional<NameBiasReport> names;
  std::optional<GenderBiasReport> gender;
  FailureSummary failures;
  ClassifierThresholds thresholds;
};

/// Pure reduction of a trial log; same log and thresholds give an identical
/// bundle. Name and gender sections appear only when the log carries the
/// relevant trial kinds.
ReportBundle build_report(const std::vector<TrialRecord>& log,
                          const std::map<std::string, OptionItem>& options,
                          const ClassifierThresholds& thresholds = {},
                          std::uint64_t bootstrap_seed = 0);

/// Delimited tables (integer percentages, like the summary tables the rows
/// mirror) plus one full-precision structured summary. Byte-deterministic.
void write_report(const ReportBundle& bundle, const RunManifest& manifest,
                  const std::string& out_dir);

nlohmann::ordered_json summary_to_json(const ReportBundle& bundle,
                                       const RunManifest& manifest);

}  // namespace posaudit
