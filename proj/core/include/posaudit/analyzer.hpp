#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "posaudit/choice_model.hpp"
#include "posaudit/runner.hpp"
#include "posaudit/stats.hpp"

namespace posaudit {

struct ClassifierThresholds {
  double eps0 = 0.05;       // half-width of the "approximately" band at T=0
  double alpha = 0.05;      // significance level for the T=1 deviation from 0.5
  std::int64_t min_n = 100; // minimum valid trials per estimate

  void validate() const;
};

enum class PreferenceVariant { robust, fragile, indifferent, inconsistent };

std::string to_string(PreferenceVariant v);

struct PreferenceClass {
  PreferenceVariant variant = PreferenceVariant::inconsistent;
  std::optional<std::string> winner;  // set for robust/fragile only
  // Evidence, present for every variant.
  double p0 = 0.0;  // Pr[a] at T=0
  double p1 = 0.0;  // Pr[a] at T=1
  std::int64_t n0 = 0;
  std::int64_t n1 = 0;
  double p_value1 = 1.0;  // two-sided binomial p for the T=1 estimate vs 0.5
};

/// Classifies one option pair from its T=0 and T=1 selection estimates.
/// Rules: near-certain at T=0 with a matching significant T=1 lean is
/// robust; order-following at T=0 with a significant T=1 lean is fragile;
/// order-following with no T=1 signal is indifferent; everything else,
/// including opposite-side significance, is inconsistent.
PreferenceClass classify_pair(const SelectionEstimate& est0, const SelectionEstimate& est1,
                              const ClassifierThresholds& th = {});

enum class PositionBiasKind { primacy, recency, centrality, none };

std::string to_string(PositionBiasKind k);

struct PositionBiasFinding {
  PositionBiasKind kind = PositionBiasKind::none;
  std::size_t arity = 2;
  std::vector<double> position_marginals;  // proportions, by presented position
  std::optional<stats::BinomialResult> binomial;   // arity 2
  std::optional<stats::ChiSquareResult> chi_square;  // arity >= 3
  stats::EffectSize effect;
  bool bimodal = false;  // ends dominate, middle starved (arity 3)
  std::int64_t n_valid = 0;
};

PositionBiasFinding detect_position_bias(const TallyTable& table, double alpha = 0.05);

struct TierPairResult {
  std::string tier_high;
  std::string tier_low;
  std::int64_t higher_chosen = 0;
  std::int64_t n = 0;
  double p_value = 1.0;
  bool pass = false;  // p <= threshold
};

struct TierValidationReport {
  std::vector<TierPairResult> pairs;
  double p_threshold = 0.001;
  bool all_pass = false;
};

/// One-sided binomial check that each tier beats the next lower tier in the
/// pooled cross-tier pairwise tallies (metadata tier_high/tier_low).
TierValidationReport validate_tiers(const std::vector<TallyTable>& tallies,
                                    const std::vector<QualityTier>& ordered_tiers,
                                    const std::map<std::string, OptionItem>& options,
                                    double p_threshold = 0.001);

enum class QualitySignal { suggests_high_quality, suggests_low_quality, uninformative };

std::string to_string(QualitySignal s);

struct QualityDiagnostic {
  QualitySignal signal = QualitySignal::uninformative;
  std::string caveat;  // thresholds are model-specific
};

/// Reads a position-bias finding as a coarse quality signal: primacy tends
/// to accompany high-quality option sets, recency/centrality low-quality.
QualityDiagnostic quality_signal(const PositionBiasFinding& finding);

struct NameBiasReport {
  std::map<std::string, std::int64_t> counts;  // persona full name -> chosen
  stats::ChiSquareResult female;
  stats::ChiSquareResult male;
  stats::ChiSquareResult pooled;
  std::vector<std::pair<std::string, std::int64_t>> most_selected;
  std::vector<std::pair<std::string, std::int64_t>> least_selected;
  std::int64_t total_valid = 0;
};

/// Per-name selection counts with chi-square uniformity tests per gender and
/// pooled. Requires persona metadata on every option and equal name exposure.
NameBiasReport analyze_names(const std::vector<TrialRecord>& log,
                             const std::map<std::string, OptionItem>& options,
                             int extremes = 5);

struct GenderTierRow {
  std::string tier;
  int dominant_position = 1;  // 1-based; from same-gender tallies
  double dominant_rate_cross = 0.0;
  double female_first_chosen_rate = 0.0;  // first chosen when female is first
  double male_first_chosen_rate = 0.0;
  double fisher_p = 1.0;
  stats::EffectSize diff_effect;  // h between the two rates
  std::int64_t n_cross = 0;
};

struct GenderBiasReport {
  std::vector<GenderTierRow> tiers;
  double dominant_rate_cross = 0.0;  // pooled over tiers
  double female_rate = 0.0;          // pooled female-selection rate
  double h_order = 0.0;
  double h_gender = 0.0;
  stats::BootstrapInterval delta_h;
  std::int64_t n_cross = 0;
};

GenderBiasReport analyze_gender(const std::vector<TrialRecord>& same_gender_log,
                                const std::vector<TrialRecord>& cross_gender_log,
                                const std::map<std::string, OptionItem>& options,
                                int resamples = 10000, std::uint64_t seed = 0);

}  // namespace posaudit
