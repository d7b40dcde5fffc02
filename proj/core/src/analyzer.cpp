#include "posaudit/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "posaudit/errors.hpp"

namespace posaudit {

void ClassifierThresholds::validate() const {
  if (!(eps0 > 0.0 && eps0 < 0.25)) throw ValidationError("eps0 must be in (0, 0.25)");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0, 1)");
  if (min_n < 1) throw ValidationError("min_n must be >= 1");
}

std::string to_string(PreferenceVariant v) {
  switch (v) {
    case PreferenceVariant::robust: return "robust";
    case PreferenceVariant::fragile: return "fragile";
    case PreferenceVariant::indifferent: return "indifferent";
    case PreferenceVariant::inconsistent: return "inconsistent";
  }
  return "?";
}

std::string to_string(PositionBiasKind k) {
  switch (k) {
    case PositionBiasKind::primacy: return "primacy";
    case PositionBiasKind::recency: return "recency";
    case PositionBiasKind::centrality: return "centrality";
    case PositionBiasKind::none: return "none";
  }
  return "?";
}

std::string to_string(QualitySignal s) {
  switch (s) {
    case QualitySignal::suggests_high_quality: return "suggests_high_quality";
    case QualitySignal::suggests_low_quality: return "suggests_low_quality";
    case QualitySignal::uninformative: return "uninformative";
  }
  return "?";
}

PreferenceClass classify_pair(const SelectionEstimate& est0, const SelectionEstimate& est1,
                              const ClassifierThresholds& th) {
  th.validate();
  if (est0.option_a != est1.option_a || est0.option_b != est1.option_b)
    throw ValidationError("classify_pair: estimates refer to different option pairs");
  if (est0.n < th.min_n || est1.n < th.min_n)
    throw InsufficientDataError(
        "classify_pair: need at least " + std::to_string(th.min_n) +
        " valid trials per estimate (have " + std::to_string(est0.n) + " at T=0, " +
        std::to_string(est1.n) + " at T=1)");

  const double p0 = est0.p_hat;
  const double p1 = est1.p_hat;
  const auto test1 = stats::binom_two_sided(est1.k, est1.n, 0.5);
  const bool significant = test1.p_value < th.alpha;

  PreferenceClass out;
  out.p0 = p0;
  out.p1 = p1;
  out.n0 = est0.n;
  out.n1 = est1.n;
  out.p_value1 = test1.p_value;

  // Slack of a few ulps so boundary proportions (e.g. p0 = 0.55 with
  // eps0 = 0.05) land on the same side regardless of rounding; keeps the
  // classification symmetric under relabeling a <-> b.
  constexpr double kTieTol = 1e-12;
  if (p0 >= 1.0 - th.eps0 - kTieTol) {
    if (significant && p1 > 0.5) {
      out.variant = PreferenceVariant::robust;
      out.winner = est0.option_a;
    } else {
      out.variant = PreferenceVariant::inconsistent;
    }
  } else if (p0 <= th.eps0 + kTieTol) {
    if (significant && p1 < 0.5) {
      out.variant = PreferenceVariant::robust;
      out.winner = est0.option_b;
    } else {
      out.variant = PreferenceVariant::inconsistent;
    }
  } else if (std::fabs(p0 - 0.5) <= th.eps0 + kTieTol) {
    if (significant) {
      out.variant = PreferenceVariant::fragile;
      out.winner = p1 > 0.5 ? est0.option_a : est0.option_b;
    } else {
      out.variant = PreferenceVariant::indifferent;
    }
  } else {
    out.variant = PreferenceVariant::inconsistent;
  }
  return out;
}

PositionBiasFinding detect_position_bias(const TallyTable& table, double alpha) {
  const std::size_t k = table.option_tuple.size();
  if (k < 2 || k > 4)
    throw ValidationError("detect_position_bias: unsupported arity " + std::to_string(k));

  // Balanced design: every permutation of the tuple present with equal
  // planned trials.
  std::size_t factorial = 1;
  for (std::size_t i = 2; i <= k; ++i) factorial *= i;
  if (table.permutations.size() != factorial)
    throw ValidationError("detect_position_bias: group is missing permutations (" +
                          std::to_string(table.permutations.size()) + " of " +
                          std::to_string(factorial) + ")");
  std::set<std::int64_t> planned;
  for (const auto& p : table.permutations) planned.insert(p.n_valid + p.n_failed);
  if (planned.size() != 1)
    throw ValidationError("detect_position_bias: unbalanced permutation counts");

  const auto marginals = table.position_marginals();
  const std::int64_t n = table.n_valid();
  PositionBiasFinding out;
  out.arity = k;
  out.n_valid = n;
  out.position_marginals.resize(k, 0.0);
  if (n == 0) {
    out.kind = PositionBiasKind::none;
    return out;
  }
  for (std::size_t i = 0; i < k; ++i)
    out.position_marginals[i] = static_cast<double>(marginals[i]) / static_cast<double>(n);

  bool significant = false;
  if (k == 2) {
    const auto test = stats::binom_two_sided(marginals[0], n, 0.5);
    out.binomial = test;
    out.effect = stats::cohens_h(out.position_marginals[0], 0.5);
    significant = test.p_value < alpha;
  } else {
    const auto test = stats::chi_square_gof_uniform(marginals);
    out.chi_square = test;
    out.effect = stats::cramers_v(test);
    significant = test.p_value < alpha;
  }
  if (!significant) return out;

  const auto argmax = static_cast<std::size_t>(
      std::max_element(marginals.begin(), marginals.end()) - marginals.begin());
  if (k == 3) {
    // Simultaneous primacy+recency: the middle starved while both ends carry
    // comparable mass. Reported as kind none with the bimodal flag set.
    const double p_first = out.position_marginals[0];
    const double p_mid = out.position_marginals[1];
    const double p_last = out.position_marginals[2];
    if (p_mid < p_first && p_mid < p_last && std::fabs(p_first - p_last) <= 0.1) {
      out.bimodal = true;
      out.kind = PositionBiasKind::none;
      return out;
    }
  }
  if (argmax == 0)
    out.kind = PositionBiasKind::primacy;
  else if (argmax == k - 1)
    out.kind = PositionBiasKind::recency;
  else
    out.kind = PositionBiasKind::centrality;
  return out;
}

TierValidationReport validate_tiers(const std::vector<TallyTable>& tallies,
                                    const std::vector<QualityTier>& ordered_tiers,
                                    const std::map<std::string, OptionItem>& options,
                                    double p_threshold) {
  auto tiers = ordered_tiers;
  std::sort(tiers.begin(), tiers.end(),
            [](const QualityTier& a, const QualityTier& b) { return a.rank < b.rank; });
  if (tiers.size() < 2) throw ValidationError("validate_tiers: need at least two tiers");

  TierValidationReport report;
  report.p_threshold = p_threshold;
  report.all_pass = true;
  for (std::size_t i = 0; i + 1 < tiers.size(); ++i) {
    const auto& high = tiers[i];
    const auto& low = tiers[i + 1];
    std::int64_t higher_chosen = 0, n = 0;
    for (const auto& table : tallies) {
      auto hi_it = table.metadata.find("tier_high");
      auto lo_it = table.metadata.find("tier_low");
      if (hi_it == table.metadata.end() || lo_it == table.metadata.end()) continue;
      if (hi_it->second != high.name || lo_it->second != low.name) continue;
      for (const auto& perm : table.permutations) {
        n += perm.n_valid;
        for (const auto& [id, count] : perm.chosen_counts) {
          auto opt = options.find(id);
          if (opt == options.end())
            throw LookupError("validate_tiers: option not in plan: " + id);
          if (opt->second.tier.name == high.name) higher_chosen += count;
        }
      }
    }
    if (n == 0)
      throw ValidationError("validate_tiers: no data for adjacent pair " + high.name +
                            " vs " + low.name);
    TierPairResult pair;
    pair.tier_high = high.name;
    pair.tier_low = low.name;
    pair.higher_chosen = higher_chosen;
    pair.n = n;
    pair.p_value = stats::binom_one_sided_greater(higher_chosen, n, 0.5).p_value;
    pair.pass = pair.p_value <= p_threshold;
    if (!pair.pass) report.all_pass = false;
    report.pairs.push_back(pair);
  }
  return report;
}

QualityDiagnostic quality_signal(const PositionBiasFinding& finding) {
  QualityDiagnostic d;
  d.caveat = "what counts as high or low quality is model-specific; calibrate per model";
  switch (finding.kind) {
    case PositionBiasKind::primacy:
      d.signal = QualitySignal::suggests_high_quality;
      break;
    case PositionBiasKind::recency:
    case PositionBiasKind::centrality:
      d.signal = QualitySignal::suggests_low_quality;
      break;
    case PositionBiasKind::none:
      d.signal = QualitySignal::uninformative;
      break;
  }
  return d;
}

namespace {

const OptionItem& option_of(const std::map<std::string, OptionItem>& options,
                            const std::string& id) {
  auto it = options.find(id);
  if (it == options.end()) throw LookupError("option not in plan: " + id);
  return it->second;
}

}  // namespace

NameBiasReport analyze_names(const std::vector<TrialRecord>& log,
                             const std::map<std::string, OptionItem>& options,
                             int extremes) {
  if (log.empty()) throw InsufficientDataError("analyze_names: empty log");

  std::map<std::string, std::int64_t> exposure;  // name -> trials it appeared in
  std::map<std::string, std::int64_t> counts;
  std::map<std::string, Gender> gender_of;
  NameBiasReport report;
  for (const auto& rec : log) {
    for (const auto& id : rec.option_ids) {
      const auto& opt = option_of(options, id);
      auto persona = opt.metadata.find("persona");
      auto gender = opt.metadata.find("gender");
      if (persona == opt.metadata.end() || gender == opt.metadata.end())
        throw ValidationError("analyze_names: option without persona metadata: " + id);
      ++exposure[persona->second];
      counts.try_emplace(persona->second, 0);
      gender_of[persona->second] =
          gender->second == "female" ? Gender::female : Gender::male;
    }
    if (const auto* chosen = rec.chosen_id()) {
      ++counts[option_of(options, *chosen).metadata.at("persona")];
      ++report.total_valid;
    }
  }
  std::set<std::int64_t> exposures;
  for (const auto& [name, e] : exposure) exposures.insert(e);
  if (exposures.size() != 1)
    throw ValidationError("analyze_names: unequal name exposure; corrupted log?");

  std::vector<std::int64_t> female_counts, male_counts, all_counts;
  for (const auto& [name, c] : counts) {
    all_counts.push_back(c);
    (gender_of[name] == Gender::female ? female_counts : male_counts).push_back(c);
  }
  report.counts = counts;
  if (female_counts.size() >= 2) report.female = stats::chi_square_gof_uniform(female_counts);
  if (male_counts.size() >= 2) report.male = stats::chi_square_gof_uniform(male_counts);
  report.pooled = stats::chi_square_gof_uniform(all_counts);

  std::vector<std::pair<std::string, std::int64_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const auto top = std::min<std::size_t>(static_cast<std::size_t>(extremes), ranked.size());
  report.most_selected.assign(ranked.begin(), ranked.begin() + static_cast<long>(top));
  report.least_selected.assign(ranked.end() - static_cast<long>(top), ranked.end());
  return report;
}

GenderBiasReport analyze_gender(const std::vector<TrialRecord>& same_gender_log,
                                const std::vector<TrialRecord>& cross_gender_log,
                                const std::map<std::string, OptionItem>& options,
                                int resamples, std::uint64_t seed) {
  if (same_gender_log.empty() || cross_gender_log.empty())
    throw InsufficientDataError("analyze_gender: both logs are required");

  // Dominant position per tier from the same-gender data.
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> first_second;  // tier -> counts
  for (const auto& rec : same_gender_log) {
    const auto* chosen = rec.chosen_id();
    if (!chosen) continue;
    auto tier = rec.metadata.find("tier");
    if (tier == rec.metadata.end())
      throw ValidationError("analyze_gender: record without tier metadata");
    auto& counts = first_second[tier->second];
    if (*chosen == rec.option_ids.front())
      ++counts.first;
    else
      ++counts.second;
  }

  struct CrossTier {
    std::int64_t dominant_chosen = 0, n = 0;
    std::int64_t female_first_n = 0, female_first_chosen = 0;
    std::int64_t male_first_n = 0, male_first_chosen = 0;
  };
  std::map<std::string, CrossTier> cross;
  std::vector<bool> order_ind, gender_ind;
  std::int64_t female_chosen = 0, n_cross = 0;

  for (const auto& rec : cross_gender_log) {
    const auto* chosen = rec.chosen_id();
    if (!chosen) continue;
    const auto tier_it = rec.metadata.find("tier");
    if (tier_it == rec.metadata.end())
      throw ValidationError("analyze_gender: record without tier metadata");
    const auto dom_it = first_second.find(tier_it->second);
    if (dom_it == first_second.end())
      throw ValidationError("analyze_gender: cross-gender tier '" + tier_it->second +
                            "' missing from same-gender data");
    const int dominant = dom_it->second.first >= dom_it->second.second ? 1 : 2;

    auto& ct = cross[tier_it->second];
    const bool first_chosen = *chosen == rec.option_ids.front();
    const bool dominant_chosen = (dominant == 1) == first_chosen;
    const auto& first_opt = option_of(options, rec.option_ids.front());
    const bool female_first = first_opt.metadata.at("gender") == "female";
    const bool chose_female = option_of(options, *chosen).metadata.at("gender") == "female";

    ++ct.n;
    if (dominant_chosen) ++ct.dominant_chosen;
    if (female_first) {
      ++ct.female_first_n;
      if (first_chosen) ++ct.female_first_chosen;
    } else {
      ++ct.male_first_n;
      if (first_chosen) ++ct.male_first_chosen;
    }
    ++n_cross;
    if (chose_female) ++female_chosen;
    order_ind.push_back(dominant_chosen);
    gender_ind.push_back(chose_female);
  }
  if (n_cross == 0) throw InsufficientDataError("analyze_gender: no valid cross trials");

  GenderBiasReport report;
  std::int64_t dominant_total = 0;
  for (const auto& [tier, ct] : cross) {
    GenderTierRow row;
    row.tier = tier;
    const auto& fs = first_second.at(tier);
    row.dominant_position = fs.first >= fs.second ? 1 : 2;
    row.n_cross = ct.n;
    row.dominant_rate_cross =
        static_cast<double>(ct.dominant_chosen) / static_cast<double>(ct.n);
    row.female_first_chosen_rate =
        ct.female_first_n ? static_cast<double>(ct.female_first_chosen) /
                                static_cast<double>(ct.female_first_n)
                          : 0.0;
    row.male_first_chosen_rate =
        ct.male_first_n ? static_cast<double>(ct.male_first_chosen) /
                              static_cast<double>(ct.male_first_n)
                        : 0.0;
    stats::ContingencyTable table{ct.female_first_chosen,
                                  ct.female_first_n - ct.female_first_chosen,
                                  ct.male_first_chosen,
                                  ct.male_first_n - ct.male_first_chosen};
    row.fisher_p = stats::fisher_exact_two_sided(table);
    row.diff_effect =
        stats::cohens_h(row.female_first_chosen_rate, row.male_first_chosen_rate);
    dominant_total += ct.dominant_chosen;
    report.tiers.push_back(std::move(row));
  }
  report.n_cross = n_cross;
  report.dominant_rate_cross =
      static_cast<double>(dominant_total) / static_cast<double>(n_cross);
  report.female_rate = static_cast<double>(female_chosen) / static_cast<double>(n_cross);
  report.h_order = stats::cohens_h(report.dominant_rate_cross, 0.5).value;
  report.h_gender = stats::cohens_h(report.female_rate, 0.5).value;
  report.delta_h = stats::bootstrap_delta_h(order_ind, gender_ind, resamples, seed);
  return report;
}

}  // namespace posaudit
