#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "posaudit/analyzer.hpp"
#include "posaudit/errors.hpp"

using namespace posaudit;

namespace {

SelectionEstimate estimate(const std::string& a, const std::string& b, double temp,
                           std::int64_t k, std::int64_t n) {
  SelectionEstimate est;
  est.option_a = a;
  est.option_b = b;
  est.temperature = temp;
  est.k = k;
  est.n = n;
  est.p_hat = static_cast<double>(k) / static_cast<double>(n);
  return est;
}

PreferenceClass classify(double p0, double p1, std::int64_t n = 200) {
  const auto k0 = static_cast<std::int64_t>(std::llround(p0 * n));
  const auto k1 = static_cast<std::int64_t>(std::llround(p1 * n));
  return classify_pair(estimate("a", "b", 0.0, k0, n), estimate("a", "b", 1.0, k1, n));
}

TallyTable pair_table(std::int64_t a_first_a, std::int64_t a_first_b,
                      std::int64_t b_first_a, std::int64_t b_first_b,
                      double temp = 1.0) {
  TallyTable t;
  t.group_id = "g";
  t.temperature = temp;
  t.option_tuple = {"a", "b"};
  PermutationTally ab;
  ab.order = {"a", "b"};
  ab.chosen_counts = {{"a", a_first_a}, {"b", a_first_b}};
  ab.n_valid = a_first_a + a_first_b;
  PermutationTally ba;
  ba.order = {"b", "a"};
  ba.chosen_counts = {{"a", b_first_a}, {"b", b_first_b}};
  ba.n_valid = b_first_a + b_first_b;
  t.permutations = {ab, ba};
  return t;
}

// Triple table with identical per-position counts in each of the 6 orders.
TallyTable triple_table(std::int64_t first, std::int64_t mid, std::int64_t last) {
  TallyTable t;
  t.group_id = "g3";
  t.temperature = 1.0;
  t.option_tuple = {"a", "b", "c"};
  const std::vector<std::vector<std::string>> orders = {
      {"a", "b", "c"}, {"a", "c", "b"}, {"b", "a", "c"},
      {"b", "c", "a"}, {"c", "a", "b"}, {"c", "b", "a"}};
  for (const auto& order : orders) {
    PermutationTally p;
    p.order = order;
    p.chosen_counts[order[0]] += first;
    p.chosen_counts[order[1]] += mid;
    p.chosen_counts[order[2]] += last;
    p.n_valid = first + mid + last;
    t.permutations.push_back(std::move(p));
  }
  return t;
}

}  // namespace

TEST_CASE("classifier: canonical examples") {
  // Robust: near-certain at T=0, significantly the same way at T=1.
  const auto robust = classify(1.0, 0.8);
  CHECK(robust.variant == PreferenceVariant::robust);
  CHECK(*robust.winner == "a");

  const auto robust_b = classify(0.0, 0.2);
  CHECK(robust_b.variant == PreferenceVariant::robust);
  CHECK(*robust_b.winner == "b");

  // Fragile: order-following at T=0, genuine lean at T=1.
  const auto fragile = classify(0.5, 0.65);
  CHECK(fragile.variant == PreferenceVariant::fragile);
  CHECK(*fragile.winner == "a");

  // Indifferent: order-following at T=0, nothing at T=1.
  CHECK(classify(0.5, 0.52).variant == PreferenceVariant::indifferent);

  // Inconsistent: e.g. certainty at T=0 that dissolves (or flips) at T=1.
  CHECK(classify(1.0, 0.5).variant == PreferenceVariant::inconsistent);
  CHECK(classify(1.0, 0.2).variant == PreferenceVariant::inconsistent);
  CHECK(classify(0.75, 0.75).variant == PreferenceVariant::inconsistent);
}

TEST_CASE("classifier: insufficient data and mismatched pairs") {
  CHECK_THROWS_AS(classify_pair(estimate("a", "b", 0.0, 10, 20),
                                estimate("a", "b", 1.0, 10, 20)),
                  InsufficientDataError);
  CHECK_THROWS_AS(classify_pair(estimate("a", "b", 0.0, 100, 200),
                                estimate("a", "c", 1.0, 100, 200)),
                  ValidationError);
}

TEST_CASE("classifier grid: rule exclusivity against a reference implementation") {
  const ClassifierThresholds th;
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 20; ++j) {
      const double p0 = i * 0.05, p1 = j * 0.05;
      const std::int64_t n = 200;
      const auto k1 = static_cast<std::int64_t>(std::llround(p1 * n));
      const bool sig = stats::binom_two_sided(k1, n).p_value < th.alpha;

      PreferenceVariant expected;
      if (p0 >= 1.0 - th.eps0 - 1e-12)
        expected = (sig && p1 > 0.5) ? PreferenceVariant::robust
                                     : PreferenceVariant::inconsistent;
      else if (p0 <= th.eps0 + 1e-12)
        expected = (sig && p1 < 0.5) ? PreferenceVariant::robust
                                     : PreferenceVariant::inconsistent;
      else if (std::fabs(p0 - 0.5) <= th.eps0 + 1e-12)
        expected = sig ? PreferenceVariant::fragile : PreferenceVariant::indifferent;
      else
        expected = PreferenceVariant::inconsistent;

      const auto got = classify(p0, p1);
      CHECK_MESSAGE(got.variant == expected,
                    "p0=" << p0 << " p1=" << p1 << " got " << to_string(got.variant));
    }
  }
}

TEST_CASE("classifier grid: relabeling symmetry") {
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 20; ++j) {
      const std::int64_t n = 200;
      const auto k0 = static_cast<std::int64_t>(std::llround(i * 0.05 * n));
      const auto k1 = static_cast<std::int64_t>(std::llround(j * 0.05 * n));
      const auto fwd =
          classify_pair(estimate("a", "b", 0.0, k0, n), estimate("a", "b", 1.0, k1, n));
      const auto rev = classify_pair(estimate("b", "a", 0.0, n - k0, n),
                                     estimate("b", "a", 1.0, n - k1, n));
      CHECK(fwd.variant == rev.variant);
      if (fwd.winner) {
        REQUIRE(rev.winner);
        CHECK(*fwd.winner == *rev.winner);  // same underlying option wins
      }
    }
  }
}

TEST_CASE("position bias detection, pairwise") {
  // 98% first-position choices.
  auto finding = detect_position_bias(pair_table(50, 0, 2, 48));
  CHECK(finding.kind == PositionBiasKind::primacy);
  CHECK(finding.position_marginals[0] == doctest::Approx(0.98));
  CHECK(finding.effect.value == doctest::Approx(1.287).epsilon(0.003));
  REQUIRE(finding.binomial);
  CHECK(finding.binomial->p_value < 1e-20);

  CHECK(detect_position_bias(pair_table(2, 48, 50, 0)).kind == PositionBiasKind::recency);
  CHECK(detect_position_bias(pair_table(26, 24, 25, 25)).kind == PositionBiasKind::none);
}

TEST_CASE("position bias detection, triplewise") {
  CHECK(detect_position_bias(triple_table(30, 5, 5)).kind == PositionBiasKind::primacy);
  CHECK(detect_position_bias(triple_table(5, 5, 30)).kind == PositionBiasKind::recency);
  CHECK(detect_position_bias(triple_table(5, 30, 5)).kind == PositionBiasKind::centrality);

  const auto flat = detect_position_bias(triple_table(13, 13, 14));
  CHECK(flat.kind == PositionBiasKind::none);
  CHECK_FALSE(flat.bimodal);

  // Ends dominate, middle starved: simultaneous primacy and recency.
  const auto bimodal = detect_position_bias(triple_table(20, 0, 20));
  CHECK(bimodal.bimodal);
  CHECK(bimodal.kind == PositionBiasKind::none);
  REQUIRE(bimodal.chi_square);
  CHECK(bimodal.chi_square->p_value < 0.05);
}

TEST_CASE("position bias detection rejects broken designs") {
  auto missing = pair_table(10, 10, 10, 10);
  missing.permutations.pop_back();
  CHECK_THROWS_AS(detect_position_bias(missing), ValidationError);

  auto unbalanced = pair_table(10, 10, 5, 5);
  CHECK_THROWS_AS(detect_position_bias(unbalanced), ValidationError);
}

TEST_CASE("quality signal mapping") {
  PositionBiasFinding f;
  f.kind = PositionBiasKind::primacy;
  CHECK(quality_signal(f).signal == QualitySignal::suggests_high_quality);
  f.kind = PositionBiasKind::recency;
  CHECK(quality_signal(f).signal == QualitySignal::suggests_low_quality);
  f.kind = PositionBiasKind::centrality;
  CHECK(quality_signal(f).signal == QualitySignal::suggests_low_quality);
  f.kind = PositionBiasKind::none;
  CHECK(quality_signal(f).signal == QualitySignal::uninformative);
  CHECK_FALSE(quality_signal(f).caveat.empty());
}

TEST_CASE("tier validation over pooled cross-tier tallies") {
  const std::vector<QualityTier> tiers = {{"High", 0}, {"Low", 1}};
  std::map<std::string, OptionItem> options;
  options["h"] = {"h", "H", "H", {"High", 0}, {}};
  options["l"] = {"l", "L", "L", {"Low", 1}, {}};

  auto make = [&](std::int64_t h_chosen, std::int64_t n) {
    TallyTable t;
    t.option_tuple = {"h", "l"};
    t.metadata = {{"tier_high", "High"}, {"tier_low", "Low"}};
    PermutationTally p;
    p.order = {"h", "l"};
    p.chosen_counts = {{"h", h_chosen}, {"l", n - h_chosen}};
    p.n_valid = n;
    t.permutations.push_back(std::move(p));
    return t;
  };

  const auto pass = validate_tiers({make(75, 100)}, tiers, options);
  CHECK(pass.all_pass);
  REQUIRE(pass.pairs.size() == 1);
  CHECK(pass.pairs[0].p_value < 0.001);
  CHECK(pass.pairs[0].higher_chosen == 75);

  const auto weak = validate_tiers({make(55, 100)}, tiers, options);
  CHECK_FALSE(weak.all_pass);
  CHECK_FALSE(weak.pairs[0].pass);

  // No data for an adjacent pair is an error, not a silent pass.
  const std::vector<QualityTier> three = {{"High", 0}, {"Low", 1}, {"Lower", 2}};
  CHECK_THROWS_AS(validate_tiers({make(75, 100)}, three, options), ValidationError);
}

namespace {

TrialRecord persona_record(const std::string& key, std::vector<std::string> order,
                           const std::string& chosen, const std::string& tier = "T") {
  TrialRecord rec;
  rec.trial_key = key;
  rec.option_ids = std::move(order);
  rec.labels = rec.option_ids;
  rec.temperature = 1.0;
  rec.group_id = make_group_id(rec.option_ids);
  rec.metadata = {{"tier", tier}};
  rec.resolution = ResolvedChoice{key, chosen, MatchKind::exact, ""};
  return rec;
}

std::map<std::string, OptionItem> persona_options() {
  std::map<std::string, OptionItem> options;
  for (const auto& [id, gender] :
       std::vector<std::pair<std::string, std::string>>{{"f0", "female"},
                                                        {"f1", "female"},
                                                        {"f2", "female"},
                                                        {"m0", "male"},
                                                        {"m1", "male"},
                                                        {"m2", "male"}}) {
    OptionItem o;
    o.id = id;
    o.label = "Person " + id;
    o.presentation = o.label;
    o.metadata = {{"persona", "Person " + id}, {"gender", gender}};
    options[id] = std::move(o);
  }
  return options;
}

}  // namespace

TEST_CASE("name bias analysis over a balanced triplewise log") {
  const auto options = persona_options();
  std::vector<TrialRecord> log;
  int key = 0;
  // Each gender triple presented 30 times; f0 and m1 are heavy favorites.
  for (int i = 0; i < 30; ++i) {
    log.push_back(persona_record("k" + std::to_string(key++), {"f0", "f1", "f2"},
                                 i < 24 ? "f0" : "f1"));
    log.push_back(persona_record("k" + std::to_string(key++), {"m0", "m1", "m2"},
                                 i < 24 ? "m1" : "m2"));
  }
  const auto report = analyze_names(log, options, 2);
  CHECK(report.total_valid == 60);
  CHECK(report.counts.at("Person f0") == 24);
  CHECK(report.counts.at("Person m1") == 24);
  CHECK(report.counts.at("Person f2") == 0);
  CHECK(report.female.p_value < 0.001);
  CHECK(report.male.p_value < 0.001);
  CHECK(report.pooled.p_value < 0.001);
  REQUIRE(report.most_selected.size() == 2);
  CHECK(report.most_selected[0].second == 24);
  CHECK(report.least_selected.back().second == 0);

  // Unequal exposure (a dangling extra trial for one triple) is rejected.
  auto skewed = log;
  skewed.push_back(persona_record("extra", {"f0", "f1", "f2"}, "f0"));
  CHECK_THROWS_AS(analyze_names(skewed, options, 2), ValidationError);
}

TEST_CASE("gender bias analysis separates order effects from gender effects") {
  const auto options = persona_options();

  // Same-gender: first position dominates.
  std::vector<TrialRecord> same;
  int key = 0;
  for (int i = 0; i < 100; ++i) {
    same.push_back(persona_record("s" + std::to_string(key++), {"f0", "f1"},
                                  i < 90 ? "f0" : "f1"));
    same.push_back(persona_record("s" + std::to_string(key++), {"m0", "m1"},
                                  i < 90 ? "m0" : "m1"));
  }

  // Cross-gender: the first position keeps winning at the same rate for both
  // orders, so there is an order effect but no gender effect.
  std::vector<TrialRecord> cross;
  for (int i = 0; i < 100; ++i) {
    cross.push_back(persona_record("c" + std::to_string(key++), {"f0", "m0"},
                                   i < 93 ? "f0" : "m0"));
    cross.push_back(persona_record("c" + std::to_string(key++), {"m0", "f0"},
                                   i < 93 ? "m0" : "f0"));
  }

  const auto report = analyze_gender(same, cross, options, 2000, 5);
  REQUIRE(report.tiers.size() == 1);
  CHECK(report.tiers[0].dominant_position == 1);
  CHECK(report.dominant_rate_cross == doctest::Approx(0.93));
  CHECK(report.female_rate == doctest::Approx(0.5));
  CHECK(report.h_order > 1.0);
  CHECK(report.h_gender == doctest::Approx(0.0));
  CHECK(report.delta_h.lo > 0.0);  // order bias dwarfs gender bias
  CHECK(report.tiers[0].fisher_p == doctest::Approx(1.0));

  // Cross-gender tier missing from the same-gender baseline.
  auto bad = cross;
  bad[0].metadata["tier"] = "other";
  CHECK_THROWS_AS(analyze_gender(same, bad, options, 100, 1), ValidationError);
}
