#pragma once

#include <cstdint>
#include <vector>

namespace posaudit::stats {

enum class Sidedness { one_sided_greater, two_sided };

struct BinomialResult {
  std::int64_t k = 0;
  std::int64_t n = 0;
  double p0 = 0.5;
  double p_value = 1.0;
  Sidedness sidedness = Sidedness::two_sided;
};

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  std::int64_t n = 0;
  int categories = 0;
};

enum class EffectKind { cohens_h, cramers_v };

struct EffectSize {
  EffectKind kind = EffectKind::cohens_h;
  double value = 0.0;
};

struct BootstrapInterval {
  double point = 0.0;  // mean of the resampled deltas
  double lo = 0.0;     // 2.5th percentile
  double hi = 0.0;     // 97.5th percentile
  int resamples = 0;
  std::uint64_t seed = 0;
};

struct ContingencyTable {
  // [[a, b], [c, d]]
  std::int64_t a = 0, b = 0, c = 0, d = 0;
};

/// Exact two-sided binomial test, minimum-likelihood convention: the p-value
/// sums the probabilities of all outcomes no more likely than the observed k.
BinomialResult binom_two_sided(std::int64_t k, std::int64_t n, double p0 = 0.5);

/// Exact one-sided upper-tail binomial test: P[X >= k] under the null.
BinomialResult binom_one_sided_greater(std::int64_t k, std::int64_t n, double p0 = 0.5);

/// Goodness-of-fit chi-square against the given expected proportions.
ChiSquareResult chi_square_gof(const std::vector<std::int64_t>& counts,
                               const std::vector<double>& expected_proportions);

/// Uniform-null convenience overload.
ChiSquareResult chi_square_gof_uniform(const std::vector<std::int64_t>& counts);

/// |2 asin(sqrt(p1)) - 2 asin(sqrt(p2))|, magnitude convention.
EffectSize cohens_h(double p1, double p2);

/// sqrt(chi2 / (n * (categories - 1))) for a goodness-of-fit test.
EffectSize cramers_v(const ChiSquareResult& r);

/// Exact two-sided Fisher test on a 2x2 table, minimum-likelihood convention.
double fisher_exact_two_sided(const ContingencyTable& table);

/// Paired bootstrap of delta-h = h(order rate, 0.5) - h(gender rate, 0.5)
/// over matched per-trial indicators. Percentile 95% interval.
BootstrapInterval bootstrap_delta_h(const std::vector<bool>& trials_order,
                                    const std::vector<bool>& trials_gender,
                                    int resamples = 10000,
                                    std::uint64_t seed = 0);

/// Regularized upper incomplete gamma Q(a, x); survival function machinery
/// for the chi-square distribution (p = Q(dof/2, x/2)).
double gamma_q(double a, double x);

/// log C(n, k) via lgamma.
double log_choose(std::int64_t n, std::int64_t k);

}  // namespace posaudit::stats
