#include "posaudit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "posaudit/errors.hpp"

namespace posaudit::stats {

namespace {

// Relative slack when comparing point probabilities in the
// minimum-likelihood two-sided conventions (guards against float noise
// deciding tail membership).
constexpr double kLikelihoodSlack = 1e-7;

double log_binom_pmf(std::int64_t k, std::int64_t n, double p0) {
  if (p0 == 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (p0 == 1.0) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
  return log_choose(n, k) + static_cast<double>(k) * std::log(p0) +
         static_cast<double>(n - k) * std::log1p(-p0);
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = q * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

}  // namespace

double log_choose(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

double gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw DomainError("gamma_q: require a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) {
    // Lower series for P(a, x), then Q = 1 - P.
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 1000; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    const double p = sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    return std::clamp(1.0 - p, 0.0, 1.0);
  }
  // Continued fraction (modified Lentz) for Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  const double q = h * std::exp(-x + a * std::log(x) - std::lgamma(a));
  return std::clamp(q, 0.0, 1.0);
}

BinomialResult binom_two_sided(std::int64_t k, std::int64_t n, double p0) {
  if (n < 1) throw DomainError("binom_two_sided: n must be >= 1");
  if (k < 0 || k > n) throw DomainError("binom_two_sided: require 0 <= k <= n");
  if (p0 < 0.0 || p0 > 1.0) throw DomainError("binom_two_sided: p0 outside [0,1]");

  const double log_pk = log_binom_pmf(k, n, p0);
  const double cutoff = log_pk + std::log1p(kLikelihoodSlack);
  double p = 0.0;
  for (std::int64_t i = 0; i <= n; ++i) {
    const double lp = log_binom_pmf(i, n, p0);
    if (lp <= cutoff) p += std::exp(lp);
  }
  return {k, n, p0, std::min(p, 1.0), Sidedness::two_sided};
}

BinomialResult binom_one_sided_greater(std::int64_t k, std::int64_t n, double p0) {
  if (n < 1) throw DomainError("binom_one_sided_greater: n must be >= 1");
  if (k < 0 || k > n) throw DomainError("binom_one_sided_greater: require 0 <= k <= n");
  if (p0 < 0.0 || p0 > 1.0) throw DomainError("binom_one_sided_greater: p0 outside [0,1]");

  // Sum the smaller tail for accuracy.
  double p;
  if (k == 0) {
    p = 1.0;
  } else {
    double upper = 0.0;
    for (std::int64_t i = k; i <= n; ++i) upper += std::exp(log_binom_pmf(i, n, p0));
    p = std::min(upper, 1.0);
  }
  return {k, n, p0, p, Sidedness::one_sided_greater};
}

ChiSquareResult chi_square_gof(const std::vector<std::int64_t>& counts,
                               const std::vector<double>& expected_proportions) {
  if (counts.size() < 2) throw DomainError("chi_square_gof: need at least 2 categories");
  if (counts.size() != expected_proportions.size())
    throw DomainError("chi_square_gof: counts/proportions size mismatch");
  const double psum =
      std::accumulate(expected_proportions.begin(), expected_proportions.end(), 0.0);
  if (std::fabs(psum - 1.0) > 1e-9)
    throw DomainError("chi_square_gof: expected proportions must sum to 1");

  std::int64_t n = 0;
  for (auto c : counts) {
    if (c < 0) throw DomainError("chi_square_gof: negative count");
    n += c;
  }
  double chi2 = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = static_cast<double>(n) * expected_proportions[i];
    if (e <= 0.0) throw DomainError("chi_square_gof: zero expected count");
    const double diff = static_cast<double>(counts[i]) - e;
    chi2 += diff * diff / e;
  }
  const int dof = static_cast<int>(counts.size()) - 1;
  const double p = gamma_q(dof / 2.0, chi2 / 2.0);
  return {chi2, dof, p, n, static_cast<int>(counts.size())};
}

ChiSquareResult chi_square_gof_uniform(const std::vector<std::int64_t>& counts) {
  return chi_square_gof(counts,
                        std::vector<double>(counts.size(), 1.0 / static_cast<double>(counts.size())));
}

EffectSize cohens_h(double p1, double p2) {
  if (p1 < 0.0 || p1 > 1.0 || p2 < 0.0 || p2 > 1.0)
    throw DomainError("cohens_h: proportions outside [0,1]");
  const double h = std::fabs(2.0 * std::asin(std::sqrt(p1)) - 2.0 * std::asin(std::sqrt(p2)));
  return {EffectKind::cohens_h, h};
}

EffectSize cramers_v(const ChiSquareResult& r) {
  if (r.n <= 0) throw DomainError("cramers_v: n must be positive");
  if (r.categories < 2) throw DomainError("cramers_v: need at least 2 categories");
  const double v =
      std::sqrt(r.statistic / (static_cast<double>(r.n) * (r.categories - 1)));
  return {EffectKind::cramers_v, std::min(v, 1.0)};
}

double fisher_exact_two_sided(const ContingencyTable& t) {
  if (t.a < 0 || t.b < 0 || t.c < 0 || t.d < 0)
    throw DomainError("fisher_exact_two_sided: negative count");
  const std::int64_t r1 = t.a + t.b;
  const std::int64_t r2 = t.c + t.d;
  const std::int64_t c1 = t.a + t.c;
  const std::int64_t n = r1 + r2;
  if (r1 == 0 || r2 == 0)
    throw DomainError("fisher_exact_two_sided: degenerate (empty) row margin");

  // Hypergeometric log pmf over the support of the a-cell with fixed margins.
  const auto log_pmf = [&](std::int64_t a) {
    return log_choose(r1, a) + log_choose(r2, c1 - a) - log_choose(n, c1);
  };
  const std::int64_t lo = std::max<std::int64_t>(0, c1 - r2);
  const std::int64_t hi = std::min(r1, c1);
  const double cutoff = log_pmf(t.a) + std::log1p(kLikelihoodSlack);
  double p = 0.0;
  for (std::int64_t a = lo; a <= hi; ++a) {
    const double lp = log_pmf(a);
    if (lp <= cutoff) p += std::exp(lp);
  }
  return std::min(p, 1.0);
}

BootstrapInterval bootstrap_delta_h(const std::vector<bool>& trials_order,
                                    const std::vector<bool>& trials_gender,
                                    int resamples, std::uint64_t seed) {
  if (trials_order.empty() || trials_gender.empty())
    throw InsufficientDataError("bootstrap_delta_h: empty indicator set");
  if (trials_order.size() != trials_gender.size())
    throw ValidationError("bootstrap_delta_h: indicator sets must be paired (equal length)");
  if (resamples < 1) throw DomainError("bootstrap_delta_h: resamples must be >= 1");

  const std::size_t n = trials_order.size();
  std::mt19937_64 rng(seed);
  std::vector<double> deltas;
  deltas.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    std::int64_t k_order = 0, k_gender = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = uniform_index(rng, n);
      k_order += trials_order[j] ? 1 : 0;
      k_gender += trials_gender[j] ? 1 : 0;
    }
    const double p_order = static_cast<double>(k_order) / static_cast<double>(n);
    const double p_gender = static_cast<double>(k_gender) / static_cast<double>(n);
    deltas.push_back(cohens_h(p_order, 0.5).value - cohens_h(p_gender, 0.5).value);
  }
  const double mean =
      std::accumulate(deltas.begin(), deltas.end(), 0.0) / static_cast<double>(deltas.size());
  std::sort(deltas.begin(), deltas.end());
  BootstrapInterval out;
  out.point = mean;
  out.lo = quantile_sorted(deltas, 0.025);
  out.hi = quantile_sorted(deltas, 0.975);
  out.resamples = resamples;
  out.seed = seed;
  return out;
}
}  // namespace posaudit::stats
