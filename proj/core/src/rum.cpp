#include "posaudit/rum.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "posaudit/errors.hpp"

namespace posaudit {

double RandomUtilityConfig::utility(const std::string& option_id) const {
  auto it = utilities.find(option_id);
  if (it != utilities.end()) return it->second;
  // Hierarchical fallback: trim trailing "|segment" pieces, so one entry can
  // cover every persona binding of the same underlying item.
  std::string key = option_id;
  for (auto pos = key.rfind('|'); pos != std::string::npos; pos = key.rfind('|')) {
    key.resize(pos);
    if (auto hit = utilities.find(key); hit != utilities.end()) return hit->second;
  }
  throw LookupError("no utility for option id: " + option_id);
}

void RandomUtilityConfig::validate(std::size_t max_arity) const {
  if (noise_width_coeff < 0.0)
    throw ValidationError("noise_width_coeff must be >= 0");
  for (const auto& [id, u] : utilities)
    if (!std::isfinite(u)) throw ValidationError("non-finite utility for option: " + id);
  if (max_arity > position_boosts.size())
    throw ValidationError("arrangement arity " + std::to_string(max_arity) +
                          " exceeds position boost vector length " +
                          std::to_string(position_boosts.size()));
}

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_pm(std::mt19937_64& rng, double half_width) {
  return (2.0 * uniform01(rng) - 1.0) * half_width;
}

std::vector<double> base_utilities(const RandomUtilityConfig& cfg,
                                   const Arrangement& arr) {
  const std::size_t k = arr.arity();
  cfg.validate(k);
  std::vector<double> u(k);
  double mean = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    u[i] = cfg.utility(arr.option_ids[i]);
    mean += u[i];
  }
  mean /= static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) u[i] += cfg.position_boosts[i];
  if (cfg.reference_mode) {
    // Replace the fixed first-position boost with gamma * (mean u - r).
    u[0] -= cfg.position_boosts[0];
    u[0] += cfg.reference_mode->gamma * (mean - cfg.reference_mode->r);
  }
  return u;
}

std::size_t argmax_first_tie(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace

double pair_prob_analytic(const RandomUtilityConfig& cfg, const std::string& first_id,
                          const std::string& second_id, double temperature) {
  Arrangement arr{{first_id, second_id}};
  const auto u = base_utilities(cfg, arr);
  const double margin = u[0] - u[1];
  const double w = cfg.noise_width(temperature);
  if (w <= 0.0) return margin >= 0.0 ? 1.0 : 0.0;  // tie -> first position
  return std::clamp((margin + w) / (2.0 * w), 0.0, 1.0);
}

SimOutcome simulate_choice(const RandomUtilityConfig& cfg, const Arrangement& arrangement,
                           double temperature, std::uint64_t seed) {
  auto u = base_utilities(cfg, arrangement);
  const double w = cfg.noise_width(temperature);
  std::mt19937_64 rng(seed);
  if (w > 0.0) {
    if (arrangement.arity() == 2) {
      u[0] += uniform_pm(rng, w);
    } else {
      for (auto& ui : u) ui += uniform_pm(rng, w);
    }
  }
  SimOutcome out;
  out.perceived_utilities = u;
  out.chosen_id = arrangement.option_ids[argmax_first_tie(u)];
  out.seed_used = seed;
  return out;
}

std::map<std::string, double> nwise_prob_mc(const RandomUtilityConfig& cfg,
                                            const Arrangement& arrangement,
                                            double temperature, std::int64_t n_samples,
                                            std::uint64_t seed) {
  if (n_samples < 1) throw ValidationError("nwise_prob_mc: n_samples must be >= 1");
  const auto base = base_utilities(cfg, arrangement);
  const double w = cfg.noise_width(temperature);
  const std::size_t k = arrangement.arity();

  std::vector<std::int64_t> counts(k, 0);
  std::mt19937_64 rng(seed);
  std::vector<double> u(k);
  for (std::int64_t s = 0; s < n_samples; ++s) {
    u = base;
    if (w > 0.0) {
      if (k == 2) {
        u[0] += uniform_pm(rng, w);
      } else {
        for (auto& ui : u) ui += uniform_pm(rng, w);
      }
    }
    ++counts[argmax_first_tie(u)];
  }
  std::map<std::string, double> freq;
  for (std::size_t i = 0; i < k; ++i)
    freq[arrangement.option_ids[i]] =
        static_cast<double>(counts[i]) / static_cast<double>(n_samples);
  return freq;
}

}  // namespace posaudit
