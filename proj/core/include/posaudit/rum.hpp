#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "posaudit/choice_model.hpp"

namespace posaudit {

/// Optional reference-point mode: the first-position boost becomes
/// gamma * (mean utility of the presented options - r).
struct ReferenceMode {
  double gamma = 0.0;
  double r = 0.0;
};

enum class TieBreak { first_position };

/// Random-utility account of position effects: the chosen option maximizes
/// utility + position boost + temperature-scaled noise.
struct RandomUtilityConfig {
  std::map<std::string, double> utilities;
  std::vector<double> position_boosts;  // delta_1..delta_k
  double noise_width_coeff = 0.4;       // w(T) = noise_width_coeff * T
  std::optional<ReferenceMode> reference_mode;
  TieBreak tie_break = TieBreak::first_position;

  /// Exact id lookup, then hierarchical fallback by trimming trailing
  /// "|segment" pieces ("x|y|z" falls back to "x|y", then "x").
  double utility(const std::string& option_id) const;
  double noise_width(double temperature) const {
    return noise_width_coeff * temperature;
  }
  void validate(std::size_t max_arity) const;
};

struct SimOutcome {
  std::string chosen_id;
  std::vector<double> perceived_utilities;  // per position, after boost + noise
  std::uint64_t seed_used = 0;
};

/// Probability that the first-listed option is chosen in a pairwise
/// presentation, with uniform noise on the first position's utility:
/// clamp((u(x) + d1 - u(y) + w) / (2w), 0, 1); at w = 0, the first
/// position wins ties.
double pair_prob_analytic(const RandomUtilityConfig& cfg, const std::string& first_id,
                          const std::string& second_id, double temperature);

/// One simulated choice. Pairwise arrangements put noise on the first
/// position only (the same model pair_prob_analytic integrates); arity >= 3
/// draws i.i.d. noise per position. Deterministic given (cfg, seed).
SimOutcome simulate_choice(const RandomUtilityConfig& cfg, const Arrangement& arrangement,
                           double temperature, std::uint64_t seed);

/// Monte Carlo per-option selection frequencies over n_samples draws.
std::map<std::string, double> nwise_prob_mc(const RandomUtilityConfig& cfg,
                                            const Arrangement& arrangement,
                                            double temperature, std::int64_t n_samples,
                                            std::uint64_t seed);

}  // namespace posaudit
