#pragma once

#include <string>
#include <variant>
#include <vector>

namespace posaudit {

enum class MatchKind { exact, normalized, unique_substring };

std::string to_string(MatchKind k);

struct ResolvedChoice {
  std::string trial_key;
  std::string chosen_option_id;
  MatchKind match_kind = MatchKind::exact;
  std::string residual_text;
};

enum class FailureReason { no_match, ambiguous, refusal, empty };

std::string to_string(FailureReason r);

struct ResolutionFailure {
  std::string trial_key;
  FailureReason reason = FailureReason::no_match;
};

using Resolution = std::variant<ResolvedChoice, ResolutionFailure>;

/// Case-fold, strip punctuation, collapse whitespace, drop leading articles.
std::string normalize_text(const std::string& s);

struct LabeledOption {
  std::string option_id;
  std::string label;
};

const std::vector<std::string>& default_refusal_phrases();

/// Maps completion text to exactly one presented option.
/// Stages, in order: exact label match; normalized match; unique whole-label
/// substring containment. The first stage with exactly one hit wins; more
/// than one hit at a stage is ambiguous, zero hits everywhere is no_match.
Resolution resolve(const std::string& text, const std::vector<LabeledOption>& options,
                   const std::string& trial_key,
                   const std::vector<std::string>& refusal_phrases = default_refusal_phrases());

}  // namespace posaudit
