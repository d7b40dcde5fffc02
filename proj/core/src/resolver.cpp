#include "posaudit/resolver.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace posaudit {

std::string to_string(MatchKind k) {
  switch (k) {
    case MatchKind::exact: return "exact";
    case MatchKind::normalized: return "normalized";
    case MatchKind::unique_substring: return "unique-substring";
  }
  return "?";
}

std::string to_string(FailureReason r) {
  switch (r) {
    case FailureReason::no_match: return "no_match";
    case FailureReason::ambiguous: return "ambiguous";
    case FailureReason::refusal: return "refusal";
    case FailureReason::empty: return "empty";
  }
  return "?";
}

std::string normalize_text(const std::string& s) {
  std::string spaced;
  spaced.reserve(s.size());
  for (unsigned char c : s) {
    if (std::isalnum(c))
      spaced += static_cast<char>(std::tolower(c));
    else
      spaced += ' ';
  }
  std::istringstream in(spaced);
  std::string token, out;
  while (in >> token) {
    if (token == "the" || token == "a" || token == "an") continue;
    if (!out.empty()) out += ' ';
    out += token;
  }
  return out;
}

const std::vector<std::string>& default_refusal_phrases() {
  static const std::vector<std::string> phrases = {
      "i can't", "i cannot", "n/a", "i'm sorry", "i am sorry", "unable to",
  };
  return phrases;
}

namespace {

std::string lowered(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool contains_whole(const std::string& haystack_norm, const std::string& needle_norm) {
  const std::string h = " " + haystack_norm + " ";
  const std::string n = " " + needle_norm + " ";
  return h.find(n) != std::string::npos;
}

}  // namespace

Resolution resolve(const std::string& text, const std::vector<LabeledOption>& options,
                   const std::string& trial_key,
                   const std::vector<std::string>& refusal_phrases) {
  const std::string norm_text = normalize_text(text);
  if (norm_text.empty()) return ResolutionFailure{trial_key, FailureReason::empty};

  // Stage 1: exact match against the raw label (ignoring surrounding whitespace).
  auto trimmed = text;
  const auto first = trimmed.find_first_not_of(" \t\r\n");
  const auto last = trimmed.find_last_not_of(" \t\r\n");
  trimmed = first == std::string::npos ? "" : trimmed.substr(first, last - first + 1);
  std::vector<const LabeledOption*> hits;
  for (const auto& o : options)
    if (trimmed == o.label) hits.push_back(&o);
  if (hits.size() == 1)
    return ResolvedChoice{trial_key, hits[0]->option_id, MatchKind::exact, ""};
  if (hits.size() > 1) return ResolutionFailure{trial_key, FailureReason::ambiguous};

  // Stage 2: normalized equality.
  hits.clear();
  for (const auto& o : options)
    if (norm_text == normalize_text(o.label)) hits.push_back(&o);
  if (hits.size() == 1)
    return ResolvedChoice{trial_key, hits[0]->option_id, MatchKind::normalized, ""};
  if (hits.size() > 1) return ResolutionFailure{trial_key, FailureReason::ambiguous};

  // Stage 3: unique whole-label containment in the normalized text.
  hits.clear();
  for (const auto& o : options)
    if (contains_whole(norm_text, normalize_text(o.label))) hits.push_back(&o);
  if (hits.size() == 1)
    return ResolvedChoice{trial_key, hits[0]->option_id, MatchKind::unique_substring, text};
  if (hits.size() > 1) return ResolutionFailure{trial_key, FailureReason::ambiguous};

  const std::string low = lowered(text);
  for (const auto& phrase : refusal_phrases)
    if (low.find(phrase) != std::string::npos)
      return ResolutionFailure{trial_key, FailureReason::refusal};
  return ResolutionFailure{trial_key, FailureReason::no_match};
}

}  // namespace posaudit
