#include "posaudit/choice_model.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <set>
#include <sstream>

#include "posaudit/errors.hpp"
#include "posaudit/hash.hpp"
#include "posaudit/plan_builders.hpp"

namespace posaudit {

std::string to_string(Gender g) { return g == Gender::female ? "female" : "male"; }

std::int64_t ExperimentPlan::total_trials() const {
  std::int64_t total = 0;
  for (const auto& c : cells) total += c.repetitions;
  return total;
}

const OptionItem& ExperimentPlan::option(const std::string& id) const {
  auto it = options.find(id);
  if (it == options.end()) throw LookupError("unknown option id: " + id);
  return it->second;
}

std::vector<Arrangement> enumerate_arrangements(const std::vector<std::string>& option_ids) {
  const std::size_t k = option_ids.size();
  if (k < 2 || k > 4)
    throw UnsupportedArityError("arrangement arity must be 2, 3, or 4; got " +
                                std::to_string(k));
  std::set<std::string> distinct(option_ids.begin(), option_ids.end());
  if (distinct.size() != k) throw ValidationError("duplicate option ids in arrangement");

  // Permute position indices so the input order is the lexicographically
  // first arrangement regardless of id spelling.
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  std::vector<Arrangement> out;
  do {
    Arrangement a;
    a.option_ids.reserve(k);
    for (auto i : idx) a.option_ids.push_back(option_ids[i]);
    out.push_back(std::move(a));
  } while (std::next_permutation(idx.begin(), idx.end()));
  return out;
}

std::string make_group_id(const std::vector<std::string>& option_ids) {
  std::vector<std::string> sorted = option_ids;
  std::sort(sorted.begin(), sorted.end());
  std::string joined;
  for (const auto& id : sorted) {
    if (!joined.empty()) joined += '|';
    joined += id;
  }
  return to_hex(fnv1a64(joined));
}

namespace {

// Deterministic Fisher-Yates over a fresh index vector.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

const char* kStates[] = {"AL", "AZ", "CA", "CO", "FL", "GA", "IL", "IN", "MA", "MD",
                         "MI", "MN", "MO", "NC", "NJ", "NY", "OH", "OR", "PA", "TX",
                         "VA", "WA", "WI", "TN", "SC"};

std::string lower_compact(const std::string& s) {
  std::string out;
  for (char c : s)
    if (c != ' ') out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::vector<PersonaProfile> build_personas(const std::vector<std::string>& first_names,
                                           const std::vector<std::string>& last_names,
                                           Gender gender, std::uint64_t seed) {
  if (first_names.size() != last_names.size())
    throw ValidationError("build_personas: first/last name lists must have equal length");
  const auto order =
      shuffled_indices(first_names.size(), derive_seed(seed, "personas:" + to_string(gender)));
  std::vector<PersonaProfile> out;
  out.reserve(first_names.size());
  for (std::size_t i = 0; i < first_names.size(); ++i) {
    PersonaProfile p;
    p.first_name = first_names[order[i]];
    p.last_name = last_names[i];
    p.gender = gender;
    const std::uint64_t h = derive_seed(seed, p.first_name + " " + p.last_name);
    p.state = kStates[h % (sizeof(kStates) / sizeof(kStates[0]))];
    p.contact["email"] = lower_compact(p.first_name) + "." + lower_compact(p.last_name) +
                         "@example.com";
    std::ostringstream phone;
    phone << "(" << 200 + h % 700 << ") " << 200 + (h / 701) % 700 << "-"
          << 1000 + (h / 491) % 9000;
    p.contact["phone"] = phone.str();
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PersonaBinding> assign_personas(std::size_t n_core, std::size_t n_personas,
                                            std::uint64_t seed) {
  if (n_core == 0 || n_personas == 0)
    throw ValidationError("assign_personas: empty inputs");
  if (n_personas % n_core != 0)
    throw ValidationError("assign_personas: persona pool size must be divisible by the "
                          "number of core resumes");
  const auto order = shuffled_indices(n_personas, seed);
  std::vector<PersonaBinding> out;
  out.reserve(n_personas);
  for (std::size_t i = 0; i < n_personas; ++i) {
    PersonaBinding b;
    b.persona_index = order[i];
    b.core_index = i % n_core;
    b.group = i / n_core;
    out.push_back(b);
  }
  return out;
}

}  // namespace posaudit
