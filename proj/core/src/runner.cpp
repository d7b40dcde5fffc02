#include "posaudit/runner.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "posaudit/errors.hpp"
#include "posaudit/hash.hpp"
#include "posaudit/serialization.hpp"

namespace posaudit {

std::string make_trial_key(const std::string& scenario_id, std::size_t cell_index,
                           int repetition) {
  return to_hex(fnv1a64(scenario_id + "|" + std::to_string(cell_index) + "|" +
                        std::to_string(repetition)));
}

std::string render_prompt(const std::map<std::string, std::string>& templates,
                          const ExperimentPlan& plan, const PlanCell& cell) {
  auto it = templates.find(cell.prompt_template_id);
  if (it == templates.end())
    throw ValidationError("unknown prompt template: " + cell.prompt_template_id);
  std::string text = it->second;
  static const char* kSlots[] = {"{first}", "{second}", "{third}", "{fourth}"};
  for (std::size_t i = 0; i < cell.arrangement.option_ids.size(); ++i) {
    const auto& presentation = plan.option(cell.arrangement.option_ids[i]).presentation;
    const std::string slot = kSlots[i];
    for (std::size_t pos = text.find(slot); pos != std::string::npos;
         pos = text.find(slot, pos + presentation.size()))
      text.replace(pos, slot.size(), presentation);
  }
  return text;
}

std::vector<TrialRecord> load_log(const std::string& log_path) {
  std::vector<TrialRecord> records;
  std::ifstream in(log_path);
  if (!in) return records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(trial_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("trial log line " + std::to_string(line_no) +
                            " unparseable: " + e.what());
    }
  }
  return records;
}

RunSummary run_plan(const ExperimentPlan& plan,
                    const std::map<std::string, std::string>& prompt_templates,
                    ProviderClient& client, const std::string& log_path) {
  RunSummary summary;
  summary.planned = plan.total_trials();

  std::set<std::string> done;
  for (const auto& rec : load_log(log_path)) done.insert(rec.trial_key);
  summary.already_logged = static_cast<std::int64_t>(done.size());

  struct Pending {
    std::size_t cell_index;
    int repetition;
    std::string trial_key;
  };
  std::vector<Pending> pending;
  std::vector<Query> queries;
  for (std::size_t ci = 0; ci < plan.cells.size(); ++ci) {
    const auto& cell = plan.cells[ci];
    for (int rep = 0; rep < cell.repetitions; ++rep) {
      auto key = make_trial_key(plan.scenario_id, ci, rep);
      if (done.count(key)) continue;
      Query q;
      q.prompt_text = render_prompt(prompt_templates, plan, cell);
      q.temperature = cell.temperature;
      q.max_tokens = client.config().max_tokens;
      q.trial_key = key;
      for (const auto& id : cell.arrangement.option_ids) {
        q.sim_option_ids.push_back(id);
        q.sim_labels.push_back(plan.option(id).label);
      }
      pending.push_back({ci, rep, key});
      queries.push_back(std::move(q));
    }
  }

  const auto completions = client.batch_dispatch(queries);
  summary.dispatched = static_cast<std::int64_t>(queries.size());

  std::ofstream out(log_path, std::ios::app);
  if (!out) throw ValidationError("cannot open trial log for append: " + log_path);

  for (std::size_t i = 0; i < pending.size(); ++i) {
    const auto& p = pending[i];
    const auto& c = completions[i];
    if (!c.ok) {
      // Transport exhaustion: the trial stays unexecuted, never silently dropped.
      summary.unexecuted_keys.push_back(p.trial_key);
      continue;
    }
    const auto& cell = plan.cells[p.cell_index];
    TrialRecord rec;
    rec.trial_key = p.trial_key;
    rec.scenario_id = plan.scenario_id;
    rec.cell_index = p.cell_index;
    rec.repetition = p.repetition;
    rec.option_ids = cell.arrangement.option_ids;
    for (const auto& id : rec.option_ids) rec.labels.push_back(plan.option(id).label);
    rec.temperature = cell.temperature;
    rec.group_id = cell.group_id;
    rec.metadata = cell.metadata;
    rec.raw_text = c.text;
    std::vector<LabeledOption> opts;
    for (std::size_t j = 0; j < rec.option_ids.size(); ++j)
      opts.push_back({rec.option_ids[j], rec.labels[j]});
    rec.resolution = resolve(c.text, opts, p.trial_key);
    rec.from_cache = c.from_cache;
    rec.attempt_count = c.attempt_count;
    rec.latency_ms = c.latency_ms;
    rec.timestamp_ms = 0;
    if (!c.from_cache && !client.config().is_simulator())
      rec.timestamp_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::system_clock::now().time_since_epoch())
                             .count();
    if (rec.valid())
      ++summary.valid;
    else
      ++summary.failed;
    out << trial_record_to_json(rec).dump() << '\n';
  }
  return summary;
}

std::int64_t TallyTable::n_valid() const {
  std::int64_t total = 0;
  for (const auto& p : permutations) total += p.n_valid;
  return total;
}

std::int64_t TallyTable::n_failed() const {
  std::int64_t total = 0;
  for (const auto& p : permutations) total += p.n_failed;
  return total;
}

std::vector<std::int64_t> TallyTable::position_marginals() const {
  const std::size_t k = option_tuple.size();
  std::vector<std::int64_t> marginals(k, 0);
  for (const auto& perm : permutations) {
    for (const auto& [id, count] : perm.chosen_counts) {
      const auto it = std::find(perm.order.begin(), perm.order.end(), id);
      if (it == perm.order.end())
        throw ValidationError("tally contains a choice outside its arrangement");
      marginals[static_cast<std::size_t>(it - perm.order.begin())] += count;
    }
  }
  return marginals;
}

const PermutationTally* TallyTable::find_order(const std::vector<std::string>& order) const {
  for (const auto& p : permutations)
    if (p.order == order) return &p;
  return nullptr;
}

std::vector<TallyTable> tally(const std::vector<TrialRecord>& records) {
  // Group key ordered by (group_id, temperature) for deterministic output.
  std::map<std::pair<std::string, double>, TallyTable> groups;
  for (const auto& rec : records) {
    auto key = std::make_pair(rec.group_id, rec.temperature);
    auto& table = groups[key];
    if (table.option_tuple.empty()) {
      table.group_id = rec.group_id;
      table.temperature = rec.temperature;
      table.option_tuple = rec.option_ids;
      std::sort(table.option_tuple.begin(), table.option_tuple.end());
      table.metadata = rec.metadata;
    }
    PermutationTally* perm = nullptr;
    for (auto& p : table.permutations)
      if (p.order == rec.option_ids) {
        perm = &p;
        break;
      }
    if (!perm) {
      table.permutations.push_back({});
      perm = &table.permutations.back();
      perm->order = rec.option_ids;
    }
    if (const auto* chosen = rec.chosen_id()) {
      if (std::find(rec.option_ids.begin(), rec.option_ids.end(), *chosen) ==
          rec.option_ids.end())
        throw ValidationError("record " + rec.trial_key +
                              " resolved to an option outside its arrangement");
      ++perm->chosen_counts[*chosen];
      perm->chosen_sequence.push_back(*chosen);
      ++perm->n_valid;
    } else {
      ++perm->n_failed;
    }
  }
  std::vector<TallyTable> out;
  out.reserve(groups.size());
  for (auto& [key, table] : groups) {
    std::sort(table.permutations.begin(), table.permutations.end(),
              [](const PermutationTally& a, const PermutationTally& b) {
                return a.order < b.order;
              });
    out.push_back(std::move(table));
  }
  return out;
}

SelectionEstimate estimate_selection(const std::vector<TallyTable>& tallies,
                                     const std::string& option_a,
                                     const std::string& option_b, double temperature) {
  std::vector<std::string> tuple{option_a, option_b};
  std::sort(tuple.begin(), tuple.end());

  // The same unordered pair may be spread over several tables (one per
  // group); pool the two presentation orders across all of them.
  std::vector<const PermutationTally*> ab, ba;
  for (const auto& table : tallies) {
    if (table.temperature != temperature) continue;
    if (table.option_tuple != tuple) continue;
    if (const auto* p = table.find_order({option_a, option_b})) ab.push_back(p);
    if (const auto* p = table.find_order({option_b, option_a})) ba.push_back(p);
  }
  if (ab.empty() || ba.empty())
    throw InsufficientDataError("both presentation orders are required for {" + option_a +
                                ", " + option_b + "} at T=" + std::to_string(temperature));

  auto pool = [&](const std::vector<const PermutationTally*>& perms) {
    std::vector<std::string> seq;
    for (const auto* p : perms)
      seq.insert(seq.end(), p->chosen_sequence.begin(), p->chosen_sequence.end());
    return seq;
  };
  const auto seq_ab = pool(ab);
  const auto seq_ba = pool(ba);
  const std::int64_t m = std::min<std::int64_t>(seq_ab.size(), seq_ba.size());
  if (m == 0)
    throw InsufficientDataError("zero valid trials for {" + option_a + ", " + option_b +
                                "} at T=" + std::to_string(temperature));

  std::int64_t k = 0;
  for (std::int64_t i = 0; i < m; ++i) {
    if (seq_ab[static_cast<std::size_t>(i)] == option_a) ++k;
    if (seq_ba[static_cast<std::size_t>(i)] == option_a) ++k;
  }
  SelectionEstimate est;
  est.option_a = option_a;
  est.option_b = option_b;
  est.temperature = temperature;
  est.k = k;
  est.n = 2 * m;
  est.p_hat = static_cast<double>(k) / static_cast<double>(est.n);
  est.trimmed = static_cast<std::int64_t>(seq_ab.size()) - m +
                static_cast<std::int64_t>(seq_ba.size()) - m;
  return est;
}

}  // namespace posaudit
