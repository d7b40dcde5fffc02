#include "posaudit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <tuple>

#include "posaudit/errors.hpp"

namespace posaudit {

using nlohmann::ordered_json;

RunManifest make_manifest(const ScenarioConfig& cfg, const ExperimentPlan& plan) {
  RunManifest m;
  m.scenario_id = plan.scenario_id;
  m.config_digest = cfg.config_digest;
  m.endpoint = cfg.endpoint.base_url + " / " + cfg.endpoint.model_name;
  m.seed = plan.seed;
  m.planned_trials = plan.total_trials();
  for (const auto& cell : plan.cells) {
    auto it = cell.metadata.find("kind");
    const std::string kind = it == cell.metadata.end() ? "unspecified" : it->second;
    m.cells_by_kind[kind] += cell.repetitions;
  }
  return m;
}

ordered_json manifest_to_json(const RunManifest& m) {
  ordered_json doc;
  doc["schema"] = "posaudit.manifest.v1";
  doc["scenario_id"] = m.scenario_id;
  doc["config_digest"] = m.config_digest;
  doc["endpoint"] = m.endpoint;
  doc["seed"] = m.seed;
  doc["planned_trials"] = m.planned_trials;
  ordered_json kinds = ordered_json::object();
  for (const auto& [k, v] : m.cells_by_kind) kinds[k] = v;
  doc["trials_by_kind"] = std::move(kinds);
  doc["tool_version"] = m.tool_version;
  return doc;
}

namespace {

std::string meta_or(const std::map<std::string, std::string>& m, const std::string& key,
                    const std::string& fallback) {
  auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

std::string tier_of_table(const TallyTable& table) {
  if (auto it = table.metadata.find("tier"); it != table.metadata.end()) return it->second;
  auto hi = table.metadata.find("tier_high");
  auto lo = table.metadata.find("tier_low");
  if (hi != table.metadata.end() && lo != table.metadata.end())
    return hi->second + ">" + lo->second;
  return "-";
}

struct AggKey {
  std::string kind;
  std::string tier;
  double temperature;

  bool operator<(const AggKey& o) const {
    return std::tie(kind, tier, temperature) < std::tie(o.kind, o.tier, o.temperature);
  }
};

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

long pct(std::int64_t count, std::int64_t n) {
  return n == 0 ? 0 : std::lround(100.0 * static_cast<double>(count) / static_cast<double>(n));
}

}  // namespace

ReportBundle build_report(const std::vector<TrialRecord>& log,
                          const std::map<std::string, OptionItem>& options,
                          const ClassifierThresholds& thresholds,
                          std::uint64_t bootstrap_seed) {
  thresholds.validate();
  ReportBundle bundle;
  bundle.thresholds = thresholds;

  for (const auto& rec : log) {
    if (rec.valid()) {
      ++bundle.failures.valid;
    } else {
      ++bundle.failures.failed;
      ++bundle.failures.by_reason[to_string(std::get<ResolutionFailure>(rec.resolution).reason)];
    }
  }

  const auto tallies = tally(log);

  // Position marginals pooled per (kind, tier, temperature).
  std::map<AggKey, std::vector<std::int64_t>> pooled2, pooled3;
  for (const auto& table : tallies) {
    const std::size_t arity = table.option_tuple.size();
    if (arity != 2 && arity != 3) continue;
    AggKey key{meta_or(table.metadata, "kind", "unspecified"), tier_of_table(table),
               table.temperature};
    auto& pooled = arity == 2 ? pooled2 : pooled3;
    auto& acc = pooled[key];
    acc.resize(arity, 0);
    const auto marginals = table.position_marginals();
    for (std::size_t i = 0; i < arity; ++i) acc[i] += marginals[i];
  }

  for (const auto& [key, counts] : pooled2) {
    PairwiseRow row;
    row.kind = key.kind;
    row.tier = key.tier;
    row.temperature = key.temperature;
    row.position_counts = counts;
    row.n_valid = counts[0] + counts[1];
    if (row.n_valid > 0) {
      const auto p1 = static_cast<double>(counts[0]) / static_cast<double>(row.n_valid);
      row.p_value = stats::binom_two_sided(counts[0], row.n_valid).p_value;
      row.h = stats::cohens_h(p1, 0.5).value;
      if (row.p_value <= thresholds.alpha)
        row.bias = counts[0] > counts[1] ? "primacy" : "recency";
      else
        row.bias = "none";
    } else {
      row.bias = "insufficient";
    }
    bundle.pairwise.push_back(std::move(row));
  }

  for (const auto& [key, counts] : pooled3) {
    TriplewiseRow row;
    row.kind = key.kind;
    row.tier = key.tier;
    row.temperature = key.temperature;
    row.position_counts = counts;
    row.n_valid = counts[0] + counts[1] + counts[2];
    if (row.n_valid > 0) {
      const auto chi = stats::chi_square_gof_uniform(counts);
      row.chi_square = chi.statistic;
      row.p_value = chi.p_value;
      row.cramers_v = stats::cramers_v(chi).value;
      if (row.p_value > thresholds.alpha) {
        row.bias = "none";
      } else {
        const auto max_it = std::max_element(counts.begin(), counts.end());
        const auto pos = static_cast<std::size_t>(max_it - counts.begin());
        row.bias = pos == 0 ? "primacy" : pos == 2 ? "recency" : "centrality";
        const bool middle_starved = counts[1] < counts[0] && counts[1] < counts[2];
        const double ends_gap =
            std::abs(static_cast<double>(counts[0] - counts[2])) / row.n_valid;
        if (middle_starved && ends_gap <= 0.1) {
          row.bias = "none";
          row.bimodal = true;
        }
      }
    } else {
      row.bias = "insufficient";
    }
    bundle.triplewise.push_back(std::move(row));
  }

  // Classification per unordered arity-2 pair at the lowest and highest
  // temperatures present.
  std::set<std::pair<std::string, std::string>> pairs;
  double t_lo = 0.0, t_hi = 0.0;
  bool have_temp = false;
  for (const auto& table : tallies) {
    if (!have_temp) {
      t_lo = t_hi = table.temperature;
      have_temp = true;
    }
    t_lo = std::min(t_lo, table.temperature);
    t_hi = std::max(t_hi, table.temperature);
    if (table.option_tuple.size() == 2)
      pairs.emplace(table.option_tuple[0], table.option_tuple[1]);
  }
  for (const auto& [a, b] : pairs) {
    ClassificationRow row;
    row.option_a = a;
    row.option_b = b;
    if (auto it = options.find(a); it != options.end()) row.tier = it->second.tier.name;
    try {
      const auto est0 = estimate_selection(tallies, a, b, t_lo);
      const auto est1 = estimate_selection(tallies, a, b, t_hi);
      const auto cls = classify_pair(est0, est1, thresholds);
      row.result = to_string(cls.variant);
      row.winner = cls.winner;
      row.p0 = cls.p0;
      row.p1 = cls.p1;
      row.n0 = cls.n0;
      row.n1 = cls.n1;
      row.p_value1 = cls.p_value1;
    } catch (const InsufficientDataError&) {
      row.result = "insufficient";
    }
    bundle.classification.push_back(std::move(row));
  }

  // Name and gender sections, when the log carries the relevant trial kinds.
  std::vector<TrialRecord> triple_log, same_log, cross_log;
  for (const auto& rec : log) {
    const auto kind = meta_or(rec.metadata, "kind", "");
    if (kind == "triplewise" && options.count(rec.option_ids.front()) &&
        options.at(rec.option_ids.front()).metadata.count("persona"))
      triple_log.push_back(rec);
    else if (kind == "pairwise_same_gender")
      same_log.push_back(rec);
    else if (kind == "pairwise_cross_gender")
      cross_log.push_back(rec);
  }
  if (!triple_log.empty()) bundle.names = analyze_names(triple_log, options);
  if (!same_log.empty() && !cross_log.empty())
    bundle.gender = analyze_gender(same_log, cross_log, options, 10000, bootstrap_seed);

  return bundle;
}

namespace {

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write report file: " + path.string());
  for (const auto& line : lines) out << line << '\n';
}

std::string join(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += '\t';
    line += fields[i];
  }
  return line;
}

}  // namespace

void write_report(const ReportBundle& bundle, const RunManifest& manifest,
                  const std::string& out_dir) {
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);

  {
    std::ofstream out(dir / "manifest.json");
    if (!out) throw ValidationError("cannot write manifest in: " + out_dir);
    out << manifest_to_json(manifest).dump(2) << '\n';
  }

  std::vector<std::string> lines{join(
      {"kind", "tier", "temperature", "first_pct", "second_pct", "n_valid", "h", "p_value",
       "bias"})};
  for (const auto& r : bundle.pairwise)
    lines.push_back(join({r.kind, r.tier, fmt(r.temperature, "%g"),
                          std::to_string(pct(r.position_counts[0], r.n_valid)),
                          std::to_string(pct(r.position_counts[1], r.n_valid)),
                          std::to_string(r.n_valid), fmt(r.h, "%.2f"),
                          fmt(r.p_value, "%.3g"), r.bias}));
  write_lines(dir / "pairwise.tsv", lines);

  lines = {join({"kind", "tier", "temperature", "first_pct", "second_pct", "third_pct",
                 "n_valid", "chi_square", "cramers_v", "p_value", "bias"})};
  for (const auto& r : bundle.triplewise)
    lines.push_back(join(
        {r.kind, r.tier, fmt(r.temperature, "%g"),
         std::to_string(pct(r.position_counts[0], r.n_valid)),
         std::to_string(pct(r.position_counts[1], r.n_valid)),
         std::to_string(pct(r.position_counts[2], r.n_valid)), std::to_string(r.n_valid),
         fmt(r.chi_square, "%.1f"), fmt(r.cramers_v, "%.2f"), fmt(r.p_value, "%.3g"),
         r.bimodal ? r.bias + " (bimodal)" : r.bias}));
  write_lines(dir / "triplewise.tsv", lines);

  lines = {join({"option_a", "option_b", "tier", "class", "winner", "p0_pct", "p1_pct", "n0",
                 "n1", "p_value"})};
  for (const auto& r : bundle.classification)
    lines.push_back(join({r.option_a, r.option_b, r.tier, r.result, r.winner.value_or("-"),
                          std::to_string(std::lround(100.0 * r.p0)),
                          std::to_string(std::lround(100.0 * r.p1)), std::to_string(r.n0),
                          std::to_string(r.n1), fmt(r.p_value1, "%.3g")}));
  write_lines(dir / "classification.tsv", lines);

  if (bundle.names) {
    lines = {join({"name", "chosen"})};
    for (const auto& [name, count] : bundle.names->counts)
      lines.push_back(join({name, std::to_string(count)}));
    write_lines(dir / "names.tsv", lines);
  }

  if (bundle.gender) {
    lines = {join({"tier", "dominant_position", "dominant_rate_pct", "female_first_pct",
                   "male_first_pct", "fisher_p", "h_diff", "n_cross"})};
    for (const auto& r : bundle.gender->tiers)
      lines.push_back(join(
          {r.tier, std::to_string(r.dominant_position),
           std::to_string(std::lround(100.0 * r.dominant_rate_cross)),
           std::to_string(std::lround(100.0 * r.female_first_chosen_rate)),
           std::to_string(std::lround(100.0 * r.male_first_chosen_rate)),
           fmt(r.fisher_p, "%.3g"), fmt(r.diff_effect.value, "%.2f"),
           std::to_string(r.n_cross)}));
    write_lines(dir / "gender.tsv", lines);
  }

  std::ofstream out(dir / ("summary-" + manifest.config_digest + ".json"));
  if (!out) throw ValidationError("cannot write summary in: " + out_dir);
  out << summary_to_json(bundle, manifest).dump(2) << '\n';
}

ordered_json summary_to_json(const ReportBundle& bundle, const RunManifest& manifest) {
  ordered_json doc;
  doc["schema"] = "posaudit.summary.v1";
  doc["manifest"] = manifest_to_json(manifest);
  doc["thresholds"] = {{"eps0", bundle.thresholds.eps0},
                       {"alpha", bundle.thresholds.alpha},
                       {"min_n", bundle.thresholds.min_n}};

  ordered_json pw = ordered_json::array();
  for (const auto& r : bundle.pairwise)
    pw.push_back({{"kind", r.kind},
                  {"tier", r.tier},
                  {"temperature", r.temperature},
                  {"position_counts", r.position_counts},
                  {"n_valid", r.n_valid},
                  {"h", r.h},
                  {"p_value", r.p_value},
                  {"bias", r.bias}});
  doc["pairwise"] = std::move(pw);

  ordered_json tw = ordered_json::array();
  for (const auto& r : bundle.triplewise)
    tw.push_back({{"kind", r.kind},
                  {"tier", r.tier},
                  {"temperature", r.temperature},
                  {"position_counts", r.position_counts},
                  {"n_valid", r.n_valid},
                  {"chi_square", r.chi_square},
                  {"cramers_v", r.cramers_v},
                  {"p_value", r.p_value},
                  {"bias", r.bias},
                  {"bimodal", r.bimodal}});
  doc["triplewise"] = std::move(tw);

  ordered_json cls = ordered_json::array();
  for (const auto& r : bundle.classification) {
    ordered_json row{{"option_a", r.option_a}, {"option_b", r.option_b},
                     {"tier", r.tier},         {"class", r.result},
                     {"p0", r.p0},             {"p1", r.p1},
                     {"n0", r.n0},             {"n1", r.n1},
                     {"p_value", r.p_value1}};
    row["winner"] = r.winner ? ordered_json(*r.winner) : ordered_json(nullptr);
    cls.push_back(std::move(row));
  }
  doc["classification"] = std::move(cls);

  if (bundle.names) {
    const auto& n = *bundle.names;
    ordered_json counts = ordered_json::object();
    for (const auto& [name, c] : n.counts) counts[name] = c;
    auto chi = [](const stats::ChiSquareResult& r) {
      return ordered_json{{"statistic", r.statistic}, {"dof", r.dof}, {"p_value", r.p_value}};
    };
    doc["names"] = {{"counts", std::move(counts)},
                    {"female", chi(n.female)},
                    {"male", chi(n.male)},
                    {"pooled", chi(n.pooled)},
                    {"total_valid", n.total_valid}};
  }

  if (bundle.gender) {
    const auto& g = *bundle.gender;
    ordered_json tiers = ordered_json::array();
    for (const auto& r : g.tiers)
      tiers.push_back({{"tier", r.tier},
                       {"dominant_position", r.dominant_position},
                       {"dominant_rate_cross", r.dominant_rate_cross},
                       {"female_first_chosen_rate", r.female_first_chosen_rate},
                       {"male_first_chosen_rate", r.male_first_chosen_rate},
                       {"fisher_p", r.fisher_p},
                       {"h_diff", r.diff_effect.value},
                       {"n_cross", r.n_cross}});
    doc["gender"] = {{"tiers", std::move(tiers)},
                     {"dominant_rate_cross", g.dominant_rate_cross},
                     {"female_rate", g.female_rate},
                     {"h_order", g.h_order},
                     {"h_gender", g.h_gender},
                     {"delta_h", {{"point", g.delta_h.point},
                                  {"lo", g.delta_h.lo},
                                  {"hi", g.delta_h.hi},
                                  {"resamples", g.delta_h.resamples},
                                  {"seed", g.delta_h.seed}}},
                     {"n_cross", g.n_cross}};
  }

  ordered_json reasons = ordered_json::object();
  for (const auto& [k, v] : bundle.failures.by_reason) reasons[k] = v;
  doc["failures"] = {{"valid", bundle.failures.valid},
                     {"failed", bundle.failures.failed},
                     {"failure_rate", bundle.failures.failure_rate()},
                     {"by_reason", std::move(reasons)}};
  return doc;
}

}  // namespace posaudit
