#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "posaudit/errors.hpp"
#include "posaudit/report.hpp"

using namespace posaudit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("posaudit-report-" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

TrialRecord make_record(const std::string& key, std::vector<std::string> order,
                        const std::string& chosen, double temp,
                        std::map<std::string, std::string> metadata) {
  TrialRecord rec;
  rec.trial_key = key;
  rec.option_ids = std::move(order);
  rec.labels = rec.option_ids;
  rec.temperature = temp;
  rec.group_id = make_group_id(rec.option_ids);
  rec.metadata = std::move(metadata);
  rec.raw_text = chosen;
  if (chosen.empty())
    rec.resolution = ResolutionFailure{key, FailureReason::refusal};
  else
    rec.resolution = ResolvedChoice{key, chosen, MatchKind::exact, ""};
  return rec;
}

std::map<std::string, OptionItem> plain_options(const std::vector<std::string>& ids,
                                                const std::string& tier = "Ideal") {
  std::map<std::string, OptionItem> options;
  for (const auto& id : ids) options[id] = {id, id, id, {tier, 0}, {}};
  return options;
}

// Pairwise scenario: perfect order-following at T=0, a genuinely preferred at
// T=1 (chosen 40/50 in each order).
std::vector<TrialRecord> pairwise_log() {
  std::vector<TrialRecord> log;
  const std::map<std::string, std::string> meta = {{"kind", "pairwise"}, {"tier", "Ideal"}};
  int key = 0;
  for (int i = 0; i < 50; ++i) {
    log.push_back(make_record("k" + std::to_string(key++), {"a", "b"}, "a", 0.0, meta));
    log.push_back(make_record("k" + std::to_string(key++), {"b", "a"}, "b", 0.0, meta));
    log.push_back(make_record("k" + std::to_string(key++), {"a", "b"}, i < 40 ? "a" : "b",
                              1.0, meta));
    log.push_back(make_record("k" + std::to_string(key++), {"b", "a"}, i < 40 ? "a" : "b",
                              1.0, meta));
  }
  return log;
}

}  // namespace

TEST_CASE("pairwise rows pool position marginals per kind/tier/temperature") {
  const auto log = pairwise_log();
  const auto bundle = build_report(log, plain_options({"a", "b"}));

  REQUIRE(bundle.pairwise.size() == 2);
  const auto& cold = bundle.pairwise[0];
  CHECK(cold.temperature == 0.0);
  CHECK(cold.kind == "pairwise");
  CHECK(cold.tier == "Ideal");
  CHECK(cold.position_counts == std::vector<std::int64_t>{100, 0});
  CHECK(cold.n_valid == 100);
  CHECK(cold.bias == "primacy");
  CHECK(cold.h == doctest::Approx(1.5708).epsilon(0.001));
  CHECK(cold.p_value == stats::binom_two_sided(100, 100).p_value);

  // At T=1: a wins 40 of 50 in each order, so each position is chosen 50
  // times and there is no positional signal.
  const auto& warm = bundle.pairwise[1];
  CHECK(warm.position_counts == std::vector<std::int64_t>{50, 50});
  CHECK(warm.bias == "none");
  CHECK(warm.p_value == doctest::Approx(1.0));
}

TEST_CASE("classification rows use the lowest and highest temperatures") {
  const auto log = pairwise_log();
  const auto bundle = build_report(log, plain_options({"a", "b"}));

  REQUIRE(bundle.classification.size() == 1);
  const auto& row = bundle.classification[0];
  CHECK(row.option_a == "a");
  CHECK(row.option_b == "b");
  CHECK(row.tier == "Ideal");
  CHECK(row.result == "fragile");
  REQUIRE(row.winner);
  CHECK(*row.winner == "a");
  CHECK(row.p0 == doctest::Approx(0.5));
  CHECK(row.p1 == doctest::Approx(0.8));
  CHECK(row.n0 == 100);
  CHECK(row.n1 == 100);
  CHECK(row.p_value1 == stats::binom_two_sided(80, 100).p_value);
}

TEST_CASE("underpowered pairs are marked insufficient, not classified") {
  auto log = pairwise_log();
  auto options = plain_options({"a", "b"});
  const auto thin = plain_options({"c", "d"}, "Other");
  options.insert(thin.begin(), thin.end());
  const std::map<std::string, std::string> meta = {{"kind", "pairwise"}, {"tier", "Other"}};
  for (int i = 0; i < 10; ++i)
    for (double t : {0.0, 1.0}) {
      log.push_back(make_record("cd" + std::to_string(i) + std::to_string(t), {"c", "d"},
                                "c", t, meta));
      log.push_back(make_record("dc" + std::to_string(i) + std::to_string(t), {"d", "c"},
                                "c", t, meta));
    }

  const auto bundle = build_report(log, options);
  REQUIRE(bundle.classification.size() == 2);
  CHECK(bundle.classification[0].result == "fragile");  // (a, b)
  CHECK(bundle.classification[1].result == "insufficient");
  CHECK_FALSE(bundle.classification[1].winner);
  // The thin tier still gets its own pairwise rows.
  CHECK(bundle.pairwise.size() == 4);
}

TEST_CASE("triplewise rows: chi-square, effect size, and the bimodal flag") {
  std::vector<TrialRecord> log;
  int key = 0;
  const auto orders = enumerate_arrangements({"a", "b", "c"});
  for (const auto& order : orders)
    for (int i = 0; i < 10; ++i)
      log.push_back(make_record("p" + std::to_string(key++), order.option_ids,
                                order.option_ids[0], 1.0,
                                {{"kind", "triplewise"}, {"tier", "Plain"}}));
  // Second group: ends split evenly, middle starved.
  for (const auto& order : enumerate_arrangements({"d", "e", "f"}))
    for (int i = 0; i < 20; ++i)
      log.push_back(make_record("q" + std::to_string(key++), order.option_ids,
                                i < 10 ? order.option_ids[0] : order.option_ids[2], 1.0,
                                {{"kind", "triplewise"}, {"tier", "Bim"}}));

  auto options = plain_options({"a", "b", "c"}, "Plain");
  const auto more = plain_options({"d", "e", "f"}, "Bim");
  options.insert(more.begin(), more.end());
  const auto bundle = build_report(log, options);

  REQUIRE(bundle.triplewise.size() == 2);
  const auto& bim = bundle.triplewise[0];  // rows sort by tier: Bim first
  CHECK(bim.tier == "Bim");
  CHECK(bim.position_counts == std::vector<std::int64_t>{60, 0, 60});
  CHECK(bim.bias == "none");
  CHECK(bim.bimodal);

  const auto& plain = bundle.triplewise[1];
  CHECK(plain.position_counts == std::vector<std::int64_t>{60, 0, 0});
  CHECK(plain.bias == "primacy");
  CHECK(plain.chi_square == doctest::Approx(120.0));
  CHECK(plain.cramers_v == doctest::Approx(1.0));
  CHECK_FALSE(plain.bimodal);

  CHECK(bundle.names == std::nullopt);  // no persona metadata on these options
}

TEST_CASE("failure summary counts by reason") {
  auto log = pairwise_log();
  log.push_back(make_record("fail1", {"a", "b"}, "", 0.0, {{"kind", "pairwise"}}));
  auto no_match = make_record("fail2", {"a", "b"}, "", 0.0, {{"kind", "pairwise"}});
  no_match.resolution = ResolutionFailure{"fail2", FailureReason::no_match};
  log.push_back(no_match);

  const auto bundle = build_report(log, plain_options({"a", "b"}));
  CHECK(bundle.failures.valid == 200);
  CHECK(bundle.failures.failed == 2);
  CHECK(bundle.failures.by_reason.at("refusal") == 1);
  CHECK(bundle.failures.by_reason.at("no_match") == 1);
  CHECK(bundle.failures.failure_rate() == doctest::Approx(2.0 / 202.0));
}

namespace {

std::map<std::string, OptionItem> persona_options() {
  std::map<std::string, OptionItem> options;
  for (const auto& [id, gender] :
       std::vector<std::pair<std::string, std::string>>{
           {"f0", "female"}, {"f1", "female"}, {"f2", "female"},
           {"m0", "male"}, {"m1", "male"}, {"m2", "male"}}) {
    OptionItem o;
    o.id = id;
    o.label = "Person " + id;
    o.presentation = o.label;
    o.tier = {"T", 0};
    o.metadata = {{"persona", "Person " + id}, {"gender", gender}};
    options[id] = std::move(o);
  }
  return options;
}

std::vector<TrialRecord> persona_log(bool include_cross) {
  std::vector<TrialRecord> log;
  int key = 0;
  const std::map<std::string, std::string> t3 = {{"kind", "triplewise"}, {"tier", "T"}};
  const std::map<std::string, std::string> sg = {{"kind", "pairwise_same_gender"},
                                                 {"tier", "T"}};
  const std::map<std::string, std::string> cg = {{"kind", "pairwise_cross_gender"},
                                                 {"tier", "T"}};
  for (int i = 0; i < 30; ++i) {
    log.push_back(make_record("t" + std::to_string(key++), {"f0", "f1", "f2"},
                              i < 24 ? "f0" : "f1", 1.0, t3));
    log.push_back(make_record("t" + std::to_string(key++), {"m0", "m1", "m2"},
                              i < 24 ? "m1" : "m2", 1.0, t3));
  }
  for (int i = 0; i < 60; ++i) {
    log.push_back(make_record("s" + std::to_string(key++), {"f0", "f1"},
                              i < 54 ? "f0" : "f1", 1.0, sg));
    log.push_back(make_record("s" + std::to_string(key++), {"m0", "m1"},
                              i < 54 ? "m0" : "m1", 1.0, sg));
  }
  if (include_cross)
    for (int i = 0; i < 60; ++i) {
      log.push_back(make_record("c" + std::to_string(key++), {"f0", "m0"},
                                i < 55 ? "f0" : "m0", 1.0, cg));
      log.push_back(make_record("c" + std::to_string(key++), {"m0", "f0"},
                                i < 55 ? "m0" : "f0", 1.0, cg));
    }
  return log;
}

}  // namespace

TEST_CASE("name and gender sections appear only with the matching trial kinds") {
  const auto options = persona_options();

  const auto with = build_report(persona_log(true), options, {}, 9);
  REQUIRE(with.names);
  CHECK(with.names->counts.at("Person f0") == 24);
  CHECK(with.names->total_valid == 60);
  REQUIRE(with.gender);
  CHECK(with.gender->tiers[0].dominant_position == 1);
  CHECK(with.gender->dominant_rate_cross == doctest::Approx(55.0 / 60.0));
  CHECK(with.gender->female_rate == doctest::Approx(0.5));
  CHECK(with.gender->delta_h.seed == 9);

  const auto without = build_report(persona_log(false), options, {}, 9);
  REQUIRE(without.names);
  CHECK(without.gender == std::nullopt);
}

TEST_CASE("build_report is deterministic for a fixed log and seed") {
  const auto options = persona_options();
  const auto a = build_report(persona_log(true), options, {}, 3);
  const auto b = build_report(persona_log(true), options, {}, 3);
  RunManifest m;
  m.scenario_id = "synthetic";
  m.config_digest = "feedc0de";
  m.endpoint = "sim: / -";
  CHECK(summary_to_json(a, m).dump() == summary_to_json(b, m).dump());
}

TEST_CASE("write_report emits byte-identical files for identical inputs") {
  const auto options = persona_options();
  const auto bundle = build_report(persona_log(true), options, {}, 3);
  RunManifest m;
  m.scenario_id = "synthetic";
  m.config_digest = "feedc0de";
  m.endpoint = "sim: / -";
  m.planned_trials = 360;
  m.cells_by_kind = {{"triplewise", 60}, {"pairwise_same_gender", 120},
                     {"pairwise_cross_gender", 120}};

  TempDir d1("w1"), d2("w2");
  write_report(bundle, m, d1.path.string());
  write_report(bundle, m, d2.path.string());

  const std::vector<std::string> files = {"manifest.json", "pairwise.tsv", "triplewise.tsv",
                                          "classification.tsv", "names.tsv", "gender.tsv",
                                          "summary-feedc0de.json"};
  for (const auto& f : files) {
    INFO(f);
    REQUIRE(fs::exists(d1.path / f));
    CHECK(slurp(d1.path / f) == slurp(d2.path / f));
  }

  // TSVs carry a header plus one line per row.
  std::istringstream names(slurp(d1.path / "names.tsv"));
  std::string line;
  int lines = 0;
  while (std::getline(names, line)) ++lines;
  CHECK(lines == 7);  // header + 6 personas

  const auto summary = nlohmann::json::parse(slurp(d1.path / "summary-feedc0de.json"));
  CHECK(summary.at("schema") == "posaudit.summary.v1");
  CHECK(summary.at("manifest").at("planned_trials") == 360);
  CHECK(summary.at("names").at("total_valid") == 60);
  CHECK(summary.at("gender").at("n_cross") == 120);
  CHECK(summary.at("failures").at("valid") == 300);
}

TEST_CASE("shipped scenario configs load and expand to the documented sizes") {
  const auto colors = load_scenario("configs/colors_sim.json");
  const auto plan = colors.build_plan();
  // 4 tiers x (100 pairwise + 240 triplewise) x 3 temperatures.
  CHECK(plan.total_trials() == 4080);
  const auto manifest = make_manifest(colors, plan);
  CHECK(manifest.planned_trials == 4080);
  CHECK(manifest.cells_by_kind.at("pairwise") == 1200);
  CHECK(manifest.cells_by_kind.at("triplewise") == 2880);
  CHECK_FALSE(manifest.config_digest.empty());
  CHECK(manifest.tool_version == std::string(kToolVersion));

  const auto tier_plan = colors.build_tier_validation();
  CHECK(tier_plan.total_trials() > 0);

  CHECK(load_scenario("configs/resumes_same_gender.json").build_plan().total_trials() ==
        768 * 3);
  CHECK(load_scenario("configs/resumes_cross_gender.json").build_plan().total_trials() ==
        1024 * 3);
  CHECK(load_scenario("configs/resumes_triplewise.json").build_plan().total_trials() ==
        960 * 3);
  CHECK(load_scenario("configs/sim_fragile.json").build_plan().total_trials() > 0);
  CHECK(load_scenario("configs/sim_indifferent.json").build_plan().total_trials() > 0);
  CHECK(load_scenario("configs/colors_http.json").build_plan().total_trials() > 0);
}

TEST_CASE("scenario loading rejects bad input") {
  TempDir dir("badcfg");
  const auto path = (dir.path / "bad.json").string();
  std::ofstream(path) << "{ nope";
  CHECK_THROWS_AS(load_scenario(path), ValidationError);
  CHECK_THROWS_AS(load_scenario((dir.path / "missing.json").string()), ValidationError);
  std::ofstream(path + "2") << R"({"scenario": "colors"})";
  CHECK_THROWS_AS(load_scenario(path + "2"), ValidationError);
}

TEST_CASE("config digest ignores formatting and key order, tracks content") {
  const auto a = nlohmann::json::parse(R"({"seed": 1, "kind": "colors"})");
  const auto b = nlohmann::json::parse(R"({
    "kind": "colors",
    "seed": 1
  })");
  CHECK(config_digest_of(a) == config_digest_of(b));

  auto c = a;
  c["seed"] = 2;
  CHECK(config_digest_of(c) != config_digest_of(a));
}
