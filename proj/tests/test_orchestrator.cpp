#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "psival/errors.hpp"
#include "psival/orchestrator/experiment.hpp"
#include "psival/party/client.hpp"
#include "psival/psi/permutations.hpp"

using namespace psival;
using namespace psival::orchestrator;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("psival_orch_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

party::PartyDataset table_with(std::size_t features) {
  party::PartyDataset t;
  t.party_id = "central";
  for (int i = 1; i <= 6; ++i) t.ids.push_back(std::to_string(i));
  for (std::size_t f = 1; f <= features; ++f) {
    party::Column c{"c" + std::to_string(f), {}, {}};
    for (int i = 1; i <= 6; ++i) c.values.push_back(static_cast<double>(i * f % 5));
    t.features.push_back(c);
  }
  t.label = party::Column{"class", {0, 1, 0, 1, 0, 1}, {1, binning::Strategy::Categorical}};
  return t;
}

std::vector<std::string> names(const party::PartyDataset& d) {
  std::vector<std::string> out;
  for (const auto& c : d.features) out.push_back(c.name);
  return out;
}

fs::path write_csv(const fs::path& dir, std::size_t rows, std::uint64_t seed, bool constant_second) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  const auto path = dir / "data.csv";
  std::ofstream out(path);
  out << "id,a,b,class\n";
  for (std::size_t r = 0; r < rows; ++r) {
    const int y = static_cast<int>(rng() % 2);
    const double a = y * 5.0 + u(rng) * 0.6;
    const double b = constant_second ? 3.0 : u(rng);
    out << "row" << r << "," << a << "," << b << "," << y << "\n";
  }
  return path;
}

ident::SecretKey key() { return ident::SecretKey(std::vector<std::uint8_t>(24, 0x11)); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("round-robin split") {
  const auto t13 = table_with(13);
  const auto parts = split_dataset(t13, 3);
  REQUIRE(parts.size() == 3);
  CHECK(parts[0].features.size() == 5);
  CHECK(parts[1].features.size() == 4);
  CHECK(parts[2].features.size() == 4);
  CHECK(parts[0].label.has_value());
  CHECK_FALSE(parts[1].label.has_value());
  CHECK_FALSE(parts[2].label.has_value());
  CHECK(parts[0].party_id == "p1");
  for (const auto& p : parts) CHECK(p.ids == t13.ids);

  const auto t2 = split_dataset(table_with(2), 2);
  CHECK(names(t2[0]) == std::vector<std::string>{"c1"});
  CHECK(names(t2[1]) == std::vector<std::string>{"c2"});

  const auto t4 = split_dataset(table_with(4), 2);
  CHECK(names(t4[0]) == std::vector<std::string>{"c1", "c3"});
  CHECK(names(t4[1]) == std::vector<std::string>{"c2", "c4"});

  CHECK_THROWS_AS(split_dataset(table_with(2), 3), ConfigError);
  CHECK_THROWS_AS(split_dataset(table_with(4), 1), ConfigError);
}

TEST_CASE("feature values do not depend on who owns the columns") {
  party::PartyDataset t;
  t.party_id = "central";
  std::mt19937_64 rng(4);
  for (int i = 0; i < 80; ++i) t.ids.push_back("id" + std::to_string(i));
  for (int f = 0; f < 6; ++f) {
    party::Column c{"col" + std::to_string(f), {}, {4, binning::Strategy::EqualWidth}};
    for (int i = 0; i < 80; ++i) c.values.push_back(static_cast<double>(rng() % 100));
    t.features.push_back(c);
  }
  t.label = party::Column{"class", {}, {1, binning::Strategy::Categorical}};
  for (int i = 0; i < 80; ++i) t.label->values.push_back(static_cast<double>(rng() % 3));

  const auto column_orderings = psi::generate_permutations(names(t), 12, 99);
  std::map<int, std::map<std::string, double>> by_split;
  for (int parties : {2, 3, 6}) {
    const auto split = split_dataset(t, parties);
    std::map<std::string, std::string> pseudonym_of, column_of;
    for (const auto& p : split) {
      for (std::size_t k = 0; k < p.features.size(); ++k) {
        const auto ps = party::feature_pseudonym(p.party_id, k + 1);
        pseudonym_of[p.features[k].name] = ps;
        column_of[ps] = p.features[k].name;
      }
    }
    std::vector<Ordering> orderings;
    for (const auto& o : column_orderings) {
      Ordering mapped;
      for (const auto& c : o) mapped.push_back(pseudonym_of.at(c));
      orderings.push_back(mapped);
    }
    for (const auto& e : oracle_for_parties(split, orderings)) by_split[parties][column_of.at(e.feature_label)] = e.value;
  }
  CHECK(by_split[2] == by_split[3]);
  CHECK(by_split[2] == by_split[6]);
}

TEST_CASE("synthetic run with a constant feature") {
  const auto dir = temp_dir("constant");
  ExperimentConfig cfg;
  cfg.dataset = write_csv(dir, 60, 1, true);
  cfg.party_count = 2;
  cfg.bin_count = 4;
  cfg.permutation_count = 6;
  cfg.output_dir = dir / "out";
  const auto table = run_experiment(cfg, key());
  REQUIRE(table.rows.size() == 2);
  CHECK(table.passed());
  CHECK(table.rows[1].column == "b");
  CHECK(table.rows[1].protocol_shapley_cmi == 0.0);
  CHECK(table.rows[1].oracle_shapley_cmi == 0.0);
  CHECK(table.rows[0].protocol_shapley_cmi > 0.1);
  fs::remove_all(dir);
}

TEST_CASE("reruns give byte-identical reports") {
  const auto dir = temp_dir("rerun");
  ExperimentConfig cfg;
  cfg.dataset = write_csv(dir, 90, 2, false);
  cfg.party_count = 2;
  cfg.permutation_count = 5;
  cfg.seed = 7;
  emit_report(run_experiment(cfg, key()), dir / "one");
  emit_report(run_experiment(cfg, key()), dir / "two");
  CHECK(slurp(dir / "one" / "comparison.json") == slurp(dir / "two" / "comparison.json"));
  CHECK(slurp(dir / "one" / "comparison.txt") == slurp(dir / "two" / "comparison.txt"));
  CHECK_FALSE(slurp(dir / "one" / "comparison.json").empty());
  fs::remove_all(dir);
}

TEST_CASE("configuration errors") {
  const auto dir = temp_dir("config");
  ExperimentConfig cfg;
  cfg.dataset = write_csv(dir, 10, 3, false);
  cfg.party_count = 3;
  CHECK_THROWS_AS(run_experiment(cfg, key()), ConfigError);
  cfg.party_count = 2;
  cfg.expected_shape = std::pair<std::size_t, std::size_t>{178, 14};
  CHECK_THROWS_AS(run_experiment(cfg, key()), ConfigError);
  cfg.expected_shape.reset();
  cfg.bin_count = 0;
  CHECK_THROWS_AS(run_experiment(cfg, key()), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("emit_report") {
  const auto dir = temp_dir("report");
  ComparisonTable empty;
  CHECK_THROWS_AS(emit_report(empty, dir), InputError);

  ComparisonTable t;
  t.rows.push_back({"p1.f1", "x", "p1", 0.5, 0.5, 1.0, 0.0});
  t.common_id_count = 4;
  emit_report(t, dir);
  CHECK(fs::exists(dir / "comparison.json"));
  CHECK(fs::exists(dir / "comparison.txt"));
  CHECK(render_text(t).find("SHAP") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("wine report has 13 rows and a totals row") {
  const char* path = std::getenv("PSIVAL_WINE_CSV");
  if (path == nullptr || !fs::exists(path)) {
    MESSAGE("wine CSV not available; skipped");
    return;
  }
  ExperimentConfig cfg;
  cfg.dataset = path;
  cfg.expected_shape = std::pair<std::size_t, std::size_t>{178, 14};
  const auto table = run_experiment(cfg, key());
  CHECK(table.rows.size() == 13);
  CHECK(table.common_id_count == 178);
  CHECK(table.passed());
  double shares = 0;
  for (const auto& r : table.rows) shares += r.normalized_share;
  CHECK(std::abs(shares - 1.0) <= 1e-9);

  const auto json = nlohmann::json::parse(render_json(table));
  CHECK(json.at("rows").size() == 13);
  CHECK(json.contains("totals"));
  const auto text = render_text(table);
  std::size_t data_lines = 0;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    if (line.rfind("p", 0) == 0 && line.find('.') != std::string::npos) ++data_lines;
  }
  CHECK(data_lines == 13);
  CHECK(text.find("\ntotal") != std::string::npos);
}
