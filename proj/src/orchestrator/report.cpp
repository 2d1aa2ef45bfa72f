#include <nlohmann/json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>

#include "psival/cmi/cmi.hpp"
#include "psival/orchestrator/experiment.hpp"
#include "psival/psi/wire.hpp"

namespace psival::orchestrator {

namespace {

void require_rows(const ComparisonTable& table) {
  if (table.rows.empty()) throw InputError("comparison table has no features");
}

}  // namespace

std::string render_text(const ComparisonTable& table) {
  require_rows(table);
  std::ostringstream out;
  out << "Shapley-CMI feature valuation (nats)\n";
  out << "parties " << table.party_count << "  common ids " << table.common_id_count << "  bins " << table.bin_count
      << "  permutations " << table.orderings.size() << "  seed " << table.seed << "\n\n";

  constexpr int kName = 30;
  out << std::left << std::setw(10) << "feature" << std::setw(kName) << "column" << std::setw(7) << "owner"
      << std::right << std::setw(16) << "protocol" << std::setw(16) << "oracle" << std::setw(10) << "share"
      << std::setw(12) << "abs_diff" << '\n';
  cmi::CompensatedSum protocol_total, oracle_total, share_total;
  for (const auto& r : table.rows) {
    out << std::left << std::setw(10) << r.feature << std::setw(kName) << r.column << std::setw(7) << r.owner
        << std::right << std::fixed << std::setprecision(10) << std::setw(16) << r.protocol_shapley_cmi
        << std::setw(16) << r.oracle_shapley_cmi << std::setprecision(4) << std::setw(10) << r.normalized_share
        << std::scientific << std::setprecision(2) << std::setw(12) << r.abs_difference << '\n';
    protocol_total.add(r.protocol_shapley_cmi);
    oracle_total.add(r.oracle_shapley_cmi);
    share_total.add(r.normalized_share);
  }
  out << std::left << std::setw(10) << "total" << std::setw(kName) << "" << std::setw(7) << "" << std::right
      << std::fixed << std::setprecision(10) << std::setw(16) << protocol_total.value() << std::setw(16)
      << oracle_total.value() << std::setprecision(4) << std::setw(10) << share_total.value() << std::scientific
      << std::setprecision(2) << std::setw(12) << table.max_abs_difference() << '\n';

  out << '\n'
      << "max abs difference " << std::scientific << std::setprecision(3) << table.max_abs_difference()
      << "  tolerance " << table.tolerance << "  -> " << (table.passed() ? "PASS" : "FAIL") << '\n';
  if (table.degenerate_total) out << "all values are zero; shares reported as 0\n";
  out << "model-based SHAP comparison not included (requires training a model)\n";
  return out.str();
}

std::string render_json(const ComparisonTable& table) {
  require_rows(table);
  nlohmann::json rows = nlohmann::json::array();
  cmi::CompensatedSum protocol_total, oracle_total, share_total;
  for (const auto& r : table.rows) {
    protocol_total.add(r.protocol_shapley_cmi);
    oracle_total.add(r.oracle_shapley_cmi);
    share_total.add(r.normalized_share);
    rows.push_back({{"feature", r.feature},
                    {"column", r.column},
                    {"owner", r.owner},
                    {"protocol_shapley_cmi", r.protocol_shapley_cmi},
                    {"oracle_shapley_cmi", r.oracle_shapley_cmi},
                    {"normalized_share", r.normalized_share},
                    {"abs_difference", r.abs_difference}});
  }
  const nlohmann::json doc = {{"log_base", cmi::ValuationReport::kLogBase},
                              {"party_count", table.party_count},
                              {"common_id_count", table.common_id_count},
                              {"bin_count", table.bin_count},
                              {"seed", table.seed},
                              {"permutations", psi::wire::orderings_body(table.orderings)},
                              {"tolerance", table.tolerance},
                              {"max_abs_difference", table.max_abs_difference()},
                              {"passed", table.passed()},
                              {"degenerate_total", table.degenerate_total},
                              {"rows", std::move(rows)},
                              {"totals",
                               {{"protocol_shapley_cmi", protocol_total.value()},
                                {"oracle_shapley_cmi", oracle_total.value()},
                                {"normalized_share", share_total.value()}}}};
  return doc.dump(2) + "\n";
}

void emit_report(const ComparisonTable& table, const std::filesystem::path& dir) {
  const std::string text = render_text(table);
  const std::string json = render_json(table);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& [name, content] : {std::pair{"comparison.txt", &text}, std::pair{"comparison.json", &json}}) {
    std::ofstream out(dir / name, std::ios::trunc);
    out << *content;
    if (!out) throw ConfigError("cannot write " + (dir / name).string());
  }
}

}  // namespace psival::orchestrator
