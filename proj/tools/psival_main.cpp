// psival: run, oracle, serve, session, party.
//
// Exit codes: 0 ok, 1 tolerance breach, 2 configuration error, 3 protocol failure.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "psival/cmi/oracle.hpp"
#include "psival/errors.hpp"
#include "psival/ident/crypto.hpp"
#include "psival/orchestrator/experiment.hpp"
#include "psival/party/client.hpp"
#include "psival/party/dataset.hpp"
#include "psival/psi/client.hpp"
#include "psival/psi/permutations.hpp"
#include "psival/psi/service.hpp"
#include "psival/psi/wire.hpp"

using namespace psival;

namespace {

enum Exit { kOk = 0, kBreach = 1, kConfig = 2, kProtocol = 3 };

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

struct KeySource {
  std::string file;
  std::string env;

  ident::SecretKey load() const {
    if (!file.empty()) return ident::SecretKey::from_file(file);
    if (!env.empty()) return ident::SecretKey::from_env(env.c_str());
    throw ConfigError("a key is required (--key-file or --key-env)");
  }
};

void add_key_options(CLI::App* cmd, KeySource& key) {
  cmd->add_option("--key-file", key.file, "file holding the shared HMAC key (hex or raw bytes)");
  cmd->add_option("--key-env", key.env, "environment variable holding the shared HMAC key");
}

std::optional<std::pair<std::size_t, std::size_t>> parse_shape(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto x = text.find('x');
  if (x == std::string::npos) throw ConfigError("--expect-shape wants ROWSxCOLS, got " + text);
  try {
    return std::pair{std::stoul(text.substr(0, x)), std::stoul(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw ConfigError("--expect-shape wants ROWSxCOLS, got " + text);
  }
}

int cmd_run(const orchestrator::ExperimentConfig& config, const KeySource& key) {
  const auto table = orchestrator::run_experiment(config, key.load());
  orchestrator::emit_report(table, config.output_dir);
  std::cout << orchestrator::render_text(table);
  if (!table.passed()) {
    spdlog::error("max |protocol - oracle| = {:.3e} exceeds tolerance {:.1e}", table.max_abs_difference(),
                  table.tolerance);
    return kBreach;
  }
  return kOk;
}

struct OracleArgs {
  std::string dataset;
  std::string id_col = "id";
  std::string label_col = "class";
  int bins = 5;
  std::size_t permutations = 20;
  std::uint64_t seed = 42;
  std::string out;
};

int cmd_oracle(const OracleArgs& a) {
  party::IngestOptions opts;
  opts.id_column = a.id_col;
  opts.label_column = a.label_col;
  opts.default_spec = {a.bins, binning::Strategy::EqualWidth};
  const auto table = party::ingest_csv(a.dataset, "central", opts);

  std::map<std::string, cmi::BinColumn> columns;
  std::vector<std::string> names;
  for (const auto& col : table.features) {
    columns.emplace(col.name, binning::make_bins(col.values, col.spec));
    names.push_back(col.name);
  }
  const auto label = binning::make_bins(table.label->values, table.label->spec);
  const auto orderings = psi::generate_permutations(names, a.permutations, a.seed);
  const auto report = cmi::normalize_report(cmi::oracle_shapley_cmi(columns, label, orderings));

  nlohmann::json doc = {{"log_base", std::string(cmi::ValuationReport::kLogBase)},
                        {"rows", table.rows()},
                        {"bins", a.bins},
                        {"permutations", a.permutations},
                        {"seed", a.seed},
                        {"degenerate_total", report.degenerate_total},
                        {"features", nlohmann::json::array()}};
  std::size_t width = 7;
  for (const auto& n : names) width = std::max(width, n.size());
  std::cout << std::left;
  for (const auto& n : names) {
    const auto it = std::find_if(report.estimates.begin(), report.estimates.end(),
                                 [&](const auto& e) { return e.feature_label == n; });
    const double share = report.normalized_shares.at(n);
    std::cout << std::setw(static_cast<int>(width) + 2) << n << std::setw(14) << std::setprecision(8)
              << it->value << std::setprecision(4) << share * 100.0 << "%\n";
    doc["features"].push_back({{"feature", n}, {"shapley_cmi", it->value}, {"normalized_share", share}});
  }
  if (!a.out.empty()) {
    std::filesystem::create_directories(a.out);
    std::ofstream(std::filesystem::path(a.out) / "oracle.json") << doc.dump(2) << "\n";
  }
  return kOk;
}

int cmd_serve(const std::string& config_file, const std::optional<std::string>& host, std::optional<int> port) {
  auto config = psi::load_service_config(
      config_file.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_file), std::getenv);
  if (host) config.host = *host;
  if (port) config.port = *port;
  psi::CoordinatorService service(config);
  const int bound = service.start();
  spdlog::info("coordinator listening on {}:{}{}", config.host, bound, config.tls_cert ? " (TLS)" : "");
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    service.coordinator().expire_idle(std::chrono::steady_clock::now());
  }
  service.stop();
  return kOk;
}

struct SessionArgs {
  std::string server;
  std::size_t parties = 3;
  std::size_t permutations = 20;
  std::uint64_t seed = 42;
  std::string token;
};

psi::ClientOptions client_options(const std::string& token) {
  psi::ClientOptions o;
  if (!token.empty()) o.auth_token = token;
  return o;
}

int cmd_session(const SessionArgs& a) {
  psi::SessionConfig config;
  for (std::size_t i = 1; i <= a.parties; ++i) config.expected_parties.push_back({"p" + std::to_string(i), i == 1});
  config.permutation_count = a.permutations;
  config.rng_seed = a.seed;
  psi::CoordinatorClient client(a.server, client_options(a.token));
  std::cout << client.create_session(config) << "\n";
  return kOk;
}

struct PartyArgs {
  std::string csv;
  std::string party_id;
  std::string server;
  std::string session;
  std::string id_col = "id";
  std::string label_col;
  int bins = 5;
  std::string out;
  std::string token;
};

int cmd_party(const PartyArgs& a, const KeySource& key) {
  party::IngestOptions opts;
  opts.id_column = a.id_col;
  if (!a.label_col.empty()) opts.label_column = a.label_col;
  opts.default_spec = {a.bins, binning::Strategy::EqualWidth};
  const auto dataset = party::ingest_csv(a.csv, a.party_id, opts);
  party::PartyRunConfig run{a.server, a.session, client_options(a.token), {}};
  const auto valuation = party::run_party(dataset, key.load(), run);
  if (!a.out.empty()) party::write_local_valuation(valuation, a.out);
  for (const auto& f : valuation.features) {
    std::cout << f.pseudonym << "  " << f.column << "  " << std::setprecision(8) << f.estimate.value << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shapley-CMI feature valuation over private set intersection counts"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  orchestrator::ExperimentConfig run;
  KeySource run_key;
  std::string shape;
  std::string out_dir;
  std::string dataset;
  auto* run_cmd = app.add_subcommand("run", "split a table among simulated parties and compare with the oracle");
  run_cmd->add_option("--dataset", dataset, "CSV with a header row")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--id-col", run.id_column, "ID column")->capture_default_str();
  run_cmd->add_option("--label-col", run.label_column, "label column")->capture_default_str();
  run_cmd->add_option("--parties", run.party_count, "number of parties")->capture_default_str();
  run_cmd->add_option("--bins", run.bin_count, "equal-width bins per feature")->capture_default_str();
  run_cmd->add_option("--permutations", run.permutation_count, "sampled feature orderings")->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "permutation seed")->capture_default_str();
  run_cmd->add_option("--out", out_dir, "report directory")->required();
  run_cmd->add_option("--tolerance", run.tolerance, "max |protocol - oracle|")->capture_default_str();
  run_cmd->add_option("--port", run.port, "coordinator port, 0 for any")->capture_default_str();
  run_cmd->add_option("--expect-shape", shape, "ROWSxCOLS check, e.g. 178x14");
  run_cmd->add_option("--workers", run.workers, "counting threads, 0 for all cores");
  add_key_options(run_cmd, run_key);

  OracleArgs oracle;
  auto* oracle_cmd = app.add_subcommand("oracle", "centralized valuation of a whole table");
  oracle_cmd->add_option("--dataset", oracle.dataset)->required()->check(CLI::ExistingFile);
  oracle_cmd->add_option("--id-col", oracle.id_col)->capture_default_str();
  oracle_cmd->add_option("--label-col", oracle.label_col)->capture_default_str();
  oracle_cmd->add_option("--bins", oracle.bins)->capture_default_str();
  oracle_cmd->add_option("--permutations", oracle.permutations)->capture_default_str();
  oracle_cmd->add_option("--seed", oracle.seed)->capture_default_str();
  oracle_cmd->add_option("--out", oracle.out, "directory for oracle.json");

  std::string serve_config;
  std::optional<std::string> serve_host;
  std::optional<int> serve_port;
  auto* serve_cmd = app.add_subcommand("serve", "run the coordinator");
  serve_cmd->add_option("--config", serve_config, "JSON config file")->check(CLI::ExistingFile);
  serve_cmd->add_option("--host", serve_host, "listen address");
  serve_cmd->add_option("--port", serve_port, "listen port");

  SessionArgs session;
  auto* session_cmd = app.add_subcommand("session", "create a session on a running coordinator");
  session_cmd->add_option("--server", session.server, "coordinator URL")->required();
  session_cmd->add_option("--parties", session.parties)->capture_default_str();
  session_cmd->add_option("--permutations", session.permutations)->capture_default_str();
  session_cmd->add_option("--seed", session.seed)->capture_default_str();
  session_cmd->add_option("--token", session.token, "bearer token");

  PartyArgs party_args;
  KeySource party_key;
  auto* party_cmd = app.add_subcommand("party", "run one party against a coordinator");
  party_cmd->add_option("--csv", party_args.csv)->required()->check(CLI::ExistingFile);
  party_cmd->add_option("--party-id", party_args.party_id)->required();
  party_cmd->add_option("--server", party_args.server)->required();
  party_cmd->add_option("--session", party_args.session)->required();
  party_cmd->add_option("--id-col", party_args.id_col)->capture_default_str();
  party_cmd->add_option("--label-col", party_args.label_col, "task party only");
  party_cmd->add_option("--bins", party_args.bins)->capture_default_str();
  party_cmd->add_option("--out", party_args.out, "directory for the local valuation");
  party_cmd->add_option("--token", party_args.token, "bearer token");
  add_key_options(party_cmd, party_key);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*run_cmd) {
      run.dataset = dataset;
      run.output_dir = out_dir;
      run.expected_shape = parse_shape(shape);
      return cmd_run(run, run_key);
    }
    if (*oracle_cmd) return cmd_oracle(oracle);
    if (*serve_cmd) return cmd_serve(serve_config, serve_host, serve_port);
    if (*session_cmd) return cmd_session(session);
    if (*party_cmd) return cmd_party(party_args, party_key);
  } catch (const ConfigError& e) {
    spdlog::error("configuration: {}", e.what());
    return kConfig;
  } catch (const InputError& e) {
    spdlog::error("input: {}", e.what());
    return kConfig;
  } catch (const ProtocolError& e) {
    spdlog::error("protocol: {} ({})", e.what(), to_string(e.code()));
    return kProtocol;
  } catch (const TransportError& e) {
    spdlog::error("transport: {}", e.what());
    return kProtocol;
  } catch (const CorruptionError& e) {
    spdlog::error("corrupt counts: {}", e.what());
    return kProtocol;
  }
  return kConfig;
}
