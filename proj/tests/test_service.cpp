#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/x509.h>
#include <openssl/x509v3.h>

#include "psival/errors.hpp"
#include "psival/psi/client.hpp"
#include "psival/psi/service.hpp"
#include "psival/psi/wire.hpp"

using namespace psival;
using namespace psival::psi;
using binning::FeatureGroups;

namespace {

ident::EncryptedId id_of(int i) {
  ident::Digest d{};
  d[0] = 0xab;
  d[31] = static_cast<std::uint8_t>(i);
  return ident::EncryptedId(d);
}

FeatureGroups column(const std::string& label, const std::vector<int>& rows, int mod, bool is_label = false) {
  std::vector<ident::EncryptedId> ids;
  std::vector<binning::BinIndex> bins;
  for (int r : rows) {
    ids.push_back(id_of(r));
    bins.push_back(r % mod);
  }
  return binning::build_feature_groups(label, "", ids, bins, is_label);
}

const std::vector<int> kRows{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

wire::Submission task_submission(const std::vector<int>& rows = kRows) {
  return {"p1", {column("p1.label", rows, 2, true), column("p1.f1", rows, 3)}};
}

wire::Submission data_submission(const std::vector<int>& rows = kRows) {
  return {"p2", {column("p2.f1", rows, 4)}};
}

SessionConfig config() {
  SessionConfig c;
  c.expected_parties = {{"p1", true}, {"p2", false}};
  c.permutation_count = 4;
  c.rng_seed = 9;
  return c;
}

struct Server {
  explicit Server(ServiceConfig cfg = {}) : service([&] {
    cfg.port = 0;
    cfg.workers = 1;
    return cfg;
  }()) {
    port = service.start();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
  CoordinatorService service;
  int port = 0;
};

ClientOptions fast() {
  ClientOptions o;
  o.transport_retry = {std::chrono::milliseconds(5), 2.0, std::chrono::milliseconds(20), 3};
  o.timeout = std::chrono::seconds(5);
  return o;
}

std::string code_in(const std::string& body) {
  return nlohmann::json::parse(body).at("error_code").get<std::string>();
}

void wait_done(CoordinatorClient& c, const std::string& sid) {
  for (int i = 0; i < 400; ++i) {
    const auto st = c.status(sid);
    if (st.phase == Phase::Done || st.phase == Phase::Failed) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  FAIL("session did not settle");
}

// Self-signed certificate for 127.0.0.1, written as PEM files.
void write_self_signed(const std::filesystem::path& cert_path, const std::filesystem::path& key_path) {
  EVP_PKEY* pkey = EVP_RSA_gen(2048);
  REQUIRE(pkey != nullptr);
  X509* x = X509_new();
  ASN1_INTEGER_set(X509_get_serialNumber(x), 1);
  X509_gmtime_adj(X509_getm_notBefore(x), 0);
  X509_gmtime_adj(X509_getm_notAfter(x), 3600);
  X509_set_pubkey(x, pkey);
  X509_NAME* name = X509_get_subject_name(x);
  X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_ASC, reinterpret_cast<const unsigned char*>("127.0.0.1"), -1, -1, 0);
  X509_set_issuer_name(x, name);
  X509V3_CTX ctx;
  X509V3_set_ctx_nodb(&ctx);
  X509V3_set_ctx(&ctx, x, x, nullptr, nullptr, 0);
  X509_EXTENSION* san = X509V3_EXT_conf_nid(nullptr, &ctx, NID_subject_alt_name, "IP:127.0.0.1");
  X509_add_ext(x, san, -1);
  X509_EXTENSION_free(san);
  X509_sign(x, pkey, EVP_sha256());

  FILE* f = std::fopen(cert_path.c_str(), "wb");
  PEM_write_X509(f, x);
  std::fclose(f);
  f = std::fopen(key_path.c_str(), "wb");
  PEM_write_PrivateKey(f, pkey, nullptr, nullptr, 0, nullptr, nullptr);
  std::fclose(f);
  X509_free(x);
  EVP_PKEY_free(pkey);
}

}  // namespace

TEST_CASE("http status mapping") {
  CHECK(http_status(ErrorCode::UnknownSession) == 404);
  CHECK(http_status(ErrorCode::DuplicateSubmission) == 409);
  CHECK(http_status(ErrorCode::MalformedGroups) == 400);
  CHECK(http_status(ErrorCode::NotReady) == 425);
  CHECK(http_status(ErrorCode::NoOverlap) == 422);
  CHECK(http_status(ErrorCode::UnauthorizedParty) == 403);
  CHECK(http_status(ErrorCode::LabelFromDataParty) == 403);
  CHECK(http_status(ErrorCode::Internal) == 500);
  for (auto code : {ErrorCode::UnknownSession, ErrorCode::NoOverlap, ErrorCode::LabelFromDataParty}) {
    CHECK(parse_error_code(to_string(code)) == code);
  }
}

TEST_CASE("full session over http") {
  Server srv;
  std::vector<std::string> received;
  auto opts = fast();
  opts.on_receive = [&](std::string_view, std::string_view body) { received.emplace_back(body); };
  CoordinatorClient c(srv.url(), opts);
  const auto sid = c.create_session(config());
  CHECK(c.status(sid).phase == Phase::Collecting);
  CHECK(c.submit(sid, task_submission()) == 1);
  CHECK(c.status(sid).parties_remaining == 1);
  CHECK(c.submit(sid, data_submission()) == 0);
  wait_done(c, sid);

  const auto r1 = c.results(sid, "p1");
  CHECK(r1.common_id_count == 10);
  CHECK(r1.features.size() == 1);
  CHECK(r1.features.contains("p1.f1"));
  CHECK(r1.features.at("p1.f1").size() == 4);
  const auto first = c.results_payload(sid, "p2");
  CHECK(first == c.results_payload(sid, "p2"));
  CHECK(first.find("p1.") == std::string::npos);

  for (const auto& body : received) {
    for (int r : kRows) CHECK(body.find(id_of(r).hex()) == std::string::npos);
  }
}

TEST_CASE("error codes over http") {
  Server srv;
  CoordinatorClient c(srv.url(), fast());

  auto r = c.request("GET", "/sessions/nope/status");
  CHECK(r.status == 404);
  CHECK(code_in(r.body) == "UNKNOWN_SESSION");

  r = c.request("POST", "/sessions", "{not json");
  CHECK(r.status == 400);
  CHECK(code_in(r.body) == "MALFORMED_GROUPS");
  CHECK(nlohmann::json::parse(r.body).at("message") == "body is not valid JSON");

  r = c.request("POST", "/sessions", R"({"expected_parties":[{"id":"p1","is_task_party":true}],
                                         "permutation_count":1,"rng_seed":0})");
  CHECK(r.status == 400);

  const auto sid = c.create_session(config());
  r = c.request("GET", "/sessions/" + sid + "/results?party=p1");
  CHECK(r.status == 425);
  CHECK(code_in(r.body) == "NOT_READY");

  r = c.request("POST", "/sessions/" + sid + "/submissions", R"({"party_id":"p1"})");
  CHECK(r.status == 400);
  CHECK(code_in(r.body) == "MALFORMED_GROUPS");

  auto stranger = data_submission();
  stranger.party_id = "p9";
  r = c.request("POST", "/sessions/" + sid + "/submissions", wire::dump(wire::submission_body(stranger)));
  CHECK(r.status == 403);
  CHECK(code_in(r.body) == "UNAUTHORIZED_PARTY");

  auto labelled = data_submission();
  labelled.features.push_back(column("p2.label", kRows, 2, true));
  r = c.request("POST", "/sessions/" + sid + "/submissions", wire::dump(wire::submission_body(labelled)));
  CHECK(r.status == 403);
  CHECK(code_in(r.body) == "LABEL_FROM_DATA_PARTY");

  c.submit(sid, task_submission());
  r = c.request("POST", "/sessions/" + sid + "/submissions", wire::dump(wire::submission_body(task_submission())));
  CHECK(r.status == 409);
  CHECK(code_in(r.body) == "DUPLICATE_SUBMISSION");

  try {
    c.submit(sid, task_submission());
    FAIL("expected rejection");
  } catch (const ProtocolError& e) {
    CHECK(e.code() == ErrorCode::DuplicateSubmission);
  }

  r = c.request("GET", "/sessions/" + sid + "/results");
  CHECK(r.status == 403);

  r = c.request("GET", "/nowhere");
  CHECK(r.status == 404);
  CHECK(code_in(r.body) == "UNKNOWN_SESSION");
}

TEST_CASE("disjoint ids fail the session with NO_OVERLAP") {
  Server srv;
  CoordinatorClient c(srv.url(), fast());
  const auto sid = c.create_session(config());
  c.submit(sid, task_submission({0, 1, 2, 3}));
  c.submit(sid, data_submission({20, 21, 22}));
  wait_done(c, sid);
  const auto st = c.status(sid);
  CHECK(st.phase == Phase::Failed);
  CHECK(st.failure == ErrorCode::NoOverlap);
  const auto r = c.request("GET", "/sessions/" + sid + "/results?party=p1");
  CHECK(r.status == 422);
  CHECK(code_in(r.body) == "NO_OVERLAP");
}

TEST_CASE("bearer token") {
  ServiceConfig cfg;
  cfg.auth_token = "s3cret";
  Server srv(cfg);
  CoordinatorClient anon(srv.url(), fast());
  const auto r = anon.request("POST", "/sessions", wire::dump(wire::create_session_body(config())));
  CHECK(r.status == 403);
  auto opts = fast();
  opts.auth_token = "s3cret";
  CoordinatorClient ok(srv.url(), opts);
  CHECK_FALSE(ok.create_session(config()).empty());
}

TEST_CASE("oversized bodies are refused") {
  ServiceConfig cfg;
  cfg.max_body_bytes = 64;
  Server srv(cfg);
  CoordinatorClient c(srv.url(), fast());
  const auto r = c.request("POST", "/sessions", std::string(1000, ' '));
  CHECK(r.status == 413);
}

TEST_CASE("unreachable coordinator") {
  CoordinatorClient c("http://127.0.0.1:1", fast());
  CHECK_THROWS_AS(c.create_session(config()), TransportError);
}

TEST_CASE("service config from file and environment") {
  const auto path = std::filesystem::temp_directory_path() / "psival_service.json";
  std::ofstream(path) << R"({"listen_host":"0.0.0.0","port":9001,"idle_timeout_seconds":30,"workers":2})";
  std::map<std::string, std::string> env;
  const EnvLookup lookup = [&](const char* name) -> const char* {
    const auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  };
  auto c = load_service_config(path, lookup);
  CHECK(c.host == "0.0.0.0");
  CHECK(c.port == 9001);
  CHECK(c.idle_timeout == std::chrono::seconds(30));
  CHECK(c.workers == 2);
  CHECK_FALSE(c.auth_token.has_value());

  env["PSIVAL_PORT"] = "9100";
  env["PSIVAL_AUTH_TOKEN"] = "tok";
  c = load_service_config(path, lookup);
  CHECK(c.port == 9100);
  CHECK(c.auth_token == "tok");

  env["PSIVAL_PORT"] = "99999";
  CHECK_THROWS_AS(load_service_config(path, lookup), ConfigError);
  env.erase("PSIVAL_PORT");
  env["PSIVAL_TLS_CERT"] = "/tmp/cert.pem";
  CHECK_THROWS_AS(load_service_config(path, lookup), ConfigError);
  env.clear();

  std::ofstream(path) << "{broken";
  CHECK_THROWS_AS(load_service_config(path, lookup), ConfigError);
  CHECK_THROWS_AS(load_service_config(std::filesystem::path("/nonexistent/x.json"), lookup), ConfigError);
  std::filesystem::remove(path);
  CHECK(load_service_config(std::nullopt, lookup).port == 8080);
}

TEST_CASE("backoff schedule") {
  const Backoff b{std::chrono::milliseconds(250), 2.0, std::chrono::milliseconds(8000), 60};
  CHECK(b.delay(0) == std::chrono::milliseconds(250));
  CHECK(b.delay(1) == std::chrono::milliseconds(500));
  CHECK(b.delay(5) == std::chrono::milliseconds(8000));
  CHECK(b.delay(30) == std::chrono::milliseconds(8000));
}

TEST_CASE("tls listener") {
  const auto dir = std::filesystem::temp_directory_path() / "psival_tls";
  std::filesystem::create_directories(dir);
  write_self_signed(dir / "cert.pem", dir / "key.pem");
  ServiceConfig cfg;
  cfg.tls_cert = dir / "cert.pem";
  cfg.tls_key = dir / "key.pem";
  Server srv(cfg);
  const std::string url = "https://127.0.0.1:" + std::to_string(srv.port);

  auto opts = fast();
  opts.ca_cert_path = (dir / "cert.pem").string();
  CoordinatorClient c(url, opts);
  const auto sid = c.create_session(config());
  c.submit(sid, task_submission());
  c.submit(sid, data_submission());
  wait_done(c, sid);
  CHECK(c.results(sid, "p2").common_id_count == 10);

  CoordinatorClient plain("http://127.0.0.1:" + std::to_string(srv.port), fast());
  CHECK_THROWS_AS(plain.create_session(config()), TransportError);
  std::filesystem::remove_all(dir);
}
