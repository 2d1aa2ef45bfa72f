#include "psival/psi/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <fstream>

#include "psival/psi/wire.hpp"

namespace psival::psi {

namespace {

using wire::json;

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(wire::dump(body), "application/json");
}

void reply_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  reply(res, http_status(code), wire::error_body(code, message));
}

std::string env_or(const EnvLookup& env, const char* name, const std::string& fallback) {
  const char* v = env(name);
  return (v != nullptr && *v != '\0') ? std::string(v) : fallback;
}

std::uint64_t parse_number(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(what);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("invalid value for ") + what + ": " + text);
  }
}

}  // namespace

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownSession:
      return 404;
    case ErrorCode::DuplicateSubmission:
      return 409;
    case ErrorCode::MalformedGroups:
      return 400;
    case ErrorCode::NotReady:
      return 425;
    case ErrorCode::NoOverlap:
      return 422;
    case ErrorCode::UnauthorizedParty:
    case ErrorCode::LabelFromDataParty:
      return 403;
    case ErrorCode::Internal:
      return 500;
  }
  return 500;
}

ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
  ServiceConfig c;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot read config file " + file->string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception&) {
      throw ConfigError("config file " + file->string() + " is not valid JSON");
    }
    try {
      if (j.contains("listen_host")) c.host = j.at("listen_host").get<std::string>();
      if (j.contains("port")) c.port = j.at("port").get<int>();
      if (j.contains("tls_cert")) c.tls_cert = j.at("tls_cert").get<std::string>();
      if (j.contains("tls_key")) c.tls_key = j.at("tls_key").get<std::string>();
      if (j.contains("idle_timeout_seconds")) {
        c.idle_timeout = std::chrono::seconds(j.at("idle_timeout_seconds").get<std::int64_t>());
      }
      if (j.contains("max_body_bytes")) c.max_body_bytes = j.at("max_body_bytes").get<std::size_t>();
      if (j.contains("snapshot_dir")) c.snapshot_dir = j.at("snapshot_dir").get<std::string>();
      if (j.contains("auth_token")) c.auth_token = j.at("auth_token").get<std::string>();
      if (j.contains("workers")) c.workers = j.at("workers").get<unsigned>();
    } catch (const json::exception& e) {
      throw ConfigError("config file " + file->string() + ": " + e.what());
    }
  }
  c.host = env_or(env, "PSIVAL_LISTEN_HOST", c.host);
  if (const char* v = env("PSIVAL_PORT"); v && *v) c.port = static_cast<int>(parse_number(v, "PSIVAL_PORT"));
  if (const char* v = env("PSIVAL_TLS_CERT"); v && *v) c.tls_cert = v;
  if (const char* v = env("PSIVAL_TLS_KEY"); v && *v) c.tls_key = v;
  if (const char* v = env("PSIVAL_IDLE_TIMEOUT_SECONDS"); v && *v) {
    c.idle_timeout = std::chrono::seconds(parse_number(v, "PSIVAL_IDLE_TIMEOUT_SECONDS"));
  }
  if (const char* v = env("PSIVAL_MAX_BODY_BYTES"); v && *v) {
    c.max_body_bytes = parse_number(v, "PSIVAL_MAX_BODY_BYTES");
  }
  if (const char* v = env("PSIVAL_SNAPSHOT_DIR"); v && *v) c.snapshot_dir = v;
  if (const char* v = env("PSIVAL_AUTH_TOKEN"); v && *v) c.auth_token = v;
  if (const char* v = env("PSIVAL_WORKERS"); v && *v) {
    c.workers = static_cast<unsigned>(parse_number(v, "PSIVAL_WORKERS"));
  }

  if (c.port < 0 || c.port > 65535) throw ConfigError("port out of range");
  if (c.tls_cert.has_value() != c.tls_key.has_value()) {
    throw ConfigError("tls_cert and tls_key must be given together");
  }
  return c;
}

CoordinatorService::CoordinatorService(ServiceConfig config)
    : config_(std::move(config)),
      coordinator_(CoordinatorOptions{config_.idle_timeout, config_.snapshot_dir, config_.workers, false}) {
  if (config_.tls_cert && config_.tls_key) {
    auto ssl = std::make_unique<httplib::SSLServer>(config_.tls_cert->c_str(), config_.tls_key->c_str());
    if (!ssl->is_valid()) throw ConfigError("cannot load TLS certificate or key");
    server_ = std::move(ssl);
  } else {
    server_ = std::make_unique<httplib::Server>();
  }
  server_->set_payload_max_length(config_.max_body_bytes);
  register_routes();
}

CoordinatorService::~CoordinatorService() { stop(); }

void CoordinatorService::register_routes() {
  auto guarded = [this](auto&& body) {
    return [this, body](const httplib::Request& req, httplib::Response& res) {
      if (config_.auth_token) {
        const std::string expected = "Bearer " + *config_.auth_token;
        if (req.get_header_value("Authorization") != expected) {
          reply_error(res, ErrorCode::UnauthorizedParty, "missing or invalid bearer token");
          return;
        }
      }
      coordinator_.expire_idle(std::chrono::steady_clock::now());
      try {
        body(req, res);
      } catch (const ProtocolError& e) {
        reply_error(res, e.code(), e.what());
      } catch (const json::exception&) {
        // parse errors echo body fragments; never return them
        reply_error(res, ErrorCode::MalformedGroups, "body is not valid JSON");
      } catch (const InputError& e) {
        reply_error(res, ErrorCode::MalformedGroups, e.what());
      } catch (const std::exception& e) {
        spdlog::error("{} {}: {}", req.method, req.path, e.what());
        reply_error(res, ErrorCode::Internal, "internal error");
      }
    };
  };

  server_->Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const SessionConfig config = wire::parse_create_session(json::parse(req.body));
                  const std::string id = coordinator_.create_session(config);
                  spdlog::info("session {} created for {} parties", id, config.expected_parties.size());
                  reply(res, 201, json{{"session_id", id}});
                }));

  server_->Post(R"(/sessions/([^/]+)/submissions)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  wire::Submission sub = wire::parse_submission(json::parse(req.body));
                  const std::string party = sub.party_id;
                  const std::size_t remaining =
                      coordinator_.submit(req.matches[1], sub.party_id, std::move(sub.features));
                  spdlog::info("session {}: submission from {} ({} remaining)", req.matches[1].str(), party,
                               remaining);
                  reply(res, 200, wire::submission_ack_body(remaining));
                }));

  server_->Get(R"(/sessions/([^/]+)/status)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 reply(res, 200, wire::status_body(coordinator_.status(req.matches[1])));
               }));

  server_->Get(R"(/sessions/([^/]+)/results)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 if (!req.has_param("party")) {
                   throw ProtocolError(ErrorCode::UnauthorizedParty, "missing party parameter");
                 }
                 reply(res, 200,
                       wire::results_body(coordinator_.results(req.matches[1], req.get_param_value("party"))));
               }));

  server_->set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 413) {
      res.set_content(wire::dump(wire::error_body(ErrorCode::MalformedGroups, "request body too large")),
                      "application/json");
    } else if (res.status == 404) {
      res.set_content(wire::dump(wire::error_body(ErrorCode::UnknownSession, "no such resource")),
                      "application/json");
    }
  });

  server_->set_logger([](const httplib::Request& req, const httplib::Response& res) {
    spdlog::debug("{} {} -> {}", req.method, req.path, res.status);
  });
}

int CoordinatorService::bind() {
  if (config_.port == 0) {
    port_ = server_->bind_to_any_port(config_.host);
  } else {
    port_ = server_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
  }
  if (port_ < 0) {
    throw ConfigError("cannot listen on " + config_.host + ":" + std::to_string(config_.port));
  }
  return port_;
}

int CoordinatorService::start() {
  bind();
  listener_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void CoordinatorService::run() {
  bind();
  spdlog::info("coordinator listening on {}:{}{}", config_.host, port_, config_.tls_cert ? " (TLS)" : "");
  server_->listen_after_bind();
}

void CoordinatorService::stop() {
  if (server_) server_->stop();
  if (listener_.joinable()) listener_.join();
}

}  // namespace psival::psi
