#include "psival/psi/client.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <thread>

namespace psival::psi {

std::chrono::milliseconds Backoff::delay(int attempt) const {
  const double ms = static_cast<double>(initial.count()) * std::pow(factor, attempt);
  return std::chrono::milliseconds(
      static_cast<std::int64_t>(std::min(ms, static_cast<double>(cap.count()))));
}

struct CoordinatorClient::Impl {
  explicit Impl(const std::string& base_url) : client(base_url) {}
  httplib::Client client;
};

CoordinatorClient::CoordinatorClient(std::string base_url, ClientOptions options)
    : impl_(std::make_unique<Impl>(base_url)), options_(std::move(options)) {
  if (!impl_->client.is_valid()) throw ConfigError("invalid coordinator url " + base_url);
  auto& c = impl_->client;
  c.set_connection_timeout(options_.timeout);
  c.set_read_timeout(options_.timeout);
  c.set_write_timeout(options_.timeout);
  if (options_.auth_token) c.set_bearer_token_auth(*options_.auth_token);
  if (options_.ca_cert_path) c.set_ca_cert_path(*options_.ca_cert_path);
}

CoordinatorClient::~CoordinatorClient() = default;

CoordinatorClient::Response CoordinatorClient::request(std::string_view method, const std::string& path,
                                                       const std::string& body) {
  if (options_.on_send && !body.empty()) options_.on_send(path, body);
  const int attempts = std::max(1, options_.transport_retry.max_attempts);
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(options_.transport_retry.delay(attempt - 1));
    httplib::Result res = method == "POST" ? impl_->client.Post(path, body, "application/json")
                                           : impl_->client.Get(path);
    if (res) {
      if (options_.on_receive) options_.on_receive(path, res->body);
      return Response{res->status, res->body};
    }
    last_error = httplib::to_string(res.error());
  }
  throw TransportError("coordinator unreachable after " + std::to_string(attempts) +
                       " attempts: " + last_error);
}

std::string CoordinatorClient::call(std::string_view method, const std::string& path, const std::string& body) {
  Response res = request(method, path, body);
  if (res.status >= 200 && res.status < 300) return res.body;
  ErrorCode code = ErrorCode::Internal;
  std::string message = "HTTP " + std::to_string(res.status);
  try {
    const auto j = wire::json::parse(res.body);
    if (auto parsed = parse_error_code(j.at("error_code").get<std::string>())) code = *parsed;
    message = j.value("message", message);
  } catch (const std::exception&) {
  }
  throw ProtocolError(code, message);
}

std::string CoordinatorClient::create_session(const SessionConfig& config) {
  const auto body = call("POST", "/sessions", wire::dump(wire::create_session_body(config)));
  return wire::json::parse(body).at("session_id").get<std::string>();
}

std::size_t CoordinatorClient::submit(const std::string& session_id, const wire::Submission& submission) {
  const auto body = call("POST", "/sessions/" + session_id + "/submissions",
                         wire::dump(wire::submission_body(submission)));
  return wire::json::parse(body).at("parties_remaining").get<std::size_t>();
}

SessionStatus CoordinatorClient::status(const std::string& session_id) {
  return wire::parse_status(wire::json::parse(call("GET", "/sessions/" + session_id + "/status", {})));
}

std::string CoordinatorClient::results_payload(const std::string& session_id, const std::string& party_id) {
  return call("GET", "/sessions/" + session_id + "/results?party=" + httplib::detail::encode_query_param(party_id),
              {});
}

PartyResults CoordinatorClient::results(const std::string& session_id, const std::string& party_id) {
  return wire::parse_results(wire::json::parse(results_payload(session_id, party_id)));
}

}  // namespace psival::psi
