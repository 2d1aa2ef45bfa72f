#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "psival/psi/session.hpp"
#include "psival/psi/wire.hpp"

namespace psival::psi {

struct Backoff {
  std::chrono::milliseconds initial{250};
  double factor = 2.0;
  std::chrono::milliseconds cap{8000};
  int max_attempts = 6;

  std::chrono::milliseconds delay(int attempt) const;
};

struct ClientOptions {
  Backoff transport_retry{};
  std::optional<std::string> auth_token;
  std::chrono::seconds timeout{60};
  std::optional<std::string> ca_cert_path;
  // Observers for every request body sent and every response body received.
  std::function<void(std::string_view path, std::string_view body)> on_send;
  std::function<void(std::string_view path, std::string_view body)> on_receive;
};

/// HTTP client for the coordinator endpoints. Error responses surface as
/// ProtocolError carrying the server's error code; connection failures are
/// retried with backoff and then raised as TransportError.
class CoordinatorClient {
 public:
  explicit CoordinatorClient(std::string base_url, ClientOptions options = {});
  ~CoordinatorClient();

  std::string create_session(const SessionConfig& config);
  std::size_t submit(const std::string& session_id, const wire::Submission& submission);
  SessionStatus status(const std::string& session_id);
  PartyResults results(const std::string& session_id, const std::string& party_id);
  /// The exact response bytes of the results endpoint.
  std::string results_payload(const std::string& session_id, const std::string& party_id);

  struct Response {
    int status = 0;
    std::string body;
  };
  /// Raw request with transport retries but no error-body interpretation.
  Response request(std::string_view method, const std::string& path, const std::string& body = {});

 private:
  std::string call(std::string_view method, const std::string& path, const std::string& body);

  struct Impl;
  std::unique_ptr<Impl> impl_;
  ClientOptions options_;
};

}  // namespace psival::psi
