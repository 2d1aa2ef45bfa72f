#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "psival/psi/session.hpp"

namespace httplib {
class Server;
}

namespace psival::psi {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0: pick a free port
  std::optional<std::filesystem::path> tls_cert;
  std::optional<std::filesystem::path> tls_key;
  std::chrono::seconds idle_timeout{3600};
  std::size_t max_body_bytes = std::size_t{512} << 20;
  std::optional<std::filesystem::path> snapshot_dir;
  // When set, every request must carry "Authorization: Bearer <token>".
  std::optional<std::string> auth_token;
  unsigned workers = 0;
};

using EnvLookup = std::function<const char*(const char*)>;

/// Reads an optional JSON config file (keys: listen_host, port, tls_cert,
/// tls_key, idle_timeout_seconds, max_body_bytes, snapshot_dir, auth_token,
/// workers), then applies PSIVAL_* environment overrides of the same names
/// in upper case (PSIVAL_LISTEN_HOST, PSIVAL_PORT, ...).
ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env);

int http_status(ErrorCode code) noexcept;

/// The coordinator behind an HTTP(S) listener.
class CoordinatorService {
 public:
  explicit CoordinatorService(ServiceConfig config);
  ~CoordinatorService();

  CoordinatorService(const CoordinatorService&) = delete;
  CoordinatorService& operator=(const CoordinatorService&) = delete;

  /// Binds and serves on a background thread; returns the bound port.
  int start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();

  int port() const noexcept { return port_; }
  Coordinator& coordinator() noexcept { return coordinator_; }

 private:
  int bind();
  void register_routes();

  ServiceConfig config_;
  Coordinator coordinator_;
  std::unique_ptr<httplib::Server> server_;
  std::thread listener_;
  int port_ = 0;
};

}  // namespace psival::psi
