#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "psival/binning/binning.hpp"
#include "psival/errors.hpp"
#include "psival/ordering.hpp"
#include "psival/psi/counting.hpp"

namespace psival::psi {

struct PartySpec {
  std::string id;
  bool is_task_party = false;
};

struct SessionConfig {
  std::string session_id;
  std::vector<PartySpec> expected_parties;
  std::size_t permutation_count = 1;
  std::uint64_t rng_seed = 0;
  std::chrono::system_clock::time_point created_at{};
  // When non-empty these orderings are used verbatim instead of generating
  // permutation_count of them from rng_seed.
  std::vector<Ordering> pinned_orderings;
};

/// >= 2 distinct parties, exactly one task party, permutation_count >= 1.
/// Throws ProtocolError(MalformedGroups).
void validate(const SessionConfig& config);

enum class Phase { Collecting, Computing, Done, Failed };

std::string_view to_string(Phase phase) noexcept;
std::optional<Phase> parse_phase(std::string_view text) noexcept;

struct SessionStatus {
  Phase phase = Phase::Collecting;
  std::size_t parties_remaining = 0;
  std::optional<ErrorCode> failure;
};

/// Everything one party is allowed to see: counts for its own features.
struct PartyResults {
  std::uint64_t common_id_count = 0;
  FeatureResults features;

  bool operator==(const PartyResults&) const = default;
};

/// One valuation run. Thread-safe; phases only move forward
/// (collecting -> computing -> done | failed).
class Session {
 public:
  explicit Session(SessionConfig config);

  const SessionConfig& config() const noexcept { return config_; }

  /// Validates and stores one party's features; returns the number of
  /// parties still missing. The last submission moves the session to
  /// computing.
  std::size_t accept_submission(const std::string& party_id, std::vector<binning::FeatureGroups> features);

  SessionStatus status() const;

  /// Runs the intersection counting. No-op unless the phase is computing.
  void compute(unsigned workers);

  PartyResults fetch_results(const std::string& party_id) const;
  std::vector<Ordering> orderings() const;
  std::map<std::string, std::vector<binning::FeatureGroups>> submissions() const;

  /// Blocks until done or failed.
  void wait_settled() const;
  std::chrono::steady_clock::time_point last_activity() const;

  void mark_failed(ErrorCode code);

 private:
  void advance(Phase next);  // caller holds mu_
  void touch();              // caller holds mu_
  const PartySpec* find_party(const std::string& party_id) const;

  SessionConfig config_;
  mutable std::mutex mu_;
  mutable std::condition_variable settled_;
  Phase phase_ = Phase::Collecting;
  std::optional<ErrorCode> failure_;
  std::map<std::string, std::vector<binning::FeatureGroups>> submissions_;
  std::map<std::string, PartyResults> results_;
  std::vector<Ordering> orderings_;
  std::chrono::steady_clock::time_point last_activity_;
};

struct CoordinatorOptions {
  std::chrono::seconds idle_timeout{3600};
  std::optional<std::filesystem::path> snapshot_dir;
  unsigned workers = 0;  // 0: hardware concurrency
  // Run the counting inside the last submit() call instead of a background
  // thread.
  bool compute_inline = false;
};

/// The set of live sessions.
class Coordinator {
 public:
  explicit Coordinator(CoordinatorOptions options = {});
  ~Coordinator();

  Coordinator(const Coordinator&) = delete;
  Coordinator& operator=(const Coordinator&) = delete;

  /// Assigns a random id unless config.session_id is set; returns the id.
  std::string create_session(SessionConfig config);
  std::size_t submit(const std::string& session_id, const std::string& party_id,
                     std::vector<binning::FeatureGroups> features);
  SessionStatus status(const std::string& session_id) const;
  PartyResults results(const std::string& session_id, const std::string& party_id) const;
  /// The orderings a finished session used.
  std::vector<Ordering> orderings(const std::string& session_id) const;
  void wait(const std::string& session_id) const;

  /// Drops sessions idle for longer than the timeout; returns how many.
  std::size_t expire_idle(std::chrono::steady_clock::time_point now);
  std::size_t session_count() const;

 private:
  std::shared_ptr<Session> find(const std::string& session_id) const;
  void start_compute(const std::shared_ptr<Session>& session);
  void save_snapshot(const Session& session) const;
  void restore_snapshots();

  CoordinatorOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex workers_mu_;
  std::vector<std::jthread> compute_threads_;
};

}  // namespace psival::psi
