#include "psival/psi/session.hpp"

#include <openssl/rand.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "psival/ident/crypto.hpp"
#include "psival/psi/permutations.hpp"
#include "psival/psi/wire.hpp"

namespace psival::psi {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw ProtocolError(ErrorCode::MalformedGroups, what); }

std::string random_session_id() {
  std::array<std::uint8_t, 16> bytes{};
  if (RAND_bytes(bytes.data(), static_cast<int>(bytes.size())) != 1) {
    throw ProtocolError(ErrorCode::Internal, "no randomness for a session id");
  }
  return ident::to_hex(bytes);
}

// Sorted ID set of one feature; checks the groups are well formed.
std::vector<ident::EncryptedId> checked_members(const binning::FeatureGroups& f) {
  if (f.feature_label.empty()) malformed("empty feature label");
  if (f.groups.empty()) malformed("feature " + f.feature_label + " has no groups");
  std::set<binning::BinIndex> bins;
  std::vector<ident::EncryptedId> ids;
  ids.reserve(f.id_count());
  for (const auto& g : f.groups) {
    if (g.members.empty()) malformed("feature " + f.feature_label + " has an empty group");
    if (!bins.insert(g.bin_index).second) malformed("feature " + f.feature_label + " repeats a bin index");
    ids.insert(ids.end(), g.members.begin(), g.members.end());
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    malformed("feature " + f.feature_label + " has overlapping groups");
  }
  return ids;
}

}  // namespace

void validate(const SessionConfig& config) {
  if (config.expected_parties.size() < 2) malformed("a session needs at least two parties");
  std::set<std::string> ids;
  std::size_t task_parties = 0;
  for (const auto& p : config.expected_parties) {
    if (p.id.empty()) malformed("empty party id");
    if (!ids.insert(p.id).second) malformed("party " + p.id + " listed twice");
    if (p.is_task_party) ++task_parties;
  }
  if (task_parties != 1) malformed("exactly one task party is required");
  if (config.permutation_count < 1 && config.pinned_orderings.empty()) {
    malformed("permutation_count must be at least 1");
  }
}

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::Collecting:
      return "collecting";
    case Phase::Computing:
      return "computing";
    case Phase::Done:
      return "done";
    case Phase::Failed:
      return "failed";
  }
  return "failed";
}

std::optional<Phase> parse_phase(std::string_view text) noexcept {
  for (Phase p : {Phase::Collecting, Phase::Computing, Phase::Done, Phase::Failed}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

Session::Session(SessionConfig config) : config_(std::move(config)) {
  validate(config_);
  if (!config_.pinned_orderings.empty()) config_.permutation_count = config_.pinned_orderings.size();
  last_activity_ = std::chrono::steady_clock::now();
}

const PartySpec* Session::find_party(const std::string& party_id) const {
  for (const auto& p : config_.expected_parties) {
    if (p.id == party_id) return &p;
  }
  return nullptr;
}

void Session::advance(Phase next) {
  const bool allowed = (phase_ == Phase::Collecting && next == Phase::Computing) ||
                       (phase_ == Phase::Computing && (next == Phase::Done || next == Phase::Failed)) ||
                       (phase_ == Phase::Collecting && next == Phase::Failed);
  if (!allowed) {
    throw ProtocolError(ErrorCode::Internal, "illegal phase transition " + std::string(to_string(phase_)) +
                                                 " -> " + std::string(to_string(next)));
  }
  phase_ = next;
  if (next == Phase::Done || next == Phase::Failed) settled_.notify_all();
}

void Session::touch() { last_activity_ = std::chrono::steady_clock::now(); }

std::size_t Session::accept_submission(const std::string& party_id,
                                       std::vector<binning::FeatureGroups> features) {
  const PartySpec* party = find_party(party_id);
  if (party == nullptr) throw ProtocolError(ErrorCode::UnauthorizedParty, "unknown party " + party_id);

  std::size_t labels = 0;
  std::size_t plain = 0;
  for (auto& f : features) {
    f.owner = party_id;
    if (f.is_label) {
      if (!party->is_task_party) {
        throw ProtocolError(ErrorCode::LabelFromDataParty, "data party " + party_id + " submitted a label");
      }
      ++labels;
    } else {
      ++plain;
    }
  }
  if (plain == 0) malformed("party " + party_id + " submitted no features");
  if (labels > 1) malformed("more than one label column");
  if (party->is_task_party && labels == 0) malformed("the task party must submit the label column");

  std::optional<std::vector<ident::EncryptedId>> id_set;
  std::set<std::string> names;
  for (const auto& f : features) {
    if (!names.insert(f.feature_label).second) malformed("duplicate feature label " + f.feature_label);
    auto ids = checked_members(f);
    if (!id_set) {
      id_set = std::move(ids);
    } else if (ids != *id_set) {
      malformed("features of party " + party_id + " cover different id sets");
    }
  }
  for (auto& f : features) {
    for (auto& g : f.groups) std::sort(g.members.begin(), g.members.end());
    std::sort(f.groups.begin(), f.groups.end(),
              [](const auto& l, const auto& r) { return l.bin_index < r.bin_index; });
  }

  std::lock_guard lock(mu_);
  if (submissions_.contains(party_id)) {
    throw ProtocolError(ErrorCode::DuplicateSubmission, "party " + party_id + " already submitted");
  }
  if (phase_ != Phase::Collecting) {
    throw ProtocolError(ErrorCode::DuplicateSubmission, "session is no longer collecting");
  }
  for (const auto& [other, feats] : submissions_) {
    for (const auto& f : feats) {
      if (names.contains(f.feature_label)) malformed("feature label " + f.feature_label + " already in use");
    }
  }
  submissions_.emplace(party_id, std::move(features));
  touch();
  const std::size_t remaining = config_.expected_parties.size() - submissions_.size();
  if (remaining == 0) advance(Phase::Computing);
  return remaining;
}

SessionStatus Session::status() const {
  std::lock_guard lock(mu_);
  return SessionStatus{phase_, config_.expected_parties.size() - submissions_.size(), failure_};
}

void Session::compute(unsigned workers) {
  {
    std::lock_guard lock(mu_);
    if (phase_ != Phase::Computing) return;
  }
  // Submissions are frozen once the phase left collecting.
  std::vector<binning::FeatureGroups> all;
  for (const auto& [party, feats] : submissions_) all.insert(all.end(), feats.begin(), feats.end());

  try {
    const IdIndex index = IdIndex::build(all);
    std::vector<Ordering> orderings = config_.pinned_orderings;
    if (orderings.empty()) {
      orderings = generate_permutations(index.feature_labels(), config_.permutation_count, config_.rng_seed);
    }
    FeatureResults counted = run_psi_counting(index, orderings, workers);

    std::map<std::string, PartyResults> by_party;
    for (const auto& p : config_.expected_parties) by_party[p.id].common_id_count = index.common_count();
    for (auto& [label, perms] : counted) {
      by_party[index.feature(label).owner].features.emplace(label, std::move(perms));
    }

    std::lock_guard lock(mu_);
    results_ = std::move(by_party);
    orderings_ = std::move(orderings);
    touch();
    advance(Phase::Done);
  } catch (const ProtocolError& e) {
    spdlog::warn("session {} failed: {}", config_.session_id, to_string(e.code()));
    mark_failed(e.code() == ErrorCode::NoOverlap ? ErrorCode::NoOverlap : ErrorCode::MalformedGroups);
  } catch (const std::exception& e) {
    spdlog::error("session {} failed: {}", config_.session_id, e.what());
    mark_failed(ErrorCode::Internal);
  }
}

void Session::mark_failed(ErrorCode code) {
  std::lock_guard lock(mu_);
  if (phase_ == Phase::Failed || phase_ == Phase::Done) return;
  failure_ = code;
  touch();
  advance(Phase::Failed);
}

PartyResults Session::fetch_results(const std::string& party_id) const {
  if (find_party(party_id) == nullptr) {
    throw ProtocolError(ErrorCode::UnauthorizedParty, "unknown party " + party_id);
  }
  std::lock_guard lock(mu_);
  if (phase_ == Phase::Failed) {
    throw ProtocolError(failure_.value_or(ErrorCode::Internal), "session failed");
  }
  if (phase_ != Phase::Done) throw ProtocolError(ErrorCode::NotReady, "results are not ready");
  return results_.at(party_id);
}

std::vector<Ordering> Session::orderings() const {
  std::lock_guard lock(mu_);
  if (phase_ != Phase::Done) throw ProtocolError(ErrorCode::NotReady, "orderings are not ready");
  return orderings_;
}

std::map<std::string, std::vector<binning::FeatureGroups>> Session::submissions() const {
  std::lock_guard lock(mu_);
  return submissions_;
}

void Session::wait_settled() const {
  std::unique_lock lock(mu_);
  settled_.wait(lock, [&] { return phase_ == Phase::Done || phase_ == Phase::Failed; });
}

std::chrono::steady_clock::time_point Session::last_activity() const {
  std::lock_guard lock(mu_);
  return last_activity_;
}

// ---------------------------------------------------------------------------

Coordinator::Coordinator(CoordinatorOptions options) : options_(std::move(options)) {
  if (options_.workers == 0) options_.workers = std::max(1u, std::thread::hardware_concurrency());
  if (options_.snapshot_dir) {
    std::filesystem::create_directories(*options_.snapshot_dir);
    restore_snapshots();
  }
}

Coordinator::~Coordinator() {
  std::lock_guard lock(workers_mu_);
  compute_threads_.clear();  // joins
}

std::string Coordinator::create_session(SessionConfig config) {
  if (config.session_id.empty()) config.session_id = random_session_id();
  if (config.created_at == std::chrono::system_clock::time_point{}) {
    config.created_at = std::chrono::system_clock::now();
  }
  auto session = std::make_shared<Session>(std::move(config));
  const std::string id = session->config().session_id;
  {
    std::lock_guard lock(mu_);
    if (!sessions_.emplace(id, session).second) malformed("session id already exists");
  }
  save_snapshot(*session);
  return id;
}

std::shared_ptr<Session> Coordinator::find(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw ProtocolError(ErrorCode::UnknownSession, "unknown session");
  return it->second;
}

std::size_t Coordinator::submit(const std::string& session_id, const std::string& party_id,
                                std::vector<binning::FeatureGroups> features) {
  auto session = find(session_id);
  const std::size_t remaining = session->accept_submission(party_id, std::move(features));
  save_snapshot(*session);
  if (remaining == 0) start_compute(session);
  return remaining;
}

void Coordinator::start_compute(const std::shared_ptr<Session>& session) {
  auto run = [this, session] {
    session->compute(options_.workers);
    save_snapshot(*session);
  };
  if (options_.compute_inline) {
    run();
    return;
  }
  std::lock_guard lock(workers_mu_);
  compute_threads_.emplace_back(run);
}

SessionStatus Coordinator::status(const std::string& session_id) const { return find(session_id)->status(); }

PartyResults Coordinator::results(const std::string& session_id, const std::string& party_id) const {
  return find(session_id)->fetch_results(party_id);
}

std::vector<Ordering> Coordinator::orderings(const std::string& session_id) const {
  return find(session_id)->orderings();
}

void Coordinator::wait(const std::string& session_id) const {
  auto session = find(session_id);
  if (session->status().phase == Phase::Collecting) {
    throw ProtocolError(ErrorCode::NotReady, "session is still collecting submissions");
  }
  session->wait_settled();
}

std::size_t Coordinator::expire_idle(std::chrono::steady_clock::time_point now) {
  std::vector<std::string> expired;
  {
    std::lock_guard lock(mu_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      const auto phase = it->second->status().phase;
      if (phase != Phase::Computing && now - it->second->last_activity() > options_.idle_timeout) {
        expired.push_back(it->first);
        it = sessions_.erase(it);
      } else {
        ++it;
      }
    }
  }
  if (options_.snapshot_dir) {
    for (const auto& id : expired) std::filesystem::remove(*options_.snapshot_dir / (id + ".json"));
  }
  return expired.size();
}

std::size_t Coordinator::session_count() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

void Coordinator::save_snapshot(const Session& session) const {
  if (!options_.snapshot_dir) return;
  const auto& config = session.config();
  const SessionStatus st = session.status();
  wire::json subs = wire::json::object();
  for (auto& [party, feats] : session.submissions()) {
    subs[party] = wire::submission_body(wire::Submission{party, feats});
  }
  wire::json snap = {
      {"session_id", config.session_id},
      {"created_at",
       std::chrono::duration_cast<std::chrono::seconds>(config.created_at.time_since_epoch()).count()},
      {"config", wire::create_session_body(config)},
      {"status", wire::status_body(st)},
      {"submissions", std::move(subs)}};
  const auto path = *options_.snapshot_dir / (config.session_id + ".json");
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << wire::dump(snap);
    if (!out) {
      spdlog::error("cannot write snapshot for session {}", config.session_id);
      return;
    }
  }
  std::filesystem::rename(tmp, path);
}

void Coordinator::restore_snapshots() {
  for (const auto& entry : std::filesystem::directory_iterator(*options_.snapshot_dir)) {
    if (entry.path().extension() != ".json") continue;
    try {
      std::ifstream in(entry.path());
      const wire::json snap = wire::json::parse(in);
      SessionConfig config = wire::parse_create_session(snap.at("config"));
      config.session_id = snap.at("session_id").get<std::string>();
      config.created_at = std::chrono::system_clock::time_point(
          std::chrono::seconds(snap.at("created_at").get<std::int64_t>()));
      const SessionStatus st = wire::parse_status(snap.at("status"));

      auto session = std::make_shared<Session>(std::move(config));
      for (const auto& [party, body] : snap.at("submissions").items()) {
        auto sub = wire::parse_submission(body);
        session->accept_submission(sub.party_id, std::move(sub.features));
      }
      if (st.phase == Phase::Failed) session->mark_failed(st.failure.value_or(ErrorCode::Internal));
      {
        std::lock_guard lock(mu_);
        sessions_.emplace(session->config().session_id, session);
      }
      // Counting is deterministic, so done sessions are simply recomputed.
      if (session->status().phase == Phase::Computing) start_compute(session);
      spdlog::info("restored session {} ({})", session->config().session_id, to_string(st.phase));
    } catch (const std::exception& e) {
      spdlog::warn("skipping unreadable snapshot {}: {}", entry.path().filename().string(), e.what());
    }
  }
}

}  // namespace psival::psi
