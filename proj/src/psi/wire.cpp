#include "psival/psi/wire.hpp"

namespace psival::psi::wire {

namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw ProtocolError(ErrorCode::MalformedGroups, "malformed body: " + what);
}

const json& field(const json& obj, const char* name) {
  if (!obj.is_object()) malformed("expected an object");
  const auto it = obj.find(name);
  if (it == obj.end()) malformed(std::string("missing field '") + name + "'");
  return *it;
}

std::string string_field(const json& obj, const char* name) {
  const json& v = field(obj, name);
  if (!v.is_string()) malformed(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

bool bool_field(const json& obj, const char* name) {
  const json& v = field(obj, name);
  if (!v.is_boolean()) malformed(std::string("field '") + name + "' must be a boolean");
  return v.get<bool>();
}

std::uint64_t uint_field(const json& obj, const char* name) {
  const json& v = field(obj, name);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    malformed(std::string("field '") + name + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::int64_t int_field(const json& obj, const char* name) {
  const json& v = field(obj, name);
  if (!v.is_number_integer()) malformed(std::string("field '") + name + "' must be an integer");
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
    malformed(std::string("field '") + name + "' out of range");
  }
  return v.get<std::int64_t>();
}

const json& array_field(const json& obj, const char* name) {
  const json& v = field(obj, name);
  if (!v.is_array()) malformed(std::string("field '") + name + "' must be an array");
  return v;
}

}  // namespace

json create_session_body(const SessionConfig& config) {
  json parties = json::array();
  for (const auto& p : config.expected_parties) {
    parties.push_back({{"id", p.id}, {"is_task_party", p.is_task_party}});
  }
  json body = {{"expected_parties", std::move(parties)},
               {"permutation_count", config.permutation_count},
               {"rng_seed", config.rng_seed}};
  if (!config.pinned_orderings.empty()) body["permutations"] = orderings_body(config.pinned_orderings);
  return body;
}

SessionConfig parse_create_session(const json& body) {
  SessionConfig config;
  for (const json& p : array_field(body, "expected_parties")) {
    config.expected_parties.push_back(PartySpec{string_field(p, "id"), bool_field(p, "is_task_party")});
  }
  config.permutation_count = uint_field(body, "permutation_count");
  config.rng_seed = uint_field(body, "rng_seed");
  if (body.contains("permutations")) config.pinned_orderings = parse_orderings(body.at("permutations"));
  return config;
}

json submission_body(const Submission& submission) {
  json features = json::array();
  for (const auto& f : submission.features) {
    json groups = json::array();
    for (const auto& g : f.groups) {
      json members = json::array();
      for (const auto& id : g.members) members.push_back(id.hex());
      groups.push_back({{"bin_index", g.bin_index}, {"members", std::move(members)}});
    }
    features.push_back(
        {{"feature_label", f.feature_label}, {"is_label", f.is_label}, {"groups", std::move(groups)}});
  }
  return {{"party_id", submission.party_id}, {"features", std::move(features)}};
}

Submission parse_submission(const json& body) {
  Submission s;
  s.party_id = string_field(body, "party_id");
  for (const json& f : array_field(body, "features")) {
    binning::FeatureGroups fg;
    fg.feature_label = string_field(f, "feature_label");
    fg.owner = s.party_id;
    fg.is_label = bool_field(f, "is_label");
    for (const json& g : array_field(f, "groups")) {
      binning::IdGroup group;
      const std::int64_t bin = int_field(g, "bin_index");
      if (bin < INT32_MIN || bin > INT32_MAX) malformed("bin_index out of range");
      group.bin_index = static_cast<binning::BinIndex>(bin);
      const json& members = array_field(g, "members");
      group.members.reserve(members.size());
      for (const json& m : members) {
        if (!m.is_string()) malformed("member ids must be strings");
        auto id = ident::EncryptedId::parse_hex(m.get_ref<const std::string&>());
        if (!id) malformed("member id is not a 64-character lowercase hex digest");
        group.members.push_back(*id);
      }
      fg.groups.push_back(std::move(group));
    }
    s.features.push_back(std::move(fg));
  }
  return s;
}

json submission_ack_body(std::size_t parties_remaining) {
  return {{"accepted", true}, {"parties_remaining", parties_remaining}};
}

json status_body(const SessionStatus& status) {
  json body = {{"phase", to_string(status.phase)}, {"parties_remaining", status.parties_remaining}};
  if (status.failure) body["error_code"] = to_string(*status.failure);
  return body;
}

SessionStatus parse_status(const json& body) {
  SessionStatus s;
  const auto phase = parse_phase(string_field(body, "phase"));
  if (!phase) malformed("unknown phase");
  s.phase = *phase;
  s.parties_remaining = uint_field(body, "parties_remaining");
  if (body.contains("error_code")) {
    s.failure = parse_error_code(string_field(body, "error_code"));
    if (!s.failure) malformed("unknown error_code");
  }
  return s;
}

json results_body(const PartyResults& results) {
  json features = json::array();
  for (const auto& [label, perms] : results.features) {
    json jp = json::array();
    for (const auto& p : perms) {
      json quads = json::array();
      for (const auto& q : p.quads) quads.push_back({{"a", q.a}, {"b", q.b}, {"c", q.c}, {"d", q.d}});
      jp.push_back({{"permutation_index", p.permutation_index}, {"quads", std::move(quads)}});
    }
    features.push_back({{"feature_label", label}, {"permutations", std::move(jp)}});
  }
  return {{"common_id_count", results.common_id_count}, {"features", std::move(features)}};
}

PartyResults parse_results(const json& body) {
  PartyResults r;
  r.common_id_count = uint_field(body, "common_id_count");
  for (const json& f : array_field(body, "features")) {
    const std::string label = string_field(f, "feature_label");
    auto& perms = r.features[label];
    for (const json& p : array_field(f, "permutations")) {
      PermutationResult pr{label, uint_field(p, "permutation_index"), {}};
      for (const json& q : array_field(p, "quads")) {
        pr.quads.push_back(
            cmi::PsiQuad{uint_field(q, "a"), uint_field(q, "b"), uint_field(q, "c"), uint_field(q, "d")});
      }
      perms.push_back(std::move(pr));
    }
  }
  return r;
}

json error_body(ErrorCode code, const std::string& message) {
  return {{"error_code", to_string(code)}, {"message", message}};
}

json orderings_body(std::span<const Ordering> orderings) {
  json out = json::array();
  for (const auto& o : orderings) out.push_back(o);
  return out;
}

std::vector<Ordering> parse_orderings(const json& body) {
  if (!body.is_array()) malformed("permutations must be an array");
  std::vector<Ordering> out;
  for (const json& o : body) {
    if (!o.is_array()) malformed("each permutation must be an array of feature labels");
    Ordering ordering;
    for (const json& label : o) {
      if (!label.is_string()) malformed("feature labels must be strings");
      ordering.push_back(label.get<std::string>());
    }
    out.push_back(std::move(ordering));
  }
  return out;
}

std::string dump(const json& body) { return body.dump(); }

}  // namespace psival::psi::wire
