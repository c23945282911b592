#pragma once

#include <chrono>
#include <functional>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "capsa/catalog.hpp"

namespace capsa {

// ---------------------------------------------------------------------------
// governance profiles
// ---------------------------------------------------------------------------

enum class SelectorKind { All, Tools, Tags };

struct GovernanceProfile {
  std::string profile_id;
  std::set<Lifecycle> allowed_lifecycles = {Lifecycle::Approved};
  SelectorKind selector = SelectorKind::All;
  std::set<std::string> selector_values;
  bool require_sandbox_validated = false;
  int max_session_tools = 6;
  int session_ttl_seconds = 900;
  std::set<std::string> credential_scope;  // secret-reference names
  double admission_ratio = 0.35;           // admit cards scoring >= ratio * top
};

inline void validate_profile(const GovernanceProfile& profile) {
  if (profile.max_session_tools < 1) {
    throw Error(ErrorCode::UNKNOWN_PROFILE, profile.profile_id + ": max_session_tools < 1");
  }
  if (profile.allowed_lifecycles.count(Lifecycle::Blocked)) {
    throw Error(ErrorCode::UNKNOWN_PROFILE, profile.profile_id + ": blocked is never resolvable");
  }
}

inline ojson to_json(const GovernanceProfile& p) {
  ojson j;
  j["profile_id"] = p.profile_id;
  j["allowed_lifecycles"] = ojson::array();
  for (const auto& state : p.allowed_lifecycles) j["allowed_lifecycles"].push_back(to_string(state));
  ojson selector;
  selector["kind"] = p.selector == SelectorKind::All ? "all"
                     : p.selector == SelectorKind::Tools ? "tools"
                                                         : "tags";
  selector["values"] = std::vector<std::string>(p.selector_values.begin(), p.selector_values.end());
  j["selector"] = selector;
  j["require_sandbox_validated"] = p.require_sandbox_validated;
  j["max_session_tools"] = p.max_session_tools;
  j["session_ttl_seconds"] = p.session_ttl_seconds;
  j["credential_scope"] =
      std::vector<std::string>(p.credential_scope.begin(), p.credential_scope.end());
  j["admission_ratio"] = p.admission_ratio;
  return j;
}

inline GovernanceProfile profile_from_json(const ojson& j) {
  GovernanceProfile p;
  p.profile_id = j.at("profile_id").get<std::string>();
  if (j.contains("allowed_lifecycles")) {
    p.allowed_lifecycles.clear();
    for (const auto& s : j["allowed_lifecycles"]) {
      auto state = lifecycle_from(s.get<std::string>());
      if (state) p.allowed_lifecycles.insert(*state);
    }
  }
  if (j.contains("selector")) {
    std::string kind = j["selector"].value("kind", "all");
    p.selector = kind == "tools" ? SelectorKind::Tools
                 : kind == "tags" ? SelectorKind::Tags
                                  : SelectorKind::All;
    for (const auto& v : j["selector"].value("values", std::vector<std::string>{})) {
      p.selector_values.insert(v);
    }
  }
  p.require_sandbox_validated = j.value("require_sandbox_validated", false);
  p.max_session_tools = j.value("max_session_tools", 6);
  p.session_ttl_seconds = j.value("session_ttl_seconds", 900);
  for (const auto& v : j.value("credential_scope", std::vector<std::string>{})) {
    p.credential_scope.insert(v);
  }
  p.admission_ratio = j.value("admission_ratio", 0.35);
  return p;
}

inline GovernanceProfile make_default_profile(const std::string& profile_id = "default") {
  GovernanceProfile p;
  p.profile_id = profile_id;
  return p;
}

// ---------------------------------------------------------------------------
// sessions
// ---------------------------------------------------------------------------

enum class SessionState { Active, Expired, Closed };

struct ResolvedTool {
  std::string tool_id;
  int version = 1;
  double score = 0.0;
};

struct RoutingSession {
  std::string session_id;
  std::string profile_id;
  std::string query;
  std::vector<ResolvedTool> resolved;
  int64_t created_at = 0;
  int64_t expires_at = 0;
  SessionState state = SessionState::Active;

  bool contains(const std::string& tool_id) const {
    return std::any_of(resolved.begin(), resolved.end(),
                       [&](const ResolvedTool& t) { return t.tool_id == tool_id; });
  }
};

inline ojson to_json(const RoutingSession& s) {
  ojson j;
  j["session_id"] = s.session_id;
  j["profile_id"] = s.profile_id;
  j["query"] = s.query;
  j["resolved"] = ojson::array();
  for (const auto& t : s.resolved) {
    ojson r;
    r["tool_id"] = t.tool_id;
    r["version"] = t.version;
    r["score"] = t.score;
    j["resolved"].push_back(r);
  }
  j["created_at"] = format_utc(s.created_at);
  j["expires_at"] = format_utc(s.expires_at);
  j["state"] = s.state == SessionState::Active ? "active"
               : s.state == SessionState::Expired ? "expired"
                                                  : "closed";
  return j;
}

inline RoutingSession session_from_json(const ojson& j) {
  RoutingSession s;
  s.session_id = j.at("session_id").get<std::string>();
  s.profile_id = j.at("profile_id").get<std::string>();
  s.query = j.value("query", "");
  for (const auto& r : j.value("resolved", ojson::array())) {
    s.resolved.push_back({r.at("tool_id").get<std::string>(), r.value("version", 1),
                          r.value("score", 0.0)});
  }
  s.created_at = parse_utc(j.at("created_at").get<std::string>());
  s.expires_at = parse_utc(j.at("expires_at").get<std::string>());
  std::string state = j.value("state", "active");
  s.state = state == "expired" ? SessionState::Expired
            : state == "closed" ? SessionState::Closed
                                : SessionState::Active;
  return s;
}

// ---------------------------------------------------------------------------
// audit
// ---------------------------------------------------------------------------

enum class AuditEvent { Search, Resolve, Describe, Call, Deny, GovernanceChange };
enum class AuditOutcome { Ok, Error };

inline std::string to_string(AuditEvent event) {
  switch (event) {
    case AuditEvent::Search: return "search";
    case AuditEvent::Resolve: return "resolve";
    case AuditEvent::Describe: return "describe";
    case AuditEvent::Call: return "call";
    case AuditEvent::Deny: return "deny";
    case AuditEvent::GovernanceChange: return "governance_change";
  }
  return "search";
}

inline std::optional<AuditEvent> audit_event_from(std::string_view s) {
  if (s == "search") return AuditEvent::Search;
  if (s == "resolve") return AuditEvent::Resolve;
  if (s == "describe") return AuditEvent::Describe;
  if (s == "call") return AuditEvent::Call;
  if (s == "deny") return AuditEvent::Deny;
  if (s == "governance_change") return AuditEvent::GovernanceChange;
  return std::nullopt;
}

// Records carry argument *names* only. Construction rejects anything that
// does not look like a bare name, so values cannot leak in through this type.
struct AuditRecord {
  int64_t timestamp = 0;
  AuditEvent event = AuditEvent::Search;
  std::string profile_id;
  std::optional<std::string> session_id;
  std::optional<std::string> tool_id;
  std::vector<std::string> argument_names;
  AuditOutcome outcome = AuditOutcome::Ok;
  std::optional<std::string> error_code;
  std::optional<std::string> actor;
};

inline AuditRecord make_audit_record(int64_t timestamp, AuditEvent event,
                                     std::string profile_id,
                                     std::optional<std::string> session_id,
                                     std::optional<std::string> tool_id,
                                     std::vector<std::string> argument_names,
                                     AuditOutcome outcome,
                                     std::optional<std::string> error_code = std::nullopt,
                                     std::optional<std::string> actor = std::nullopt) {
  for (const auto& name : argument_names) {
    bool plain = !name.empty() &&
                 std::all_of(name.begin(), name.end(), [](char c) {
                   return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
                 });
    if (!plain) {
      throw Error(ErrorCode::INVALID_AUDIT_RECORD,
                  "argument_names must contain bare names, got '" + name + "'");
    }
  }
  if (outcome == AuditOutcome::Error && !error_code) {
    throw Error(ErrorCode::INVALID_AUDIT_RECORD, "error outcome requires an error_code");
  }
  return AuditRecord{timestamp, event,   std::move(profile_id), std::move(session_id),
                     std::move(tool_id), std::move(argument_names), outcome,
                     std::move(error_code), std::move(actor)};
}

inline ojson to_json(const AuditRecord& r) {
  ojson j;
  j["timestamp"] = format_utc(r.timestamp);
  j["event"] = to_string(r.event);
  j["profile_id"] = r.profile_id;
  if (r.session_id) j["session_id"] = *r.session_id;
  if (r.tool_id) j["tool_id"] = *r.tool_id;
  j["argument_names"] = r.argument_names;
  j["outcome"] = r.outcome == AuditOutcome::Ok ? "ok" : "error";
  if (r.error_code) j["error_code"] = *r.error_code;
  if (r.actor) j["actor"] = *r.actor;
  return j;
}

inline AuditRecord audit_record_from_json(const ojson& j) {
  AuditRecord r;
  r.timestamp = parse_utc(j.at("timestamp").get<std::string>());
  r.event = audit_event_from(j.at("event").get<std::string>()).value_or(AuditEvent::Search);
  r.profile_id = j.value("profile_id", "");
  if (j.contains("session_id")) r.session_id = j["session_id"].get<std::string>();
  if (j.contains("tool_id")) r.tool_id = j["tool_id"].get<std::string>();
  if (j.contains("argument_names")) {
    r.argument_names = j["argument_names"].get<std::vector<std::string>>();
  }
  r.outcome = j.value("outcome", "ok") == "ok" ? AuditOutcome::Ok : AuditOutcome::Error;
  if (j.contains("error_code")) r.error_code = j["error_code"].get<std::string>();
  if (j.contains("actor")) r.actor = j["actor"].get<std::string>();
  return r;
}

struct AuditFilter {
  std::optional<int64_t> from;
  std::optional<int64_t> to;
  std::optional<AuditEvent> event;
  std::optional<std::string> tool_id;
  std::optional<std::string> session_id;
};

// ---------------------------------------------------------------------------
// scoring (pure)
// ---------------------------------------------------------------------------

struct ScoredCard {
  const CatalogCard* card;
  int64_t score;
};

struct RankedCard {
  CatalogCard card;
  int64_t score;
};

// score = 3*|Q ∩ name| + 2*|Q ∩ tags| + 2*|Q ∩ summary| + 1*|Q ∩ params|
// over lowercase word tokens; zero-score cards are excluded; ties break on
// tool_id ascending.
inline std::vector<ScoredCard> score_cards(const std::string& query,
                                           const std::vector<CatalogCard>& cards) {
  auto query_tokens_vec = tokenize(query);
  std::unordered_set<std::string> query_tokens(query_tokens_vec.begin(), query_tokens_vec.end());
  std::vector<ScoredCard> out;
  if (query_tokens.empty()) return out;

  auto overlap = [&](const std::vector<std::string>& tokens) {
    std::unordered_set<std::string> seen;
    int64_t n = 0;
    for (const auto& token : tokens) {
      if (query_tokens.count(token) && seen.insert(token).second) ++n;
    }
    return n;
  };

  for (const auto& card : cards) {
    std::vector<std::string> tag_tokens;
    for (const auto& tag : card.tags) {
      for (auto& t : tokenize(tag)) tag_tokens.push_back(std::move(t));
    }
    std::vector<std::string> param_tokens;
    for (const auto& param : card.param_names) {
      for (auto& t : tokenize(param)) param_tokens.push_back(std::move(t));
    }
    int64_t score = 3 * overlap(tokenize(card.name)) + 2 * overlap(tag_tokens) +
                    2 * overlap(tokenize(card.summary)) + 1 * overlap(param_tokens);
    if (score > 0) out.push_back({&card, score});
  }

  std::sort(out.begin(), out.end(), [](const ScoredCard& a, const ScoredCard& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.card->tool_id < b.card->tool_id;
  });
  return out;
}

// ---------------------------------------------------------------------------
// router
// ---------------------------------------------------------------------------

struct CallOutcome {
  int exit_status = 0;
  std::string output;
};

// (tool_id, version, arguments) -> outcome. The router never interprets
// tool output; it only gates and audits the call.
using Executor = std::function<CallOutcome(const std::string&, int, const ojson&)>;

using Clock = std::function<int64_t()>;
using IdGenerator = std::function<std::string()>;

inline Clock system_clock_seconds() {
  return [] {
    return static_cast<int64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
  };
}

inline IdGenerator random_session_ids() {
  auto state = std::make_shared<std::mt19937_64>(std::random_device{}());
  return [state] {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "s-%016llx",
                  static_cast<unsigned long long>((*state)()));
    return std::string(buf);
  };
}

struct GovernanceAction {
  enum class Kind { Lifecycle, Pin, Unpin, MapCredential };
  Kind kind = Kind::Lifecycle;
  LifecycleAction lifecycle_action = LifecycleAction::Submit;
  int pin_version = 0;
  std::string credential_alias;
  std::string secret_reference;
};

// Routing state is the catalog snapshot plus the session store and audit
// log. Mutating entry points (resolve, governance, audit appends) must be
// serialized by the caller; reads against the snapshot are safe to share.
class Router {
 public:
  Router(Catalog& catalog, fs::path root, Clock clock = system_clock_seconds(),
         IdGenerator session_ids = random_session_ids())
      : catalog_(catalog),
        root_(std::move(root)),
        clock_(std::move(clock)),
        session_ids_(std::move(session_ids)) {
    std::error_code ec;
    fs::create_directories(root_ / "profiles", ec);
    fs::create_directories(root_ / "sessions", ec);
    fs::create_directories(root_ / "audit", ec);
  }

  const Catalog& catalog() const { return catalog_; }
  int64_t now() const { return clock_(); }

  // -- profiles --------------------------------------------------------

  void save_profile(const GovernanceProfile& profile) {
    validate_profile(profile);
    write_file_atomic(root_ / "profiles" / (profile.profile_id + ".json"),
                      to_json(profile).dump(2) + "\n");
  }

  GovernanceProfile load_profile(const std::string& profile_id) const {
    auto text = try_read_file(root_ / "profiles" / (profile_id + ".json"));
    if (!text) throw Error(ErrorCode::UNKNOWN_PROFILE, profile_id);
    auto profile = profile_from_json(ojson::parse(*text));
    validate_profile(profile);
    return profile;
  }

  std::vector<GovernanceProfile> list_profiles() const {
    std::vector<GovernanceProfile> profiles;
    if (!fs::exists(root_ / "profiles")) return profiles;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(root_ / "profiles")) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      try {
        profiles.push_back(profile_from_json(ojson::parse(read_file(file))));
      } catch (...) {
        continue;  // unreadable profile files are skipped, not fatal
      }
    }
    return profiles;
  }

  // -- candidate filtering ----------------------------------------------

  // Lifecycle, selector, and sandbox-evidence filter; deterministic order
  // (tool_id ascending, which catalog cards already maintain).
  std::vector<CatalogCard> filter_candidates(const GovernanceProfile& profile) const {
    std::vector<CatalogCard> out;
    for (const auto& card : catalog_.cards) {
      if (!profile.allowed_lifecycles.count(card.lifecycle)) continue;
      if (profile.selector == SelectorKind::Tools &&
          !profile.selector_values.count(card.tool_id)) {
        continue;
      }
      if (profile.selector == SelectorKind::Tags) {
        bool tagged = std::any_of(card.tags.begin(), card.tags.end(), [&](const std::string& t) {
          return profile.selector_values.count(t) > 0;
        });
        if (!tagged) continue;
      }
      if (profile.require_sandbox_validated) {
        const ToolCapsule* capsule = catalog_.find_capsule(card.tool_id);
        if (!capsule || !capsule->governance.sandbox_validated) continue;
      }
      out.push_back(card);
    }
    return out;
  }

  // -- search / resolve ---------------------------------------------------

  std::vector<RankedCard> search(const std::string& profile_id, const std::string& query,
                                 size_t limit) {
    auto profile = load_profile(profile_id);
    auto candidates = filter_candidates(profile);
    auto scored = score_cards(query, candidates);
    std::vector<RankedCard> ranked;
    for (const auto& s : scored) {
      if (ranked.size() >= limit) break;
      ranked.push_back({*s.card, s.score});
    }
    append_audit(make_audit_record(clock_(), AuditEvent::Search, profile_id, std::nullopt,
                                   std::nullopt, {}, AuditOutcome::Ok));
    return ranked;
  }

  RoutingSession resolve_session(const std::string& profile_id, const std::string& query,
                                 std::optional<int> k_override = std::nullopt) {
    auto profile = load_profile(profile_id);
    if (query.empty()) throw Error(ErrorCode::EMPTY_QUERY, "resolve requires a query");

    auto candidates = filter_candidates(profile);
    auto ranked = score_cards(query, candidates);

    int k = std::min(k_override.value_or(profile.max_session_tools), profile.max_session_tools);

    RoutingSession session;
    session.session_id = session_ids_();
    session.profile_id = profile_id;
    session.query = query;
    session.created_at = clock_();
    session.expires_at = session.created_at + profile.session_ttl_seconds;
    session.state = SessionState::Active;

    if (!ranked.empty() && k > 0) {
      double threshold = profile.admission_ratio * static_cast<double>(ranked.front().score);
      for (const auto& scored : ranked) {
        if (static_cast<double>(scored.score) < threshold) break;
        if (static_cast<int>(session.resolved.size()) >= k) break;
        session.resolved.push_back({scored.card->tool_id, scored.card->version,
                                    static_cast<double>(scored.score)});
      }
    }

    persist_session(session);
    sessions_[session.session_id] = session;
    append_audit(make_audit_record(session.created_at, AuditEvent::Resolve, profile_id,
                                   session.session_id, std::nullopt, {}, AuditOutcome::Ok));
    return session;
  }

  void close_session(const std::string& session_id) {
    RoutingSession& session = session_ref(session_id);
    session.state = SessionState::Closed;
    persist_session(session);
  }

  RoutingSession get_session(const std::string& session_id) {
    RoutingSession session = session_ref(session_id);
    if (session.state == SessionState::Active && clock_() >= session.expires_at) {
      session.state = SessionState::Expired;
    }
    return session;
  }

  // -- lazy schema ---------------------------------------------------------

  std::string describe_tool(const std::string& session_id, const std::string& tool_id) {
    RoutingSession& session = session_ref(session_id);

    if (auto denial = session_denial(session)) {
      deny(session, tool_id, *denial, {});
      throw Error(*denial, session_id);
    }
    if (!session.contains(tool_id)) {
      deny(session, tool_id, ErrorCode::NOT_IN_SESSION, {});
      throw Error(ErrorCode::NOT_IN_SESSION, tool_id);
    }
    const ToolCapsule* capsule = catalog_.find_capsule(tool_id);
    if (!capsule) {
      deny(session, tool_id, ErrorCode::UNKNOWN_TOOL, {});
      throw Error(ErrorCode::UNKNOWN_TOOL, tool_id);
    }
    append_audit(make_audit_record(clock_(), AuditEvent::Describe, session.profile_id,
                                   session_id, tool_id, {}, AuditOutcome::Ok));
    return render_full_schema(*capsule);
  }

  // -- gated calls -----------------------------------------------------------

  // Denies when the tool is outside the session, the session is gone, the
  // tool's lifecycle regressed since resolution, or a required credential
  // has no in-scope mapping. Every path appends exactly one call or deny
  // record carrying argument names only.
  CallOutcome gate_call(const std::string& session_id, const std::string& tool_id,
                        const std::vector<std::string>& argument_names, const ojson& arguments,
                        const Executor& executor) {
    RoutingSession& session = session_ref(session_id);
    const GovernanceProfile profile = load_profile(session.profile_id);

    if (auto denial = session_denial(session)) {
      deny(session, tool_id, *denial, argument_names);
      throw Error(*denial, session_id);
    }
    if (!session.contains(tool_id)) {
      deny(session, tool_id, ErrorCode::NOT_IN_SESSION, argument_names);
      throw Error(ErrorCode::NOT_IN_SESSION, tool_id);
    }

    const ToolCapsule* capsule = catalog_.find_capsule(tool_id);
    if (!capsule) {
      deny(session, tool_id, ErrorCode::UNKNOWN_TOOL, argument_names);
      throw Error(ErrorCode::UNKNOWN_TOOL, tool_id);
    }
    // Lifecycle is rechecked at call time; sessions must not outlive
    // governance changes.
    if (!profile.allowed_lifecycles.count(capsule->governance.lifecycle)) {
      deny(session, tool_id, ErrorCode::LIFECYCLE_CHANGED, argument_names);
      throw Error(ErrorCode::LIFECYCLE_CHANGED, tool_id);
    }
    for (const auto& cred : capsule->contract.credentials) {
      auto mapping = capsule->governance.credential_mappings.find(cred.env_alias);
      if (mapping == capsule->governance.credential_mappings.end() ||
          !profile.credential_scope.count(mapping->second)) {
        deny(session, tool_id, ErrorCode::MISSING_CREDENTIAL_MAPPING, argument_names);
        throw Error(ErrorCode::MISSING_CREDENTIAL_MAPPING, cred.env_alias);
      }
    }

    int version = 1;
    for (const auto& resolved : session.resolved) {
      if (resolved.tool_id == tool_id) version = resolved.version;
    }

    try {
      CallOutcome outcome = executor(tool_id, version, arguments);
      append_audit(make_audit_record(clock_(), AuditEvent::Call, session.profile_id, session_id,
                                     tool_id, argument_names, AuditOutcome::Ok));
      return outcome;
    } catch (const Error&) {
      append_audit(make_audit_record(clock_(), AuditEvent::Call, session.profile_id, session_id,
                                     tool_id, argument_names, AuditOutcome::Error,
                                     std::string(error_code_name(ErrorCode::EXECUTOR_FAILURE))));
      throw;
    } catch (const std::exception& e) {
      append_audit(make_audit_record(clock_(), AuditEvent::Call, session.profile_id, session_id,
                                     tool_id, argument_names, AuditOutcome::Error,
                                     std::string(error_code_name(ErrorCode::EXECUTOR_FAILURE))));
      throw Error(ErrorCode::EXECUTOR_FAILURE, e.what());
    }
  }

  // -- governance -------------------------------------------------------------

  GovernanceState apply_governance_action(const std::string& tool_id,
                                          const GovernanceAction& action,
                                          const std::string& actor) {
    auto entry = catalog_.entries.find(tool_id);
    if (entry == catalog_.entries.end() || entry->second.empty()) {
      throw Error(ErrorCode::UNKNOWN_TOOL, tool_id);
    }

    int version = catalog_.effective_version(tool_id);
    fs::path capsule_path = detail::version_dir(catalog_, tool_id, version) / "capsule.json";
    ToolCapsule capsule = capsule_from_json(ojson::parse(read_file(capsule_path)));

    std::vector<std::string> audit_names;
    switch (action.kind) {
      case GovernanceAction::Kind::Lifecycle:
        capsule.governance.lifecycle =
            transition_lifecycle(capsule.governance.lifecycle, action.lifecycle_action);
        audit_names = {to_string(action.lifecycle_action)};
        break;
      case GovernanceAction::Kind::Pin: {
        const auto& versions = entry->second;
        if (std::find(versions.begin(), versions.end(), action.pin_version) == versions.end()) {
          throw Error(ErrorCode::UNKNOWN_TOOL,
                      tool_id + " has no version " + std::to_string(action.pin_version));
        }
        catalog_.pinned[tool_id] = action.pin_version;
        capsule.governance.pinned_version = action.pin_version;
        audit_names = {"pin"};
        break;
      }
      case GovernanceAction::Kind::Unpin:
        catalog_.pinned.erase(tool_id);
        capsule.governance.pinned_version.reset();
        audit_names = {"unpin"};
        break;
      case GovernanceAction::Kind::MapCredential:
        capsule.governance.credential_mappings[action.credential_alias] = action.secret_reference;
        audit_names = {action.credential_alias};
        break;
    }

    write_file_atomic(capsule_path, canonical_capsule_json(capsule));
    detail::write_index(catalog_);
    detail::refresh_tool(catalog_, tool_id);

    append_audit(make_audit_record(clock_(), AuditEvent::GovernanceChange, "", std::nullopt,
                                   tool_id, audit_names, AuditOutcome::Ok, std::nullopt, actor));
    return catalog_.capsules.at(tool_id).governance;
  }

  // -- audit -------------------------------------------------------------------

  // Day-partitioned append-only JSONL. A failed append fails the operation
  // that produced the record; auditing is not best-effort.
  void append_audit(const AuditRecord& record) {
    fs::path file = root_ / "audit" / ("audit-" + format_utc_date(record.timestamp) + ".jsonl");
    std::ofstream out(file, std::ios::app | std::ios::binary);
    if (!out) throw Error(ErrorCode::AUDIT_IO_FAILURE, file.string());
    out << to_json(record).dump() << "\n";
    out.flush();
    if (!out) throw Error(ErrorCode::AUDIT_IO_FAILURE, file.string());
  }

  std::vector<AuditRecord> query_audit(const AuditFilter& filter) const {
    std::vector<AuditRecord> out;
    if (!fs::exists(root_ / "audit")) return out;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(root_ / "audit")) {
      if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      std::ifstream in(file, std::ios::binary);
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto parsed = ojson::parse(line, nullptr, false);
        if (parsed.is_discarded()) continue;
        AuditRecord record = audit_record_from_json(parsed);
        if (filter.from && record.timestamp < *filter.from) continue;
        if (filter.to && record.timestamp > *filter.to) continue;
        if (filter.event && record.event != *filter.event) continue;
        if (filter.tool_id && record.tool_id != filter.tool_id) continue;
        if (filter.session_id && record.session_id != filter.session_id) continue;
        out.push_back(std::move(record));
      }
    }
    return out;
  }

 private:
  RoutingSession& session_ref(const std::string& session_id) {
    auto it = sessions_.find(session_id);
    if (it != sessions_.end()) return it->second;
    auto text = try_read_file(root_ / "sessions" / (session_id + ".json"));
    if (!text) throw Error(ErrorCode::UNKNOWN_SESSION, session_id);
    auto [inserted, _] = sessions_.emplace(session_id, session_from_json(ojson::parse(*text)));
    return inserted->second;
  }

  std::optional<ErrorCode> session_denial(RoutingSession& session) {
    if (session.state == SessionState::Closed) return ErrorCode::SESSION_EXPIRED;
    if (session.state == SessionState::Active && clock_() >= session.expires_at) {
      session.state = SessionState::Expired;
      persist_session(session);
    }
    if (session.state == SessionState::Expired) return ErrorCode::SESSION_EXPIRED;
    return std::nullopt;
  }

  void deny(const RoutingSession& session, const std::string& tool_id, ErrorCode code,
            const std::vector<std::string>& argument_names) {
    append_audit(make_audit_record(clock_(), AuditEvent::Deny, session.profile_id,
                                   session.session_id, tool_id, argument_names,
                                   AuditOutcome::Error, std::string(error_code_name(code))));
  }

  void persist_session(const RoutingSession& session) {
    write_file_atomic(root_ / "sessions" / (session.session_id + ".json"),
                      to_json(session).dump(2) + "\n");
  }

  Catalog& catalog_;
  fs::path root_;
  Clock clock_;
  IdGenerator session_ids_;
  std::unordered_map<std::string, RoutingSession> sessions_;
};

}  // namespace capsa
