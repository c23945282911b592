#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capsa/contract.hpp"
#include "capsa/sha256.hpp"

namespace capsa {

// ---------------------------------------------------------------------------
// dependency policy
// ---------------------------------------------------------------------------

struct DependencySpec {
  std::string package_name;
  std::optional<std::string> minimum_version;
  std::optional<std::string> exact_pin;
  std::string policy_note;
};

enum class PinPolicy { RelaxPins, KeepExact };

namespace detail {

inline std::vector<int> parse_version(const std::string& version) {
  std::vector<int> parts;
  std::string part;
  for (char c : version) {
    if (c == '.') {
      parts.push_back(std::stoi(part));
      part.clear();
    } else {
      part.push_back(c);
    }
  }
  if (!part.empty()) parts.push_back(std::stoi(part));
  return parts;
}

inline int compare_versions(const std::string& a, const std::string& b) {
  auto va = parse_version(a), vb = parse_version(b);
  size_t n = std::max(va.size(), vb.size());
  for (size_t i = 0; i < n; ++i) {
    int xa = i < va.size() ? va[i] : 0;
    int xb = i < vb.size() ? vb[i] : 0;
    if (xa != xb) return xa < xb ? -1 : 1;
  }
  return 0;
}

// Drop the patch component of an exact pin: 2.31.0 -> 2.31.
inline std::string relax_version(const std::string& version) {
  auto parts = parse_version(version);
  if (parts.size() <= 2) return version;
  return std::to_string(parts[0]) + "." + std::to_string(parts[1]);
}

}  // namespace detail

// Accepted grammar: `name`, `name==X[.Y[.Z]]`, `name>=X[.Y[.Z]]`. Anything
// wider (ranges, extras, environment markers) is rejected so the policy
// stays total on what it accepts.
inline std::vector<DependencySpec> normalize_dependencies(const std::vector<std::string>& raw,
                                                          PinPolicy policy) {
  struct Parsed {
    std::string name;
    std::optional<std::string> minimum;
    std::optional<std::string> exact;
  };
  std::vector<Parsed> parsed;

  for (const std::string& entry : raw) {
    std::string text = entry;
    // trim
    size_t begin = text.find_first_not_of(" \t");
    size_t end = text.find_last_not_of(" \t");
    if (begin == std::string::npos) throw Error(ErrorCode::MALFORMED_DEPENDENCY, "empty entry");
    text = text.substr(begin, end - begin + 1);

    std::string op;
    size_t op_pos = text.find("==");
    if (op_pos == std::string::npos) {
      op_pos = text.find(">=");
      if (op_pos != std::string::npos) op = ">=";
    } else {
      op = "==";
    }

    std::string name = op.empty() ? text : text.substr(0, op_pos);
    while (!name.empty() && (name.back() == ' ' || name.back() == '\t')) name.pop_back();
    std::string version;
    if (!op.empty()) {
      version = text.substr(op_pos + 2);
      size_t vb = version.find_first_not_of(" \t");
      if (vb == std::string::npos) throw Error(ErrorCode::MALFORMED_DEPENDENCY, entry);
      version = version.substr(vb);
    }

    auto valid_name = [](const std::string& n) {
      if (n.empty() || !std::isalpha(static_cast<unsigned char>(n[0]))) return false;
      return std::all_of(n.begin(), n.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
      });
    };
    auto valid_version = [](const std::string& v) {
      if (v.empty()) return false;
      int components = 1;
      bool digit_needed = true;
      for (char c : v) {
        if (c == '.') {
          if (digit_needed) return false;
          ++components;
          digit_needed = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
          digit_needed = false;
        } else {
          return false;
        }
      }
      return !digit_needed && components <= 3;
    };

    if (!valid_name(name) || (!op.empty() && !valid_version(version))) {
      throw Error(ErrorCode::MALFORMED_DEPENDENCY, entry);
    }

    Parsed p;
    p.name = to_lower(name);
    if (op == "==") {
      p.exact = version;
    } else if (op == ">=") {
      p.minimum = version;
    }
    parsed.push_back(std::move(p));
  }

  // Merge duplicates keeping the tightest lower bound. An exact pin counts as
  // a lower bound at its own version; under keep_exact the pin survives the
  // merge, under relax_pins it has already been demoted to a minimum.
  std::map<std::string, DependencySpec> merged;
  for (auto& p : parsed) {
    std::optional<std::string> minimum = p.minimum;
    std::optional<std::string> exact;
    std::string note;
    if (p.exact) {
      if (policy == PinPolicy::RelaxPins) {
        minimum = detail::relax_version(*p.exact);
        note = "relaxed exact pin " + *p.exact + " to minimum " + *minimum;
      } else {
        exact = p.exact;
        note = "kept exact pin " + *p.exact;
      }
    }

    auto it = merged.find(p.name);
    if (it == merged.end()) {
      merged[p.name] = {p.name, minimum, exact, note};
      continue;
    }
    DependencySpec& have = it->second;
    auto bound = [](const DependencySpec& d) -> std::optional<std::string> {
      if (d.exact_pin) return d.exact_pin;
      return d.minimum_version;
    };
    std::optional<std::string> incoming = exact ? exact : minimum;
    std::optional<std::string> existing = bound(have);
    bool replace = false;
    if (incoming && !existing) {
      replace = true;
    } else if (incoming && existing) {
      int cmp = detail::compare_versions(*incoming, *existing);
      if (cmp > 0) {
        replace = true;
      } else if (cmp == 0 && exact && !have.exact_pin) {
        replace = true;  // equal bound, pin is tighter
      }
    }
    if (replace) {
      have.minimum_version = exact ? std::nullopt : minimum;
      have.exact_pin = exact;
      have.policy_note = note.empty() ? "merged duplicate entries" : note;
    }
  }

  std::vector<DependencySpec> out;
  out.reserve(merged.size());
  for (auto& [_, spec] : merged) out.push_back(std::move(spec));
  return out;
}

// Requirement-file rendering; re-normalizing the rendered form is a no-op.
inline std::string render_dependency(const DependencySpec& d) {
  if (d.exact_pin) return d.package_name + "==" + *d.exact_pin;
  if (d.minimum_version) return d.package_name + ">=" + *d.minimum_version;
  return d.package_name;
}

// ---------------------------------------------------------------------------
// lifecycle machine
// ---------------------------------------------------------------------------

enum class Lifecycle { Draft, PendingReview, Approved, Blocked, Deprecated, Failed };
enum class LifecycleAction { Submit, Approve, Block, Unblock, Deprecate, MarkFailed, Reinstate };

inline std::string to_string(Lifecycle state) {
  switch (state) {
    case Lifecycle::Draft: return "draft";
    case Lifecycle::PendingReview: return "pending_review";
    case Lifecycle::Approved: return "approved";
    case Lifecycle::Blocked: return "blocked";
    case Lifecycle::Deprecated: return "deprecated";
    case Lifecycle::Failed: return "failed";
  }
  return "draft";
}

inline std::optional<Lifecycle> lifecycle_from(std::string_view s) {
  if (s == "draft") return Lifecycle::Draft;
  if (s == "pending_review") return Lifecycle::PendingReview;
  if (s == "approved") return Lifecycle::Approved;
  if (s == "blocked") return Lifecycle::Blocked;
  if (s == "deprecated") return Lifecycle::Deprecated;
  if (s == "failed") return Lifecycle::Failed;
  return std::nullopt;
}

inline std::string to_string(LifecycleAction action) {
  switch (action) {
    case LifecycleAction::Submit: return "submit";
    case LifecycleAction::Approve: return "approve";
    case LifecycleAction::Block: return "block";
    case LifecycleAction::Unblock: return "unblock";
    case LifecycleAction::Deprecate: return "deprecate";
    case LifecycleAction::MarkFailed: return "mark_failed";
    case LifecycleAction::Reinstate: return "reinstate";
  }
  return "submit";
}

inline std::optional<LifecycleAction> lifecycle_action_from(std::string_view s) {
  if (s == "submit") return LifecycleAction::Submit;
  if (s == "approve") return LifecycleAction::Approve;
  if (s == "block") return LifecycleAction::Block;
  if (s == "unblock") return LifecycleAction::Unblock;
  if (s == "deprecate") return LifecycleAction::Deprecate;
  if (s == "mark_failed") return LifecycleAction::MarkFailed;
  if (s == "reinstate") return LifecycleAction::Reinstate;
  return std::nullopt;
}

// The machine is closed: anything not listed is ILLEGAL_TRANSITION, so a
// blocked or deprecated tool can never silently come back.
inline Lifecycle transition_lifecycle(Lifecycle current, LifecycleAction action) {
  switch (current) {
    case Lifecycle::Draft:
      if (action == LifecycleAction::Submit) return Lifecycle::PendingReview;
      break;
    case Lifecycle::PendingReview:
      if (action == LifecycleAction::Approve) return Lifecycle::Approved;
      if (action == LifecycleAction::Block) return Lifecycle::Blocked;
      break;
    case Lifecycle::Approved:
      if (action == LifecycleAction::Block) return Lifecycle::Blocked;
      if (action == LifecycleAction::Deprecate) return Lifecycle::Deprecated;
      if (action == LifecycleAction::MarkFailed) return Lifecycle::Failed;
      break;
    case Lifecycle::Blocked:
      if (action == LifecycleAction::Unblock) return Lifecycle::PendingReview;
      break;
    case Lifecycle::Failed:
      if (action == LifecycleAction::Reinstate) return Lifecycle::PendingReview;
      break;
    case Lifecycle::Deprecated:
      break;  // terminal
  }
  throw Error(ErrorCode::ILLEGAL_TRANSITION,
              to_string(current) + " does not accept " + to_string(action));
}

// ---------------------------------------------------------------------------
// validation evidence
// ---------------------------------------------------------------------------

enum class SandboxStatus { Passed, Failed, SkippedMissingInputs };

inline std::string to_string(SandboxStatus status) {
  switch (status) {
    case SandboxStatus::Passed: return "passed";
    case SandboxStatus::Failed: return "failed";
    case SandboxStatus::SkippedMissingInputs: return "skipped_missing_inputs";
  }
  return "failed";
}

inline std::optional<SandboxStatus> sandbox_status_from(std::string_view s) {
  if (s == "passed") return SandboxStatus::Passed;
  if (s == "failed") return SandboxStatus::Failed;
  if (s == "skipped_missing_inputs") return SandboxStatus::SkippedMissingInputs;
  return std::nullopt;
}

struct TestResult {
  int passed_count = 0;
  int total_count = 0;
  int harness_exit = 0;
};

// Aliases only ever name environment variables; values never enter this type.
struct SandboxResult {
  SandboxStatus status = SandboxStatus::Failed;
  int64_t started_at = 0;
  int64_t duration_ms = 0;
  std::string output_digest;
  std::vector<std::string> input_aliases;
  std::vector<std::string> missing_inputs;
  std::optional<std::string> error_code;
  int exit_status = 0;
};

struct ValidationEvidence {
  std::vector<Finding> review_findings;
  std::optional<TestResult> test_result;
  std::optional<bool> cli_help_ok;
  std::optional<SandboxResult> sandbox_result;
};

// ---------------------------------------------------------------------------
// governance + provenance
// ---------------------------------------------------------------------------

struct GovernanceState {
  Lifecycle lifecycle = Lifecycle::Draft;
  std::optional<int> pinned_version;
  std::map<std::string, std::string> credential_mappings;  // env alias -> secret reference
  bool sandbox_validated = false;
};

enum class CapsuleSource { Generated, ImportedMcp, Human };

inline std::string to_string(CapsuleSource source) {
  switch (source) {
    case CapsuleSource::Generated: return "generated";
    case CapsuleSource::ImportedMcp: return "imported_mcp";
    case CapsuleSource::Human: return "human";
  }
  return "generated";
}

inline std::optional<CapsuleSource> capsule_source_from(std::string_view s) {
  if (s == "generated") return CapsuleSource::Generated;
  if (s == "imported_mcp") return CapsuleSource::ImportedMcp;
  if (s == "human") return CapsuleSource::Human;
  return std::nullopt;
}

struct Provenance {
  std::string tool_id;
  int version = 1;
  CapsuleSource source = CapsuleSource::Generated;
  std::string origin;
  int64_t created_at = 0;
};

struct ArtifactRef {
  std::string path;    // relative to the capsule's version directory
  std::string sha256;  // lowercase hex over LF-normalized content
};

// Bundle roles and their on-disk filenames.
inline const std::vector<std::pair<std::string, std::string>>& bundle_role_files() {
  static const std::vector<std::pair<std::string, std::string>> roles = {
      {"wrapper", "wrapper.py"},
      {"tests", "tests.json"},
      {"harness_manifest", "harness.json"},
      {"readme", "README.md"},
      {"tool_card", "tool_card.json"},
      {"requirements", "requirements.txt"},
  };
  return roles;
}

inline std::string bundle_role_filename(const std::string& role) {
  for (const auto& [name, file] : bundle_role_files()) {
    if (name == role) return file;
  }
  return role + ".txt";
}

constexpr const char* kImplementationFilename = "implementation.py";

// Bundle contents in memory: role -> file text, plus the core implementation.
struct BundleFiles {
  std::map<std::string, std::string> roles;
  std::optional<std::string> implementation;
};

struct ToolCapsule {
  CapabilityContract contract;
  std::optional<ArtifactRef> implementation;
  std::map<std::string, ArtifactRef> bundle_artifacts;  // role -> ref
  std::vector<DependencySpec> dependencies;
  ValidationEvidence validation;
  GovernanceState governance;
  Provenance provenance;

  // Transient bytes carried from assembly to registration; not serialized.
  std::map<std::string, std::string> artifact_contents;
  std::optional<std::string> implementation_content;
};

inline std::string artifact_hash(std::string_view content) {
  return sha256_hex(normalize_lf(content));
}

// Builds a capsule from assembled parts and seals artifact hashes. Generated
// and human capsules start in draft; imported MCP capsules start in pending
// review and are exempt from the full role set (they carry no local bundle
// beyond a tool card).
inline ToolCapsule assemble_capsule(const CapabilityContract& contract,
                                    const BundleFiles& bundle,
                                    const std::vector<DependencySpec>& dependencies,
                                    const ValidationEvidence& evidence,
                                    const Provenance& provenance) {
  if (provenance.version < 1) {
    throw Error(ErrorCode::INVALID_CONTRACT, "provenance.version must be >= 1");
  }
  if (evidence.sandbox_result && evidence.sandbox_result->status == SandboxStatus::Passed &&
      evidence.test_result && evidence.test_result->harness_exit != 0) {
    throw Error(ErrorCode::INVALID_CONTRACT,
                "sandbox passed but the recorded harness exit is nonzero");
  }

  bool imported = provenance.source == CapsuleSource::ImportedMcp;
  if (imported) {
    if (!bundle.roles.count("tool_card")) {
      throw Error(ErrorCode::MISSING_ARTIFACT_ROLE, "tool_card");
    }
  } else {
    for (const auto& [role, _] : bundle_role_files()) {
      if (!bundle.roles.count(role)) throw Error(ErrorCode::MISSING_ARTIFACT_ROLE, role);
    }
    if (!bundle.implementation) {
      throw Error(ErrorCode::MISSING_ARTIFACT_ROLE, "implementation");
    }
  }

  const auto card_it = bundle.roles.find("tool_card");
  for (const auto& cred : contract.credentials) {
    if (card_it->second.find(cred.env_alias) == std::string::npos) {
      throw Error(ErrorCode::CARD_ALIAS_MISSING, cred.env_alias);
    }
  }

  ToolCapsule capsule;
  capsule.contract = contract;
  capsule.dependencies = dependencies;
  capsule.validation = evidence;
  capsule.provenance = provenance;

  for (const auto& [role, content] : bundle.roles) {
    ArtifactRef ref{bundle_role_filename(role), artifact_hash(content)};
    capsule.bundle_artifacts[role] = ref;
    capsule.artifact_contents[role] = content;
  }
  if (bundle.implementation) {
    capsule.implementation = ArtifactRef{kImplementationFilename,
                                         artifact_hash(*bundle.implementation)};
    capsule.implementation_content = bundle.implementation;
  }

  capsule.governance.lifecycle = imported ? Lifecycle::PendingReview : Lifecycle::Draft;
  capsule.governance.sandbox_validated =
      evidence.sandbox_result && evidence.sandbox_result->status == SandboxStatus::Passed;
  return capsule;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline ojson to_json(const DependencySpec& d) {
  ojson j;
  j["package_name"] = d.package_name;
  if (d.minimum_version) j["minimum_version"] = *d.minimum_version;
  if (d.exact_pin) j["exact_pin"] = *d.exact_pin;
  j["policy_note"] = d.policy_note;
  return j;
}

inline DependencySpec dependency_from_json(const ojson& j) {
  DependencySpec d;
  d.package_name = j.at("package_name").get<std::string>();
  if (j.contains("minimum_version")) d.minimum_version = j["minimum_version"].get<std::string>();
  if (j.contains("exact_pin")) d.exact_pin = j["exact_pin"].get<std::string>();
  d.policy_note = j.value("policy_note", "");
  return d;
}

inline ojson to_json(const SandboxResult& s) {
  ojson j;
  j["status"] = to_string(s.status);
  j["started_at"] = format_utc(s.started_at);
  j["duration_ms"] = s.duration_ms;
  j["output_digest"] = s.output_digest;
  j["input_aliases"] = s.input_aliases;
  if (!s.missing_inputs.empty()) j["missing_inputs"] = s.missing_inputs;
  if (s.error_code) j["error_code"] = *s.error_code;
  j["exit_status"] = s.exit_status;
  return j;
}

inline SandboxResult sandbox_result_from_json(const ojson& j) {
  SandboxResult s;
  auto status = sandbox_status_from(j.at("status").get<std::string>());
  if (!status) throw Error(ErrorCode::CORRUPT_CAPSULE, "bad sandbox status");
  s.status = *status;
  s.started_at = parse_utc(j.at("started_at").get<std::string>());
  s.duration_ms = j.value("duration_ms", 0);
  s.output_digest = j.value("output_digest", "");
  if (j.contains("input_aliases")) s.input_aliases = j["input_aliases"].get<std::vector<std::string>>();
  if (j.contains("missing_inputs")) s.missing_inputs = j["missing_inputs"].get<std::vector<std::string>>();
  if (j.contains("error_code")) s.error_code = j["error_code"].get<std::string>();
  s.exit_status = j.value("exit_status", 0);
  return s;
}

inline ojson to_json(const ValidationEvidence& v) {
  ojson j;
  j["review_findings"] = ojson::array();
  for (const auto& f : v.review_findings) j["review_findings"].push_back(to_json(f));
  if (v.test_result) {
    ojson t;
    t["passed_count"] = v.test_result->passed_count;
    t["total_count"] = v.test_result->total_count;
    t["harness_exit"] = v.test_result->harness_exit;
    j["test_result"] = t;
  }
  if (v.cli_help_ok) j["cli_help_ok"] = *v.cli_help_ok;
  if (v.sandbox_result) j["sandbox_result"] = to_json(*v.sandbox_result);
  return j;
}

inline ValidationEvidence evidence_from_json(const ojson& j) {
  ValidationEvidence v;
  for (const auto& fj : j.value("review_findings", ojson::array())) {
    Finding f;
    std::string sev = fj.value("severity", "info");
    f.severity = sev == "error" ? Severity::Error
                                : (sev == "warning" ? Severity::Warning : Severity::Info);
    f.code = fj.value("code", "");
    f.message = fj.value("message", "");
    f.location = fj.value("location", "");
    v.review_findings.push_back(std::move(f));
  }
  if (j.contains("test_result")) {
    const auto& t = j["test_result"];
    v.test_result = TestResult{t.value("passed_count", 0), t.value("total_count", 0),
                               t.value("harness_exit", 0)};
  }
  if (j.contains("cli_help_ok")) v.cli_help_ok = j["cli_help_ok"].get<bool>();
  if (j.contains("sandbox_result")) v.sandbox_result = sandbox_result_from_json(j["sandbox_result"]);
  return v;
}

inline ojson to_json(const GovernanceState& g) {
  ojson j;
  j["lifecycle"] = to_string(g.lifecycle);
  if (g.pinned_version) j["pinned_version"] = *g.pinned_version;
  j["credential_mappings"] = ojson::object();
  for (const auto& [alias, ref] : g.credential_mappings) j["credential_mappings"][alias] = ref;
  j["sandbox_validated"] = g.sandbox_validated;
  return j;
}

inline GovernanceState governance_from_json(const ojson& j) {
  GovernanceState g;
  auto lifecycle = lifecycle_from(j.at("lifecycle").get<std::string>());
  if (!lifecycle) throw Error(ErrorCode::CORRUPT_CAPSULE, "bad lifecycle");
  g.lifecycle = *lifecycle;
  if (j.contains("pinned_version")) g.pinned_version = j["pinned_version"].get<int>();
  if (j.contains("credential_mappings")) {
    for (const auto& [alias, ref] : j["credential_mappings"].items()) {
      g.credential_mappings[alias] = ref.get<std::string>();
    }
  }
  g.sandbox_validated = j.value("sandbox_validated", false);
  return g;
}

inline ojson to_json(const ToolCapsule& c) {
  ojson j;
  j["contract"] = to_json(c.contract);
  if (c.implementation) {
    ojson impl;
    impl["path"] = c.implementation->path;
    impl["sha256"] = c.implementation->sha256;
    j["implementation"] = impl;
  } else {
    j["implementation"] = nullptr;
  }
  j["bundle_artifacts"] = ojson::object();
  for (const auto& [role, ref] : c.bundle_artifacts) {
    ojson r;
    r["path"] = ref.path;
    r["sha256"] = ref.sha256;
    j["bundle_artifacts"][role] = r;
  }
  j["dependencies"] = ojson::array();
  for (const auto& d : c.dependencies) j["dependencies"].push_back(to_json(d));
  j["validation"] = to_json(c.validation);
  j["governance"] = to_json(c.governance);
  ojson p;
  p["tool_id"] = c.provenance.tool_id;
  p["version"] = c.provenance.version;
  p["source"] = to_string(c.provenance.source);
  p["origin"] = c.provenance.origin;
  p["created_at"] = format_utc(c.provenance.created_at);
  j["provenance"] = p;
  return j;
}

inline ToolCapsule capsule_from_json(const ojson& j) {
  ToolCapsule c;
  c.contract = contract_from_json(j.at("contract"));
  if (j.contains("implementation") && !j["implementation"].is_null()) {
    c.implementation = ArtifactRef{j["implementation"].at("path").get<std::string>(),
                                   j["implementation"].at("sha256").get<std::string>()};
  }
  if (j.contains("bundle_artifacts")) {
    for (const auto& [role, rj] : j["bundle_artifacts"].items()) {
      c.bundle_artifacts[role] =
          ArtifactRef{rj.at("path").get<std::string>(), rj.at("sha256").get<std::string>()};
    }
  }
  for (const auto& dj : j.value("dependencies", ojson::array())) {
    c.dependencies.push_back(dependency_from_json(dj));
  }
  if (j.contains("validation")) c.validation = evidence_from_json(j["validation"]);
  c.governance = governance_from_json(j.at("governance"));
  const auto& p = j.at("provenance");
  c.provenance.tool_id = p.at("tool_id").get<std::string>();
  c.provenance.version = p.at("version").get<int>();
  auto source = capsule_source_from(p.at("source").get<std::string>());
  if (!source) throw Error(ErrorCode::CORRUPT_CAPSULE, "bad capsule source");
  c.provenance.source = *source;
  c.provenance.origin = p.value("origin", "");
  c.provenance.created_at = parse_utc(p.at("created_at").get<std::string>());
  return c;
}

inline std::string canonical_capsule_json(const ToolCapsule& capsule) {
  return to_json(capsule).dump(2) + "\n";
}

}  // namespace capsa
