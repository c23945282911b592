#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "capsa/errors.hpp"
#include "capsa/util.hpp"

namespace capsa {

using ojson = nlohmann::ordered_json;

enum class ParamKind { String, Integer, Number, Boolean, Enum, Path };
enum class RuntimeClass { PureLocal, Filesystem, NetworkApi, Hybrid };
enum class Severity { Error, Warning, Info };
enum class EvidenceKind { DocUrl, EndpointFragment, PathParam, SdkMethod, UserExample };

inline std::string to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::String: return "string";
    case ParamKind::Integer: return "integer";
    case ParamKind::Number: return "number";
    case ParamKind::Boolean: return "boolean";
    case ParamKind::Enum: return "enum";
    case ParamKind::Path: return "path";
  }
  return "string";
}

inline std::optional<ParamKind> param_kind_from(std::string_view s) {
  if (s == "string") return ParamKind::String;
  if (s == "integer") return ParamKind::Integer;
  if (s == "number") return ParamKind::Number;
  if (s == "boolean") return ParamKind::Boolean;
  if (s == "enum") return ParamKind::Enum;
  if (s == "path") return ParamKind::Path;
  return std::nullopt;
}

inline std::string to_string(RuntimeClass rc) {
  switch (rc) {
    case RuntimeClass::PureLocal: return "pure_local";
    case RuntimeClass::Filesystem: return "filesystem";
    case RuntimeClass::NetworkApi: return "network_api";
    case RuntimeClass::Hybrid: return "hybrid";
  }
  return "pure_local";
}

inline std::optional<RuntimeClass> runtime_class_from(std::string_view s) {
  if (s == "pure_local") return RuntimeClass::PureLocal;
  if (s == "filesystem") return RuntimeClass::Filesystem;
  if (s == "network_api") return RuntimeClass::NetworkApi;
  if (s == "hybrid") return RuntimeClass::Hybrid;
  return std::nullopt;
}

inline std::string to_string(Severity severity) {
  switch (severity) {
    case Severity::Error: return "error";
    case Severity::Warning: return "warning";
    case Severity::Info: return "info";
  }
  return "info";
}

inline std::string to_string(EvidenceKind kind) {
  switch (kind) {
    case EvidenceKind::DocUrl: return "doc_url";
    case EvidenceKind::EndpointFragment: return "endpoint_fragment";
    case EvidenceKind::PathParam: return "path_param";
    case EvidenceKind::SdkMethod: return "sdk_method";
    case EvidenceKind::UserExample: return "user_example";
  }
  return "doc_url";
}

inline std::optional<EvidenceKind> evidence_kind_from(std::string_view s) {
  if (s == "doc_url") return EvidenceKind::DocUrl;
  if (s == "endpoint_fragment") return EvidenceKind::EndpointFragment;
  if (s == "path_param") return EvidenceKind::PathParam;
  if (s == "sdk_method") return EvidenceKind::SdkMethod;
  if (s == "user_example") return EvidenceKind::UserExample;
  return std::nullopt;
}

struct ParameterSpec {
  std::string name;
  ParamKind kind = ParamKind::String;
  bool required = false;
  std::string description;
  std::vector<std::string> enum_values;
  std::optional<ojson> default_value;
};

struct CredentialRequirement {
  std::string env_alias;
  std::string description;
  bool secret = true;
};

struct OutputField {
  std::string name;
  ParamKind kind = ParamKind::String;
  std::string description;
};

struct FailureMode {
  std::string code;
  std::string description;
  std::string handling;
};

struct EvidenceItem {
  EvidenceKind kind = EvidenceKind::DocUrl;
  std::string value;
  std::string source;
};

struct Finding {
  Severity severity = Severity::Error;
  std::string code;
  std::string message;
  std::string location;
};

struct CapabilityContract {
  std::string name;
  std::string description;
  std::vector<ParameterSpec> parameters;
  std::vector<CredentialRequirement> credentials;
  std::vector<OutputField> outputs;
  RuntimeClass runtime_class = RuntimeClass::PureLocal;
  std::vector<FailureMode> failure_modes;
  std::vector<EvidenceItem> evidence;
};

// ---------------------------------------------------------------------------
// validation
// ---------------------------------------------------------------------------

inline bool default_matches_kind(const ojson& value, const ParameterSpec& param) {
  switch (param.kind) {
    case ParamKind::String:
    case ParamKind::Path:
      return value.is_string();
    case ParamKind::Integer:
      return value.is_number_integer();
    case ParamKind::Number:
      return value.is_number();
    case ParamKind::Boolean:
      return value.is_boolean();
    case ParamKind::Enum:
      return value.is_string() &&
             std::find(param.enum_values.begin(), param.enum_values.end(),
                       value.get<std::string>()) != param.enum_values.end();
  }
  return false;
}

// Returns every invariant violation as data; an empty result means the
// contract is admissible.
inline std::vector<Finding> validate_contract(const CapabilityContract& contract) {
  std::vector<Finding> findings;
  auto add = [&](Severity severity, std::string code, std::string message,
                 std::string location) {
    findings.push_back({severity, std::move(code), std::move(message), std::move(location)});
  };

  if (!is_identifier(contract.name)) {
    add(Severity::Error, "BAD_NAME", "tool name must match [a-z][a-z0-9_]*", "name");
  }
  if (contract.description.empty()) {
    add(Severity::Warning, "EMPTY_DESCRIPTION", "contract has no description", "description");
  }

  std::set<std::string> param_names;
  for (const auto& param : contract.parameters) {
    if (!is_identifier(param.name)) {
      add(Severity::Error, "BAD_PARAM_NAME", "parameter name must match [a-z][a-z0-9_]*",
          "parameters." + param.name);
    }
    if (!param_names.insert(param.name).second) {
      add(Severity::Error, "DUP_PARAM", "duplicate parameter name '" + param.name + "'",
          "parameters." + param.name);
    }
    if (param.kind == ParamKind::Enum && param.enum_values.empty()) {
      add(Severity::Error, "EMPTY_ENUM", "enum parameter '" + param.name + "' has no values",
          "parameters." + param.name);
    }
    if (param.default_value && !default_matches_kind(*param.default_value, param)) {
      add(Severity::Error, "BAD_DEFAULT",
          "default for '" + param.name + "' does not match kind " + to_string(param.kind),
          "parameters." + param.name);
    }
  }

  std::set<std::string> output_names;
  for (const auto& output : contract.outputs) {
    if (!is_identifier(output.name)) {
      add(Severity::Error, "BAD_OUTPUT_NAME", "output name must match [a-z][a-z0-9_]*",
          "outputs." + output.name);
    }
    if (!output_names.insert(output.name).second) {
      add(Severity::Error, "DUP_OUTPUT", "duplicate output name '" + output.name + "'",
          "outputs." + output.name);
    }
  }

  std::set<std::string> aliases;
  for (const auto& cred : contract.credentials) {
    if (!is_credential_alias(cred.env_alias)) {
      add(Severity::Error, "BAD_CRED_ALIAS",
          "credential alias must match [A-Z][A-Z0-9_]*: '" + cred.env_alias + "'",
          "credentials." + cred.env_alias);
    }
    if (!aliases.insert(cred.env_alias).second) {
      add(Severity::Error, "DUP_CRED_ALIAS", "duplicate credential alias '" + cred.env_alias + "'",
          "credentials." + cred.env_alias);
    }
  }

  return findings;
}

inline bool has_error_findings(const std::vector<Finding>& findings) {
  return std::any_of(findings.begin(), findings.end(),
                     [](const Finding& f) { return f.severity == Severity::Error; });
}

// ---------------------------------------------------------------------------
// JSON (stable key order throughout; capsule.json depends on it)
// ---------------------------------------------------------------------------

inline ojson to_json(const ParameterSpec& p) {
  ojson j;
  j["name"] = p.name;
  j["kind"] = to_string(p.kind);
  j["required"] = p.required;
  j["description"] = p.description;
  if (!p.enum_values.empty()) j["enum_values"] = p.enum_values;
  if (p.default_value) j["default"] = *p.default_value;
  return j;
}

inline ojson to_json(const Finding& f) {
  ojson j;
  j["severity"] = to_string(f.severity);
  j["code"] = f.code;
  j["message"] = f.message;
  j["location"] = f.location;
  return j;
}

inline ojson to_json(const CapabilityContract& c) {
  ojson j;
  j["name"] = c.name;
  j["description"] = c.description;
  j["parameters"] = ojson::array();
  for (const auto& p : c.parameters) j["parameters"].push_back(to_json(p));
  j["credentials"] = ojson::array();
  for (const auto& k : c.credentials) {
    ojson cred;
    cred["env_alias"] = k.env_alias;
    cred["description"] = k.description;
    cred["secret"] = k.secret;
    j["credentials"].push_back(cred);
  }
  j["outputs"] = ojson::array();
  for (const auto& o : c.outputs) {
    ojson out;
    out["name"] = o.name;
    out["kind"] = to_string(o.kind);
    out["description"] = o.description;
    j["outputs"].push_back(out);
  }
  j["runtime_class"] = to_string(c.runtime_class);
  j["failure_modes"] = ojson::array();
  for (const auto& f : c.failure_modes) {
    ojson fm;
    fm["code"] = f.code;
    fm["description"] = f.description;
    fm["handling"] = f.handling;
    j["failure_modes"].push_back(fm);
  }
  j["evidence"] = ojson::array();
  for (const auto& e : c.evidence) {
    ojson ev;
    ev["kind"] = to_string(e.kind);
    ev["value"] = e.value;
    ev["source"] = e.source;
    j["evidence"].push_back(ev);
  }
  return j;
}

inline CapabilityContract contract_from_json(const ojson& j) {
  CapabilityContract c;
  c.name = j.at("name").get<std::string>();
  c.description = j.value("description", "");
  for (const auto& pj : j.value("parameters", ojson::array())) {
    ParameterSpec p;
    p.name = pj.at("name").get<std::string>();
    auto kind = param_kind_from(pj.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::MALFORMED_DESCRIPTOR, "unknown parameter kind");
    p.kind = *kind;
    p.required = pj.value("required", false);
    p.description = pj.value("description", "");
    if (pj.contains("enum_values")) p.enum_values = pj["enum_values"].get<std::vector<std::string>>();
    if (pj.contains("default")) p.default_value = pj["default"];
    c.parameters.push_back(std::move(p));
  }
  for (const auto& kj : j.value("credentials", ojson::array())) {
    CredentialRequirement k;
    k.env_alias = kj.at("env_alias").get<std::string>();
    k.description = kj.value("description", "");
    k.secret = kj.value("secret", true);
    c.credentials.push_back(std::move(k));
  }
  for (const auto& oj : j.value("outputs", ojson::array())) {
    OutputField o;
    o.name = oj.at("name").get<std::string>();
    auto kind = param_kind_from(oj.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::MALFORMED_DESCRIPTOR, "unknown output kind");
    o.kind = *kind;
    o.description = oj.value("description", "");
    c.outputs.push_back(std::move(o));
  }
  auto rc = runtime_class_from(j.value("runtime_class", "pure_local"));
  if (!rc) throw Error(ErrorCode::MALFORMED_DESCRIPTOR, "unknown runtime class");
  c.runtime_class = *rc;
  for (const auto& fj : j.value("failure_modes", ojson::array())) {
    c.failure_modes.push_back(
        {fj.at("code").get<std::string>(), fj.value("description", ""), fj.value("handling", "")});
  }
  for (const auto& ej : j.value("evidence", ojson::array())) {
    auto kind = evidence_kind_from(ej.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::MALFORMED_DESCRIPTOR, "unknown evidence kind");
    c.evidence.push_back({*kind, ej.value("value", ""), ej.value("source", "")});
  }
  return c;
}

}  // namespace capsa
