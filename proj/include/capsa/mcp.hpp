#pragma once

#include <istream>
#include <ostream>

#include "capsa/router.hpp"

namespace capsa {

constexpr const char* kProtocolVersion = "2024-11-05";
constexpr const char* kServerName = "capsa-router";
constexpr const char* kServerVersion = "0.1.0";

// JSON-RPC error codes. The five router denial codes are fixed wire contract.
constexpr int kParseError = -32700;
constexpr int kInvalidRequest = -32600;
constexpr int kMethodNotFound = -32601;
constexpr int kInvalidParams = -32602;
constexpr int kInternalError = -32603;
constexpr int kApplicationError = -32000;
constexpr int kNotInSession = -32001;
constexpr int kSessionExpired = -32002;
constexpr int kUnknownProfile = -32003;
constexpr int kMissingCredentialMapping = -32004;
constexpr int kLifecycleChanged = -32005;

inline int jsonrpc_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NOT_IN_SESSION: return kNotInSession;
    case ErrorCode::SESSION_EXPIRED: return kSessionExpired;
    case ErrorCode::UNKNOWN_PROFILE: return kUnknownProfile;
    case ErrorCode::MISSING_CREDENTIAL_MAPPING: return kMissingCredentialMapping;
    case ErrorCode::LIFECYCLE_CHANGED: return kLifecycleChanged;
    default: return kApplicationError;
  }
}

struct MetaToolDescriptor {
  std::string name;
  std::string description;
  ojson input_schema;
};

// The advertised surface is these five descriptors, independent of catalog
// size and contents. The whole point of the router is that this is all an
// agent ever has to load up front.
inline const std::vector<MetaToolDescriptor>& list_meta_tools() {
  static const std::vector<MetaToolDescriptor> descriptors = [] {
    auto object_schema = [](std::initializer_list<std::pair<const char*, const char*>> props,
                            std::vector<std::string> required) {
      ojson schema;
      schema["type"] = "object";
      schema["properties"] = ojson::object();
      for (const auto& [name, type] : props) {
        schema["properties"][name] = ojson{{"type", type}};
      }
      if (!required.empty()) schema["required"] = required;
      return schema;
    };

    std::vector<MetaToolDescriptor> out;
    out.push_back({"search_tools",
                   "Search catalog cards for tools matching a query. Returns compact card "
                   "summaries only, never full schemas.",
                   object_schema({{"query", "string"}, {"profile", "string"}, {"limit", "integer"}},
                                 {"query"})});
    out.push_back({"resolve_tools",
                   "Resolve a bounded, intent-scoped tool session. Returns a session id plus the "
                   "resolved tools and scores.",
                   object_schema({{"query", "string"}, {"profile", "string"}, {"k", "integer"}},
                                 {"query"})});
    out.push_back({"describe_tool",
                   "Return the full schema text of one tool resolved in a session.",
                   object_schema({{"session_id", "string"}, {"tool_id", "string"}},
                                 {"session_id", "tool_id"})});
    out.push_back({"call_tool",
                   "Invoke a tool resolved in a session. Calls outside the session are denied "
                   "and audited.",
                   object_schema({{"session_id", "string"}, {"tool_id", "string"},
                                  {"arguments", "object"}},
                                 {"session_id", "tool_id"})});
    out.push_back({"list_profiles",
                   "List governance profiles with their session bound and allowed lifecycles.",
                   object_schema({}, {})});
    return out;
  }();
  return descriptors;
}

inline ojson meta_tools_json() {
  ojson tools = ojson::array();
  for (const auto& tool : list_meta_tools()) {
    ojson t;
    t["name"] = tool.name;
    t["description"] = tool.description;
    t["inputSchema"] = tool.input_schema;
    tools.push_back(t);
  }
  return tools;
}

// Token cost of the advertised surface: a constant for a given build,
// frozen by a golden test.
inline int64_t meta_surface_tokens() { return estimate_tokens(meta_tools_json().dump()); }

class McpServer {
 public:
  McpServer(Router& router, std::string default_profile, Executor executor)
      : router_(router),
        default_profile_(std::move(default_profile)),
        executor_(std::move(executor)) {}

  // One JSON-RPC message per line. Returns no response for notifications.
  std::optional<std::string> handle_line(const std::string& line) {
    auto request = ojson::parse(line, nullptr, false);
    if (request.is_discarded()) {
      return error_response(nullptr, kParseError, "parse error")->dump();
    }
    auto response = handle_request(request);
    if (!response) return std::nullopt;
    return response->dump();
  }

  std::optional<ojson> handle_request(const ojson& request) {
    bool has_id = request.contains("id");
    ojson id = has_id ? request["id"] : ojson(nullptr);

    if (!request.contains("method") || !request["method"].is_string()) {
      if (!has_id) return std::nullopt;
      return error_response(id, kInvalidRequest, "missing method");
    }
    std::string method = request["method"].get<std::string>();
    ojson params = request.value("params", ojson::object());

    if (method.rfind("notifications/", 0) == 0) return std::nullopt;

    if (method == "initialize") {
      ojson result;
      result["protocolVersion"] = kProtocolVersion;
      result["capabilities"] = ojson{{"tools", ojson{{"listChanged", false}}}};
      result["serverInfo"] = ojson{{"name", kServerName}, {"version", kServerVersion}};
      return success_response(id, result);
    }
    if (method == "tools/list") {
      ojson result;
      result["tools"] = meta_tools_json();
      return success_response(id, result);
    }
    if (method == "tools/call") {
      if (!params.contains("name") || !params["name"].is_string()) {
        return error_response(id, kInvalidParams, "tools/call requires a name");
      }
      std::string name = params["name"].get<std::string>();
      ojson arguments = params.value("arguments", ojson::object());
      try {
        ojson payload = dispatch_tool(name, arguments);
        ojson result;
        result["content"] = ojson::array({ojson{{"type", "text"}, {"text", payload.dump()}}});
        result["isError"] = false;
        return success_response(id, result);
      } catch (const InvalidParams& e) {
        return error_response(id, kInvalidParams, e.what());
      } catch (const Error& e) {
        auto response = error_response(id, jsonrpc_code_for(e.code()), e.what());
        (*response)["error"]["data"] = ojson{{"error", std::string(e.code_name())}};
        return response;
      } catch (const std::exception& e) {
        return error_response(id, kInternalError, e.what());
      }
    }

    if (!has_id) return std::nullopt;
    return error_response(id, kMethodNotFound, "unknown method: " + method);
  }

  // Reads newline-delimited requests until EOF. Malformed frames produce a
  // parse error response and the loop keeps serving.
  void run(std::istream& in, std::ostream& out) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto response = handle_line(line);
      if (response) out << *response << "\n" << std::flush;
    }
  }

 private:
  struct InvalidParams : std::runtime_error {
    using std::runtime_error::runtime_error;
  };

  ojson dispatch_tool(const std::string& name, const ojson& arguments) {
    if (name == "search_tools") {
      std::string query = require_string(arguments, "query");
      std::string profile = arguments.value("profile", default_profile_);
      int limit = arguments.value("limit", 5);
      if (limit < 0) limit = 0;
      auto ranked = router_.search(profile, query, static_cast<size_t>(limit));
      ojson tools = ojson::array();
      for (const auto& entry : ranked) {
        ojson t;
        t["tool_id"] = entry.card.tool_id;
        t["name"] = entry.card.name;
        t["summary"] = entry.card.summary;
        t["tags"] = entry.card.tags;
        t["rw_class"] = to_string(entry.card.rw_class);
        t["score"] = entry.score;
        tools.push_back(t);
      }
      return ojson{{"tools", tools}};
    }
    if (name == "resolve_tools") {
      std::string query = require_string(arguments, "query");
      std::string profile = arguments.value("profile", default_profile_);
      std::optional<int> k;
      if (arguments.contains("k")) k = arguments["k"].get<int>();
      auto session = router_.resolve_session(profile, query, k);
      ojson resolved = ojson::array();
      for (const auto& tool : session.resolved) {
        resolved.push_back(ojson{{"tool_id", tool.tool_id},
                                 {"version", tool.version},
                                 {"score", tool.score}});
      }
      return ojson{{"session_id", session.session_id},
                   {"resolved", resolved},
                   {"expires_at", format_utc(session.expires_at)}};
    }
    if (name == "describe_tool") {
      std::string session_id = require_string(arguments, "session_id");
      std::string tool_id = require_string(arguments, "tool_id");
      return ojson{{"tool_id", tool_id}, {"schema", router_.describe_tool(session_id, tool_id)}};
    }
    if (name == "call_tool") {
      std::string session_id = require_string(arguments, "session_id");
      std::string tool_id = require_string(arguments, "tool_id");
      ojson call_args = arguments.value("arguments", ojson::object());
      std::vector<std::string> argument_names;
      for (const auto& [key, _] : call_args.items()) argument_names.push_back(key);
      std::sort(argument_names.begin(), argument_names.end());
      auto outcome = router_.gate_call(session_id, tool_id, argument_names, call_args, executor_);
      return ojson{{"exit_status", outcome.exit_status}, {"output", outcome.output}};
    }
    if (name == "list_profiles") {
      ojson profiles = ojson::array();
      for (const auto& profile : router_.list_profiles()) {
        ojson p;
        p["profile_id"] = profile.profile_id;
        p["max_session_tools"] = profile.max_session_tools;
        ojson lifecycles = ojson::array();
        for (const auto& state : profile.allowed_lifecycles) lifecycles.push_back(to_string(state));
        p["allowed_lifecycles"] = lifecycles;
        profiles.push_back(p);
      }
      return ojson{{"profiles", profiles}};
    }
    throw InvalidParams("no meta-tool named " + name);
  }

  static std::string require_string(const ojson& arguments, const char* key) {
    if (!arguments.contains(key) || !arguments[key].is_string()) {
      throw InvalidParams(std::string(key) + " is required");
    }
    return arguments[key].get<std::string>();
  }

  static ojson success_response(const ojson& id, const ojson& result) {
    ojson response;
    response["jsonrpc"] = "2.0";
    response["id"] = id;
    response["result"] = result;
    return response;
  }

  static std::optional<ojson> error_response(const ojson& id, int code,
                                             const std::string& message) {
    ojson response;
    response["jsonrpc"] = "2.0";
    response["id"] = id;
    response["error"] = ojson{{"code", code}, {"message", message}};
    return response;
  }

  Router& router_;
  std::string default_profile_;
  Executor executor_;
};

}  // namespace capsa
