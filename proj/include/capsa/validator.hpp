#pragma once

#include <cmath>
#include <regex>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "capsa/capsule.hpp"

namespace capsa {

// ---------------------------------------------------------------------------
// structural review
// ---------------------------------------------------------------------------

namespace detail {

inline double shannon_entropy_bits(const std::string& text) {
  if (text.empty()) return 0.0;
  int counts[256] = {0};
  for (unsigned char c : text) ++counts[c];
  double entropy = 0.0;
  for (int count : counts) {
    if (count == 0) continue;
    double p = static_cast<double>(count) / static_cast<double>(text.size());
    entropy -= p * std::log2(p);
  }
  return entropy;
}

inline int char_class_count(const std::string& text) {
  bool lower = false, upper = false, digit = false, other = false;
  for (unsigned char c : text) {
    if (std::islower(c)) lower = true;
    else if (std::isupper(c)) upper = true;
    else if (std::isdigit(c)) digit = true;
    else other = true;
  }
  return lower + upper + digit + other;
}

// Secret literal heuristic: a no-whitespace string of 20+ chars that either
// mixes three character classes or has high per-character entropy.
inline bool looks_like_secret_value(const std::string& value) {
  if (value.size() < 20) return false;
  if (value.find(' ') != std::string::npos || value.find('\t') != std::string::npos) return false;
  return char_class_count(value) >= 3 || shannon_entropy_bits(value) >= 3.5;
}

}  // namespace detail

// Deterministic review of a bundle file map (role name -> content). Catches
// structural defects before any sandbox execution; findings are data, never
// failures.
inline std::vector<Finding> run_structural_review(
    const std::map<std::string, std::string>& bundle, const CapabilityContract& contract) {
  std::vector<Finding> findings;
  auto add = [&](std::string code, std::string message, std::string location) {
    findings.push_back({Severity::Error, std::move(code), std::move(message), std::move(location)});
  };

  bool imported_shape = bundle.size() == 1 && bundle.count("tool_card");
  if (!imported_shape) {
    for (const auto& [role, _] : bundle_role_files()) {
      if (!bundle.count(role)) add("MISSING_ROLE", "bundle lacks role " + role, role);
    }
  }

  // Hardcoded credential values. Aliases are fine; literal values are not.
  static const std::regex secret_assign(
      R"((key|token|secret|password)[a-z0-9_]*\s*[:=]\s*["']([^"']{20,})["'])",
      std::regex::icase);
  for (const auto& [role, content] : bundle) {
    auto begin = std::sregex_iterator(content.begin(), content.end(), secret_assign);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
      std::string value = (*it)[2].str();
      if (detail::looks_like_secret_value(value)) {
        add("HARDCODED_SECRET", "credential-looking literal assigned near '" + (*it)[1].str() + "'",
            role);
      }
    }
  }

  // Network tools must declare mocked tests; a manifest assertion, not
  // import analysis, so bundles stay language-agnostic.
  if (contract.runtime_class == RuntimeClass::NetworkApi) {
    bool mocked = false;
    auto tests = bundle.find("tests");
    if (tests != bundle.end()) {
      auto manifest = ojson::parse(tests->second, nullptr, false);
      if (!manifest.is_discarded()) mocked = manifest.value("mock_network", false);
    }
    if (!mocked) {
      add("UNMOCKED_NETWORK", "network_api tool without declared network mocking in tests", "tests");
    }
  }

  // The wrapper must expose a flag per required parameter.
  auto wrapper = bundle.find("wrapper");
  if (wrapper != bundle.end()) {
    for (const auto& param : contract.parameters) {
      if (!param.required) continue;
      std::string flag = "--";
      for (char c : param.name) flag.push_back(c == '_' ? '-' : c);
      if (wrapper->second.find(flag) == std::string::npos) {
        add("MISSING_FLAG", "wrapper does not expose " + flag, "wrapper");
      }
    }
  }

  return findings;
}

// ---------------------------------------------------------------------------
// pattern scoring
// ---------------------------------------------------------------------------

struct PatternRule {
  std::string pattern_id;
  std::string expression;
  std::vector<std::string> roles;
};

struct PatternSpec {
  std::vector<PatternRule> required;
  std::vector<PatternRule> forbidden;
};

inline PatternSpec pattern_spec_from_json(const ojson& j) {
  PatternSpec spec;
  auto read = [&](const char* key, std::vector<PatternRule>& out) {
    for (const auto& pj : j.value(key, ojson::array())) {
      PatternRule rule;
      rule.pattern_id = pj.at("pattern_id").get<std::string>();
      rule.expression = pj.at("regex").get<std::string>();
      rule.roles = pj.value("roles", std::vector<std::string>{});
      out.push_back(std::move(rule));
    }
  };
  read("required", spec.required);
  read("forbidden", spec.forbidden);

  std::set<std::string> ids;
  for (const auto& rule : spec.required) {
    if (!ids.insert(rule.pattern_id).second) {
      throw Error(ErrorCode::BAD_PATTERN, "duplicate pattern_id " + rule.pattern_id);
    }
  }
  for (const auto& rule : spec.forbidden) {
    if (!ids.insert(rule.pattern_id).second) {
      throw Error(ErrorCode::BAD_PATTERN, "duplicate pattern_id " + rule.pattern_id);
    }
  }
  return spec;
}

struct PatternHit {
  std::string pattern_id;
  bool required = true;
  bool matched = false;
};

struct PatternScore {
  int tp = 0;  // required patterns matched
  int fp = 0;  // forbidden patterns matched
  int fn = 0;  // required patterns unmatched
  std::vector<PatternHit> detail;

  double precision() const { return tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : (fn == 0 ? 1.0 : 0.0); }
  double recall() const { return tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 1.0; }
  double f1() const {
    double p = precision(), r = recall();
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
};

// Matches each pattern over the concatenated content of its target roles
// (all roles when the rule names none).
inline PatternScore score_patterns(const std::map<std::string, std::string>& bundle,
                                   const PatternSpec& spec) {
  auto target_text = [&](const PatternRule& rule) {
    std::string text;
    if (rule.roles.empty()) {
      for (const auto& [_, content] : bundle) text += content + "\n";
    } else {
      for (const auto& role : rule.roles) {
        auto it = bundle.find(role);
        if (it != bundle.end()) text += it->second + "\n";
      }
    }
    return text;
  };
  auto compile = [](const PatternRule& rule) {
    try {
      return std::regex(rule.expression);
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::BAD_PATTERN, rule.pattern_id + ": " + e.what());
    }
  };

  PatternScore score;
  for (const auto& rule : spec.required) {
    bool matched = std::regex_search(target_text(rule), compile(rule));
    score.detail.push_back({rule.pattern_id, true, matched});
    matched ? ++score.tp : ++score.fn;
  }
  for (const auto& rule : spec.forbidden) {
    bool matched = std::regex_search(target_text(rule), compile(rule));
    score.detail.push_back({rule.pattern_id, false, matched});
    if (matched) ++score.fp;
  }
  return score;
}

// ---------------------------------------------------------------------------
// sandboxed harness execution
// ---------------------------------------------------------------------------

struct HarnessManifest {
  std::vector<std::string> command;
  int expected_exit = 0;
  int64_t timeout_ms = 60000;
  bool mock_network = false;
  std::vector<std::string> required_inputs;
};

inline HarnessManifest harness_manifest_from_json(const ojson& j) {
  HarnessManifest m;
  m.command = j.at("command").get<std::vector<std::string>>();
  m.expected_exit = j.value("expected_exit", 0);
  m.timeout_ms = j.value("timeout_ms", int64_t{60000});
  m.mock_network = j.value("mock_network", false);
  m.required_inputs = j.value("required_inputs", std::vector<std::string>{});
  return m;
}

struct SandboxPolicy {
  int64_t timeout_ms = 60000;
  fs::path working_dir;  // isolated directory the bundle is materialized into
  std::set<std::string> env_allowlist;
  int64_t capture_limit_bytes = 1 << 20;
};

struct SpawnResult {
  int exit_status = 0;
  std::string output;  // interleaved stdout + stderr, capped at the limit
  bool timed_out = false;
  bool truncated = false;
  int64_t duration_ms = 0;
};

// Forks and executes `command` under a scrubbed environment (PATH + HOME +
// the given variables only) inside `working_dir`, capturing combined output
// up to `capture_limit_bytes` and killing the process group on timeout.
inline SpawnResult spawn_captured(const std::vector<std::string>& command,
                                  const fs::path& working_dir,
                                  const std::map<std::string, std::string>& env,
                                  int64_t timeout_ms, int64_t capture_limit_bytes) {
  if (command.empty()) {
    throw Error(ErrorCode::SANDBOX_SPAWN_FAILURE, "no command to run");
  }

  int pipe_fds[2];
  if (pipe(pipe_fds) != 0) throw Error(ErrorCode::SANDBOX_SPAWN_FAILURE, "pipe failed");

  auto start = std::chrono::steady_clock::now();
  pid_t pid = fork();
  if (pid < 0) {
    close(pipe_fds[0]);
    close(pipe_fds[1]);
    throw Error(ErrorCode::SANDBOX_SPAWN_FAILURE, "fork failed");
  }

  if (pid == 0) {
    setpgid(0, 0);
    close(pipe_fds[0]);
    dup2(pipe_fds[1], STDOUT_FILENO);
    dup2(pipe_fds[1], STDERR_FILENO);
    close(pipe_fds[1]);
    if (chdir(working_dir.c_str()) != 0) _exit(126);

    std::vector<std::string> env_strings = {"PATH=/usr/bin:/bin",
                                            "HOME=" + working_dir.string()};
    for (const auto& [name, value] : env) env_strings.push_back(name + "=" + value);
    std::vector<char*> envp;
    for (auto& s : env_strings) envp.push_back(s.data());
    envp.push_back(nullptr);

    std::vector<std::string> argv_strings = command;
    std::vector<char*> argv;
    for (auto& s : argv_strings) argv.push_back(s.data());
    argv.push_back(nullptr);

    execvpe(argv[0], argv.data(), envp.data());
    _exit(127);
  }

  close(pipe_fds[1]);
  SpawnResult result;

  char buf[4096];
  while (true) {
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    int64_t remaining = timeout_ms - elapsed;
    if (remaining <= 0) {
      result.timed_out = true;
      break;
    }
    struct pollfd pfd = {pipe_fds[0], POLLIN, 0};
    int ready = poll(&pfd, 1, static_cast<int>(std::min<int64_t>(remaining, 250)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (ready == 0) continue;
    ssize_t n = read(pipe_fds[0], buf, sizeof(buf));
    if (n < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (n == 0) break;  // child closed its end
    if (static_cast<int64_t>(result.output.size()) < capture_limit_bytes) {
      int64_t room = capture_limit_bytes - static_cast<int64_t>(result.output.size());
      result.output.append(buf, static_cast<size_t>(std::min<int64_t>(n, room)));
      if (room < n) result.truncated = true;
    } else {
      result.truncated = true;  // keep draining so the child never blocks on a full pipe
    }
  }
  close(pipe_fds[0]);

  int status = 0;
  if (result.timed_out) {
    kill(-pid, SIGKILL);
    kill(pid, SIGKILL);
  }
  waitpid(pid, &status, 0);

  result.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  result.exit_status = result.timed_out
                           ? -1
                           : (WIFEXITED(status)
                                  ? WEXITSTATUS(status)
                                  : 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0));
  return result;
}

// Runs the declared harness command in an isolated working directory with a
// scrubbed environment. Only allowlisted aliases are exported; the result
// records aliases and an output digest, never input values.
inline SandboxResult run_sandbox(const std::map<std::string, std::string>& bundle,
                                 const HarnessManifest& manifest,
                                 const std::map<std::string, std::string>& inputs,
                                 const SandboxPolicy& policy,
                                 int64_t now_epoch = 0) {
  if (now_epoch == 0) now_epoch = static_cast<int64_t>(::time(nullptr));

  SandboxResult result;
  result.started_at = now_epoch;
  for (const auto& [alias, _] : inputs) result.input_aliases.push_back(alias);

  for (const auto& alias : manifest.required_inputs) {
    if (!inputs.count(alias)) result.missing_inputs.push_back(alias);
  }
  if (!result.missing_inputs.empty()) {
    result.status = SandboxStatus::SkippedMissingInputs;
    result.output_digest = sha256_hex("");
    return result;
  }

  if (manifest.command.empty()) {
    throw Error(ErrorCode::SANDBOX_SPAWN_FAILURE, "harness declares no command");
  }

  std::error_code ec;
  fs::create_directories(policy.working_dir, ec);
  if (ec) throw Error(ErrorCode::SANDBOX_SPAWN_FAILURE, policy.working_dir.string());
  for (const auto& [role, content] : bundle) {
    std::string filename =
        role == "implementation" ? kImplementationFilename : bundle_role_filename(role);
    write_file_atomic(policy.working_dir / filename, content);
  }

  std::map<std::string, std::string> env;
  for (const auto& [alias, value] : inputs) {
    if (policy.env_allowlist.count(alias)) env[alias] = value;
  }
  int64_t timeout_ms = manifest.timeout_ms > 0 ? std::min(manifest.timeout_ms, policy.timeout_ms)
                                               : policy.timeout_ms;

  SpawnResult spawn = spawn_captured(manifest.command, policy.working_dir, env, timeout_ms,
                                     policy.capture_limit_bytes);

  result.duration_ms = spawn.duration_ms;
  result.output_digest = sha256_hex(spawn.output);
  result.exit_status = spawn.exit_status;
  if (spawn.truncated) result.error_code = "OUTPUT_TRUNCATED";

  if (spawn.timed_out) {
    result.status = SandboxStatus::Failed;
    result.error_code = std::string(error_code_name(ErrorCode::TIMEOUT));
    return result;
  }
  result.status = spawn.exit_status == manifest.expected_exit ? SandboxStatus::Passed
                                                              : SandboxStatus::Failed;
  return result;
}

// Loads a bundle from disk by its conventional filenames and runs it.
inline SandboxResult run_sandbox_in(const fs::path& bundle_dir, const HarnessManifest& manifest,
                                    const std::map<std::string, std::string>& inputs,
                                    SandboxPolicy policy) {
  std::map<std::string, std::string> bundle;
  for (const auto& [role, filename] : bundle_role_files()) {
    if (auto content = try_read_file(bundle_dir / filename)) bundle[role] = *content;
  }
  if (auto impl = try_read_file(bundle_dir / kImplementationFilename)) {
    bundle["implementation"] = *impl;
  }
  if (policy.working_dir.empty()) {
    policy.working_dir = bundle_dir / ".sandbox";
  }
  return run_sandbox(bundle, manifest, inputs, policy);
}

}  // namespace capsa
