#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "capsa/bench.hpp"
#include "capsa/mcp.hpp"
#include "capsa/validator.hpp"

namespace {

using namespace capsa;

std::string flag_for(const std::string& name) {
  std::string flag = "--";
  for (char c : name) flag.push_back(c == '_' ? '-' : c);
  return flag;
}

// Executor for serve mode: runs the tool's scaffolded wrapper with one flag
// per argument in a scrubbed sandbox. Credential values come from the serving
// process environment, keyed by the contract's aliases.
Executor make_local_executor(const Catalog& catalog) {
  return [&catalog](const std::string& tool_id, int version, const ojson& arguments) {
    fs::path dir = catalog.root / "tools" / tool_id / std::to_string(version);
    std::vector<std::string> command = {"python3", "wrapper.py"};
    for (const auto& [key, value] : arguments.items()) {
      command.push_back(flag_for(key));
      command.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }

    std::map<std::string, std::string> env;
    const ToolCapsule* capsule = catalog.find_capsule(tool_id);
    if (capsule) {
      for (const auto& cred : capsule->contract.credentials) {
        if (const char* value = std::getenv(cred.env_alias.c_str())) {
          env[cred.env_alias] = value;
        }
      }
    }

    fs::path workdir = catalog.root / ".run" / tool_id;
    std::error_code ec;
    fs::create_directories(workdir, ec);
    fs::copy(dir, workdir, fs::copy_options::recursive | fs::copy_options::overwrite_existing,
             ec);
    if (ec) throw Error(ErrorCode::EXECUTOR_FAILURE, "cannot stage " + tool_id + ": " + ec.message());

    auto spawn = spawn_captured(command, workdir, env, 60000, 1 << 20);
    return CallOutcome{spawn.exit_status, spawn.output};
  };
}

int cmd_serve(const std::string& root, const std::string& profile_id) {
  auto catalog = open_catalog(root);
  for (const auto& [tool_id, reason] : catalog.quarantined) {
    std::cerr << "quarantined " << tool_id << ": " << reason << "\n";
  }
  Router router(catalog, root);
  try {
    router.load_profile(profile_id);
  } catch (const Error&) {
    std::cerr << "profile '" << profile_id << "' not found, creating defaults\n";
    router.save_profile(make_default_profile(profile_id));
  }
  McpServer server(router, profile_id, make_local_executor(catalog));
  std::cerr << "serving " << catalog.cards.size() << " tools on stdio (profile " << profile_id
            << ")\n";
  server.run(std::cin, std::cout);
  return 0;
}

CapabilityContract contract_from_tool_card(const ojson& card) {
  CapabilityContract contract;
  contract.name = card.at("name").get<std::string>();
  contract.description = card.value("summary", "");
  for (const auto& pj : card.value("parameters", ojson::array())) {
    ParameterSpec param;
    param.name = pj.at("name").get<std::string>();
    param.kind = param_kind_from(pj.value("kind", "string")).value_or(ParamKind::String);
    param.required = pj.value("required", false);
    contract.parameters.push_back(std::move(param));
  }
  for (const auto& alias : card.value("credential_aliases", std::vector<std::string>{})) {
    contract.credentials.push_back({alias, "", true});
  }
  contract.runtime_class =
      runtime_class_from(card.value("runtime_class", "pure_local")).value_or(RuntimeClass::PureLocal);
  return contract;
}

int cmd_validate(const std::string& bundle_dir, const std::string& patterns_file,
                 const std::string& inputs_file) {
  fs::path dir(bundle_dir);
  std::map<std::string, std::string> bundle;
  for (const auto& [role, filename] : bundle_role_files()) {
    if (auto content = try_read_file(dir / filename)) bundle[role] = *content;
  }
  if (auto impl = try_read_file(dir / kImplementationFilename)) bundle["implementation"] = *impl;
  if (bundle.empty()) {
    std::cerr << "no bundle files under " << bundle_dir << "\n";
    return 2;
  }

  auto card_text = bundle.find("tool_card");
  if (card_text == bundle.end()) {
    std::cerr << "bundle lacks tool_card.json; cannot reconstruct the contract\n";
    return 2;
  }
  CapabilityContract contract = contract_from_tool_card(ojson::parse(card_text->second));

  ojson report;
  report["tool"] = contract.name;

  auto findings = run_structural_review(bundle, contract);
  report["review_findings"] = ojson::array();
  for (const auto& f : findings) report["review_findings"].push_back(to_json(f));
  bool review_ok = !has_error_findings(findings);

  bool patterns_ok = true;
  if (!patterns_file.empty()) {
    auto spec = pattern_spec_from_json(ojson::parse(read_file(patterns_file)));
    auto score = score_patterns(bundle, spec);
    ojson pj;
    pj["tp"] = score.tp;
    pj["fp"] = score.fp;
    pj["fn"] = score.fn;
    pj["precision"] = score.precision();
    pj["recall"] = score.recall();
    pj["f1"] = score.f1();
    pj["detail"] = ojson::array();
    for (const auto& hit : score.detail) {
      pj["detail"].push_back(ojson{{"pattern_id", hit.pattern_id},
                                   {"required", hit.required},
                                   {"matched", hit.matched}});
    }
    report["patterns"] = pj;
    patterns_ok = score.fn == 0 && score.fp == 0;
  }

  bool sandbox_ok = true;
  if (bundle.count("harness_manifest")) {
    HarnessManifest manifest =
        harness_manifest_from_json(ojson::parse(bundle.at("harness_manifest")));
    std::map<std::string, std::string> inputs;
    if (!inputs_file.empty()) {
      ojson inputs_json = ojson::parse(read_file(inputs_file));
      for (const auto& [alias, value] : inputs_json.items()) {
        inputs[alias] = value.get<std::string>();
      }
    }
    SandboxPolicy policy;
    policy.working_dir = dir / ".sandbox";
    for (const auto& alias : manifest.required_inputs) policy.env_allowlist.insert(alias);
    auto result = run_sandbox(bundle, manifest, inputs, policy);
    report["sandbox"] = to_json(result);
    sandbox_ok = result.status != SandboxStatus::Failed;
  }

  std::cout << report.dump(2) << "\n";
  return review_ok && patterns_ok && sandbox_ok ? 0 : 1;
}

int cmd_bench_router(const std::string& suite_file, const std::string& emit,
                     const std::string& out_dir) {
  Suite suite = suite_from_json(ojson::parse(read_file(suite_file)));
  fs::path out(out_dir);
  fs::create_directories(out);

  fs::path state = out / "state" / suite.suite;
  fs::remove_all(state);
  auto catalog = generate_synthetic_catalog(suite.catalog.seed, suite.catalog.tool_count,
                                            suite.catalog.families, state);
  Router router(catalog, state);
  router.save_profile(make_default_profile());
  auto report = run_router_suite(suite, catalog, router, "default");

  ReportFormat format = emit == "csv"     ? ReportFormat::Csv
                        : emit == "jsonl" ? ReportFormat::Jsonl
                                          : ReportFormat::TableText;
  std::string extension = emit == "csv" ? ".csv" : emit == "jsonl" ? ".jsonl" : ".txt";
  fs::path report_path = out / (suite.suite + extension);
  write_file_atomic(report_path, emit_report(report, format));

  std::cout << emit_report(report, ReportFormat::TableText);
  std::cerr << "report written to " << report_path.string() << "\n";
  return 0;
}

int cmd_bench_gen_suite(const std::string& tier, const std::string& out_file) {
  Suite suite = make_builtin_suite(tier);
  write_file_atomic(out_file, to_json(suite).dump(2) + "\n");
  std::cerr << "wrote " << suite.cases.size() << " cases to " << out_file << "\n";
  return 0;
}

int cmd_import(const std::string& root, const std::string& listing_file) {
  auto catalog = open_catalog(root);
  auto listing = ojson::parse(read_file(listing_file));
  auto imported = import_mcp_listing(catalog, listing, static_cast<int64_t>(::time(nullptr)));
  for (const auto& tool_id : imported) std::cout << tool_id << "\n";
  std::cerr << "imported " << imported.size() << " tools (pending review)\n";
  return 0;
}

int cmd_govern(const std::string& root, const std::string& tool_id, const std::string& action,
               int version, const std::string& alias, const std::string& secret_ref,
               const std::string& actor) {
  auto catalog = open_catalog(root);
  Router router(catalog, root);

  GovernanceAction act;
  if (action == "pin") {
    act.kind = GovernanceAction::Kind::Pin;
    act.pin_version = version;
  } else if (action == "unpin") {
    act.kind = GovernanceAction::Kind::Unpin;
  } else if (action == "map-credential") {
    act.kind = GovernanceAction::Kind::MapCredential;
    act.credential_alias = alias;
    act.secret_reference = secret_ref;
  } else {
    auto lifecycle_action = lifecycle_action_from(action);
    if (!lifecycle_action) {
      std::cerr << "unknown action: " << action << "\n";
      return 2;
    }
    act.kind = GovernanceAction::Kind::Lifecycle;
    act.lifecycle_action = *lifecycle_action;
  }

  auto state = router.apply_governance_action(tool_id, act, actor);
  std::cout << to_json(state).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capsa: governed tool-capsule catalog and intent router"};
  app.require_subcommand(1);

  std::string root = ".";
  std::string profile = "default";
  auto* serve = app.add_subcommand("serve", "Serve the router meta-tools over stdio JSON-RPC");
  serve->add_option("--root", root, "Catalog root directory")->required();
  serve->add_option("--profile", profile, "Default governance profile");

  std::string bundle_dir, patterns_file, inputs_file;
  auto* validate = app.add_subcommand("validate", "Review, pattern-score, and sandbox a bundle");
  validate->add_option("--bundle", bundle_dir, "Bundle directory")->required();
  validate->add_option("--patterns", patterns_file, "PatternSpec JSON file");
  validate->add_option("--inputs", inputs_file, "JSON object of input alias -> value");

  auto* bench = app.add_subcommand("bench", "Benchmark harness");
  std::string suite_file, emit = "table", out_dir = "bench-out";
  auto* bench_router = bench->add_subcommand("router", "Run a router suite");
  bench_router->add_option("--suite", suite_file, "Suite JSON file")->required();
  bench_router->add_option("--emit", emit, "table|csv|jsonl")
      ->check(CLI::IsMember({"table", "csv", "jsonl"}));
  bench_router->add_option("--out", out_dir, "Output directory");

  std::string tier, suite_out;
  auto* gen_suite = bench->add_subcommand("gen-suite", "Write a built-in suite file");
  gen_suite->add_option("--tier", tier, "lite|realistic|adversarial")
      ->required()
      ->check(CLI::IsMember({"lite", "realistic", "adversarial"}));
  gen_suite->add_option("--out", suite_out, "Destination file")->required();

  std::string listing_file;
  auto* import_cmd = app.add_subcommand("import", "Import an MCP tool listing as pending capsules");
  import_cmd->add_option("--root", root, "Catalog root directory")->required();
  import_cmd->add_option("--listing", listing_file, "Listing JSON file")->required();

  std::string tool_id, action, alias, secret_ref, actor = "cli";
  int version = 0;
  auto* govern = app.add_subcommand("govern", "Apply a governance action to a tool");
  govern->add_option("--root", root, "Catalog root directory")->required();
  govern->add_option("--tool", tool_id, "Tool id")->required();
  govern->add_option("--action", action,
                     "submit|approve|block|unblock|deprecate|mark_failed|reinstate|pin|unpin|"
                     "map-credential")
      ->required();
  govern->add_option("--version", version, "Version (pin)");
  govern->add_option("--alias", alias, "Credential alias (map-credential)");
  govern->add_option("--secret-ref", secret_ref, "Secret reference (map-credential)");
  govern->add_option("--actor", actor, "Actor recorded in the audit log");

  CLI11_PARSE(app, argc, argv);

  try {
    if (serve->parsed()) return cmd_serve(root, profile);
    if (validate->parsed()) return cmd_validate(bundle_dir, patterns_file, inputs_file);
    if (bench->parsed()) {
      if (bench_router->parsed()) return cmd_bench_router(suite_file, emit, out_dir);
      if (gen_suite->parsed()) return cmd_bench_gen_suite(tier, suite_out);
      std::cerr << "bench requires a subcommand (router | gen-suite)\n";
      return 2;
    }
    if (import_cmd->parsed()) return cmd_import(root, listing_file);
    if (govern->parsed()) return cmd_govern(root, tool_id, action, version, alias, secret_ref,
                                            actor);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
