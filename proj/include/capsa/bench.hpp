#pragma once

#include <cstdio>
#include <numeric>

#include "capsa/mcp.hpp"
#include "capsa/router.hpp"

namespace capsa {

// ---------------------------------------------------------------------------
// synthetic catalog generation
// ---------------------------------------------------------------------------
//
// Catalogs are grouped into families that share vocabulary, so that tools
// inside a family are semantically confusable (upload vs download vs delete
// in the same storage service). Identical seeds produce byte-identical
// catalogs; all timestamps are fixed.

constexpr int64_t kSyntheticEpoch = 1767225600;  // 2026-01-01T00:00:00Z
constexpr int kDefaultSchemaChars = 1430;

struct FamilyParam {
  const char* name;
  ParamKind kind;
  bool required;
};

struct FamilyTemplate {
  const char* name;
  const char* service_noun;  // prose name of the service
  std::vector<const char*> verbs;
  std::vector<const char*> objects;
  std::vector<const char*> vocabulary;  // filler words, disjoint from verbs/objects
  std::vector<FamilyParam> params;
  std::vector<std::pair<const char*, ParamKind>> outputs;
  RuntimeClass runtime = RuntimeClass::NetworkApi;
  const char* credential_alias = "";  // empty -> no credential
  std::vector<const char*> requirements;
};

inline const std::vector<FamilyTemplate>& builtin_families() {
  static const std::vector<FamilyTemplate> families = {
      {"storage",
       "object storage",
       {"upload", "download", "delete", "list", "copy"},
       {"file", "object", "bucket", "archive"},
       {"checksum", "multipart", "replication", "durability", "retention", "encryption",
        "versioning", "tiering", "bandwidth", "integrity", "manifest", "quota"},
       {{"path", ParamKind::Path, true},
        {"bucket", ParamKind::String, true},
        {"region", ParamKind::Enum, false},
        {"overwrite", ParamKind::Boolean, false},
        {"prefix", ParamKind::String, false}},
       {{"url", ParamKind::String}, {"size_bytes", ParamKind::Integer}},
       RuntimeClass::NetworkApi,
       "STORAGE_API_TOKEN",
       {"requests>=2.31"}},
      {"messaging",
       "team messaging",
       {"send", "read", "list", "delete", "pin"},
       {"message", "channel", "thread", "notification"},
       {"mention", "broadcast", "presence", "reaction", "digest", "webhook", "formatting",
        "escalation", "roster", "receipt", "emoji", "snooze"},
       {{"channel", ParamKind::String, true},
        {"text", ParamKind::String, true},
        {"thread_id", ParamKind::String, false},
        {"silent", ParamKind::Boolean, false},
        {"limit", ParamKind::Integer, false}},
       {{"message_id", ParamKind::String}, {"delivered", ParamKind::Boolean}},
       RuntimeClass::NetworkApi,
       "MESSAGING_API_TOKEN",
       {"requests>=2.31"}},
      {"vcs",
       "version control",
       {"create", "list", "merge", "close", "get"},
       {"issue", "pull_request", "branch", "release"},
       {"reviewer", "label", "milestone", "diff", "conflict", "approval", "changelog",
        "assignee", "rebase", "protection", "workflow", "squash"},
       {{"repo", ParamKind::String, true},
        {"title", ParamKind::String, true},
        {"base", ParamKind::String, false},
        {"draft", ParamKind::Boolean, false},
        {"number", ParamKind::Integer, false}},
       {{"id", ParamKind::Integer}, {"url", ParamKind::String}},
       RuntimeClass::NetworkApi,
       "VCS_API_TOKEN",
       {"requests>=2.31"}},
      {"crm",
       "customer records",
       {"create", "update", "list", "delete", "get"},
       {"contact", "deal", "ticket", "account"},
       {"pipeline", "segment", "owner", "priority", "enrichment", "deduplication", "activity",
        "stage", "forecast", "territory", "renewal", "churn"},
       {{"record_id", ParamKind::String, true},
        {"email", ParamKind::String, false},
        {"stage", ParamKind::String, false},
        {"amount", ParamKind::Number, false},
        {"owner", ParamKind::String, false}},
       {{"record_id", ParamKind::String}, {"updated", ParamKind::Boolean}},
       RuntimeClass::NetworkApi,
       "CRM_API_TOKEN",
       {"requests>=2.31"}},
      {"docs",
       "document processing",
       {"convert", "render", "extract", "merge", "split"},
       {"pdf", "markdown", "spreadsheet", "report"},
       {"pagination", "layout", "heading", "footnote", "template", "margin", "bookmark",
        "metadata", "compression", "outline", "watermark", "typesetting"},
       {{"input_path", ParamKind::Path, true},
        {"output_path", ParamKind::Path, true},
        {"format", ParamKind::Enum, false},
        {"pages", ParamKind::String, false},
        {"quality", ParamKind::Integer, false}},
       {{"output_path", ParamKind::String}, {"page_count", ParamKind::Integer}},
       RuntimeClass::Filesystem,
       "",
       {}},
      {"calendar",
       "calendar scheduling",
       {"create", "list", "update", "cancel", "find"},
       {"event", "meeting", "reminder", "availability"},
       {"recurrence", "timezone", "attendee", "agenda", "room", "buffer", "invite", "rsvp",
        "organizer", "slot", "reschedule", "quorum"},
       {{"calendar_id", ParamKind::String, true},
        {"start", ParamKind::String, true},
        {"duration_minutes", ParamKind::Integer, false},
        {"attendees", ParamKind::String, false},
        {"all_day", ParamKind::Boolean, false}},
       {{"event_id", ParamKind::String}, {"status", ParamKind::String}},
       RuntimeClass::NetworkApi,
       "CALENDAR_API_TOKEN",
       {"requests>=2.31"}},
      {"billing",
       "billing and payments",
       {"create", "refund", "list", "void", "capture"},
       {"invoice", "payment", "subscription", "charge"},
       {"proration", "ledger", "settlement", "dispute", "dunning", "currency", "installment",
        "reconciliation", "payout", "balance", "statement", "surcharge"},
       {{"customer_id", ParamKind::String, true},
        {"amount", ParamKind::Number, true},
        {"currency", ParamKind::Enum, false},
        {"invoice_id", ParamKind::String, false},
        {"reason", ParamKind::String, false}},
       {{"transaction_id", ParamKind::String}, {"status", ParamKind::String}},
       RuntimeClass::NetworkApi,
       "BILLING_API_TOKEN",
       {"requests>=2.31"}},
      {"monitoring",
       "observability",
       {"query", "list", "create", "silence", "ack"},
       {"metric", "alert", "dashboard", "incident"},
       {"threshold", "anomaly", "baseline", "percentile", "cardinality", "downsample",
        "heartbeat", "oncall", "runbook", "saturation", "latency", "paging"},
       {{"expression", ParamKind::String, true},
        {"window", ParamKind::String, false},
        {"severity", ParamKind::Enum, false},
        {"team", ParamKind::String, false},
        {"duration_minutes", ParamKind::Integer, false}},
       {{"series_count", ParamKind::Integer}, {"status", ParamKind::String}},
       RuntimeClass::NetworkApi,
       "MONITORING_API_TOKEN",
       {"requests>=2.31"}},
      {"email",
       "email delivery",
       {"send", "search", "list", "delete", "forward"},
       {"message", "campaign", "template", "mailbox"},
       {"bounce", "deliverability", "header", "recipient", "subject", "unsubscribe", "domain",
        "signature", "inbox", "queue", "suppression", "digest"},
       {{"recipient", ParamKind::String, true},
        {"subject", ParamKind::String, true},
        {"body", ParamKind::String, false},
        {"mailbox_id", ParamKind::String, false},
        {"track_opens", ParamKind::Boolean, false}},
       {{"message_id", ParamKind::String}, {"queued", ParamKind::Boolean}},
       RuntimeClass::NetworkApi,
       "EMAIL_API_TOKEN",
       {"requests>=2.31"}},
      {"database",
       "relational data",
       {"insert", "query", "update", "list", "count"},
       {"record", "table", "row", "index"},
       {"transaction", "schema", "migration", "constraint", "partition", "join", "aggregate",
        "cursor", "replica", "consistency", "shard", "backfill"},
       {{"table", ParamKind::String, true},
        {"where", ParamKind::String, false},
        {"limit", ParamKind::Integer, false},
        {"values", ParamKind::String, false},
        {"dry_run", ParamKind::Boolean, false}},
       {{"row_count", ParamKind::Integer}, {"elapsed_ms", ParamKind::Integer}},
       RuntimeClass::Hybrid,
       "DATABASE_API_TOKEN",
       {"sqlalchemy>=2.0"}},
  };
  return families;
}

inline const std::vector<std::string>& qualifier_words() {
  static const std::vector<std::string> words = {
      "nimbus", "zenith", "apex",   "quartz", "harbor", "mesa",    "onyx",    "prism",
      "ember",  "cascade", "beacon", "summit", "cobalt", "drift",   "lumen",   "vertex",
      "atlas",  "sierra",  "fathom", "garnet", "helix",  "juniper", "kestrel", "marble"};
  return words;
}

struct ToolPlan {
  std::string tool_id;
  std::string family;
  std::string service_noun;
  std::string verb;
  std::string object;
  std::string qualifier;
  size_t family_index = 0;
};

inline std::vector<const FamilyTemplate*> resolve_families(
    const std::vector<std::string>& family_names) {
  std::vector<const FamilyTemplate*> out;
  if (family_names.empty()) {
    for (const auto& family : builtin_families()) out.push_back(&family);
    return out;
  }
  for (const auto& name : family_names) {
    const FamilyTemplate* found = nullptr;
    for (const auto& family : builtin_families()) {
      if (name == family.name) found = &family;
    }
    if (!found) throw Error(ErrorCode::MALFORMED_SUITE, "unknown family " + name);
    out.push_back(found);
  }
  return out;
}

// Deterministic name plan: families round-robin, then verbs, objects and
// qualifiers cycle within each family. No randomness is involved so suites
// can be constructed against the plan alone.
inline std::vector<ToolPlan> plan_catalog(int tool_count,
                                          const std::vector<std::string>& family_names) {
  auto families = resolve_families(family_names);
  const auto& qualifiers = qualifier_words();
  std::vector<int> per_family(families.size(), 0);

  std::vector<ToolPlan> plan;
  plan.reserve(static_cast<size_t>(tool_count));
  for (int i = 0; i < tool_count; ++i) {
    size_t f = static_cast<size_t>(i) % families.size();
    const FamilyTemplate& family = *families[f];
    int n = per_family[f]++;
    int verb_count = static_cast<int>(family.verbs.size());
    int object_count = static_cast<int>(family.objects.size());
    int qualifier_count = static_cast<int>(qualifiers.size());

    ToolPlan p;
    p.family = family.name;
    p.service_noun = family.service_noun;
    p.verb = family.verbs[static_cast<size_t>(n % verb_count)];
    p.object = family.objects[static_cast<size_t>((n / verb_count) % object_count)];
    p.qualifier = qualifiers[static_cast<size_t>((n / (verb_count * object_count)) %
                                                 qualifier_count)];
    p.family_index = f;
    p.tool_id = p.family + "_" + p.verb + "_" + p.object + "_" + p.qualifier;
    int wrap = n / (verb_count * object_count * qualifier_count);
    if (wrap > 0) p.tool_id += "_" + std::to_string(wrap + 1);
    plan.push_back(std::move(p));
  }
  return plan;
}

namespace detail {

inline uint64_t bounded(std::mt19937_64& rng, uint64_t n) { return n == 0 ? 0 : rng() % n; }

inline std::string prose(const std::string& word) {
  std::string out;
  for (char c : word) out.push_back(c == '_' ? ' ' : c);
  return out;
}

inline std::string capitalize(std::string word) {
  if (!word.empty()) word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
  return word;
}

// Builds one synthetic contract. The description is padded with family
// vocabulary until the rendered schema reaches the per-tool character
// target, which is how the catalog hits its calibrated mean schema length.
inline CapabilityContract synthesize_contract(const ToolPlan& plan, const FamilyTemplate& family,
                                              std::mt19937_64& rng, int target_schema_chars) {
  CapabilityContract contract;
  contract.name = plan.tool_id;
  contract.runtime_class = family.runtime;

  std::ostringstream description;
  description << capitalize(plan.verb) << "s a " << prose(plan.object) << " in the "
              << plan.qualifier << " " << plan.service_noun << " service.";
  description << " Operates on " << prose(plan.object) << " resources for the " << plan.family
              << " family.";

  int64_t low = target_schema_chars * 3 / 4;
  int64_t span = std::max<int64_t>(1, target_schema_chars / 2);
  int64_t target = low + static_cast<int64_t>(bounded(rng, static_cast<uint64_t>(span)));

  size_t vocab_cursor = bounded(rng, family.vocabulary.size());
  auto next_word = [&] {
    const char* word = family.vocabulary[vocab_cursor % family.vocabulary.size()];
    ++vocab_cursor;
    return std::string(word);
  };

  int params_to_use = 3 + static_cast<int>(bounded(rng, 3));
  params_to_use = std::min<int>(params_to_use, static_cast<int>(family.params.size()));
  for (int i = 0; i < params_to_use; ++i) {
    const FamilyParam& fp = family.params[static_cast<size_t>(i)];
    ParameterSpec param;
    param.name = fp.name;
    param.kind = fp.kind;
    param.required = fp.required;
    param.description = "The " + prose(fp.name) + " used by the " + plan.family + " service";
    if (fp.kind == ParamKind::Enum) {
      if (std::string(fp.name) == "region") param.enum_values = {"us", "eu", "ap"};
      else if (std::string(fp.name) == "currency") param.enum_values = {"usd", "eur", "gbp"};
      else if (std::string(fp.name) == "severity") param.enum_values = {"info", "warning", "critical"};
      else param.enum_values = {"pdf", "html", "txt"};
    }
    contract.parameters.push_back(std::move(param));
  }

  int outputs_to_use = 1 + static_cast<int>(bounded(rng, family.outputs.size()));
  for (int i = 0; i < outputs_to_use; ++i) {
    const auto& [name, kind] = family.outputs[static_cast<size_t>(i)];
    contract.outputs.push_back({name, kind, "Resulting " + prose(name)});
  }

  if (family.credential_alias[0] != '\0') {
    contract.credentials.push_back(
        {family.credential_alias, "API credential for the " + plan.family + " service", true});
  }

  contract.failure_modes.push_back(
      {"invalid_input", "A parameter fails validation", "reject with a usage error"});
  if (contract.runtime_class == RuntimeClass::NetworkApi) {
    contract.failure_modes.push_back(
        {"provider_error", "The upstream service rejects the request", "surface provider status"});
  }

  static const std::vector<std::string> sentence_shapes = {
      "Supports $1, $2, and $3 controls.",
      "Handles $1 and $2 edge cases.",
      "Designed for $1 aware pipelines with $2 tracking.",
      "Includes $1 validation and $2 reporting.",
  };
  size_t shape_cursor = bounded(rng, sentence_shapes.size());
  contract.description = description.str();
  while (static_cast<int64_t>(render_full_schema(contract).size()) < target) {
    std::string sentence = sentence_shapes[shape_cursor % sentence_shapes.size()];
    ++shape_cursor;
    for (const char* slot : {"$1", "$2", "$3"}) {
      size_t pos = sentence.find(slot);
      if (pos != std::string::npos) sentence.replace(pos, 2, next_word());
    }
    contract.description += " " + sentence;
  }
  return contract;
}

inline std::string synthesize_implementation(const ToolPlan& plan) {
  std::ostringstream impl;
  impl << "def run(**kwargs):\n";
  impl << "    \"\"\"Core implementation for " << plan.tool_id << ".\"\"\"\n";
  impl << "    return {\"ok\": True, \"tool\": \"" << plan.tool_id
       << "\", \"args\": sorted(kwargs)}\n";
  return impl.str();
}

}  // namespace detail

// Generates, scaffolds, and registers `tool_count` approved capsules under
// `root`. Identical (seed, tool_count, families) inputs produce an identical
// on-disk catalog.
inline Catalog generate_synthetic_catalog(int64_t seed, int tool_count,
                                          const std::vector<std::string>& family_names,
                                          const fs::path& root,
                                          int target_schema_chars = kDefaultSchemaChars) {
  if (tool_count < 1) throw Error(ErrorCode::MALFORMED_SUITE, "tool_count must be >= 1");
  auto plan = plan_catalog(tool_count, family_names);
  auto families = resolve_families(family_names);

  Catalog catalog = open_catalog(root);
  catalog.defer_index_writes = true;
  for (size_t i = 0; i < plan.size(); ++i) {
    const ToolPlan& p = plan[i];
    const FamilyTemplate& family = *families[p.family_index];
    std::mt19937_64 rng(static_cast<uint64_t>(seed) * 6364136223846793005ULL +
                        static_cast<uint64_t>(i) + 1);

    CapabilityContract contract = detail::synthesize_contract(p, family, rng, target_schema_chars);
    std::vector<std::string> requirements(family.requirements.begin(), family.requirements.end());
    BundleFiles bundle = scaffold_bundle(contract, detail::synthesize_implementation(p),
                                         requirements);

    Provenance provenance;
    provenance.tool_id = p.tool_id;
    provenance.version = 1;
    provenance.source = CapsuleSource::Generated;
    provenance.origin = "synthetic";
    provenance.created_at = kSyntheticEpoch;

    ToolCapsule capsule = assemble_capsule(
        contract, bundle, normalize_dependencies(requirements, PinPolicy::RelaxPins), {},
        provenance);
    capsule.governance.lifecycle = Lifecycle::Approved;  // bench fixtures ship approved
    register_capsule(catalog, capsule);
  }
  flush_index(catalog);
  return catalog;
}

// ---------------------------------------------------------------------------
// selection metrics
// ---------------------------------------------------------------------------

struct CaseMetrics {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Convention: an empty expected set matched by an empty selection counts as
// a perfect case; any other 0/0 division scores zero.
inline CaseMetrics metrics_from_counts(int tp, int fp, int fn) {
  CaseMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  if (tp + fp + fn == 0) {
    m.precision = m.recall = m.f1 = 1.0;
    return m;
  }
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

inline CaseMetrics compute_case_metrics(const std::set<std::string>& expected,
                                        const std::set<std::string>& selected) {
  int tp = 0, fp = 0;
  for (const auto& tool : selected) {
    if (expected.count(tool)) ++tp;
    else ++fp;
  }
  int fn = static_cast<int>(expected.size()) - tp;
  return metrics_from_counts(tp, fp, fn);
}

struct AggregateMetrics {
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
};

inline AggregateMetrics aggregate_metrics(const std::vector<CaseMetrics>& cases) {
  if (cases.empty()) throw Error(ErrorCode::EMPTY_SUITE, "no cases to aggregate");
  int tp = 0, fp = 0, fn = 0;
  double f1_sum = 0.0;
  for (const auto& c : cases) {
    tp += c.tp;
    fp += c.fp;
    fn += c.fn;
    f1_sum += c.f1;
  }
  CaseMetrics micro = metrics_from_counts(tp, fp, fn);
  return {micro.precision, micro.recall, micro.f1, f1_sum / static_cast<double>(cases.size())};
}

// ---------------------------------------------------------------------------
// exposure accounting
// ---------------------------------------------------------------------------

struct ExposureRow {
  int64_t naive_tokens = 0;    // every schema in the catalog
  int64_t compact_tokens = 0;  // every card in the catalog
  int64_t router_tokens = 0;   // the fixed meta-tool surface
  double avg_flow_tokens = 0.0;
  double reduction = 0.0;  // 1 - avg_flow / naive
};

inline double flow_reduction(double naive_tokens, double avg_flow_tokens) {
  if (naive_tokens <= 0) return 0.0;
  return 1.0 - avg_flow_tokens / naive_tokens;
}

// flow(case) = router surface + full schemas of that case's resolved tools.
// Cards of unselected tools are scanned locally, not shown to the model, so
// they do not enter the flow term.
inline ExposureRow compute_exposure_row(const Catalog& catalog,
                                        const std::vector<std::vector<std::string>>& sessions) {
  ExposureRow row;
  row.router_tokens = meta_surface_tokens();
  std::map<std::string, int64_t> schema_tokens;
  for (const auto& card : catalog.cards) {
    row.naive_tokens += card.schema_tokens;
    row.compact_tokens += card.card_tokens;
    schema_tokens[card.tool_id] = card.schema_tokens;
  }
  if (!sessions.empty()) {
    double total_flow = 0.0;
    for (const auto& resolved : sessions) {
      int64_t flow = row.router_tokens;
      for (const auto& tool_id : resolved) {
        auto it = schema_tokens.find(tool_id);
        if (it != schema_tokens.end()) flow += it->second;
      }
      total_flow += static_cast<double>(flow);
    }
    row.avg_flow_tokens = total_flow / static_cast<double>(sessions.size());
  } else {
    row.avg_flow_tokens = static_cast<double>(row.router_tokens);
  }
  row.reduction = flow_reduction(static_cast<double>(row.naive_tokens), row.avg_flow_tokens);
  return row;
}

// ---------------------------------------------------------------------------
// suites
// ---------------------------------------------------------------------------

struct BenchmarkCase {
  std::string case_id;
  std::string intent;
  std::set<std::string> expected;
  int k = 1;
};

struct CatalogSpec {
  int64_t seed = 7;
  int tool_count = 250;
  std::vector<std::string> families;  // empty -> all builtin families
};

struct Suite {
  std::string suite;
  std::string tier;  // lite | realistic | adversarial
  CatalogSpec catalog;
  std::vector<BenchmarkCase> cases;
};

inline ojson to_json(const Suite& suite) {
  ojson j;
  j["suite"] = suite.suite;
  j["tier"] = suite.tier;
  ojson cat;
  cat["seed"] = suite.catalog.seed;
  cat["tool_count"] = suite.catalog.tool_count;
  cat["families"] = suite.catalog.families;
  j["catalog"] = cat;
  j["cases"] = ojson::array();
  for (const auto& c : suite.cases) {
    ojson cj;
    cj["case_id"] = c.case_id;
    cj["intent"] = c.intent;
    cj["expected"] = std::vector<std::string>(c.expected.begin(), c.expected.end());
    cj["k"] = c.k;
    j["cases"].push_back(cj);
  }
  return j;
}

inline Suite suite_from_json(const ojson& j) {
  Suite suite;
  suite.suite = j.at("suite").get<std::string>();
  suite.tier = j.value("tier", "lite");
  const auto& cat = j.at("catalog");
  suite.catalog.seed = cat.value("seed", int64_t{7});
  suite.catalog.tool_count = cat.value("tool_count", 250);
  suite.catalog.families = cat.value("families", std::vector<std::string>{});
  for (const auto& cj : j.at("cases")) {
    BenchmarkCase c;
    c.case_id = cj.at("case_id").get<std::string>();
    c.intent = cj.at("intent").get<std::string>();
    for (const auto& e : cj.value("expected", std::vector<std::string>{})) c.expected.insert(e);
    c.k = cj.value("k", 1);
    suite.cases.push_back(std::move(c));
  }
  if (suite.cases.empty()) throw Error(ErrorCode::EMPTY_SUITE, suite.suite);
  return suite;
}

// ---------------------------------------------------------------------------
// built-in suites
// ---------------------------------------------------------------------------

namespace detail {

inline std::string intent_for(const ToolPlan& plan) {
  return plan.verb + " a " + prose(plan.object) + " in the " + plan.qualifier + " " +
         plan.service_noun + " service";
}

inline const ToolPlan& find_tool(const std::vector<ToolPlan>& plan, const std::string& family,
                                 const std::string& verb, const std::string& object) {
  for (const auto& p : plan) {
    if (p.family == family && p.verb == verb && p.object == object) return p;
  }
  throw Error(ErrorCode::MALFORMED_SUITE, "no tool " + family + "/" + verb + "/" + object);
}

}  // namespace detail

// Fast regression tier: unambiguous single-tool intents whose wording names
// the target tool's exact vocabulary; the lexical scorer's top-1 is the
// expected tool for every case.
inline Suite make_lite_suite() {
  Suite suite;
  suite.suite = "router_lite";
  suite.tier = "lite";
  suite.catalog = {7, 250, {}};
  auto plan = plan_catalog(suite.catalog.tool_count, suite.catalog.families);
  // Spread across distinct families.
  const std::vector<size_t> picks = {3, 14, 25, 36, 47, 58, 69, 80};
  int index = 1;
  for (size_t pick : picks) {
    const ToolPlan& p = plan[pick];
    BenchmarkCase c;
    char id[16];
    std::snprintf(id, sizeof(id), "lite_%02d", index++);
    c.case_id = id;
    c.intent = detail::intent_for(p);
    c.expected = {p.tool_id};
    c.k = 1;
    suite.cases.push_back(std::move(c));
  }
  return suite;
}

// Desk-scale tier: 50 single- and multi-tool intents over a 600-tool catalog.
inline Suite make_realistic_suite() {
  Suite suite;
  suite.suite = "router_realistic";
  suite.tier = "realistic";
  suite.catalog = {11, 600, {}};
  auto plan = plan_catalog(suite.catalog.tool_count, suite.catalog.families);

  int index = 1;
  auto case_id = [&index] {
    char id[16];
    std::snprintf(id, sizeof(id), "real_%02d", index++);
    return std::string(id);
  };

  // 40 single-tool intents spread across the catalog.
  for (int i = 0; i < 40; ++i) {
    const ToolPlan& p = plan[static_cast<size_t>(i) * 14 + 3];
    BenchmarkCase c;
    c.case_id = case_id();
    c.intent = detail::intent_for(p);
    c.expected = {p.tool_id};
    c.k = 1;
    suite.cases.push_back(std::move(c));
  }
  // 10 two-tool intents pairing adjacent verbs of one family (same object
  // and qualifier, so the pair is mutually confusable by construction).
  for (int i = 0; i < 10; ++i) {
    size_t base = static_cast<size_t>(i);  // family i, n=0
    size_t second = base + 10;             // same family, n=1
    const ToolPlan& a = plan[base];
    const ToolPlan& b = plan[second];
    BenchmarkCase c;
    c.case_id = case_id();
    c.intent = a.verb + " and then " + b.verb + " the " + detail::prose(a.object) + " in the " +
               a.qualifier + " " + a.service_noun + " service";
    c.expected = {a.tool_id, b.tool_id};
    c.k = 2;
    suite.cases.push_back(std::move(c));
  }
  return suite;
}

// Adversarial tier: negation, confusable families, and read/write ambiguity
// (the failure modes the probe exists to expose). Expected sets are scored
// like any other case; the interesting output is per-case FP/FN detail.
inline Suite make_adversarial_suite() {
  Suite suite;
  suite.suite = "router_adversarial";
  suite.tier = "adversarial";
  suite.catalog = {13, 500, {}};
  auto plan = plan_catalog(suite.catalog.tool_count, suite.catalog.families);

  int index = 1;
  auto add = [&](const std::string& intent, std::set<std::string> expected, int k) {
    BenchmarkCase c;
    char id[16];
    std::snprintf(id, sizeof(id), "adv_%02d", index++);
    c.case_id = id;
    c.intent = intent;
    c.expected = std::move(expected);
    c.k = k;
    suite.cases.push_back(std::move(c));
  };
  auto tool = [&](const std::string& family, const std::string& verb, const std::string& object) {
    return detail::find_tool(plan, family, verb, object);
  };

  // Negation: the intent names an action it explicitly rules out.
  const ToolPlan& send_msg = tool("messaging", "send", "message");
  add("send a message to the " + send_msg.qualifier +
          " team messaging channel about the report, do not upload any file to storage",
      {send_msg.tool_id}, 2);
  const ToolPlan& read_msg = tool("messaging", "read", "message");
  add("read the latest message in the " + read_msg.qualifier +
          " team messaging service without deleting any thread",
      {read_msg.tool_id}, 2);
  const ToolPlan& dl_file = tool("storage", "download", "file");
  add("download the file from the " + dl_file.qualifier +
          " object storage service, never delete the bucket",
      {dl_file.tool_id}, 2);
  const ToolPlan& list_inv = tool("billing", "list", "invoice");
  add("list invoices in the " + list_inv.qualifier +
          " billing and payments service, do not refund any payment",
      {list_inv.tool_id}, 2);
  const ToolPlan& email_search = tool("email", "search", "message");
  add("search for a message in the " + email_search.qualifier +
          " email delivery mailbox, do not send or forward anything",
      {email_search.tool_id}, 2);
  const ToolPlan& cal_list = tool("calendar", "list", "event");
  add("list every event in the " + cal_list.qualifier +
          " calendar scheduling service but do not cancel a meeting",
      {cal_list.tool_id}, 2);
  const ToolPlan& mon_list = tool("monitoring", "list", "alert");
  add("list open alerts in the " + mon_list.qualifier +
          " observability service, do not silence or ack an incident",
      {mon_list.tool_id}, 2);
  const ToolPlan& crm_list = tool("crm", "list", "contact");
  add("list contacts in the " + crm_list.qualifier +
          " customer records service without updating or deleting a record",
      {crm_list.tool_id}, 2);

  // Confusable siblings: issue vs pull request, upload vs download vs delete,
  // messaging vs email.
  const ToolPlan& create_issue = tool("vcs", "create", "issue");
  add("open a new issue in the " + create_issue.qualifier + " version control service",
      {create_issue.tool_id}, 1);
  const ToolPlan& create_pr = tool("vcs", "create", "pull_request");
  add("create a pull request in the " + create_pr.qualifier + " version control service",
      {create_pr.tool_id}, 1);
  const ToolPlan& merge_pr = tool("vcs", "merge", "pull_request");
  add("merge the approved pull request in the " + merge_pr.qualifier +
          " version control service",
      {merge_pr.tool_id}, 1);
  const ToolPlan& up_file = tool("storage", "upload", "file");
  add("upload the quarterly file into the " + up_file.qualifier + " object storage service",
      {up_file.tool_id}, 1);
  const ToolPlan& del_obj = tool("storage", "delete", "object");
  add("delete the stale object from the " + del_obj.qualifier + " object storage service",
      {del_obj.tool_id}, 1);
  const ToolPlan& email_send = tool("email", "send", "message");
  add("send a message by email through the " + email_send.qualifier +
          " email delivery service",
      {email_send.tool_id}, 1);
  const ToolPlan& msg_pin = tool("messaging", "pin", "message");
  add("pin the announcement message in the " + msg_pin.qualifier + " team messaging channel",
      {msg_pin.tool_id}, 1);
  const ToolPlan& bill_refund = tool("billing", "refund", "payment");
  add("refund the duplicate payment in the " + bill_refund.qualifier +
          " billing and payments service",
      {bill_refund.tool_id}, 1);
  const ToolPlan& bill_void = tool("billing", "void", "invoice");
  add("void the draft invoice in the " + bill_void.qualifier + " billing and payments service",
      {bill_void.tool_id}, 1);

  // Read/write ambiguity: wording that does not name the verb directly.
  const ToolPlan& db_query = tool("database", "query", "table");
  add("inspect rows of the relational data table in the " + db_query.qualifier + " service",
      {db_query.tool_id}, 2);
  const ToolPlan& db_update = tool("database", "update", "record");
  add("bring the " + db_update.qualifier + " relational data record up to date",
      {db_update.tool_id}, 2);
  const ToolPlan& mon_query = tool("monitoring", "query", "metric");
  add("check the latency metric in the " + mon_query.qualifier + " observability service",
      {mon_query.tool_id}, 2);
  const ToolPlan& docs_convert = tool("docs", "convert", "pdf");
  add("turn the report into a pdf with the " + docs_convert.qualifier +
          " document processing service",
      {docs_convert.tool_id}, 2);
  const ToolPlan& docs_extract = tool("docs", "extract", "spreadsheet");
  add("pull the tables out of the spreadsheet using the " + docs_extract.qualifier +
          " document processing service",
      {docs_extract.tool_id}, 2);
  const ToolPlan& cal_find = tool("calendar", "find", "availability");
  add("figure out availability for a meeting in the " + cal_find.qualifier +
          " calendar scheduling service",
      {cal_find.tool_id}, 2);
  const ToolPlan& crm_update = tool("crm", "update", "deal");
  add("move the deal to the next stage in the " + crm_update.qualifier +
          " customer records service",
      {crm_update.tool_id}, 2);
  const ToolPlan& storage_copy = tool("storage", "copy", "archive");
  add("duplicate the archive inside the " + storage_copy.qualifier + " object storage service",
      {storage_copy.tool_id}, 2);

  return suite;
}

inline Suite make_builtin_suite(const std::string& tier) {
  if (tier == "lite") return make_lite_suite();
  if (tier == "realistic") return make_realistic_suite();
  if (tier == "adversarial") return make_adversarial_suite();
  throw Error(ErrorCode::MALFORMED_SUITE, "unknown tier " + tier);
}

// ---------------------------------------------------------------------------
// suite runner + report
// ---------------------------------------------------------------------------

struct CaseResult {
  std::string case_id;
  std::string intent;
  std::set<std::string> expected;
  std::set<std::string> selected;
  CaseMetrics metrics;
  int64_t flow_tokens = 0;
};

struct SuiteReport {
  std::string suite;
  std::string tier;
  int case_count = 0;
  int tool_count = 0;
  std::vector<CaseResult> cases;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double avg_flow_tokens = 0.0;
  int64_t naive_tokens = 0;
  int64_t compact_tokens = 0;
  int64_t router_tokens = 0;
  double reduction = 0.0;
};

// Resolves every case through the real router against the catalog and folds
// metrics plus exposure columns. Deterministic given (suite, catalog,
// profile).
inline SuiteReport run_router_suite(const Suite& suite, const Catalog& catalog, Router& router,
                                    const std::string& profile_id) {
  for (const auto& c : suite.cases) {
    for (const auto& tool_id : c.expected) {
      if (!catalog.find_card(tool_id)) {
        throw Error(ErrorCode::SUITE_CATALOG_MISMATCH, c.case_id + " expects " + tool_id);
      }
    }
  }

  SuiteReport report;
  report.suite = suite.suite;
  report.tier = suite.tier;
  report.tool_count = static_cast<int>(catalog.cards.size());

  std::vector<std::vector<std::string>> sessions;
  for (const auto& c : suite.cases) {
    RoutingSession session = router.resolve_session(profile_id, c.intent, c.k);
    CaseResult result;
    result.case_id = c.case_id;
    result.intent = c.intent;
    result.expected = c.expected;
    std::vector<std::string> resolved_ids;
    for (const auto& tool : session.resolved) {
      result.selected.insert(tool.tool_id);
      resolved_ids.push_back(tool.tool_id);
    }
    result.metrics = compute_case_metrics(result.expected, result.selected);
    sessions.push_back(resolved_ids);
    report.cases.push_back(std::move(result));
  }

  std::sort(report.cases.begin(), report.cases.end(),
            [](const CaseResult& a, const CaseResult& b) { return a.case_id < b.case_id; });

  report.case_count = static_cast<int>(report.cases.size());
  std::vector<CaseMetrics> metrics;
  for (const auto& c : report.cases) metrics.push_back(c.metrics);
  AggregateMetrics aggregate = aggregate_metrics(metrics);
  report.micro_precision = aggregate.micro_precision;
  report.micro_recall = aggregate.micro_recall;
  report.micro_f1 = aggregate.micro_f1;
  report.macro_f1 = aggregate.macro_f1;

  ExposureRow exposure = compute_exposure_row(catalog, sessions);
  report.naive_tokens = exposure.naive_tokens;
  report.compact_tokens = exposure.compact_tokens;
  report.router_tokens = exposure.router_tokens;
  report.avg_flow_tokens = exposure.avg_flow_tokens;
  report.reduction = exposure.reduction;

  for (auto& c : report.cases) {
    int64_t flow = report.router_tokens;
    for (const auto& tool_id : c.selected) {
      const CatalogCard* card = catalog.find_card(tool_id);
      if (card) flow += card->schema_tokens;
    }
    c.flow_tokens = flow;
  }
  return report;
}

// ---------------------------------------------------------------------------
// report emission
// ---------------------------------------------------------------------------

enum class ReportFormat { TableText, Csv, Jsonl };

inline std::string format_percent2(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", fraction * 100.0);
  return buf;
}

inline std::string format_f3(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", value);
  return buf;
}

inline std::string format_f1dec(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", value);
  return buf;
}

// Two column layouts mirror the benchmark tables: a selection-quality row
// and an exposure row. CSV output carries both sections in order.
inline std::string emit_report(const SuiteReport& report, ReportFormat format) {
  if (format == ReportFormat::Csv) {
    std::ostringstream out;
    out << "suite,cases,tools,micro_f1,macro_f1,avg_flow_tok,naive_tok,reduction\n";
    out << report.suite << "," << report.case_count << "," << report.tool_count << ","
        << format_f3(report.micro_f1) << "," << format_f3(report.macro_f1) << ","
        << format_f1dec(report.avg_flow_tokens) << "," << report.naive_tokens << ","
        << format_percent2(report.reduction) << "\n";
    out << "\n";
    out << "suite,tools,full_schema_tok,compact_tok,router_tok,avg_flow_tok,flow_reduction\n";
    out << report.suite << "," << report.tool_count << "," << report.naive_tokens << ","
        << report.compact_tokens << "," << report.router_tokens << ","
        << format_f1dec(report.avg_flow_tokens) << "," << format_percent2(report.reduction)
        << "\n";
    return out.str();
  }

  if (format == ReportFormat::Jsonl) {
    std::ostringstream out;
    for (const auto& c : report.cases) {
      ojson j;
      j["type"] = "case";
      j["case_id"] = c.case_id;
      j["intent"] = c.intent;
      j["expected"] = std::vector<std::string>(c.expected.begin(), c.expected.end());
      j["selected"] = std::vector<std::string>(c.selected.begin(), c.selected.end());
      j["tp"] = c.metrics.tp;
      j["fp"] = c.metrics.fp;
      j["fn"] = c.metrics.fn;
      j["precision"] = c.metrics.precision;
      j["recall"] = c.metrics.recall;
      j["f1"] = c.metrics.f1;
      j["flow_tokens"] = c.flow_tokens;
      out << j.dump() << "\n";
    }
    ojson agg;
    agg["type"] = "aggregate";
    agg["suite"] = report.suite;
    agg["tier"] = report.tier;
    agg["cases"] = report.case_count;
    agg["tools"] = report.tool_count;
    agg["micro_precision"] = report.micro_precision;
    agg["micro_recall"] = report.micro_recall;
    agg["micro_f1"] = report.micro_f1;
    agg["macro_f1"] = report.macro_f1;
    agg["avg_flow_tokens"] = report.avg_flow_tokens;
    agg["naive_tokens"] = report.naive_tokens;
    agg["compact_tokens"] = report.compact_tokens;
    agg["router_tokens"] = report.router_tokens;
    agg["reduction"] = report.reduction;
    std::ostringstream out2;
    out2 << out.str() << agg.dump() << "\n";
    return out2.str();
  }

  std::ostringstream out;
  out << "Suite                Cases  Tools  Micro-F1  Macro-F1  Avg flow tok.  Naive tok.  Reduction\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-20s %5d  %5d  %8s  %8s  %13s  %10lld  %9s\n",
                report.suite.c_str(), report.case_count, report.tool_count,
                format_f3(report.micro_f1).c_str(), format_f3(report.macro_f1).c_str(),
                format_f1dec(report.avg_flow_tokens).c_str(),
                static_cast<long long>(report.naive_tokens),
                format_percent2(report.reduction).c_str());
  out << line;
  out << "\n";
  out << "Suite                Tools  Full schema tok.  Compact tok.  Router tok.  Avg flow tok.  Flow reduction\n";
  std::snprintf(line, sizeof(line), "%-20s %5d  %16lld  %12lld  %11lld  %13s  %14s\n",
                report.suite.c_str(), report.tool_count,
                static_cast<long long>(report.naive_tokens),
                static_cast<long long>(report.compact_tokens),
                static_cast<long long>(report.router_tokens),
                format_f1dec(report.avg_flow_tokens).c_str(),
                format_percent2(report.reduction).c_str());
  out << line;
  return out.str();
}

}  // namespace capsa
