#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "capsa/bench.hpp"

using namespace capsa;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("capsa_bench_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

Clock fixed_clock() {
  return [] { return int64_t{1767225600}; };
}

}  // namespace

TEST_CASE("compute_case_metrics handles the stated examples") {
  auto identity = compute_case_metrics({"a", "b"}, {"a", "b"});
  CHECK(identity.f1 == 1.0);

  auto half = compute_case_metrics({"a", "b"}, {"a", "c"});
  CHECK(half.tp == 1);
  CHECK(half.fp == 1);
  CHECK(half.fn == 1);
  CHECK(half.f1 == doctest::Approx(0.5));

  auto nothing = compute_case_metrics({"a"}, {});
  CHECK(nothing.precision == 0.0);
  CHECK(nothing.recall == 0.0);
  CHECK(nothing.f1 == 0.0);

  // Correctly selecting nothing scores as success.
  auto empty = compute_case_metrics({}, {});
  CHECK(empty.f1 == 1.0);

  // Selecting something when nothing was expected is pure false positives.
  auto spurious = compute_case_metrics({}, {"a"});
  CHECK(spurious.fp == 1);
  CHECK(spurious.f1 == 0.0);
}

TEST_CASE("aggregate_metrics folds micro and macro") {
  std::vector<CaseMetrics> cases = {
      compute_case_metrics({"a", "b"}, {"a", "b"}),  // tp 2
      compute_case_metrics({"a", "b"}, {"a", "c"}),  // tp 1 fp 1 fn 1
  };
  auto agg = aggregate_metrics(cases);
  CHECK(agg.macro_f1 == doctest::Approx(0.75));
  CHECK(agg.micro_precision == doctest::Approx(0.75));
  CHECK(agg.micro_recall == doctest::Approx(0.75));
  CHECK(agg.micro_f1 == doctest::Approx(0.75));

  auto single = aggregate_metrics({compute_case_metrics({"a"}, {"a", "b"})});
  CHECK(single.micro_f1 == single.macro_f1);

  CHECK_THROWS_WITH_AS(aggregate_metrics({}), doctest::Contains("EMPTY_SUITE"), Error);
}

TEST_CASE("metrics agree exactly with an independent oracle on random cases") {
  std::mt19937_64 rng(2024);
  const std::vector<std::string> pool = {"a", "b", "c", "d", "e", "f", "g", "h"};

  std::vector<CaseMetrics> impl_cases;
  int oracle_tp = 0, oracle_fp = 0, oracle_fn = 0;
  double oracle_f1_sum = 0.0;

  for (int trial = 0; trial < 1000; ++trial) {
    std::set<std::string> expected, selected;
    for (const auto& tool : pool) {
      if (rng() % 3 == 0) expected.insert(tool);
      if (rng() % 3 == 0) selected.insert(tool);
    }
    impl_cases.push_back(compute_case_metrics(expected, selected));

    // Oracle: brute-force set walk, same zero conventions.
    int tp = 0, fp = 0, fn = 0;
    for (const auto& tool : selected) {
      bool hit = false;
      for (const auto& want : expected) {
        if (tool == want) hit = true;
      }
      hit ? ++tp : ++fp;
    }
    for (const auto& want : expected) {
      bool hit = false;
      for (const auto& tool : selected) {
        if (tool == want) hit = true;
      }
      if (!hit) ++fn;
    }
    double p = 0, r = 0, f1 = 0;
    if (tp + fp + fn == 0) {
      p = r = f1 = 1.0;
    } else {
      p = tp + fp > 0 ? double(tp) / (tp + fp) : 0.0;
      r = tp + fn > 0 ? double(tp) / (tp + fn) : 0.0;
      f1 = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    }
    const CaseMetrics& got = impl_cases.back();
    CHECK(got.tp == tp);
    CHECK(got.fp == fp);
    CHECK(got.fn == fn);
    CHECK(got.precision == p);
    CHECK(got.recall == r);
    CHECK(got.f1 == f1);
    oracle_tp += tp;
    oracle_fp += fp;
    oracle_fn += fn;
    oracle_f1_sum += f1;
  }

  auto agg = aggregate_metrics(impl_cases);
  double op = oracle_tp + oracle_fp > 0 ? double(oracle_tp) / (oracle_tp + oracle_fp) : 0.0;
  double orc = oracle_tp + oracle_fn > 0 ? double(oracle_tp) / (oracle_tp + oracle_fn) : 0.0;
  double of1 = op + orc > 0 ? 2 * op * orc / (op + orc) : 0.0;
  CHECK(agg.micro_precision == op);
  CHECK(agg.micro_recall == orc);
  CHECK(agg.micro_f1 == of1);
  CHECK(agg.macro_f1 == oracle_f1_sum / 1000.0);
}

TEST_CASE("flow_reduction reproduces the reported reduction rows") {
  CHECK(format_percent2(flow_reduction(89665, 948.0)) == "98.94%");
  CHECK(format_percent2(flow_reduction(214464, 972.5)) == "99.55%");
  CHECK(format_percent2(flow_reduction(178165, 811.1)) == "99.54%");
}

TEST_CASE("report number formatting matches the table conventions") {
  CHECK(format_percent2(0.98943) == "98.94%");
  CHECK(format_f3(0.9577) == "0.958");
  CHECK(format_f3(0.7857) == "0.786");
  CHECK(format_f1dec(948.04) == "948.0");
}

TEST_CASE("plan_catalog is deterministic and unique") {
  auto a = plan_catalog(300, {});
  auto b = plan_catalog(300, {});
  REQUIRE(a.size() == 300);
  std::set<std::string> ids;
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].tool_id == b[i].tool_id);
    CHECK(ids.insert(a[i].tool_id).second);
  }
  CHECK_THROWS_AS(plan_catalog(10, {"not_a_family"}), Error);
}

TEST_CASE("generate_synthetic_catalog is byte-identical for equal seeds") {
  TempDir a("gen_a"), b("gen_b"), c("gen_c");
  auto cat_a = generate_synthetic_catalog(7, 20, {"storage", "vcs"}, a.path);
  auto cat_b = generate_synthetic_catalog(7, 20, {"storage", "vcs"}, b.path);
  auto cat_c = generate_synthetic_catalog(8, 20, {"storage", "vcs"}, c.path);

  REQUIRE(cat_a.cards.size() == 20);
  for (const auto& card : cat_a.cards) {
    auto rel = fs::path("tools") / card.tool_id / std::to_string(card.version) / "capsule.json";
    CHECK(read_file(a.path / rel) == read_file(b.path / rel));
  }
  CHECK(read_file(a.path / "index.json") == read_file(b.path / "index.json"));

  // A different seed moves the calibrated descriptions.
  bool any_differs = false;
  for (const auto& card : cat_c.cards) {
    const ToolCapsule* lhs = cat_a.find_capsule(card.tool_id);
    const ToolCapsule* rhs = cat_c.find_capsule(card.tool_id);
    if (lhs && rhs && lhs->contract.description != rhs->contract.description) any_differs = true;
  }
  CHECK(any_differs);
}

TEST_CASE("generated catalogs hit the schema length calibration") {
  TempDir dir("calib");
  auto catalog = generate_synthetic_catalog(21, 80, {}, dir.path);
  int64_t total_chars = 0;
  for (const auto& card : catalog.cards) {
    const ToolCapsule* capsule = catalog.find_capsule(card.tool_id);
    REQUIRE(capsule != nullptr);
    total_chars += static_cast<int64_t>(render_full_schema(*capsule).size());
    CHECK(card.lifecycle == Lifecycle::Approved);
  }
  double mean = static_cast<double>(total_chars) / 80.0;
  CHECK(mean > kDefaultSchemaChars * 0.85);
  CHECK(mean < kDefaultSchemaChars * 1.15);
}

TEST_CASE("card versus schema token costs stay far apart on a generated corpus") {
  TempDir dir("ratio");
  auto catalog = generate_synthetic_catalog(5, 60, {}, dir.path);
  int64_t cards = 0, schemas = 0;
  for (const auto& card : catalog.cards) {
    CHECK(card.card_tokens < card.schema_tokens);
    cards += card.card_tokens;
    schemas += card.schema_tokens;
  }
  double ratio = static_cast<double>(cards) / static_cast<double>(schemas);
  CHECK(ratio <= 0.45);
}

TEST_CASE("compute_exposure_row composes flow from router surface plus schemas") {
  TempDir dir("exposure");
  auto catalog = generate_synthetic_catalog(3, 12, {"storage"}, dir.path);

  std::vector<std::vector<std::string>> sessions = {
      {catalog.cards[0].tool_id, catalog.cards[1].tool_id},
      {},
  };
  auto row = compute_exposure_row(catalog, sessions);

  int64_t naive = 0, compact = 0;
  for (const auto& card : catalog.cards) {
    naive += card.schema_tokens;
    compact += card.card_tokens;
  }
  CHECK(row.naive_tokens == naive);
  CHECK(row.compact_tokens == compact);
  CHECK(row.router_tokens == meta_surface_tokens());

  double flow0 = static_cast<double>(row.router_tokens + catalog.cards[0].schema_tokens +
                                     catalog.cards[1].schema_tokens);
  double flow1 = static_cast<double>(row.router_tokens);  // empty session
  CHECK(row.avg_flow_tokens == doctest::Approx((flow0 + flow1) / 2.0));
  CHECK(row.reduction ==
        doctest::Approx(1.0 - row.avg_flow_tokens / static_cast<double>(row.naive_tokens))
            .epsilon(1e-12));

  // Monotonicity: growing a session never lowers its flow.
  auto grown = compute_exposure_row(
      catalog, {{catalog.cards[0].tool_id, catalog.cards[1].tool_id, catalog.cards[2].tool_id},
                {}});
  CHECK(grown.avg_flow_tokens >= row.avg_flow_tokens);
}

TEST_CASE("adding a tool to the catalog never decreases naive tokens") {
  // The plan is generated sequentially, so a smaller catalog with the same
  // seed and families is a prefix of the larger one.
  TempDir small_dir("mono_small"), large_dir("mono_large");
  auto small = generate_synthetic_catalog(3, 10, {"storage"}, small_dir.path);
  auto large = generate_synthetic_catalog(3, 13, {"storage"}, large_dir.path);
  auto small_row = compute_exposure_row(small, {});
  auto large_row = compute_exposure_row(large, {});
  CHECK(large_row.naive_tokens > small_row.naive_tokens);
  for (const auto& card : small.cards) {
    const CatalogCard* grown = large.find_card(card.tool_id);
    REQUIRE(grown != nullptr);
    CHECK(grown->schema_tokens == card.schema_tokens);
  }
}

TEST_CASE("suite files round-trip through JSON") {
  auto suite = make_lite_suite();
  auto restored = suite_from_json(to_json(suite));
  CHECK(restored.suite == suite.suite);
  CHECK(restored.tier == suite.tier);
  CHECK(restored.catalog.seed == suite.catalog.seed);
  CHECK(restored.catalog.tool_count == suite.catalog.tool_count);
  REQUIRE(restored.cases.size() == suite.cases.size());
  for (size_t i = 0; i < suite.cases.size(); ++i) {
    CHECK(restored.cases[i].case_id == suite.cases[i].case_id);
    CHECK(restored.cases[i].intent == suite.cases[i].intent);
    CHECK(restored.cases[i].expected == suite.cases[i].expected);
    CHECK(restored.cases[i].k == suite.cases[i].k);
  }
}

TEST_CASE("run_router_suite rejects suites that reference missing tools") {
  TempDir dir("mismatch");
  auto catalog = generate_synthetic_catalog(3, 10, {"storage"}, dir.path);
  Router router(catalog, dir.path, fixed_clock());
  router.save_profile(make_default_profile());

  Suite suite;
  suite.suite = "bad";
  suite.tier = "lite";
  suite.catalog = {3, 10, {"storage"}};
  suite.cases.push_back({"case_1", "upload a file", {"no_such_tool"}, 1});
  CHECK_THROWS_WITH_AS(run_router_suite(suite, catalog, router, "default"),
                       doctest::Contains("SUITE_CATALOG_MISMATCH"), Error);
}

TEST_CASE("run_router_suite emits deterministic reports") {
  TempDir dir("determinism");
  Suite suite;
  suite.suite = "mini";
  suite.tier = "lite";
  suite.catalog = {9, 30, {"storage", "messaging", "docs"}};
  auto catalog = generate_synthetic_catalog(suite.catalog.seed, suite.catalog.tool_count,
                                            suite.catalog.families, dir.path);
  auto plan = plan_catalog(suite.catalog.tool_count, suite.catalog.families);
  for (int i = 0; i < 5; ++i) {
    const ToolPlan& p = plan[static_cast<size_t>(i * 5)];
    suite.cases.push_back({"mini_" + std::to_string(i),
                           p.verb + " a " + p.object + " in the " + p.qualifier + " " +
                               p.service_noun + " service",
                           {p.tool_id},
                           1});
  }

  Router router(catalog, dir.path, fixed_clock());
  router.save_profile(make_default_profile());
  auto report_a = run_router_suite(suite, catalog, router, "default");
  auto report_b = run_router_suite(suite, catalog, router, "default");

  for (auto format : {ReportFormat::TableText, ReportFormat::Csv, ReportFormat::Jsonl}) {
    CHECK(emit_report(report_a, format) == emit_report(report_b, format));
  }

  // Flow dominance: every case costs at least the router surface; equality
  // only for empty sessions.
  for (const auto& c : report_a.cases) {
    CHECK(c.flow_tokens >= report_a.router_tokens);
    if (!c.selected.empty()) CHECK(c.flow_tokens > report_a.router_tokens);
  }
}

TEST_CASE("emit_report produces the two table layouts") {
  SuiteReport report;
  report.suite = "router_lite";
  report.tier = "lite";
  report.case_count = 8;
  report.tool_count = 250;
  report.micro_f1 = 0.9577;
  report.macro_f1 = 0.9731;
  report.avg_flow_tokens = 948.04;
  report.naive_tokens = 89665;
  report.compact_tokens = 30130;
  report.router_tokens = 284;
  report.reduction = flow_reduction(89665, 948.04);
  CaseResult c;
  c.case_id = "lite_01";
  c.intent = "upload a file";
  c.expected = {"storage_upload_file"};
  c.selected = {"storage_upload_file"};
  c.metrics = compute_case_metrics(c.expected, c.selected);
  c.flow_tokens = 700;
  report.cases.push_back(c);

  auto csv = emit_report(report, ReportFormat::Csv);
  CHECK(csv.find("suite,cases,tools,micro_f1,macro_f1,avg_flow_tok,naive_tok,reduction\n") !=
        std::string::npos);
  CHECK(csv.find(
            "suite,tools,full_schema_tok,compact_tok,router_tok,avg_flow_tok,flow_reduction\n") !=
        std::string::npos);
  CHECK(csv.find("router_lite,8,250,0.958,0.973,948.0,89665,98.94%") != std::string::npos);
  CHECK(csv.find("router_lite,250,89665,30130,284,948.0,98.94%") != std::string::npos);

  auto jsonl = emit_report(report, ReportFormat::Jsonl);
  int lines = 0;
  std::istringstream in(jsonl);
  std::string line;
  bool saw_aggregate = false;
  while (std::getline(in, line)) {
    ++lines;
    auto j = ojson::parse(line);
    if (j["type"] == "aggregate") saw_aggregate = true;
  }
  CHECK(lines == static_cast<int>(report.cases.size()) + 1);
  CHECK(saw_aggregate);

  auto table = emit_report(report, ReportFormat::TableText);
  CHECK(table.find("Reduction") != std::string::npos);
  CHECK(table.find("98.94%") != std::string::npos);
}

TEST_CASE("builtin suites are well-formed") {
  auto lite = make_lite_suite();
  CHECK(lite.cases.size() == 8);
  CHECK(lite.catalog.tool_count == 250);

  auto realistic = make_realistic_suite();
  CHECK(realistic.cases.size() == 50);
  CHECK(realistic.catalog.tool_count == 600);
  for (const auto& c : realistic.cases) CHECK(c.k <= 6);

  auto adversarial = make_adversarial_suite();
  CHECK(adversarial.cases.size() == 25);
  CHECK(adversarial.catalog.tool_count == 500);

  // Expected tools must exist in the planned catalog.
  for (const auto* suite : {&lite, &realistic, &adversarial}) {
    auto plan = plan_catalog(suite->catalog.tool_count, suite->catalog.families);
    std::set<std::string> ids;
    for (const auto& p : plan) ids.insert(p.tool_id);
    for (const auto& c : suite->cases) {
      for (const auto& tool : c.expected) {
        CAPTURE(suite->suite);
        CAPTURE(tool);
        CHECK(ids.count(tool) == 1);
      }
    }
  }
}
