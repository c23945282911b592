#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "capsa/catalog.hpp"

using namespace capsa;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("capsa_" + tag + "_" + std::to_string(::getpid()) + "_" +
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

CapabilityContract make_contract(const std::string& name, const std::string& description) {
  CapabilityContract c;
  c.name = name;
  c.description = description;
  ParameterSpec p;
  p.name = "target";
  p.kind = ParamKind::String;
  p.required = true;
  p.description = "What the tool operates on";
  c.parameters = {p};
  c.outputs = {{"status", ParamKind::String, "Outcome"}};
  c.runtime_class = RuntimeClass::PureLocal;
  return c;
}

ToolCapsule make_capsule(const std::string& name, const std::string& description,
                         int version = 1) {
  auto contract = make_contract(name, description);
  auto bundle = scaffold_bundle(contract, "def run(**kwargs):\n    return {}\n");
  Provenance provenance{name, version, CapsuleSource::Generated, "test", 1767225600};
  auto capsule = assemble_capsule(contract, bundle, {}, {}, provenance);
  capsule.governance.lifecycle = Lifecycle::Approved;
  return capsule;
}

}  // namespace

TEST_CASE("estimate_tokens applies ceil(chars / 4) over scalars") {
  CHECK(estimate_tokens("") == 0);
  CHECK(estimate_tokens("abcd") == 1);
  CHECK(estimate_tokens("abcde") == 2);
  CHECK(estimate_tokens("a") == 1);
  // Multibyte scalars count once each.
  CHECK(estimate_tokens("\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9") == 1);  // 4x e-acute
  // A catalog whose concatenated schemas total 358,660 characters costs
  // 89,665 tokens.
  std::string big(358660, 'x');
  CHECK(estimate_tokens(big) == 89665);
}

TEST_CASE("render_full_schema is deterministic and local to the changed field") {
  auto a = make_contract("csv_pivot", "Pivot a CSV file.");
  CHECK(render_full_schema(a) == render_full_schema(a));

  auto b = a;
  b.description = "Pivot a CSV file by column.";
  std::string sa = render_full_schema(a);
  std::string sb = render_full_schema(b);
  CHECK(sa != sb);
  // Only the description line differs.
  auto strip_description = [](const std::string& schema) {
    std::string out;
    std::istringstream in(schema);
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind("description:", 0) == 0) continue;
      out += line + "\n";
    }
    return out;
  };
  CHECK(strip_description(sa) == strip_description(sb));
}

TEST_CASE("classify_rw follows the verb tables") {
  CHECK(classify_rw("list_invoices", "") == RwClass::Read);
  CHECK(classify_rw("sync_records", "fetches and updates rows") == RwClass::ReadWrite);
  CHECK(classify_rw("upload_file", "puts a file in a bucket") == RwClass::Write);
  CHECK(classify_rw("pivot_table", "rearranges a table") == RwClass::Unknown);
  CHECK(classify_rw("storage_download_file", "") == RwClass::Read);
}

TEST_CASE("derive_card truncates the summary at a word boundary") {
  std::string description;
  for (int i = 0; i < 60; ++i) description += "word" + std::to_string(i) + " ";
  auto capsule = make_capsule("long_tool", description);
  auto card = derive_card(capsule);
  CHECK(utf8_scalar_count(card.summary) <= 200);
  CHECK(card.summary.back() != ' ');
  // The cut happens between words: the summary plus a space is a prefix.
  CHECK(description.rfind(card.summary + " ", 0) == 0);
}

TEST_CASE("derive_card mirrors governance state and token costs") {
  auto capsule = make_capsule("csv_pivot", "Pivot a CSV file by a chosen column.");
  auto card = derive_card(capsule);
  CHECK(card.lifecycle == Lifecycle::Approved);
  CHECK(card.tool_id == "csv_pivot");
  CHECK(card.card_tokens == estimate_tokens(render_card_text(card)));
  CHECK(card.schema_tokens == estimate_tokens(render_full_schema(capsule)));
  CHECK(card.card_tokens <= card.schema_tokens);
  CHECK(card.tags == std::vector<std::string>{"csv"});
}

TEST_CASE("register_capsule enforces dense version numbering") {
  TempDir dir("register");
  auto catalog = open_catalog(dir.path);

  auto [tool_id, version] = register_capsule(catalog, make_capsule("csv_pivot", "Pivots."));
  CHECK(tool_id == "csv_pivot");
  CHECK(version == 1);

  CHECK_THROWS_WITH_AS(register_capsule(catalog, make_capsule("csv_pivot", "Pivots.")),
                       doctest::Contains("VERSION_CONFLICT"), Error);
  CHECK_THROWS_AS(register_capsule(catalog, make_capsule("other_tool", "x", 3)), Error);

  auto v2 = register_capsule(catalog, make_capsule("csv_pivot", "Pivots better.", 2));
  CHECK(v2.second == 2);
  const CatalogCard* card = catalog.find_card("csv_pivot");
  REQUIRE(card != nullptr);
  CHECK(card->version == 2);
}

TEST_CASE("open_catalog round-trips registered capsules") {
  TempDir dir("roundtrip");
  {
    auto catalog = open_catalog(dir.path);
    CHECK(catalog.entries.empty());
    register_capsule(catalog, make_capsule("alpha_tool", "Reads things."));
    register_capsule(catalog, make_capsule("beta_tool", "Writes things."));
    register_capsule(catalog, make_capsule("gamma_tool", "Mixes things."));
  }
  auto reopened = open_catalog(dir.path);
  CHECK(reopened.cards.size() == 3);
  CHECK(reopened.quarantined.empty());

  for (const auto& card : reopened.cards) {
    const ToolCapsule* capsule = reopened.find_capsule(card.tool_id);
    REQUIRE(capsule != nullptr);
    auto fresh = derive_card(*capsule);
    CHECK(to_json(card).dump() == to_json(fresh).dump());
  }
}

TEST_CASE("open_catalog quarantines a tampered capsule and keeps the rest") {
  TempDir dir("corrupt");
  {
    auto catalog = open_catalog(dir.path);
    register_capsule(catalog, make_capsule("good_tool", "Fine."));
    register_capsule(catalog, make_capsule("victim_tool", "About to be edited."));
  }
  // Edit an artifact on disk after registration.
  auto wrapper = dir.path / "tools" / "victim_tool" / "1" / "wrapper.py";
  write_file_atomic(wrapper, "print('tampered')\n");

  auto reopened = open_catalog(dir.path);
  CHECK(reopened.cards.size() == 1);
  CHECK(reopened.cards[0].tool_id == "good_tool");
  REQUIRE(reopened.quarantined.size() == 1);
  CHECK(reopened.quarantined[0].first == "victim_tool");
}

TEST_CASE("open_catalog tolerates unknown extra files") {
  TempDir dir("extras");
  {
    auto catalog = open_catalog(dir.path);
    register_capsule(catalog, make_capsule("alpha_tool", "Reads things."));
  }
  write_file_atomic(dir.path / "NOTES.txt", "scratch\n");
  write_file_atomic(dir.path / "tools" / "alpha_tool" / "1" / "extra.dat", "unrelated\n");
  auto reopened = open_catalog(dir.path);
  CHECK(reopened.cards.size() == 1);
  CHECK(reopened.quarantined.empty());
}

TEST_CASE("schema token accounting is additive per tool") {
  TempDir dir("additive");
  auto catalog = open_catalog(dir.path);
  register_capsule(catalog, make_capsule("alpha_tool", "Reads many things carefully."));
  register_capsule(catalog, make_capsule("beta_tool", "Writes many things carefully."));

  int64_t summed = 0;
  for (const auto& card : catalog.cards) {
    const ToolCapsule* capsule = catalog.find_capsule(card.tool_id);
    REQUIRE(capsule != nullptr);
    CHECK(card.schema_tokens == estimate_tokens(render_full_schema(*capsule)));
    summed += card.schema_tokens;
  }
  int64_t direct = 0;
  for (const auto& card : catalog.cards) direct += card.schema_tokens;
  CHECK(summed == direct);
}

TEST_CASE("import_mcp_listing creates pending-review capsules") {
  TempDir dir("import");
  auto catalog = open_catalog(dir.path);

  ojson listing = ojson::array();
  for (int i = 0; i < 12; ++i) {
    ojson descriptor;
    descriptor["name"] = "remote-tool-" + std::to_string(i);
    descriptor["description"] = "A tool imported from a third-party server.";
    descriptor["parameters"] =
        ojson::array({ojson{{"name", "arg"}, {"kind", "string"}, {"required", true}}});
    descriptor["server"] = "mcp://example";
    listing.push_back(descriptor);
  }

  auto imported = import_mcp_listing(catalog, listing, 1767225600);
  CHECK(imported.size() == 12);
  for (const auto& tool_id : imported) {
    const ToolCapsule* capsule = catalog.find_capsule(tool_id);
    REQUIRE(capsule != nullptr);
    CHECK(capsule->governance.lifecycle == Lifecycle::PendingReview);
    CHECK(capsule->provenance.source == CapsuleSource::ImportedMcp);
    CHECK(capsule->provenance.origin == "mcp://example");
    CHECK_FALSE(capsule->implementation.has_value());
  }

  CHECK_THROWS_WITH_AS(import_mcp_listing(catalog, listing, 1767225600),
                       doctest::Contains("DUPLICATE_IMPORT"), Error);
}

TEST_CASE("import_mcp_listing rejects malformed descriptors") {
  TempDir dir("badimport");
  auto catalog = open_catalog(dir.path);

  ojson no_name = ojson::array({ojson{{"description", "x"}, {"server", "mcp://s"}}});
  CHECK_THROWS_WITH_AS(import_mcp_listing(catalog, no_name, 0),
                       doctest::Contains("MALFORMED_DESCRIPTOR"), Error);

  ojson bad_kind = ojson::array(
      {ojson{{"name", "t"},
             {"description", "x"},
             {"server", "mcp://s"},
             {"parameters", ojson::array({ojson{{"name", "a"}, {"kind", "blob"}}})}}});
  CHECK_THROWS_AS(import_mcp_listing(catalog, bad_kind, 0), Error);
}
