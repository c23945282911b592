#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "capsa/capsule.hpp"
#include "capsa/scaffold.hpp"

namespace capsa {

// ---------------------------------------------------------------------------
// token accounting
// ---------------------------------------------------------------------------

// ceil(scalars / 4); ceiling so non-empty text never costs zero tokens.
inline int64_t estimate_tokens(std::string_view text) {
  return (utf8_scalar_count(text) + 3) / 4;
}

// ---------------------------------------------------------------------------
// schema + card rendering
// ---------------------------------------------------------------------------

// Canonical full-schema text. This string defines schema_tokens, so its
// format is load-bearing: fields appear in declaration order and nothing
// about it depends on catalog state.
inline std::string render_full_schema(const CapabilityContract& contract) {
  std::ostringstream out;
  out << "tool: " << contract.name << "\n";
  out << "description: " << contract.description << "\n";
  out << "parameters:\n";
  for (const auto& param : contract.parameters) {
    out << "  - " << param.name << " (" << to_string(param.kind)
        << (param.required ? ", required" : ", optional") << "): " << param.description;
    if (!param.enum_values.empty()) {
      out << " [values: ";
      for (size_t i = 0; i < param.enum_values.size(); ++i) {
        if (i) out << "|";
        out << param.enum_values[i];
      }
      out << "]";
    }
    if (param.default_value) out << " [default: " << param.default_value->dump() << "]";
    out << "\n";
  }
  out << "outputs:\n";
  for (const auto& output : contract.outputs) {
    out << "  - " << output.name << " (" << to_string(output.kind) << "): " << output.description
        << "\n";
  }
  out << "credentials:";
  if (contract.credentials.empty()) {
    out << " none\n";
  } else {
    for (size_t i = 0; i < contract.credentials.size(); ++i) {
      out << (i ? ", " : " ") << contract.credentials[i].env_alias;
    }
    out << "\n";
  }
  out << "runtime_class: " << to_string(contract.runtime_class) << "\n";
  return out.str();
}

inline std::string render_full_schema(const ToolCapsule& capsule) {
  return render_full_schema(capsule.contract);
}

enum class RwClass { Read, Write, ReadWrite, Unknown };

inline std::string to_string(RwClass rw) {
  switch (rw) {
    case RwClass::Read: return "read";
    case RwClass::Write: return "write";
    case RwClass::ReadWrite: return "read_write";
    case RwClass::Unknown: return "unknown";
  }
  return "unknown";
}

inline std::optional<RwClass> rw_class_from(std::string_view s) {
  if (s == "read") return RwClass::Read;
  if (s == "write") return RwClass::Write;
  if (s == "read_write") return RwClass::ReadWrite;
  if (s == "unknown") return RwClass::Unknown;
  return std::nullopt;
}

namespace detail {

// Matches a token against a verb allowing plain inflections
// (fetch/fetches/fetched/fetching).
inline bool verb_token_match(const std::string& token, const std::string& verb) {
  if (token == verb || token == verb + "s" || token == verb + "es" || token == verb + "d" ||
      token == verb + "ed" || token == verb + "ing") {
    return true;
  }
  if (!verb.empty() && verb.back() == 'e' && token == verb.substr(0, verb.size() - 1) + "ing") {
    return true;
  }
  return false;
}

}  // namespace detail

// Pure function of name + description, per the fixed verb tables.
inline RwClass classify_rw(const std::string& name, const std::string& description) {
  static const std::vector<std::string> read_verbs = {"get",   "list",     "read",
                                                      "search", "fetch",   "download"};
  static const std::vector<std::string> write_verbs = {"create", "update", "delete", "upload",
                                                       "send",   "post",   "move"};
  auto tokens = tokenize(name + " " + description);
  bool reads = false, writes = false;
  for (const auto& token : tokens) {
    for (const auto& verb : read_verbs) {
      if (detail::verb_token_match(token, verb)) reads = true;
    }
    for (const auto& verb : write_verbs) {
      if (detail::verb_token_match(token, verb)) writes = true;
    }
  }
  if (reads && writes) return RwClass::ReadWrite;
  if (reads) return RwClass::Read;
  if (writes) return RwClass::Write;
  return RwClass::Unknown;
}

struct CatalogCard {
  std::string tool_id;
  int version = 1;
  std::string name;
  std::string summary;
  std::vector<std::string> tags;
  std::vector<std::string> param_names;
  RwClass rw_class = RwClass::Unknown;
  Lifecycle lifecycle = Lifecycle::Draft;
  int64_t card_tokens = 0;
  int64_t schema_tokens = 0;
};

// Compact routing text for a card; this string defines card_tokens. Cards
// deliberately omit parameter descriptions, outputs, and failure modes.
inline std::string render_card_text(const CatalogCard& card) {
  std::ostringstream out;
  out << card.name << " | " << card.summary << " | tags: ";
  for (size_t i = 0; i < card.tags.size(); ++i) out << (i ? "," : "") << card.tags[i];
  out << " | params: ";
  for (size_t i = 0; i < card.param_names.size(); ++i) out << (i ? "," : "") << card.param_names[i];
  out << " | rw: " << to_string(card.rw_class);
  return out.str();
}

// Card tags are the leading name token (the tool family by naming
// convention); richer taxonomies would plug in here.
inline std::vector<std::string> derive_tags(const CapabilityContract& contract) {
  auto tokens = tokenize(contract.name);
  if (tokens.empty()) return {};
  return {tokens.front()};
}

inline CatalogCard derive_card(const ToolCapsule& capsule) {
  CatalogCard card;
  card.tool_id = capsule.provenance.tool_id;
  card.version = capsule.provenance.version;
  card.name = capsule.contract.name;
  card.summary = truncate_word_boundary(capsule.contract.description, 200);
  card.tags = derive_tags(capsule.contract);
  for (const auto& param : capsule.contract.parameters) card.param_names.push_back(param.name);
  card.rw_class = classify_rw(capsule.contract.name, capsule.contract.description);
  card.lifecycle = capsule.governance.lifecycle;
  card.card_tokens = estimate_tokens(render_card_text(card));
  card.schema_tokens = estimate_tokens(render_full_schema(capsule.contract));
  return card;
}

inline ojson to_json(const CatalogCard& card) {
  ojson j;
  j["tool_id"] = card.tool_id;
  j["version"] = card.version;
  j["name"] = card.name;
  j["summary"] = card.summary;
  j["tags"] = card.tags;
  j["param_names"] = card.param_names;
  j["rw_class"] = to_string(card.rw_class);
  j["lifecycle"] = to_string(card.lifecycle);
  j["card_tokens"] = card.card_tokens;
  j["schema_tokens"] = card.schema_tokens;
  return j;
}

inline CatalogCard card_from_json(const ojson& j) {
  CatalogCard card;
  card.tool_id = j.at("tool_id").get<std::string>();
  card.version = j.at("version").get<int>();
  card.name = j.at("name").get<std::string>();
  card.summary = j.value("summary", "");
  if (j.contains("tags")) card.tags = j["tags"].get<std::vector<std::string>>();
  if (j.contains("param_names")) card.param_names = j["param_names"].get<std::vector<std::string>>();
  auto rw = rw_class_from(j.value("rw_class", "unknown"));
  card.rw_class = rw.value_or(RwClass::Unknown);
  auto lifecycle = lifecycle_from(j.value("lifecycle", "draft"));
  card.lifecycle = lifecycle.value_or(Lifecycle::Draft);
  card.card_tokens = j.value("card_tokens", 0);
  card.schema_tokens = j.value("schema_tokens", 0);
  return card;
}

// ---------------------------------------------------------------------------
// file-backed catalog store
// ---------------------------------------------------------------------------
//
// Layout:
//   <root>/index.json
//   <root>/tools/<tool_id>/<version>/capsule.json  (+ artifact files)
//   <root>/tools/<tool_id>/card.json

struct Catalog {
  fs::path root;
  std::map<std::string, std::vector<int>> entries;  // tool_id -> registered versions
  std::map<std::string, int> pinned;                // tool_id -> pinned version
  std::map<std::string, ToolCapsule> capsules;      // tool_id -> effective capsule
  std::vector<CatalogCard> cards;                   // one per tool_id, tool_id ascending
  std::vector<std::pair<std::string, std::string>> quarantined;  // tool_id, reason
  bool defer_index_writes = false;  // bulk-registration mode; flush_index() when done

  const CatalogCard* find_card(const std::string& tool_id) const {
    for (const auto& card : cards) {
      if (card.tool_id == tool_id) return &card;
    }
    return nullptr;
  }

  const ToolCapsule* find_capsule(const std::string& tool_id) const {
    auto it = capsules.find(tool_id);
    return it == capsules.end() ? nullptr : &it->second;
  }

  int effective_version(const std::string& tool_id) const {
    auto pin = pinned.find(tool_id);
    if (pin != pinned.end()) return pin->second;
    auto it = entries.find(tool_id);
    if (it == entries.end() || it->second.empty()) return 0;
    return it->second.back();
  }
};

namespace detail {

inline fs::path version_dir(const Catalog& catalog, const std::string& tool_id, int version) {
  return catalog.root / "tools" / tool_id / std::to_string(version);
}

inline void write_index(const Catalog& catalog) {
  if (catalog.defer_index_writes) return;
  ojson index;
  index["tools"] = ojson::object();
  for (const auto& [tool_id, versions] : catalog.entries) {
    ojson entry;
    entry["versions"] = versions;
    auto pin = catalog.pinned.find(tool_id);
    if (pin != catalog.pinned.end()) entry["pinned"] = pin->second;
    index["tools"][tool_id] = entry;
  }
  write_file_atomic(catalog.root / "index.json", index.dump(2) + "\n");
}

inline void upsert_card(Catalog& catalog, const CatalogCard& card) {
  for (auto& existing : catalog.cards) {
    if (existing.tool_id == card.tool_id) {
      existing = card;
      return;
    }
  }
  auto pos = std::lower_bound(catalog.cards.begin(), catalog.cards.end(), card,
                              [](const CatalogCard& a, const CatalogCard& b) {
                                return a.tool_id < b.tool_id;
                              });
  catalog.cards.insert(pos, card);
}

inline void adopt_effective(Catalog& catalog, const std::string& tool_id,
                            const ToolCapsule& capsule) {
  catalog.capsules[tool_id] = capsule;
  CatalogCard card = derive_card(capsule);
  upsert_card(catalog, card);
  write_file_atomic(catalog.root / "tools" / tool_id / "card.json", to_json(card).dump(2) + "\n");
}

// Re-derives the effective capsule + card for a tool from disk state.
inline void refresh_tool(Catalog& catalog, const std::string& tool_id) {
  int version = catalog.effective_version(tool_id);
  if (version == 0) return;
  auto capsule_path = version_dir(catalog, tool_id, version) / "capsule.json";
  ToolCapsule capsule = capsule_from_json(ojson::parse(read_file(capsule_path)));
  adopt_effective(catalog, tool_id, capsule);
}

}  // namespace detail

inline void flush_index(Catalog& catalog) {
  catalog.defer_index_writes = false;
  detail::write_index(catalog);
}

// Writes the capsule and its artifacts, derives the card, updates the index.
inline std::pair<std::string, int> register_capsule(Catalog& catalog, const ToolCapsule& capsule) {
  const std::string& tool_id = capsule.provenance.tool_id;
  int version = capsule.provenance.version;

  auto known = catalog.entries.find(tool_id);
  int latest = (known == catalog.entries.end() || known->second.empty()) ? 0 : known->second.back();
  if (version != latest + 1) {
    throw Error(ErrorCode::VERSION_CONFLICT,
                tool_id + " version " + std::to_string(version) + " (latest is " +
                    std::to_string(latest) + ")");
  }

  fs::path dir = detail::version_dir(catalog, tool_id, version);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::STORE_IO_FAILURE, dir.string());

  for (const auto& [role, ref] : capsule.bundle_artifacts) {
    auto content = capsule.artifact_contents.find(role);
    if (content == capsule.artifact_contents.end()) {
      throw Error(ErrorCode::MISSING_ARTIFACT_ROLE, role + " has no content to persist");
    }
    write_file_atomic(dir / ref.path, content->second);
  }
  if (capsule.implementation) {
    if (!capsule.implementation_content) {
      throw Error(ErrorCode::MISSING_ARTIFACT_ROLE, "implementation has no content to persist");
    }
    write_file_atomic(dir / capsule.implementation->path, *capsule.implementation_content);
  }
  write_file_atomic(dir / "capsule.json", canonical_capsule_json(capsule));

  catalog.entries[tool_id].push_back(version);
  detail::write_index(catalog);
  if (catalog.effective_version(tool_id) == version) {
    detail::adopt_effective(catalog, tool_id, capsule);
  }
  return {tool_id, version};
}

// Loads a catalog from disk, validating artifact hashes. A capsule whose
// bytes do not match its recorded hashes is quarantined and skipped, never
// loaded; one bad capsule must not disable the catalog.
inline Catalog open_catalog(const fs::path& root) {
  Catalog catalog;
  catalog.root = root;
  std::error_code ec;
  fs::create_directories(root / "tools", ec);

  // Prefer the index; fall back to a directory scan so a missing index is
  // recoverable from the layout alone.
  std::set<std::string> tool_ids;
  if (auto index_text = try_read_file(root / "index.json")) {
    auto index = ojson::parse(*index_text, nullptr, false);
    if (!index.is_discarded() && index.contains("tools")) {
      for (const auto& [tool_id, entry] : index["tools"].items()) {
        tool_ids.insert(tool_id);
        catalog.entries[tool_id] = entry.value("versions", std::vector<int>{});
        std::sort(catalog.entries[tool_id].begin(), catalog.entries[tool_id].end());
        if (entry.contains("pinned")) catalog.pinned[tool_id] = entry["pinned"].get<int>();
      }
    }
  }
  if (tool_ids.empty() && fs::exists(root / "tools")) {
    for (const auto& dir : fs::directory_iterator(root / "tools")) {
      if (!dir.is_directory()) continue;
      std::string tool_id = dir.path().filename().string();
      std::vector<int> versions;
      for (const auto& vdir : fs::directory_iterator(dir.path())) {
        if (!vdir.is_directory()) continue;
        try {
          versions.push_back(std::stoi(vdir.path().filename().string()));
        } catch (...) {
          continue;  // unknown extra directory; tolerated
        }
      }
      if (versions.empty()) continue;
      std::sort(versions.begin(), versions.end());
      tool_ids.insert(tool_id);
      catalog.entries[tool_id] = versions;
    }
  }

  for (const auto& tool_id : tool_ids) {
    int version = catalog.effective_version(tool_id);
    if (version == 0) continue;
    fs::path dir = detail::version_dir(catalog, tool_id, version);
    try {
      auto capsule_text = try_read_file(dir / "capsule.json");
      if (!capsule_text) {
        catalog.quarantined.emplace_back(tool_id, "capsule.json missing");
        continue;
      }
      auto parsed = ojson::parse(*capsule_text, nullptr, false);
      if (parsed.is_discarded()) {
        catalog.quarantined.emplace_back(tool_id, "capsule.json unparseable");
        continue;
      }
      ToolCapsule capsule = capsule_from_json(parsed);

      bool corrupt = false;
      auto check = [&](const ArtifactRef& ref, const std::string& what) {
        auto content = try_read_file(dir / ref.path);
        if (!content || artifact_hash(*content) != ref.sha256) {
          catalog.quarantined.emplace_back(tool_id, what + " hash mismatch: " + ref.path);
          corrupt = true;
        }
      };
      for (const auto& [role, ref] : capsule.bundle_artifacts) check(ref, role);
      if (capsule.implementation && !corrupt) check(*capsule.implementation, "implementation");
      if (corrupt) continue;

      catalog.capsules[tool_id] = capsule;
      detail::upsert_card(catalog, derive_card(capsule));
    } catch (const std::exception& e) {
      catalog.quarantined.emplace_back(tool_id, e.what());
    }
  }
  return catalog;
}

// ---------------------------------------------------------------------------
// MCP listing import
// ---------------------------------------------------------------------------

// Listing format: JSON array of {name, description, parameters:[{name, kind,
// required}], server}. Each descriptor becomes a minimal pending-review
// capsule whose only artifact is a derived tool card.
inline std::vector<std::string> import_mcp_listing(Catalog& catalog, const ojson& listing,
                                                   int64_t now_epoch) {
  if (!listing.is_array()) {
    throw Error(ErrorCode::MALFORMED_DESCRIPTOR, "listing must be a JSON array");
  }

  std::vector<std::string> imported;
  for (const auto& descriptor : listing) {
    if (!descriptor.is_object() || !descriptor.contains("name") ||
        !descriptor["name"].is_string() || descriptor["name"].get<std::string>().empty()) {
      throw Error(ErrorCode::MALFORMED_DESCRIPTOR, "descriptor lacks a name");
    }
    if (!descriptor.contains("description") || !descriptor["description"].is_string()) {
      throw Error(ErrorCode::MALFORMED_DESCRIPTOR, "descriptor lacks a description");
    }
    std::string server = descriptor.value("server", "");
    if (server.empty()) {
      throw Error(ErrorCode::MALFORMED_DESCRIPTOR, "descriptor lacks a server identifier");
    }

    // Tool ids must satisfy the identifier grammar; MCP names may not.
    std::string raw_name = descriptor["name"].get<std::string>();
    std::string tool_id;
    for (char c : to_lower(raw_name)) {
      if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
        tool_id.push_back(c);
      } else {
        tool_id.push_back('_');
      }
    }
    if (tool_id.empty() || !(tool_id[0] >= 'a' && tool_id[0] <= 'z')) tool_id = "t_" + tool_id;

    if (catalog.entries.count(tool_id)) {
      throw Error(ErrorCode::DUPLICATE_IMPORT, server + "/" + raw_name);
    }

    CapabilityContract contract;
    contract.name = tool_id;
    contract.description = descriptor["description"].get<std::string>();
    contract.runtime_class = RuntimeClass::NetworkApi;
    for (const auto& pj : descriptor.value("parameters", ojson::array())) {
      if (!pj.is_object() || !pj.contains("name") || !pj.contains("kind")) {
        throw Error(ErrorCode::MALFORMED_DESCRIPTOR, "parameter lacks name or kind");
      }
      auto kind = param_kind_from(pj["kind"].get<std::string>());
      if (!kind) {
        throw Error(ErrorCode::MALFORMED_DESCRIPTOR,
                    "unknown parameter kind " + pj["kind"].dump());
      }
      ParameterSpec param;
      param.name = pj["name"].get<std::string>();
      param.kind = *kind;
      param.required = pj.value("required", false);
      contract.parameters.push_back(std::move(param));
    }

    BundleFiles bundle;
    bundle.roles["tool_card"] = normalize_lf(render_tool_card(contract));

    Provenance provenance;
    provenance.tool_id = tool_id;
    provenance.version = 1;
    provenance.source = CapsuleSource::ImportedMcp;
    provenance.origin = server;
    provenance.created_at = now_epoch;

    ToolCapsule capsule = assemble_capsule(contract, bundle, {}, {}, provenance);
    register_capsule(catalog, capsule);
    imported.push_back(tool_id);
  }
  return imported;
}

}  // namespace capsa
