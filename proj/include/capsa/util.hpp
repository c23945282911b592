#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "capsa/errors.hpp"

namespace capsa {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// filesystem
// ---------------------------------------------------------------------------

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::STORE_IO_FAILURE, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::optional<std::string> try_read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Write via sibling temp file + rename so readers never observe a torn file.
inline void write_file_atomic(const fs::path& path, std::string_view content) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::STORE_IO_FAILURE, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::STORE_IO_FAILURE, "short write " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::STORE_IO_FAILURE, "rename failed for " + path.string());
}

// ---------------------------------------------------------------------------
// time (UTC, second resolution)
// ---------------------------------------------------------------------------

inline std::string format_utc(int64_t epoch_seconds) {
  std::time_t t = static_cast<std::time_t>(epoch_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[72];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

inline std::string format_utc_date(int64_t epoch_seconds) {
  std::time_t t = static_cast<std::time_t>(epoch_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday);
  return buf;
}

inline int64_t parse_utc(const std::string& iso) {
  std::tm tm{};
  if (std::sscanf(iso.c_str(), "%d-%d-%dT%d:%d:%dZ", &tm.tm_year, &tm.tm_mon, &tm.tm_mday,
                  &tm.tm_hour, &tm.tm_min, &tm.tm_sec) != 6) {
    throw Error(ErrorCode::STORE_IO_FAILURE, "bad timestamp " + iso);
  }
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  return static_cast<int64_t>(timegm(&tm));
}

// ---------------------------------------------------------------------------
// text
// ---------------------------------------------------------------------------

inline std::string normalize_lf(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') continue;
      out.push_back('\n');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

inline std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Lowercase word tokens: split on non-alphanumerics, drop tokens shorter than 2.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 2) tokens.push_back(current);
    current.clear();
  };
  for (char raw : text) {
    unsigned char c = static_cast<unsigned char>(raw);
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

// Number of Unicode scalar values in a UTF-8 string (continuation bytes skipped).
inline int64_t utf8_scalar_count(std::string_view text) {
  int64_t count = 0;
  for (char raw : text) {
    if ((static_cast<unsigned char>(raw) & 0xC0) != 0x80) ++count;
  }
  return count;
}

inline bool is_identifier(std::string_view name) {
  if (name.empty()) return false;
  if (!(name[0] >= 'a' && name[0] <= 'z')) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

inline bool is_credential_alias(std::string_view alias) {
  if (alias.empty()) return false;
  if (!(alias[0] >= 'A' && alias[0] <= 'Z')) return false;
  return std::all_of(alias.begin(), alias.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  });
}

// Prefix of `text` at most `limit` scalars long, cut back to a word boundary.
inline std::string truncate_word_boundary(std::string_view text, size_t limit) {
  if (utf8_scalar_count(text) <= static_cast<int64_t>(limit)) return std::string(text);
  // Walk to the byte offset of the limit-th scalar.
  size_t byte_end = 0;
  int64_t scalars = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
      if (scalars == static_cast<int64_t>(limit)) {
        byte_end = i;
        break;
      }
      ++scalars;
    }
    byte_end = i + 1;
  }
  std::string_view prefix = text.substr(0, byte_end);
  size_t cut = prefix.find_last_of(" \t\n");
  if (cut != std::string_view::npos && cut > 0) prefix = prefix.substr(0, cut);
  while (!prefix.empty() && std::isspace(static_cast<unsigned char>(prefix.back()))) {
    prefix.remove_suffix(1);
  }
  return std::string(prefix);
}

}  // namespace capsa
