// SPDX-License-Identifier: Apache-2.0
#pragma once

// Plain-text key=value configuration and the scalar formatting/parsing
// helpers shared by config files, CSV output and checkpoints.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "paritylab/error.hpp"

namespace paritylab {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw DomainError("cannot format number");
  return std::string(buf, end);
}

inline std::string_view trim(std::string_view s) noexcept {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::uint64_t parse_uint(std::string_view text) {
  text = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw DomainError("not a nonnegative integer: '" + std::string(text) + "'");
  }
  return v;
}

inline double parse_double(std::string_view text) {
  text = trim(text);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw DomainError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

inline bool parse_bool(std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw DomainError("not a boolean: '" + std::string(text) + "'");
}

inline std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

/// "1,2,3" -> {1, 2, 3}; empty text -> {}.
inline std::vector<unsigned> parse_unsigned_list(std::string_view text) {
  std::vector<unsigned> out;
  if (trim(text).empty()) return out;
  for (auto part : split(text, ',')) out.push_back(static_cast<unsigned>(parse_uint(part)));
  return out;
}

/// Comma list where items may be inclusive ranges: "1-3,7" -> {1, 2, 3, 7}.
inline std::vector<std::uint64_t> parse_range_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  for (auto part : split(text, ',')) {
    part = trim(part);
    const auto dash = part.find('-');
    if (dash == std::string_view::npos) {
      out.push_back(parse_uint(part));
      continue;
    }
    const auto lo = parse_uint(part.substr(0, dash));
    const auto hi = parse_uint(part.substr(dash + 1));
    if (hi < lo) throw DomainError("empty range: '" + std::string(part) + "'");
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
  }
  return out;
}

template <typename Int>
std::string join_unsigned(const std::vector<Int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += std::to_string(values[i]);
  }
  return out;
}

/// Ordered key=value pairs. Later assignments to a key replace earlier ones
/// in place, so a file overlaid with command-line flags keeps file order.
class KeyValues {
public:
  void set(std::string key, std::string value) {
    for (auto& [k, v] : entries_) {
      if (k == key) {
        v = std::move(value);
        return;
      }
    }
    entries_.emplace_back(std::move(key), std::move(value));
  }

  bool has(std::string_view key) const noexcept {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
  }

  const std::string& get(std::string_view key) const {
    for (const auto& [k, v] : entries_) {
      if (k == key) return v;
    }
    throw DomainError("missing config key: " + std::string(key));
  }

  void merge(const KeyValues& other) {
    for (const auto& [k, v] : other.entries_) set(k, v);
  }

  void require_known(const std::vector<std::string_view>& known) const {
    for (const auto& [k, v] : entries_) {
      if (std::find(known.begin(), known.end(), k) == known.end()) throw DomainError("unknown config key: " + k);
    }
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

  /// Parses `key=value` lines; blank lines and `#` comments are skipped.
  static KeyValues parse(std::string_view text) {
    KeyValues kv;
    std::size_t line_no = 0;
    for (auto line : split(text, '\n')) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw DomainError("config line " + std::to_string(line_no) + " is not key=value");
      }
      const auto key = trim(line.substr(0, eq));
      if (key.empty()) throw DomainError("config line " + std::to_string(line_no) + " has an empty key");
      kv.set(std::string(key), std::string(trim(line.substr(eq + 1))));
    }
    return kv;
  }

  static KeyValues load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  std::string to_text() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
    return out;
  }

private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

} // namespace paritylab
