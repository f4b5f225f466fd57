// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace chainflux {

/* Flat key = value run configuration.
 *
 * One assignment per line, '#' starts a comment, keys are namespaced
 * with dots (chain.n, bath.t_left). Values are kept verbatim as trimmed
 * strings; the typed getters parse on demand and complain with the
 * field name. Serialization is canonical (sorted keys, one space around
 * '='), so parse -> serialize -> parse is the identity.
 *
 * Malformed input raises std::runtime_error with "(ConfigInvalid)" in
 * the message, which the command line runner maps to exit code 2.
 */
class Config {
 public:
  static Config parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      const std::string::size_type hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (trim(line).empty()) continue;
      const std::string::size_type eq = line.find('=');
      if (eq == std::string::npos)
        fail_line(number, "expected 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) fail_line(number, "empty key");
      if (value.empty()) fail_line(number, "empty value for '" + key + "'");
      for (char c : key)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' &&
            c != '.' && c != '-')
          fail_line(number, "key '" + key + "' has unsupported characters");
      if (!cfg.kv_.emplace(key, value).second)
        fail_line(number, "duplicate key '" + key + "'");
    }
    return cfg;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
      throw std::runtime_error("config file '" + path +
                               "' cannot be read (ConfigInvalid)");
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str());
  }

  std::string serialize() const {
    std::ostringstream out;
    for (const auto& [key, value] : kv_) out << key << " = " << value << "\n";
    return out.str();
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) {
    kv_[key] = value;
  }
  void erase(const std::string& key) { kv_.erase(key); }
  const std::map<std::string, std::string>& entries() const { return kv_; }

  std::string get_string(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end())
      throw std::runtime_error("config field '" + key +
                               "' is required (ConfigInvalid)");
    return it->second;
  }
  std::string get_string(const std::string& key,
                         const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key) const {
    return parse_double(key, get_string(key));
  }
  double get_double(const std::string& key, double fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_double(key, it->second);
  }

  std::int64_t get_int(const std::string& key) const {
    return parse_int(key, get_string(key));
  }
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_int(key, it->second);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    errno = 0;
    char* end = nullptr;
    const std::string& s = it->second;
    if (s.front() == '-') fail_field(key, s, "a nonnegative integer");
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size())
      fail_field(key, s, "a nonnegative integer");
    return v;
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& item : split_list(get_string(key)))
      out.push_back(parse_double(key, item));
    return out;
  }

  std::vector<std::string> get_string_list(const std::string& key) const {
    return split_list(get_string(key));
  }

  // Refuses keys outside `allowed` so a typo cannot silently fall back
  // to a default. Keys under reserved prefixes are listed explicitly by
  // the caller.
  void require_known(const std::set<std::string>& allowed) const {
    for (const auto& [key, value] : kv_)
      if (allowed.count(key) == 0)
        throw std::runtime_error("config key '" + key +
                                 "' is not recognized (ConfigInvalid)");
  }

 private:
  static std::string trim(const std::string& s) {
    const std::string::size_type a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const std::string::size_type b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  static std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  [[noreturn]] static void fail_line(int number, const std::string& what) {
    throw std::runtime_error("config line " + std::to_string(number) + ": " +
                             what + " (ConfigInvalid)");
  }

  [[noreturn]] static void fail_field(const std::string& key,
                                      const std::string& value,
                                      const std::string& expected) {
    throw std::runtime_error("config field '" + key + "': expected " +
                             expected + ", got '" + value +
                             "' (ConfigInvalid)");
  }

  static double parse_double(const std::string& key, const std::string& s) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end != s.c_str() + s.size())
      fail_field(key, s, "a number");
    return v;
  }

  static std::int64_t parse_int(const std::string& key, const std::string& s) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size())
      fail_field(key, s, "an integer");
    return v;
  }

  std::map<std::string, std::string> kv_;
};

}  // namespace chainflux
