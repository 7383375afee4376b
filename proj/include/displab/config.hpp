#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace displab {

inline constexpr int kConfigSchema = 1;

// Flat "key = value" text. '#' starts a comment; blank lines are ignored.
// A "schema = 1" line is required in parsed text.
class Config {
 public:
  Config();  // empty apart from schema = 1

  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void erase(const std::string& key) { values_.erase(key); }

  // Getters throw ConfigError on malformed values.
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated lists.
  std::vector<std::int64_t> get_ints(const std::string& key,
                                     const std::vector<std::int64_t>& fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

  // ConfigError naming the first key outside allowed.
  void require_known(const std::set<std::string>& allowed) const;

  // Sorted "key=value\n" lines, without keys that cannot change results.
  std::string canonical() const;
  std::uint64_t hash() const;
  std::string hash_hex() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  const std::string* find(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

}  // namespace displab
