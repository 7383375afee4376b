#include "displab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "displab/errors.hpp"
#include "displab/format.hpp"

namespace displab {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("config: key '" + key + "' expects a number, got '" + text + "'");
  return v;
}

// Integers may be written as 1e6 or 10^6 as well.
std::int64_t parse_integer(const std::string& key, const std::string& text) {
  if (auto caret = text.find('^'); caret != std::string::npos) {
    const auto base = parse_number<std::int64_t>(key, text.substr(0, caret));
    const auto exp = parse_number<std::int64_t>(key, text.substr(caret + 1));
    if (exp < 0 || exp > 62) throw ConfigError("config: key '" + key + "' exponent out of range");
    std::int64_t v = 1;
    for (std::int64_t i = 0; i < exp; ++i) {
      if (v > INT64_MAX / std::max<std::int64_t>(1, std::abs(base)))
        throw ConfigError("config: key '" + key + "' overflows");
      v *= base;
    }
    return v;
  }
  if (text.find_first_of("eE.") != std::string::npos) {
    const double d = parse_number<double>(key, text);
    if (d != std::floor(d) || std::abs(d) > 9.2e18)
      throw ConfigError("config: key '" + key + "' expects an integer, got '" + text + "'");
    return static_cast<std::int64_t>(d);
  }
  return parse_number<std::int64_t>(key, text);
}

const std::set<std::string> kResultNeutralKeys = {"threads"};

}  // namespace

Config::Config() { values_["schema"] = std::to_string(kConfigSchema); }

Config Config::parse(const std::string& text) {
  Config c;
  c.values_.clear();
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (c.values_.count(key))
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    c.values_[key] = value;
  }
  if (!c.has("schema")) throw ConfigError("config: missing 'schema = 1'");
  if (c.get_int("schema", 0) != kConfigSchema)
    throw ConfigError("config: unsupported schema '" + c.values_["schema"] + "'");
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
  const std::string k = trim(key);
  if (k.empty() || k.find_first_of("=#\n") != std::string::npos)
    throw ConfigError("config: invalid key '" + key + "'");
  if (value.find('\n') != std::string::npos) throw ConfigError("config: newline in value");
  values_[k] = trim(value);
}

const std::string* Config::find(const std::string& key) const {
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto* v = find(key);
  return v ? *v : fallback;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  const auto* v = find(key);
  return v ? parse_integer(key, *v) : fallback;
}

std::uint64_t Config::get_uint(const std::string& key, std::uint64_t fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (!v->empty() && v->front() == '-') throw ConfigError("config: key '" + key + "' must be >= 0");
  if (v->find_first_of("eE.^") != std::string::npos) return static_cast<std::uint64_t>(parse_integer(key, *v));
  return parse_number<std::uint64_t>(key, *v);
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto* v = find(key);
  return v ? parse_number<double>(key, *v) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  std::string s = *v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config: key '" + key + "' expects a boolean, got '" + *v + "'");
}

std::vector<std::int64_t> Config::get_ints(const std::string& key,
                                           const std::vector<std::int64_t>& fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  std::vector<std::int64_t> out;
  for (const auto& item : split_list(*v)) out.push_back(parse_integer(key, item));
  return out;
}

std::vector<double> Config::get_doubles(const std::string& key,
                                        const std::vector<double>& fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(*v)) out.push_back(parse_number<double>(key, item));
  return out;
}

void Config::require_known(const std::set<std::string>& allowed) const {
  for (const auto& [k, v] : values_)
    if (!allowed.count(k)) throw ConfigError("config: unknown key '" + k + "'");
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    if (kResultNeutralKeys.count(k)) continue;
    out += k + "=" + v + "\n";
  }
  return out;
}

std::uint64_t Config::hash() const { return fnv1a64(canonical()); }

std::string Config::hash_hex() const { return hex64(hash()); }

}  // namespace displab
