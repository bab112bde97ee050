#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "esai/errors.hpp"

namespace esai {

/// key=value text file. '#' starts a comment, blank lines ignored, later keys
/// override earlier ones. Insertion order is not preserved (keys are sorted),
/// which keeps emitted files canonical.
class KeyValueFile {
public:
  KeyValueFile() = default;

  static KeyValueFile load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open " + path);
    KeyValueFile kv;
    kv.path_ = path;
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
      ++lineno;
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const size_t eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw DataError(path + ": line " + std::to_string(lineno) + ": expected key=value");
      kv.values_[trim(trimmed.substr(0, eq))] = trim(trimmed.substr(eq + 1));
    }
    return kv;
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot write " + path);
    for (const auto& [k, v] : values_) f << k << "=" << v << "\n";
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw DataError(origin() + "missing key: " + key);
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& def) const {
    auto it = values_.find(key);
    return it == values_.end() ? def : it->second;
  }

  double get_double(const std::string& key) const {
    try {
      return std::stod(get(key));
    } catch (const std::logic_error&) {
      throw DataError(origin() + "key '" + key + "' is not a number");
    }
  }

  double get_double_or(const std::string& key, double def) const {
    return has(key) ? get_double(key) : def;
  }

  long long get_int(const std::string& key) const {
    try {
      return std::stoll(get(key));
    } catch (const std::logic_error&) {
      throw DataError(origin() + "key '" + key + "' is not an integer");
    }
  }

  long long get_int_or(const std::string& key, long long def) const {
    return has(key) ? get_int(key) : def;
  }

  void set(const std::string& key, const std::string& v) { values_[key] = v; }
  void set_double(const std::string& key, double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    values_[key] = ss.str();
  }
  void set_int(const std::string& key, long long v) { values_[key] = std::to_string(v); }

  const std::map<std::string, std::string>& all() const { return values_; }

  static std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

private:
  std::string origin() const { return path_.empty() ? "" : path_ + ": "; }
  std::map<std::string, std::string> values_;
  std::string path_;
};

/// Splits "a,b" into two doubles; used for size and vector-valued keys.
inline std::pair<double, double> parse_pair(const std::string& s, const std::string& what) {
  const size_t comma = s.find(',');
  if (comma == std::string::npos) throw DataError(what + ": expected 'a,b', got '" + s + "'");
  try {
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
  } catch (const std::logic_error&) {
    throw DataError(what + ": expected 'a,b', got '" + s + "'");
  }
}

}  // namespace esai
