#include "slosim/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "slosim/csv.hpp"
#include "slosim/errors.hpp"

namespace slosim {

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  auto slash = path.find_last_of('/');
  std::string dir = slash == std::string::npos ? "." : path.substr(0, slash);
  return from_string(ss.str(), dir);
}

Config Config::from_string(const std::string& text, const std::string& base_dir) {
  Config cfg;
  cfg.base_dir_ = base_dir;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = csv::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = csv::trim(line.substr(0, eq));
    std::string value = csv::trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    }
    cfg.entries_[key] = value;
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) { entries_[key] = value; }

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string Config::get_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing required config key '" + key + "'");
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

namespace {

double to_double(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(value.c_str(), &end);
  if (value.empty() || errno != 0 || end == value.c_str() || *end != '\0') {
    throw ConfigError("config key '" + key + "': bad number '" + value + "'");
  }
  return v;
}

long long to_int(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(value.c_str(), &end, 10);
  if (value.empty() || errno != 0 || end == value.c_str() || *end != '\0') {
    throw ConfigError("config key '" + key + "': bad integer '" + value + "'");
  }
  return v;
}

}  // namespace

double Config::get_double(const std::string& key) const { return to_double(key, get_string(key)); }

double Config::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : to_double(key, it->second);
}

long long Config::get_int(const std::string& key) const { return to_int(key, get_string(key)); }

long long Config::get_int(const std::string& key, long long fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : to_int(key, it->second);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': bad boolean '" + v + "'");
}

std::vector<double> Config::get_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& field : csv::split(get_string(key))) {
    if (!field.empty()) out.push_back(to_double(key, field));
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

std::string Config::get_path(const std::string& key) const {
  std::string p = get_string(key);
  if (p.empty() || p.front() == '/') return p;
  return base_dir_ + "/" + p;
}

std::optional<std::string> Config::get_path_opt(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return get_path(key);
}

}  // namespace slosim
