#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace slosim {

// Flat `key = value` configuration with dotted keys. '#' starts a comment;
// values are scalars or comma-separated lists; relative paths resolve against
// the config file's directory. Command-line overrides replace keys one-to-one.
class Config {
 public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text, const std::string& base_dir = ".");

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key) const;

  // get_string with base-directory resolution for relative paths.
  std::string get_path(const std::string& key) const;
  std::optional<std::string> get_path_opt(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }
  const std::string& base_dir() const { return base_dir_; }

 private:
  std::map<std::string, std::string> entries_;
  std::string base_dir_ = ".";
};

}  // namespace slosim
