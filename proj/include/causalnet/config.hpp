#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace causalnet {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One `key=value` entry and the 1-based line it came from.
struct ConfigEntry {
  std::string value;
  int line = 0;
};

/// Plain-text `key=value` file with `#` comments. Keys are unique.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::string_view text, std::string_view source = "<string>");
  static KeyValueFile load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, ConfigEntry>& entries() const { return entries_; }
  const std::string& source() const { return source_; }

  /// Throws ConfigError naming the key when absent.
  const ConfigEntry& at(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

 private:
  std::string source_;
  std::map<std::string, ConfigEntry> entries_;
};

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace causalnet
