#include "causalnet/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace causalnet {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

KeyValueFile KeyValueFile::parse(std::string_view text, std::string_view source) {
  KeyValueFile file;
  file.source_ = std::string(source);
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(file.source_ + ":" + std::to_string(line_no) + ": expected key=value, got '" +
                        content + "'");
    }
    std::string key = trim(std::string_view(content).substr(0, eq));
    std::string value = trim(std::string_view(content).substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(file.source_ + ":" + std::to_string(line_no) + ": empty key");
    }
    if (file.entries_.count(key)) {
      throw ConfigError(file.source_ + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                        "' (first defined on line " + std::to_string(file.entries_[key].line) + ")");
    }
    file.entries_.emplace(std::move(key), ConfigEntry{std::move(value), line_no});
  }
  return file;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

const ConfigEntry& KeyValueFile::at(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError(source_ + ": missing key '" + key + "'");
  return it->second;
}

std::string KeyValueFile::get_string(const std::string& key) const { return at(key).value; }

namespace {

[[noreturn]] void bad_value(const KeyValueFile& f, const std::string& key, const char* what) {
  const auto& e = f.at(key);
  throw ConfigError(f.source() + ":" + std::to_string(e.line) + ": key '" + key + "' expects " + what +
                    ", got '" + e.value + "'");
}

}  // namespace

double KeyValueFile::get_double(const std::string& key) const {
  const auto& v = at(key).value;
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) bad_value(*this, key, "a number");
    return d;
  } catch (const std::logic_error&) {
    bad_value(*this, key, "a number");
  }
}

long long KeyValueFile::get_int(const std::string& key) const {
  const auto& v = at(key).value;
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(*this, key, "an integer");
  return out;
}

bool KeyValueFile::get_bool(const std::string& key) const {
  const auto& v = at(key).value;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(*this, key, "a boolean");
}

}  // namespace causalnet
