#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bioir {

/// Line-oriented "key = value" configuration file. '#' starts a comment;
/// blank lines are ignored; whitespace around keys and values is trimmed.
/// Later assignments to the same key win.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig load(const std::string& path);
  static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;  // true/false/1/0/yes/no

  void set(const std::string& key, const std::string& value);
  std::vector<std::string> keys() const;  // sorted

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace bioir
