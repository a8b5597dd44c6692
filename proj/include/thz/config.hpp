#pragma once

#include <map>
#include <optional>
#include <string>

namespace thz {

/// Flat key-value configuration loaded from a `key = value` text file.
/// Lines starting with '#' and blank lines are ignored.
class KeyValueFile {
 public:
  KeyValueFile() = default;
  static KeyValueFile load(const std::string& path);
  static KeyValueFile parse(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace thz
