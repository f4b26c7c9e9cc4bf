#pragma once
// Run configuration: flat `key = value` text with [section] headers.
//
//   # comment            ; comment
//   [grid]
//   dim = 2
//   nodes = 65
//
// Keys are addressed as "section.key". Values are read through typed
// accessors that validate ranges, report errors as `file:line:col`, and record
// the value actually used (explicit or default) so reports can embed the fully
// resolved configuration.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace hessvar::cli {

/// Malformed or invalid configuration / usage (exit 64).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or inconsistent input data (exit 65).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Config {
 public:
  struct Entry {
    std::string value;
    int line = 0;
    int column = 0;  ///< 1-based column of the value
  };

  Config() = default;

  static Config parse(const std::string& text, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& source() const { return source_; }
  /// Directory relative file paths are resolved against.
  const std::filesystem::path& base_dir() const { return base_; }

  std::string get_string(const std::string& key, const std::string& fallback);
  /// Empty when absent; recorded only when present.
  std::optional<std::string> get_optional(const std::string& key);
  /// One of `choices`.
  std::string get_choice(const std::string& key, const std::string& fallback,
                         const std::vector<std::string>& choices);
  double get_double(const std::string& key, double fallback);
  /// Must be present.
  double require_double(const std::string& key);
  /// Value in [lo, hi] (open ends when the matching flag is false).
  double get_double_in(const std::string& key, double fallback, double lo, double hi,
                       bool lo_closed, bool hi_closed);
  std::int64_t get_int(const std::string& key, std::int64_t fallback, std::int64_t lo,
                       std::int64_t hi);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback);
  std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& fallback);
  /// Existing file, resolved against base_dir().
  std::optional<std::filesystem::path> get_path(const std::string& key);

  /// Sets a value as if it came from the command line (overrides the file).
  void set_override(const std::string& key, const std::string& value);

  /// Every value read so far, as {section: {key: value}}.
  const nlohmann::ordered_json& resolved() const { return resolved_; }

  /// Error for `key` pointing at its value when present.
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

 private:
  void record(const std::string& key, nlohmann::ordered_json value);
  std::string where(const std::string& key) const;

  std::string source_;
  std::filesystem::path base_;
  std::map<std::string, Entry> entries_;
  nlohmann::ordered_json resolved_ = nlohmann::ordered_json::object();
};

/// Every section.key the tool understands.
const std::vector<std::string>& known_keys();

}  // namespace hessvar::cli
