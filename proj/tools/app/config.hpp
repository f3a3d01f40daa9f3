#pragma once

// Strict configuration reading. YAML and JSON both land in one JSON tree;
// every key must be consumed by the command that reads it, so a misspelt
// key fails before any computation starts.

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kerker/constants.hpp"
#include "kerker/types.hpp"

namespace kerker::app {

using Json = nlohmann::json;

/// Bad command line or configuration; maps to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses YAML or JSON text. JSON is a subset of YAML, so YAML is tried
/// when the text does not start with '{'.
Json parse_config_text(const std::string& text);
Json load_config_file(const std::string& path);

/// Read-tracking view of one JSON object.
class Section {
 public:
  Section(const Json& j, std::string path);

  /// True when present and not null; marks the key as read.
  bool has(const std::string& key) const;
  const Json& raw(const std::string& key) const;  // marks the key used

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) const;
  int integer(const std::string& key, std::optional<int> fallback = std::nullopt) const;
  bool boolean(const std::string& key, std::optional<bool> fallback = std::nullopt) const;
  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) const;
  /// A number or a [re, im] pair.
  cplx complex(const std::string& key, std::optional<cplx> fallback = std::nullopt) const;
  std::vector<double> numbers(const std::string& key) const;
  Vec3d vec3(const std::string& key, std::optional<Vec3d> fallback = std::nullopt) const;
  Section child(const std::string& key) const;

  /// Throws UsageError naming every key that was never read.
  void finish() const;
  const std::string& path() const { return path_; }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;
  const Json* j_;
  std::string path_;
  mutable std::set<std::string> used_;
};

cplx to_complex(const Json& v, const std::string& where);
/// List of numbers / pairs; also accepts a single value.
std::vector<cplx> to_complex_list(const Json& v, const std::string& where);

/// Explicit list or {from, to, points} range; empty lists are an error.
std::vector<double> value_list(const Section& s, const std::string& key);

}  // namespace kerker::app
