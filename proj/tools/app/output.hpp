#pragma once

// Result tables, plot-data files and the run manifest. Numbers are written
// in shortest round-trip form with '.' decimals, independent of locale, so
// identical inputs give byte-identical files.

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "app/config.hpp"

namespace kerker::app {

using Cell = std::variant<double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  /// Throws std::logic_error when the row width does not match.
  void add(std::vector<Cell> row);
  int column(const std::string& name) const;  // -1 when absent
};

std::string format_number(double v);
void write_csv(std::ostream& os, const Table& t);

/// Collects written files for the manifest.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir);

  const std::filesystem::path& path() const { return dir_; }
  void write_text(const std::string& name, const std::string& content);
  void write_csv(const std::string& name, const Table& t);
  void write_json(const std::string& name, const Json& j);
  const std::vector<std::string>& files() const { return files_; }

  /// manifest.json: tool version, command, seed, the effective config, its
  /// SHA-256 and the SHA-256 of every file written so far.
  void write_manifest(const std::string& command, const Json& config, std::uint64_t seed, const Json& extra = {});

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& p);

/// Plot-data file with the named columns of `t`, in that order, under a
/// '#'-prefixed header. Throws std::invalid_argument for a missing column.
std::string plot_data(const Table& t, const std::vector<std::string>& columns);

/// Row-normalised polar cut: columns theta_deg and I_normalized, max 1.
Table polar_cut(const Eigen::VectorXd& theta_rad, const Eigen::VectorXd& intensity);

/// JSON number, or the string "inf"/"nan" for non-finite values.
Json json_number(double v);
Json json_complex(cplx v);

}  // namespace kerker::app
