#pragma once

#include <istream>
#include <string>
#include <vector>

#include "kerker/constants.hpp"

namespace kerker {

/// Tabulated relative permittivity, linearly interpolated in wavelength.
class PermittivityTable {
 public:
  PermittivityTable() = default;
  PermittivityTable(std::vector<double> wavelength_nm, std::vector<cplx> epsilon);

  /// CSV with columns wavelength_nm,eps_re,eps_im; '#' lines and a
  /// non-numeric header row are skipped.
  static PermittivityTable from_csv(std::istream& is);
  static PermittivityTable load(const std::string& path);
  /// Silver table shipped in the data directory.
  static const PermittivityTable& silver();

  /// Throws DomainError outside the tabulated range.
  cplx operator()(double wavelength_nm) const;

  double min_wavelength() const { return lambda_.front(); }
  double max_wavelength() const { return lambda_.back(); }

 private:
  std::vector<double> lambda_;
  std::vector<cplx> eps_;
};

/// Constant permittivity or a table lookup.
class Material {
 public:
  Material(cplx epsilon = 1.0) : constant_(epsilon) {}  // NOLINT: implicit by design
  Material(double epsilon) : constant_(epsilon) {}      // NOLINT
  Material(const PermittivityTable& table) : table_(&table) {}  // NOLINT

  cplx at(double wavelength_nm) const { return table_ ? (*table_)(wavelength_nm) : constant_; }

 private:
  cplx constant_{1.0, 0.0};
  const PermittivityTable* table_ = nullptr;
};

}  // namespace kerker
