#include "kerker/materials.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "kerker/errors.hpp"

namespace kerker {
namespace {

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

PermittivityTable::PermittivityTable(std::vector<double> wavelength_nm, std::vector<cplx> epsilon)
    : lambda_(std::move(wavelength_nm)), eps_(std::move(epsilon)) {
  if (lambda_.size() != eps_.size() || lambda_.size() < 2)
    throw DomainError("PermittivityTable: need at least two matching rows");
  for (std::size_t i = 1; i < lambda_.size(); ++i)
    if (!(lambda_[i] > lambda_[i - 1]))
      throw DomainError("PermittivityTable: wavelengths must be strictly increasing");
}

PermittivityTable PermittivityTable::from_csv(std::istream& is) {
  std::vector<double> lambda;
  std::vector<cplx> eps;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string_view> cells;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    double v[3];
    if (cells.size() != 3 || !parse_double(cells[0], v[0]) || !parse_double(cells[1], v[1]) ||
        !parse_double(cells[2], v[2])) {
      if (lambda.empty()) continue;  // header row
      throw DomainError("PermittivityTable: malformed row '" + line + "'");
    }
    lambda.push_back(v[0]);
    eps.emplace_back(v[1], v[2]);
  }
  return PermittivityTable(std::move(lambda), std::move(eps));
}

PermittivityTable PermittivityTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("PermittivityTable: cannot open " + path);
  return from_csv(in);
}

const PermittivityTable& PermittivityTable::silver() {
  static const PermittivityTable table = load(std::string(KERKER_DATA_DIR) + "/silver_permittivity.csv");
  return table;
}

cplx PermittivityTable::operator()(double wavelength_nm) const {
  if (lambda_.empty()) throw DomainError("PermittivityTable: empty table");
  if (!(wavelength_nm >= lambda_.front() && wavelength_nm <= lambda_.back()))
    throw DomainError("PermittivityTable: wavelength outside tabulated range");
  auto it = std::upper_bound(lambda_.begin(), lambda_.end(), wavelength_nm);
  if (it == lambda_.end()) return eps_.back();
  const std::size_t i = static_cast<std::size_t>(it - lambda_.begin());
  const double t = (wavelength_nm - lambda_[i - 1]) / (lambda_[i] - lambda_[i - 1]);
  return (1.0 - t) * eps_[i - 1] + t * eps_[i];
}

}  // namespace kerker
