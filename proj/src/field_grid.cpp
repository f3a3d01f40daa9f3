#include "kerker/field_grid.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "kerker/errors.hpp"

namespace kerker {

bool PlaneWave::is_canonical() const {
  const Vec3d d = direction.normalized();
  const Vec3c pol = polarization / polarization.norm();
  return (d - Vec3d::UnitZ()).norm() < 1e-12 && std::abs(std::abs(pol.x()) - 1.0) < 1e-12;
}

std::vector<Eigen::Index> FieldGrid::scatterer_indices() const {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < epsilon.size(); ++i)
    if (epsilon[i] != cplx(1.0, 0.0)) idx.push_back(i);
  return idx;
}

void FieldGrid::validate() const {
  const Eigen::Index n = size();
  if (volumes.size() != n || epsilon.size() != n)
    throw DomainError("FieldGrid: points, volumes and epsilon differ in length");
  if (field.cols() != 0 && field.cols() != n)
    throw DomainError("FieldGrid: field length does not match points");
  if (!(wavelength_nm > 0.0)) throw DomainError("FieldGrid: wavelength must be positive");
  if (n > 0 && !(volumes.minCoeff() > 0.0))
    throw DomainError("FieldGrid: cell volumes must be positive");
  if (!points.allFinite()) throw DomainError("FieldGrid: non-finite point");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto key = [&](Eigen::Index i) {
    return std::array<double, 3>{points(0, i), points(1, i), points(2, i)};
  };
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return key(a) < key(b); });
  const double scale = n > 0 ? std::cbrt(volumes.minCoeff()) : 1.0;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if ((points.col(order[i]) - points.col(order[i - 1])).norm() < 1e-9 * scale)
      throw DomainError("FieldGrid: overlapping points");
  }
}

Mat3c dyadic_green(const Vec3d& r, double k) {
  const double d = r.norm();
  const Vec3d n = r / d;
  const Mat3d nn = n * n.transpose();
  const Mat3d id = Mat3d::Identity();
  const cplx kr(0.0, k * d);
  const cplx phase = std::exp(kr) / (4.0 * kPi * d);
  const cplx near = (kr - 1.0) / (d * d);
  return phase * ((k * k) * (id - nn).cast<cplx>() + near * (id - 3.0 * nn).cast<cplx>());
}

Vec3c dipole_magnetic_field(const Vec3d& r, const Vec3c& moment, double k) {
  const double d = r.norm();
  const Vec3c n = (r / d).cast<cplx>();
  const cplx ikr(0.0, k * d);
  return (k * k / (4.0 * kPi)) * std::exp(ikr) / d * (1.0 - 1.0 / ikr) * cross(n, moment);
}

Vec3c incident_field(const FieldGrid& grid, const Vec3d& r) {
  const double k = grid.wavenumber();
  if (const auto* pw = std::get_if<PlaneWave>(&grid.source)) {
    const Vec3d d = pw->direction.normalized();
    const Vec3c pol = pw->polarization / pw->polarization.norm();
    return pw->amplitude * std::exp(kI * (k * d.dot(r))) * pol;
  }
  if (const auto* pd = std::get_if<PointDipole>(&grid.source)) {
    const Vec3d rel = r - pd->position;
    if (rel.norm() == 0.0) throw DomainError("incident_field: evaluation point on the source dipole");
    Vec3c e = dyadic_green(rel, k) * pd->moment;
    if (grid.mirror_z) {
      Vec3d image = pd->position;
      image.z() = 2.0 * *grid.mirror_z - image.z();
      const Vec3c m(-pd->moment.x(), -pd->moment.y(), pd->moment.z());
      e += dyadic_green(r - image, k) * m;
    }
    return e;
  }
  return Vec3c::Zero();
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

double parse_cell(std::string_view s, std::size_t line_no) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DomainError("FieldGrid CSV: bad number on line " + std::to_string(line_no));
  return v;
}

constexpr std::array<const char*, 12> kColumns = {
    "x", "y", "z", "cell_volume", "eps_re", "eps_im",
    "Ex_re", "Ex_im", "Ey_re", "Ey_im", "Ez_re", "Ez_im"};

std::string format_vec(const Vec3d& v) {
  std::string s;
  for (int i = 0; i < 3; ++i) {
    if (i) s += ';';
    append_double(s, v[i]);
  }
  return s;
}

std::string format_cvec(const Vec3c& v) {
  std::string s;
  for (int i = 0; i < 3; ++i) {
    if (i) s += ';';
    append_double(s, v[i].real());
    s += ';';
    append_double(s, v[i].imag());
  }
  return s;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::string_view rest(s);
  for (;;) {
    const auto semi = rest.find(';');
    out.push_back(parse_cell(rest.substr(0, semi), 0));
    if (semi == std::string_view::npos) break;
    rest.remove_prefix(semi + 1);
  }
  return out;
}

}  // namespace

void write_field_grid_csv(std::ostream& os, const FieldGrid& grid) {
  std::string out;
  out += "#wavelength_nm=";
  append_double(out, grid.wavelength_nm);
  out += '\n';
  if (const auto* pw = std::get_if<PlaneWave>(&grid.source)) {
    out += "#source=plane_wave\n#direction=" + format_vec(pw->direction) + "\n#polarization=" +
           format_cvec(pw->polarization) + "\n#amplitude=";
    append_double(out, pw->amplitude.real());
    out += ';';
    append_double(out, pw->amplitude.imag());
    out += '\n';
  } else if (const auto* pd = std::get_if<PointDipole>(&grid.source)) {
    out += "#source=point_dipole\n#position=" + format_vec(pd->position) + "\n#moment=" +
           format_cvec(pd->moment) + "\n";
  }
  if (grid.mirror_z) {
    out += "#mirror_z=";
    append_double(out, *grid.mirror_z);
    out += '\n';
  }
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    if (c) out += ',';
    out += kColumns[c];
  }
  out += '\n';
  const bool has_field = grid.solved();
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      append_double(out, grid.points(a, i));
      out += ',';
    }
    append_double(out, grid.volumes[i]);
    out += ',';
    append_double(out, grid.epsilon[i].real());
    out += ',';
    append_double(out, grid.epsilon[i].imag());
    for (int a = 0; a < 3; ++a) {
      const cplx e = has_field ? grid.field(a, i) : cplx{};
      out += ',';
      append_double(out, e.real());
      out += ',';
      append_double(out, e.imag());
    }
    out += '\n';
  }
  os << out;
}

FieldGrid read_field_grid_csv(std::istream& is) {
  FieldGrid grid;
  std::map<std::string, std::string> meta;
  std::vector<std::array<double, 12>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) meta[line.substr(1, eq - 1)] = line.substr(eq + 1);
      continue;
    }
    if (!header_seen) {
      std::string expected;
      for (std::size_t c = 0; c < kColumns.size(); ++c) expected += (c ? "," : "") + std::string(kColumns[c]);
      if (line != expected) throw DomainError("FieldGrid CSV: unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    std::array<double, 12> row{};
    std::string_view rest(line);
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto comma = rest.find(',');
      if ((comma == std::string_view::npos) != (c + 1 == row.size()))
        throw DomainError("FieldGrid CSV: wrong column count on line " + std::to_string(line_no));
      row[c] = parse_cell(rest.substr(0, comma), line_no);
      if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
    }
    rows.push_back(row);
  }
  if (!header_seen) throw DomainError("FieldGrid CSV: missing column header");
  if (!meta.count("wavelength_nm")) throw DomainError("FieldGrid CSV: missing #wavelength_nm");
  grid.wavelength_nm = parse_cell(meta["wavelength_nm"], 0);

  const std::string kind = meta.count("source") ? meta["source"] : "";
  if (kind == "plane_wave") {
    PlaneWave pw;
    const auto d = parse_list(meta.at("direction"));
    const auto p = parse_list(meta.at("polarization"));
    const auto a = parse_list(meta.at("amplitude"));
    if (d.size() != 3 || p.size() != 6 || a.size() != 2) throw DomainError("FieldGrid CSV: bad plane-wave metadata");
    pw.direction = Vec3d(d[0], d[1], d[2]);
    pw.polarization = Vec3c(cplx(p[0], p[1]), cplx(p[2], p[3]), cplx(p[4], p[5]));
    pw.amplitude = cplx(a[0], a[1]);
    grid.source = pw;
  } else if (kind == "point_dipole") {
    PointDipole pd;
    const auto r = parse_list(meta.at("position"));
    const auto m = parse_list(meta.at("moment"));
    if (r.size() != 3 || m.size() != 6) throw DomainError("FieldGrid CSV: bad dipole metadata");
    pd.position = Vec3d(r[0], r[1], r[2]);
    pd.moment = Vec3c(cplx(m[0], m[1]), cplx(m[2], m[3]), cplx(m[4], m[5]));
    grid.source = pd;
  } else if (!kind.empty()) {
    throw DomainError("FieldGrid CSV: unknown source '" + kind + "'");
  }
  if (meta.count("mirror_z")) grid.mirror_z = parse_cell(meta["mirror_z"], 0);

  const auto n = static_cast<Eigen::Index>(rows.size());
  grid.points.resize(3, n);
  grid.volumes.resize(n);
  grid.epsilon.resize(n);
  grid.field.resize(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    grid.points.col(i) = Vec3d(r[0], r[1], r[2]);
    grid.volumes[i] = r[3];
    grid.epsilon[i] = cplx(r[4], r[5]);
    for (int a = 0; a < 3; ++a) grid.field(a, i) = cplx(r[6 + 2 * a], r[7 + 2 * a]);
  }
  grid.validate();
  return grid;
}

void save_field_grid(const std::string& path, const FieldGrid& grid) {
  std::ofstream out(path);
  if (!out) throw DomainError("save_field_grid: cannot open " + path);
  write_field_grid_csv(out, grid);
  if (!out) throw DomainError("save_field_grid: write failed for " + path);
}

FieldGrid load_field_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("load_field_grid: cannot open " + path);
  return read_field_grid_csv(in);
}

}  // namespace kerker
