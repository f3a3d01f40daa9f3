#include "app/output.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace kerker::app {

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::logic_error("Table::add: row width does not match the header");
  rows.push_back(std::move(row));
}

int Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

namespace {

std::string cell_text(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) return format_number(*d);
  const std::string& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

}  // namespace

void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << cell_text(r[i]);
    os << '\n';
  }
}

OutputDir::OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw UsageError("cannot create output directory " + dir_.string() + ": " + ec.message());
}

void OutputDir::write_text(const std::string& name, const std::string& content) {
  std::ofstream out(dir_ / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + (dir_ / name).string());
  files_.push_back(name);
}

void OutputDir::write_csv(const std::string& name, const Table& t) {
  std::ostringstream ss;
  app::write_csv(ss, t);
  write_text(name, ss.str());
}

void OutputDir::write_json(const std::string& name, const Json& j) { write_text(name, j.dump(2) + "\n"); }

void OutputDir::write_manifest(const std::string& command, const Json& config, std::uint64_t seed,
                               const Json& extra) {
  Json m;
  m["manifest_version"] = 1;
  m["tool"] = "kerker";
  m["version"] = KERKER_VERSION;
  m["command"] = command;
  m["seed"] = seed;
  m["config"] = config;
  m["config_sha256"] = sha256_hex(config.dump());
  Json outs = Json::object();
  for (const auto& f : files_) outs[f] = sha256_file(dir_ / f);
  m["outputs"] = outs;
  if (!extra.is_null()) m["run"] = extra;
  std::ofstream out(dir_ / "manifest.json", std::ios::binary);
  out << m.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write manifest in " + dir_.string());
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::string plot_data(const Table& t, const std::vector<std::string>& columns) {
  std::vector<int> idx;
  for (const auto& c : columns) {
    const int i = t.column(c);
    if (i < 0) throw std::invalid_argument("plot data: result has no column '" + c + "'");
    idx.push_back(i);
  }
  std::string out = "#";
  for (const auto& c : columns) out += " " + c;
  out += "\n";
  for (const auto& r : t.rows) {
    for (std::size_t k = 0; k < idx.size(); ++k) out += (k ? " " : "") + cell_text(r[static_cast<std::size_t>(idx[k])]);
    out += "\n";
  }
  return out;
}

Table polar_cut(const Eigen::VectorXd& theta_rad, const Eigen::VectorXd& intensity) {
  Table t{{"theta_deg", "I_normalized"}, {}};
  const double peak = intensity.maxCoeff();
  for (Eigen::Index i = 0; i < theta_rad.size(); ++i)
    t.add({theta_rad[i] * 180.0 / kPi, peak > 0.0 ? intensity[i] / peak : 0.0});
  return t;
}

Json json_number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

Json json_complex(cplx v) { return Json::array({json_number(v.real()), json_number(v.imag())}); }

}  // namespace kerker::app
