#include "app/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace kerker::app {
namespace {

Json scalar_to_json(const YAML::Node& n) {
  const std::string& s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted: always a string
  if (s == "true" || s == "True") return true;
  if (s == "false" || s == "False") return false;
  if (s.empty() || s == "~" || s == "null") return nullptr;
  long long i = 0;
  auto [pi, ei] = std::from_chars(s.data(), s.data() + s.size(), i);
  if (ei == std::errc{} && pi == s.data() + s.size()) return i;
  double d = 0.0;
  auto [pd, ed] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (ed == std::errc{} && pd == s.data() + s.size()) return d;
  return s;
}

Json yaml_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return scalar_to_json(n);
    case YAML::NodeType::Sequence: {
      Json out = Json::array();
      for (const auto& e : n) out.push_back(yaml_to_json(e));
      return out;
    }
    case YAML::NodeType::Map: {
      Json out = Json::object();
      for (const auto& kv : n) {
        const std::string key = kv.first.as<std::string>();
        if (out.contains(key)) throw UsageError("config: duplicate key '" + key + "'");
        out[key] = yaml_to_json(kv.second);
      }
      return out;
    }
  }
  return nullptr;
}

}  // namespace

Json parse_config_text(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return Json::object();
  try {
    if (text[first] == '{') return Json::parse(text);
    return yaml_to_json(YAML::Load(text));
  } catch (const Json::exception& e) {
    throw UsageError(std::string("config: invalid JSON: ") + e.what());
  } catch (const YAML::Exception& e) {
    throw UsageError(std::string("config: invalid YAML: ") + e.what());
  }
}

Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  Json j = parse_config_text(ss.str());
  if (j.is_null()) j = Json::object();
  if (!j.is_object()) throw UsageError("config: top level of " + path + " must be a mapping");
  return j;
}

Section::Section(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {
  if (!j.is_object()) throw UsageError("config: " + path_ + " must be a mapping");
}

bool Section::has(const std::string& key) const {
  used_.insert(key);  // asking about a key counts as reading it
  return j_->contains(key) && !(*j_)[key].is_null();
}

const Json& Section::raw(const std::string& key) const {
  used_.insert(key);
  if (!j_->contains(key)) fail(key, "is required");
  return (*j_)[key];
}

void Section::fail(const std::string& key, const std::string& what) const {
  throw UsageError("config: " + (path_.empty() ? key : path_ + "." + key) + " " + what);
}

double Section::number(const std::string& key, std::optional<double> fallback) const {
  used_.insert(key);
  if (!has(key)) {
    if (fallback) return *fallback;
    fail(key, "is required");
  }
  const Json& v = (*j_)[key];
  if (!v.is_number()) fail(key, "must be a number");
  return v.get<double>();
}

int Section::integer(const std::string& key, std::optional<int> fallback) const {
  used_.insert(key);
  if (!has(key)) {
    if (fallback) return *fallback;
    fail(key, "is required");
  }
  const Json& v = (*j_)[key];
  if (!v.is_number_integer()) fail(key, "must be an integer");
  return v.get<int>();
}

bool Section::boolean(const std::string& key, std::optional<bool> fallback) const {
  used_.insert(key);
  if (!has(key)) {
    if (fallback) return *fallback;
    fail(key, "is required");
  }
  const Json& v = (*j_)[key];
  if (!v.is_boolean()) fail(key, "must be true or false");
  return v.get<bool>();
}

std::string Section::text(const std::string& key, std::optional<std::string> fallback) const {
  used_.insert(key);
  if (!has(key)) {
    if (fallback) return *fallback;
    fail(key, "is required");
  }
  const Json& v = (*j_)[key];
  if (!v.is_string()) fail(key, "must be a string");
  return v.get<std::string>();
}

cplx Section::complex(const std::string& key, std::optional<cplx> fallback) const {
  used_.insert(key);
  if (!has(key)) {
    if (fallback) return *fallback;
    fail(key, "is required");
  }
  return to_complex((*j_)[key], path_.empty() ? key : path_ + "." + key);
}

std::vector<double> Section::numbers(const std::string& key) const {
  const Json& v = raw(key);
  std::vector<double> out;
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) fail(key, "must be a list of numbers");
  for (const auto& e : v) {
    if (!e.is_number()) fail(key, "must be a list of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Vec3d Section::vec3(const std::string& key, std::optional<Vec3d> fallback) const {
  used_.insert(key);
  if (!has(key)) {
    if (fallback) return *fallback;
    fail(key, "is required");
  }
  const auto v = numbers(key);
  if (v.size() != 3) fail(key, "must have three components");
  return {v[0], v[1], v[2]};
}

Section Section::child(const std::string& key) const {
  const Json& v = raw(key);
  if (!v.is_object()) fail(key, "must be a mapping");
  return Section(v, path_.empty() ? key : path_ + "." + key);
}

void Section::finish() const {
  std::string unknown;
  for (const auto& [k, v] : j_->items())
    if (!used_.count(k)) unknown += (unknown.empty() ? "" : ", ") + (path_.empty() ? k : path_ + "." + k);
  if (!unknown.empty()) throw UsageError("config: unknown key(s): " + unknown);
}

cplx to_complex(const Json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw UsageError("config: " + where + " must be a number or a [re, im] pair");
}

std::vector<cplx> to_complex_list(const Json& v, const std::string& where) {
  if (v.is_number()) return {to_complex(v, where)};
  if (!v.is_array()) throw UsageError("config: " + where + " must be a list");
  std::vector<cplx> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(to_complex(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<double> value_list(const Section& s, const std::string& key) {
  const std::string where = s.path().empty() ? key : s.path() + "." + key;
  std::vector<double> out;
  const Json& v = s.raw(key);
  if (v.is_object()) {
    const Section r(v, where);
    const double from = r.number("from"), to = r.number("to");
    const int n = r.integer("points");
    r.finish();
    if (n < 1) throw UsageError("config: " + where + ": empty domain");
    for (int i = 0; i < n; ++i) out.push_back(n == 1 ? from : from + (to - from) * i / (n - 1));
  } else {
    out = s.numbers(key);
  }
  if (out.empty()) throw UsageError("config: " + where + ": empty domain");
  return out;
}

}  // namespace kerker::app
