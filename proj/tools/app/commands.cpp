#include "app/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <mutex>
#include <thread>

#include "app/output.hpp"
#include "kerker/dda.hpp"
#include "kerker/emitter.hpp"
#include "kerker/errors.hpp"
#include "kerker/farfield.hpp"
#include "kerker/geometry.hpp"
#include "kerker/mie.hpp"
#include "kerker/multipole.hpp"

namespace kerker::app {
namespace {

using Clock = std::chrono::steady_clock;

std::ostream& log_of(const RunContext& ctx) { return ctx.log ? *ctx.log : std::cerr; }

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---- shared config pieces -------------------------------------------------

MieCoefficients parse_moments(const Section& s) {
  if (s.has("sphere")) {
    const Section sp = s.child("sphere");
    const double x = sp.number("x");
    const cplx m = sp.complex("m");
    sp.finish();
    s.finish();
    if (!(x > 0.0)) throw UsageError("config: " + sp.path() + ".x must be positive");
    return mie_coefficients(x, m);
  }
  const auto a = to_complex_list(s.raw("a"), s.path() + ".a");
  const auto b = s.has("b") ? to_complex_list(s.raw("b"), s.path() + ".b") : std::vector<cplx>{};
  s.finish();
  if (a.empty() && b.empty()) throw UsageError("config: " + s.path() + " has no moments");
  return MieCoefficients::from_moments(a, b);
}

struct MixSpec {
  std::optional<MixMode> mode;
  MixWeights weights;
};

MixSpec parse_mix(const Section& parent) {
  MixSpec m;
  if (!parent.has("mix")) {
    return m;
  }
  const Json& v = parent.raw("mix");
  std::string mode;
  if (v.is_string()) {
    mode = v.get<std::string>();
  } else {
    const Section s = parent.child("mix");
    mode = s.text("mode");
    m.weights.in_plane = s.number("in_plane_weight", 0.5);
    m.weights.downward = s.number("downward_weight", 0.5);
    s.finish();
  }
  if (mode == "average_cuts")
    m.mode = MixMode::average_cuts;
  else if (mode == "symmetrize_updown")
    m.mode = MixMode::symmetrize_updown;
  else if (mode != "none")
    throw UsageError("config: mix must be none, average_cuts or symmetrize_updown");
  return m;
}

CollectionSide parse_side(const std::string& s) {
  if (s == "top") return CollectionSide::top;
  if (s == "bottom") return CollectionSide::bottom;
  throw UsageError("config: side must be top or bottom");
}

SolverOptions parse_solver(const Section& parent, double default_tolerance) {
  SolverOptions o;
  o.tolerance = default_tolerance;
  if (!parent.has("solver")) {
    return o;
  }
  const Section s = parent.child("solver");
  o.tolerance = s.number("tolerance", default_tolerance);
  o.max_iterations = s.integer("max_iterations", o.max_iterations);
  o.restart = s.integer("restart", o.restart);
  o.max_scatterers = static_cast<std::size_t>(s.integer("max_scatterers", static_cast<int>(o.max_scatterers)));
  o.allow_fft = s.boolean("fft", o.allow_fft);
  s.finish();
  if (!(o.tolerance > 0.0) || o.max_iterations < 1 || o.restart < 1)
    throw UsageError("config: solver settings must be positive");
  return o;
}

Material parse_material(const Json& v, const std::string& where) {
  if (v.is_string()) {
    if (v.get<std::string>() != "silver") throw UsageError("config: " + where + " must be 'silver' or a permittivity");
    return PermittivityTable::silver();
  }
  return to_complex(v, where);
}

AntennaGeometry parse_geometry(const Section& parent) {
  AntennaGeometry g;
  if (!parent.has("antenna")) {
    return g;
  }
  const Section s = parent.child("antenna");
  g.length_nm = s.number("length_nm", g.length_nm);
  g.diameter_nm = s.number("diameter_nm", g.diameter_nm);
  g.gap_nm = s.number("gap_nm", g.gap_nm);
  g.emitter_nm = s.number("emitter_nm", g.emitter_nm);
  if (s.has("metal")) g.metal = parse_material(s.raw("metal"), s.path() + ".metal");
  g.gap_permittivity = s.complex("gap_permittivity", g.gap_permittivity);
  g.emitter_permittivity = s.complex("emitter_permittivity", g.emitter_permittivity);
  if (s.has("reflector")) {
    const Section r = s.child("reflector");
    Reflector rf;
    rf.thickness_nm = r.number("thickness_nm", rf.thickness_nm);
    rf.spacing_nm = r.number("spacing_nm", rf.spacing_nm);
    r.finish();
    g.reflector = rf;
  }
  s.finish();
  try {
    g.validate();
  } catch (const DomainError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return g;
}

// Dipole orientation and position inside the antenna gap.
struct DipoleSpec {
  Vec3d position = Vec3d::Zero();
  Vec3c moment{0.0, 0.0, 1.0};
};

DipoleSpec parse_dipole(const Section& parent) {
  DipoleSpec d;
  if (!parent.has("dipole")) {
    return d;
  }
  const Section s = parent.child("dipole");
  d.position = s.vec3("position_nm", d.position);
  const Vec3d o = s.vec3("orientation", Vec3d(0.0, 0.0, 1.0));
  s.finish();
  if (o.norm() == 0.0) throw UsageError("config: dipole.orientation must be non-zero");
  d.moment = o.normalized().cast<cplx>();
  return d;
}

double parse_reference_index(const Section& s) {
  const std::string r = s.text("reference", "medium_1.05");
  if (r == "vacuum") return 1.0;
  if (r == "medium_1.05") return 1.05;
  throw UsageError("config: reference must be vacuum or medium_1.05");
}

void require_positive(double v, const std::string& what) {
  if (!(v > 0.0)) throw UsageError("config: " + what + " must be positive");
}

Json metrics_json(const KerkerMetrics& m) {
  return {{"forward_intensity", json_number(m.forward_intensity)},
          {"backward_intensity", json_number(m.backward_intensity)},
          {"front_back_ratio", json_number(m.front_back_ratio)},
          {"directivity", json_number(m.directivity)},
          {"total_power", json_number(m.total_power)}};
}

Json moments_json(const MieCoefficients& c) {
  Json a = Json::array(), b = Json::array();
  for (int n = 1; n <= c.n_max(); ++n) {
    a.push_back(json_complex(c.a_n(n)));
    b.push_back(json_complex(c.b_n(n)));
  }
  return {{"a", a}, {"b", b}};
}

void write_cuts(OutputDir& out, const std::string& stem, const RadiationPattern& p) {
  out.write_text(stem + "_inplane.dat", plot_data(polar_cut(p.theta, p.in_plane_cut()), {"theta_deg", "I_normalized"}));
  out.write_text(stem + "_outofplane.dat",
                 plot_data(polar_cut(p.theta, p.out_of_plane_cut()), {"theta_deg", "I_normalized"}));
}

Table pattern_table(const RadiationPattern& p) {
  Table t{{"theta_deg", "phi_deg", "intensity"}, {}};
  for (int i = 0; i < p.n_theta(); ++i)
    for (int j = 0; j < p.n_phi(); ++j) t.add({p.theta[i] * 180.0 / kPi, p.phi[j] * 180.0 / kPi, p.intensity(i, j)});
  return t;
}

RadiationPattern apply_mix(const RadiationPattern& p, const MixSpec& mix) {
  return mix.mode ? mix_emission(p, *mix.mode, mix.weights) : p;
}

// Solved dipole problem in the antenna and the matching vacuum reference.
struct DecayRun {
  FieldGrid antenna;
  FieldGrid reference;
  DecayRateResult rate;
  RadiationPattern pattern;
};

DecayRun run_decay(const AntennaGeometry& g, double wavelength, double resolution, const DipoleSpec& d,
                   const SolverOptions& solver, double reference_index, int n_theta, int n_phi) {
  DecayRun r;
  FieldGrid grid = voxelize(g, resolution, wavelength);
  grid.source = PointDipole{d.position, d.moment};
  grid.mirror_z = g.mirror_z();
  r.antenna = solve(std::move(grid), solver);

  FieldGrid ref;
  ref.points.resize(3, 0);
  ref.volumes.resize(0);
  ref.epsilon.resize(0);
  ref.wavelength_nm = wavelength;
  ref.source = PointDipole{d.position, d.moment};
  r.reference = solve(std::move(ref), solver);
  r.rate = relative_decay_rate(r.antenna, r.reference, reference_index);
  r.pattern = far_field(r.antenna, n_theta, n_phi);
  return r;
}

Json report_json(const FieldGrid& g) {
  if (!g.report) return nullptr;
  return {{"iterations", g.report->iterations},
          {"residual", json_number(g.report->residual)},
          {"scatterers", g.report->scatterers},
          {"fft_accelerated", g.report->fft_accelerated}};
}

// ---- pattern ----------------------------------------------------------------

int cmd_pattern(const Json& cfg, const RunContext& ctx) {
  const Section s(cfg, "");
  const MieCoefficients c = parse_moments(s.child("moments"));
  const int n_theta = s.integer("n_theta", kDefaultThetaSamples), n_phi = s.integer("n_phi", kDefaultPhiSamples);
  const MixSpec mix = parse_mix(s);
  const double na = s.number("na", 0.9);
  const std::string name = s.text("name", "pattern");
  s.finish();
  if (n_theta < 90 || n_phi < 4) throw UsageError("config: pattern needs n_theta >= 90 and n_phi >= 4");

  const RadiationPattern p = apply_mix(pattern(c, n_theta, n_phi), mix);
  const KerkerMetrics m = kerker_metrics(p);
  OutputDir out(ctx.out_dir);
  out.write_csv(name + ".csv", pattern_table(p));
  write_cuts(out, name, p);
  Json j = {{"moments", moments_json(c)},
            {"metrics", metrics_json(m)},
            {"na", na},
            {"ce_top", collection_efficiency(p, na, CollectionSide::top)},
            {"ce_bottom", collection_efficiency(p, na, CollectionSide::bottom)}};
  out.write_json(name + "_metrics.json", j);
  out.write_manifest("pattern", cfg, 0);
  log_of(ctx) << "pattern: front/back " << format_number(m.front_back_ratio) << ", directivity "
              << format_number(m.directivity) << "\n";
  return kExitOk;
}

// ---- ce ---------------------------------------------------------------------

int cmd_ce(const Json& cfg, const RunContext& ctx) {
  const Section s(cfg, "");
  const std::string source = s.text("source", "moments");
  std::optional<MieCoefficients> c;
  if (source == "moments") c = parse_moments(s.child("moments"));
  else if (source != "isotropic" && source != "dipole_z")
    throw UsageError("config: source must be moments, isotropic or dipole_z");
  const double na = s.number("na", 0.9);
  const CollectionSide side = parse_side(s.text("side", "top"));
  const int n_theta = s.integer("n_theta", kDefaultThetaSamples), n_phi = s.integer("n_phi", kDefaultPhiSamples);
  const MixSpec mix = parse_mix(s);
  s.finish();
  if (!(na > 0.0 && na <= 1.0)) throw UsageError("config: na must lie in (0, 1]");

  RadiationPattern p;
  if (c)
    p = pattern(*c, n_theta, n_phi);
  else if (source == "isotropic")
    p = make_pattern(n_theta, n_phi, [](double, double) { return 1.0; });
  else
    p = make_pattern(n_theta, n_phi, [](double t, double) { return std::sin(t) * std::sin(t); });
  p = apply_mix(p, mix);
  const double ce = collection_efficiency(p, na, side);
  OutputDir out(ctx.out_dir);
  out.write_json("ce.json", {{"source", source},
                             {"na", na},
                             {"half_angle_deg", std::asin(na) * 180.0 / kPi},
                             {"side", side == CollectionSide::top ? "top" : "bottom"},
                             {"collection_efficiency", ce}});
  out.write_manifest("ce", cfg, 0);
  std::cout << "collection efficiency " << format_number(ce) << "\n";
  return kExitOk;
}

// ---- decompose --------------------------------------------------------------

int cmd_decompose(const Json& cfg, const RunContext& ctx) {
  const Section s(cfg, "");
  std::string grid_path = ctx.input.empty() ? s.text("grid", "") : ctx.input;
  std::string oracle = ctx.oracle;
  double x = 0.8, radius = 50.0;
  cplx m = 2.0;
  int per_radius = 12;
  if (s.has("oracle")) {
    const Section o = s.child("oracle");
    if (oracle.empty()) oracle = o.text("kind", "sphere");
    else o.text("kind", "sphere");
    x = o.number("x", x);
    m = o.complex("m", m);
    per_radius = o.integer("voxels_per_radius", per_radius);
    radius = o.number("radius_nm", radius);
    o.finish();
  }
  const std::string kernel = s.text("kernel", "exact");
  const std::optional<Vec3d> origin = s.has("origin_nm") ? std::optional(s.vec3("origin_nm")) : std::nullopt;
  const double geom = s.number("geometric_cross_section_nm2", 0.0);  // 0: derive from the grid
  const SolverOptions solver = parse_solver(s, 1e-6);
  const bool save_grid = s.boolean("save_grid", false);
  s.finish();
  if (geom < 0.0) throw UsageError("config: geometric_cross_section_nm2 must be positive");
  if (kernel != "exact" && kernel != "long_wavelength")
    throw UsageError("config: kernel must be exact or long_wavelength");
  if (!oracle.empty() && oracle != "sphere") throw UsageError("--oracle: only 'sphere' is available");
  if (oracle.empty() && grid_path.empty()) throw UsageError("decompose: give --input FILE, grid: or --oracle sphere");
  if (!oracle.empty() && (x <= 0.0 || per_radius < 2 || radius <= 0.0))
    throw UsageError("config: oracle needs x > 0, radius > 0 and at least 2 voxels per radius");

  FieldGrid grid;
  std::optional<MieCoefficients> reference;
  double area = 0.0;
  if (!oracle.empty()) {
    const double lambda = 2.0 * kPi * radius / x;
    grid = voxelize_sphere(radius, per_radius, m * m, lambda, SphereVoxelization::volume_matched);
    const SphereInteriorField inside(MieSphere{radius, lambda, m});
    grid.field.resize(3, grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) grid.field.col(i) = inside(grid.points.col(i));
    grid.source = PlaneWave{};
    reference = mie_coefficients(x, m);
    area = kPi * radius * radius;
  } else {
    grid = load_field_grid(grid_path);
    if (!grid.solved()) {
      log_of(ctx) << "decompose: grid carries no field, solving\n";
      grid = solve(std::move(grid), solver);
    }
    double volume = 0.0;
    for (const auto i : grid.scatterer_indices()) volume += grid.volumes[i];
    const double r_eq = std::cbrt(3.0 * volume / (4.0 * kPi));
    area = kPi * r_eq * r_eq;  // volume-equivalent sphere
  }
  if (geom > 0.0) area = geom;

  Vec3d o = Vec3d::Zero();
  if (origin) {
    o = *origin;
  } else if (oracle.empty()) {
    o = 0.5 * (grid.points.rowwise().minCoeff() + grid.points.rowwise().maxCoeff());
  }
  const CartesianMultipoles mp = kernel == "exact" ? decompose<MultipoleKernel::exact>(grid, o)
                                                   : decompose<MultipoleKernel::long_wavelength>(grid, o);
  const auto* pw = std::get_if<PlaneWave>(&grid.source);
  const cplx e0 = pw ? pw->amplitude : cplx(1.0);
  std::optional<double> total;
  if (reference) total = mie_efficiencies(*reference).q_sca * area;
  else if (pw) total = scattering_cross_section(grid);
  const MomentEfficiencies q = efficiencies(mp, grid.wavenumber(), e0, area, total);

  Json j;
  j["wavelength_nm"] = grid.wavelength_nm;
  j["origin_nm"] = {o.x(), o.y(), o.z()};
  j["kernel"] = kernel;
  j["geometric_cross_section_nm2"] = area;
  Json mom;
  for (int a = 0; a < 3; ++a) {
    mom["p"].push_back(json_complex(mp.p[a]));
    mom["m"].push_back(json_complex(mp.m[a]));
    for (int b = 0; b < 3; ++b) {
      mom["qe"].push_back(json_complex(mp.qe(a, b)));
      mom["qm"].push_back(json_complex(mp.qm(a, b)));
    }
  }
  mom["units"] = "p: C m, m: A m^2, qe: C m^2, qm: A m^3 (tensors row-major)";
  j["moments"] = mom;
  j["efficiencies"] = {{"ed", q.c_p}, {"md", q.c_m},      {"eq", q.c_qe},
                       {"mq", q.c_qm}, {"total", q.c_total}, {"residual", q.residual}};
  Table row{{"wavelength_nm", "c_ed", "c_md", "c_eq", "c_mq", "c_total", "residual"}, {}};
  std::vector<Cell> cells{grid.wavelength_nm, q.c_p, q.c_m, q.c_qe, q.c_qm, q.c_total, q.residual};
  if (pw && pw->is_canonical()) {
    const MieCoefficients back = to_mie_moments(mp, grid.wavenumber(), *pw);
    j["mie_moments"] = moments_json(back);
    for (const char* nm : {"a1", "b1", "a2", "b2"}) {
      row.columns.push_back(std::string(nm) + "_re");
      row.columns.push_back(std::string(nm) + "_im");
    }
    for (const cplx v : {back.a_n(1), back.b_n(1), back.a_n(2), back.b_n(2)}) {
      cells.push_back(v.real());
      cells.push_back(v.imag());
    }
    if (reference) {
      j["oracle"] = moments_json(*reference);
      Json rel;
      rel["a1"] = std::abs(back.a_n(1) / reference->a_n(1) - 1.0);
      rel["b1"] = std::abs(back.b_n(1) / reference->b_n(1) - 1.0);
      rel["a2"] = std::abs(back.a_n(2) / reference->a_n(2) - 1.0);
      rel["b2"] = std::abs(back.b_n(2) / reference->b_n(2) - 1.0);
      j["relative_error"] = rel;
    }
  }
  row.add(std::move(cells));

  OutputDir out(ctx.out_dir);
  out.write_json("decompose.json", j);
  out.write_csv("decompose.csv", row);
  if (save_grid) save_field_grid((out.path() / "grid.csv").string(), grid), void();
  out.write_manifest("decompose", cfg, 0, {{"input", grid_path}, {"oracle", oracle}});
  log_of(ctx) << "decompose: ED " << format_number(q.c_p) << " MD " << format_number(q.c_m) << " EQ "
              << format_number(q.c_qe) << " MQ " << format_number(q.c_qm) << "\n";
  return kExitOk;
}

// ---- kerker-scan ------------------------------------------------------------

int cmd_kerker_scan(const Json& cfg, const RunContext& ctx) {
  const Section s(cfg, "");
  const std::string obj = s.text("objective", "min_backscatter");
  KerkerObjective objective;
  if (obj == "min_backscatter") objective = KerkerObjective::min_backscatter;
  else if (obj == "max_directivity") objective = KerkerObjective::max_directivity;
  else throw UsageError("config: objective must be min_backscatter or max_directivity");

  // Each of a1 b1 a2 b2 is a fixed value, a [lo, hi] interval, or tied to
  // another parameter by name.
  const Section ps = s.child("parameters");
  const std::vector<std::string> names{"a1", "b1", "a2", "b2"};
  std::vector<Interval> domain;
  std::vector<std::string> free_names;
  std::vector<std::string> slot(4);  // "free:<k>", "fixed:<v>" or "tie:<name>"
  std::vector<double> fixed(4, 0.0);
  for (int i = 0; i < 4; ++i) {
    if (!ps.has(names[i])) {
      slot[i] = "fixed";
      continue;
    }
    const Json& v = ps.raw(names[i]);
    if (v.is_number()) {
      slot[i] = "fixed";
      fixed[i] = v.get<double>();
    } else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
      slot[i] = "free";
      fixed[i] = static_cast<double>(domain.size());
      domain.push_back({v[0].get<double>(), v[1].get<double>()});
      free_names.push_back(names[i]);
    } else if (v.is_string()) {
      slot[i] = "tie:" + v.get<std::string>();
    } else {
      throw UsageError("config: parameters." + names[i] + " must be a number, [lo, hi] or a parameter name");
    }
  }
  ps.finish();
  SearchOptions so;
  so.points_per_dim = s.integer("points_per_dim", so.points_per_dim);
  so.rounds = s.integer("rounds", so.rounds);
  so.zoom = s.number("zoom", so.zoom);
  const int n_theta = s.integer("n_theta", 181), n_phi = s.integer("n_phi", 8);
  s.finish();
  if (domain.empty()) throw UsageError("kerker-scan: empty domain, no parameter has an interval");
  for (int i = 0; i < 4; ++i) {
    if (slot[i].rfind("tie:", 0) != 0) continue;
    const auto it = std::find(names.begin(), names.end(), slot[i].substr(4));
    if (it == names.end() || slot[static_cast<std::size_t>(it - names.begin())] != "free")
      throw UsageError("config: parameters." + names[i] + " must name a parameter with an interval");
  }

  auto values = [&](std::span<const double> x) {
    std::array<double, 4> v{};
    for (int i = 0; i < 4; ++i) {
      if (slot[i] == "fixed") v[i] = fixed[i];
      else if (slot[i] == "free") v[i] = x[static_cast<std::size_t>(fixed[i])];
    }
    for (int i = 0; i < 4; ++i)
      if (slot[i].rfind("tie:", 0) == 0) {
        const auto k = std::find(names.begin(), names.end(), slot[i].substr(4)) - names.begin();
        v[i] = v[static_cast<std::size_t>(k)];
      }
    return v;
  };
  const PatternEvaluator eval = [&](std::span<const double> x) {
    const auto v = values(x);
    return pattern(MieCoefficients::from_moments({v[0], v[2]}, {v[1], v[3]}), n_theta, n_phi);
  };
  const SearchResult r = kerker_search(objective, domain, eval, so);

  Table t{{"a1", "b1", "a2", "b2", "score", "front_back_ratio", "directivity"}, {}};
  std::vector<SearchPoint> pts = r.evaluated;
  std::sort(pts.begin(), pts.end(), [](const SearchPoint& a, const SearchPoint& b) { return a.params < b.params; });
  for (const auto& p : pts) {
    const auto v = values(p.params);
    t.add({v[0], v[1], v[2], v[3], p.score, p.metrics.front_back_ratio, p.metrics.directivity});
  }
  const auto best = values(r.best.params);
  OutputDir out(ctx.out_dir);
  out.write_csv("kerker_scan.csv", t);
  out.write_json("kerker_scan.json", {{"objective", obj},
                                      {"best", {{"a1", best[0]}, {"b1", best[1]}, {"a2", best[2]}, {"b2", best[3]}}},
                                      {"score", json_number(r.best.score)},
                                      {"metrics", metrics_json(r.best.metrics)},
                                      {"evaluated", r.evaluated.size()},
                                      {"failures", r.failures}});
  out.write_manifest("kerker-scan", cfg, 0);
  log_of(ctx) << "kerker-scan: best a1=" << format_number(best[0]) << " b1=" << format_number(best[1])
              << " a2=" << format_number(best[2]) << " b2=" << format_number(best[3]) << "\n";
  return kExitOk;
}

// ---- decay ------------------------------------------------------------------

int cmd_decay(const Json& cfg, const RunContext& ctx) {
  const Section s(cfg, "");
  const std::string mode = s.text("mode", "antenna");
  const double wavelength = s.number("wavelength_nm", 680.0);
  const double reference_index = parse_reference_index(s);
  const int n_theta = s.integer("n_theta", 181), n_phi = s.integer("n_phi", 72);
  const double na = s.number("na", 0.9);
  require_positive(wavelength, "wavelength_nm");
  OutputDir out(ctx.out_dir);

  if (mode == "mirror") {
    const std::vector<double> kd = value_list(s, "kd");
    const Vec3d o = s.vec3("orientation", Vec3d(0.0, 0.0, 1.0));
    s.finish();
    if (o.norm() == 0.0) throw UsageError("config: orientation must be non-zero");
    const Vec3c p = o.normalized().cast<cplx>();
    const double k = wavenumber(wavelength);
    FieldGrid ref;
    ref.points.resize(3, 0);
    ref.volumes.resize(0);
    ref.epsilon.resize(0);
    ref.wavelength_nm = wavelength;
    ref.source = PointDipole{Vec3d::Zero(), p};
    ref = solve(ref);
    Table t{{"kd", "height_nm", "relative_rate", "closed_form_perpendicular", "closed_form_parallel"}, {}};
    std::vector<double> sorted = kd;
    std::sort(sorted.begin(), sorted.end());
    for (const double v : sorted) {
      require_positive(v, "kd");
      FieldGrid g = ref;
      g.source = PointDipole{Vec3d(0.0, 0.0, v / k), p};
      g.mirror_z = 0.0;
      g = solve(g);
      FieldGrid r0 = ref;
      r0.source = PointDipole{Vec3d(0.0, 0.0, v / k), p};
      const double rate = relative_decay_rate(g, solve(r0), reference_index).relative_rate;
      t.add({v, v / k, rate, mirror_decay_rate_perpendicular(v) / reference_index,
             mirror_decay_rate_parallel(v) / reference_index});
    }
    out.write_csv("decay_mirror.csv", t);
    out.write_text("decay_mirror.dat", plot_data(t, {"kd", "relative_rate", "closed_form_perpendicular"}));
    out.write_manifest("decay", cfg, 0);
    return kExitOk;
  }
  if (mode != "antenna") throw UsageError("config: mode must be antenna or mirror");

  const AntennaGeometry g = parse_geometry(s);
  const double resolution = s.number("resolution_nm", 10.0);
  const DipoleSpec d = parse_dipole(s);
  const SolverOptions solver = parse_solver(s, 1e-2);
  const bool save_grid = s.boolean("save_grid", false);
  s.finish();
  require_positive(resolution, "resolution_nm");

  const auto t0 = Clock::now();
  log_of(ctx) << "decay: solving at solver tolerance " << format_number(solver.tolerance) << "\n";
  const DecayRun r = run_decay(g, wavelength, resolution, d, solver, reference_index, n_theta, n_phi);
  const double ce = collection_efficiency(r.pattern, na, CollectionSide::top);
  out.write_json("decay.json", {{"p_antenna", r.rate.p_antenna},
                                {"p_reference", r.rate.p_reference},
                                {"relative_rate", r.rate.relative_rate},
                                {"reference_index", reference_index},
                                {"ce_top", ce},
                                {"na", na},
                                {"solver_tolerance", solver.tolerance},
                                {"solver", report_json(r.antenna)}});
  write_cuts(out, "decay_pattern", r.pattern);
  if (save_grid) {
    save_field_grid((out.path() / "decay_grid.csv").string(), r.antenna);
  }
  out.write_manifest("decay", cfg, 0, {{"elapsed_s", seconds_since(t0)}});
  log_of(ctx) << "decay: relative rate " << format_number(r.rate.relative_rate) << ", CE " << format_number(ce)
              << "\n";
  return kExitOk;
}

// ---- g2 ---------------------------------------------------------------------

int cmd_g2(const Json& cfg, const RunContext& ctx) {
  const Section s(cfg, "");
  const Section ms = s.child("model");
  const double tau0_ns = ms.number("tau0_ns", 31.0);
  const double qe = ms.number("qe_i", 0.7);
  const double pump_ratio = ms.number("pump_ratio", 0.0);  // k12 / k21
  ms.finish();
  const double enhancement = s.number("enhancement", 1.0);
  const int emitters = s.integer("emitters", 1);
  std::uint64_t seed = static_cast<std::uint64_t>(s.integer("seed", 1));
  if (ctx.seed) seed = *ctx.seed;
  std::optional<HbtOptions> mc;
  if (s.has("montecarlo")) {
    const Section m = s.child("montecarlo");
    HbtOptions o;
    o.duration_s = m.number("duration_s");
    o.bin_width_s = m.number("bin_width_ns") * 1e-9;
    o.max_delay_s = m.number("max_delay_ns", 0.0) * 1e-9;
    o.dead_time_s = m.number("dead_time_ns", 0.0) * 1e-9;
    o.jitter_s = m.number("jitter_ns", 0.0) * 1e-9;
    o.chunks = m.integer("chunks", o.chunks);
    m.finish();
    mc = o;
  }
  const int points = s.integer("curve_points", 201);
  s.finish();
  if (emitters < 1) throw UsageError("config: emitters must be >= 1");
  if (points < 2) throw UsageError("config: curve_points must be >= 2");
  TwoLevelModel model;
  try {
    model = two_level_model(tau0_ns * 1e-9, qe, 0.0);
    model.k12 = pump_ratio * model.k21;
    model.validate();
    model = g2_enhanced(model, enhancement);
  } catch (const DomainError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }

  const double t1 = model.tau1();
  OutputDir out(ctx.out_dir);
  Json j = {{"tau1_ns", t1 * 1e9}, {"tau0_ns", model.tau0() * 1e9}, {"k12_per_s", model.k12},
            {"k21_per_s", model.k21}, {"emitters", emitters}, {"g2_zero", g2(model, 0.0, emitters)}};
  Table t{{"tau_ns", "g2_closed", "g2_mc", "mc_err"}, {}};
  if (mc) {
    HbtOptions o = *mc;
    o.seed = seed;
    o.emitters = emitters;
    o.threads = ctx.threads;
    HbtHistogram h;
    try {
      h = hbt_montecarlo(model, o);
    } catch (const DomainError& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
    for (Eigen::Index i = 0; i < h.g2.size(); ++i)
      t.add({h.tau_mid()[i] * 1e9, g2_bin_average(model, h.tau_lo[i], h.tau_hi[i], emitters), h.g2[i], h.error[i]});
    const AntibunchingFit fit = fit_antibunching(h);
    j["montecarlo"] = {{"seed", seed},
                       {"sub_seeds", h.sub_seeds},
                       {"coincidences", h.coincidences},
                       {"detections", {h.detections_a, h.detections_b}},
                       {"insufficient", h.insufficient},
                       {"fit_tau1_ns", fit.tau1 * 1e9},
                       {"fit_g2_zero", fit.g2_zero},
                       {"fit_g2_zero_error", fit.g2_zero_error},
                       {"chi2_per_dof", fit.chi2_per_dof}};
    if (h.insufficient) log_of(ctx) << "g2: warning, fewer than 1e4 coincidences\n";
  } else {
    const double tmax = 5.0 * t1;
    for (int i = 0; i < points; ++i) {
      const double tau = tmax * i / (points - 1);
      t.add({tau * 1e9, g2(model, tau, emitters), std::string(), std::string()});
    }
  }
  out.write_csv("g2.csv", t);
  out.write_text("g2.dat", plot_data(t, {"tau_ns", "g2_closed", "g2_mc", "mc_err"}));
  out.write_json("g2.json", j);
  out.write_manifest("g2", cfg, seed);
  log_of(ctx) << "g2: tau1 = " << format_number(t1 * 1e9) << " ns\n";
  return kExitOk;
}

// ---- budget -----------------------------------------------------------------

int cmd_budget(const Json& cfg, const RunContext& ctx) {
  const Section s(cfg, "");
  const double qe = s.number("qe_i", 0.7), tau0_ns = s.number("tau0_ns", 31.0);
  const double enh = s.number("enhancement", 300.0), ce = s.number("ce", 0.75);
  s.finish();
  PhotonBudget b;
  try {
    b = photon_budget(qe, tau0_ns * 1e-9, enh, ce);
  } catch (const DomainError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  const std::string text = format_budget(b);
  std::cout << text;
  OutputDir out(ctx.out_dir);
  out.write_text("budget.txt", text);
  out.write_json("budget.json", {{"base_rate_hz", b.base_rate},
                                 {"emission_rate_hz", b.emission_rate},
                                 {"collection_rate_hz", b.collection_rate},
                                 {"quoted_base_rate_hz", b.printed_base_rate},
                                 {"quoted_emission_rate_hz", b.printed_emission_rate},
                                 {"quoted_collection_rate_hz", b.printed_collection_rate}});
  out.write_manifest("budget", cfg, 0);
  return kExitOk;
}

// ---- sweep ------------------------------------------------------------------

struct PointOutcome {
  std::vector<Cell> row;
  std::string error;  // empty on success
};

// Runs `work(i)` for every point on a pool of workers; rows keep the input order.
template <typename Work>
std::vector<PointOutcome> run_points(std::size_t n, int threads, double budget_s, std::ostream& log, Work&& work) {
  std::vector<PointOutcome> out(n);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  const auto t0 = Clock::now();
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      if (budget_s > 0.0 && seconds_since(t0) > budget_s) {
        out[i].error = "time budget exhausted";
        continue;
      }
      const auto ti = Clock::now();
      try {
        out[i].row = work(i);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
      std::lock_guard lock(log_mutex);
      log << "sweep: point " << i + 1 << "/" << n << (out[i].error.empty() ? " done" : " failed: " + out[i].error)
          << " (" << format_number(std::round(seconds_since(ti) * 10.0) / 10.0) << " s)\n";
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::clamp(threads, 1, static_cast<int>(std::max<std::size_t>(n, 1))); ++t)
    pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

int cmd_sweep(const Json& cfg, const RunContext& ctx) {
  const Section s(cfg, "");
  const std::string kind = s.text("kind");
  const double fail_fraction = s.number("max_failure_fraction", 0.5);
  const double budget = s.number("time_budget_s", 0.0);
  std::ostream& log = log_of(ctx);
  std::vector<PointOutcome> results;
  Table t;
  Json summary;

  if (kind == "moments") {
    struct Case {
      std::string name;
      MieCoefficients c;
    };
    std::vector<Case> cases;
    const Json& list = s.raw("cases");
    if (!list.is_array()) throw UsageError("config: cases must be a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Section cs(list[i], "cases[" + std::to_string(i) + "]");
      const std::string name = cs.text("name", "case" + std::to_string(i));
      cases.push_back({name, parse_moments(cs.child("moments"))});
      cs.finish();
    }
    const int n_theta = s.integer("n_theta", kDefaultThetaSamples), n_phi = s.integer("n_phi", kDefaultPhiSamples);
    const double na = s.number("na", 0.9);
    const MixSpec mix = parse_mix(s);
    s.finish();
    if (cases.empty()) throw UsageError("sweep: empty domain, no cases");
    OutputDir out(ctx.out_dir);
    std::vector<RadiationPattern> patterns(cases.size());
    t.columns = {"name", "forward_intensity", "backward_intensity", "front_back_ratio", "directivity", "ce_top", "status"};
    results = run_points(cases.size(), ctx.threads, budget, log, [&](std::size_t i) {
      patterns[i] = apply_mix(pattern(cases[i].c, n_theta, n_phi), mix);
      const KerkerMetrics m = kerker_metrics(patterns[i]);
      return std::vector<Cell>{cases[i].name, m.forward_intensity, m.backward_intensity, m.front_back_ratio,
                               m.directivity, collection_efficiency(patterns[i], na), std::string("ok")};
    });
    for (std::size_t i = 0; i < cases.size(); ++i)
      if (results[i].error.empty()) write_cuts(out, cases[i].name, patterns[i]);
    int failed = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (results[i].error.empty()) {
        t.add(results[i].row);
      } else {
        ++failed;
        const double nan = std::nan("");
        t.add({cases[i].name, nan, nan, nan, nan, nan, "failed: " + results[i].error});
      }
    }
    out.write_csv("sweep.csv", t);
    out.write_manifest("sweep", cfg, 0, {{"failed_points", failed}});
    return failed > fail_fraction * static_cast<double>(results.size()) ? kExitPartial : kExitOk;
  }

  if (kind != "length" && kind != "reflector") throw UsageError("config: kind must be moments, length or reflector");
  std::vector<double> values = value_list(s, kind == "length" ? "length_nm" : "spacing_nm");
  std::sort(values.begin(), values.end());
  const AntennaGeometry base = parse_geometry(s);
  const double wavelength = s.number("wavelength_nm", 680.0);
  const double resolution = s.number("resolution_nm", 10.0);
  const DipoleSpec dip = parse_dipole(s);
  const SolverOptions solver = parse_solver(s, 1e-2);
  const double reference_index = parse_reference_index(s);
  const double na = s.number("na", 0.9);
  const bool moments = s.boolean("moments", kind == "length");
  const bool decay = s.boolean("decay", true);
  const int n_theta = s.integer("n_theta", 181), n_phi = s.integer("n_phi", 72);
  const double reflector_thickness = s.number("reflector_thickness_nm", 100.0);
  s.finish();
  require_positive(wavelength, "wavelength_nm");
  require_positive(resolution, "resolution_nm");
  for (const double v : values) require_positive(v, kind == "length" ? "length_nm" : "spacing_nm");
  if (!moments && !decay) throw UsageError("config: sweep computes nothing with moments and decay both off");
  if (kind == "reflector" && !decay) throw UsageError("config: a reflector sweep needs decay: true");

  log << "sweep: " << values.size() << " points, metallic solves at tolerance " << format_number(solver.tolerance)
      << "\n";
  const std::string param = kind == "length" ? "L_nm" : "spacing_nm";
  t.columns = {param,         "c_ed",           "c_md",          "c_eq",        "c_mq",          "c_sum",
               "front_back_ratio", "directivity", "relative_rate", "CE",          "iterations",    "residual",
               "status"};
  results = run_points(values.size(), ctx.threads, budget, log, [&](std::size_t i) {
    AntennaGeometry g = base;
    if (kind == "length") g.length_nm = values[i];
    else g.reflector = Reflector{reflector_thickness, values[i]};
    g.validate();
    const double nan = std::nan("");
    std::vector<Cell> row{values[i], nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, std::string("ok")};
    int iterations = 0;
    double residual = 0.0;
    if (moments) {
      AntennaGeometry free = g;
      free.reflector.reset();  // plane-wave moments are taken without the mirror
      FieldGrid grid = voxelize(free, resolution, wavelength);
      grid.source = PlaneWave{};
      grid = solve(std::move(grid), solver);
      const CartesianMultipoles mp = decompose(grid, Vec3d::Zero());
      const double area = 0.25 * kPi * g.diameter_nm * g.diameter_nm;
      const MomentEfficiencies q = efficiencies(mp, grid.wavenumber(), 1.0, area);
      const KerkerMetrics km =
          kerker_metrics(pattern(to_mie_moments(mp, grid.wavenumber(), PlaneWave{}), 181, 8));
      row[1] = q.c_p, row[2] = q.c_m, row[3] = q.c_qe, row[4] = q.c_qm, row[5] = q.partial_sum();
      row[6] = km.front_back_ratio, row[7] = km.directivity;
      iterations += grid.report->iterations;
      residual = std::max(residual, grid.report->residual);
    }
    if (decay) {
      const DecayRun r = run_decay(g, wavelength, resolution, dip, solver, reference_index, n_theta, n_phi);
      row[8] = r.rate.relative_rate;
      row[9] = collection_efficiency(r.pattern, na, CollectionSide::top);
      iterations += r.antenna.report->iterations;
      residual = std::max(residual, r.antenna.report->residual);
    }
    row[10] = static_cast<double>(iterations);
    row[11] = residual;
    return row;
  });

  OutputDir out(ctx.out_dir);
  int failed = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].error.empty()) {
      t.add(results[i].row);
    } else {
      ++failed;
      std::vector<Cell> row(t.columns.size(), std::nan(""));
      row[0] = values[i];
      row.back() = "failed: " + results[i].error;
      t.add(row);
    }
  }
  out.write_csv("sweep.csv", t);
  out.write_text("sweep_plot.dat", plot_data(t, {param, "relative_rate", "CE"}));
  if (moments) out.write_text("sweep_moments.dat", plot_data(t, {param, "c_ed", "c_md", "c_eq", "c_mq"}));
  summary["failed_points"] = failed;
  summary["solver_tolerance"] = solver.tolerance;
  out.write_manifest("sweep", cfg, 0, summary);
  if (failed) log << "sweep: " << failed << " of " << results.size() << " points failed\n";
  return failed > fail_fraction * static_cast<double>(results.size()) ? kExitPartial : kExitOk;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"pattern", "decompose", "kerker-scan", "ce",
                                              "decay",   "g2",        "budget",      "sweep"};
  return names;
}

int run_command(const std::string& command, const Json& config, const RunContext& ctx) {
  if (!config.is_object()) throw UsageError("config: top level must be a mapping");
  if (command == "pattern") return cmd_pattern(config, ctx);
  if (command == "decompose") return cmd_decompose(config, ctx);
  if (command == "kerker-scan") return cmd_kerker_scan(config, ctx);
  if (command == "ce") return cmd_ce(config, ctx);
  if (command == "decay") return cmd_decay(config, ctx);
  if (command == "g2") return cmd_g2(config, ctx);
  if (command == "budget") return cmd_budget(config, ctx);
  if (command == "sweep") return cmd_sweep(config, ctx);
  throw UsageError("unknown command '" + command + "'");
}

std::optional<ManifestReplay> as_manifest(const Json& j) {
  if (!j.is_object() || !j.contains("manifest_version")) return std::nullopt;
  if (!j.contains("command") || !j.contains("config") || !j["command"].is_string())
    throw UsageError("manifest: missing command or config");
  ManifestReplay r;
  r.command = j["command"].get<std::string>();
  r.config = j["config"];
  if (j.contains("seed") && j["seed"].is_number_unsigned()) r.seed = j["seed"].get<std::uint64_t>();
  return r;
}

}  // namespace kerker::app
