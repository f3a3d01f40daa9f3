#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "app/commands.hpp"
#include "app/output.hpp"

using namespace kerker::app;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kerker_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& cmd, const Json& cfg, const fs::path& out, std::optional<std::uint64_t> seed = {},
        int threads = 1) {
  std::ostringstream log;
  RunContext ctx;
  ctx.out_dir = out;
  ctx.seed = seed;
  ctx.threads = threads;
  ctx.log = &log;
  return run_command(cmd, cfg, ctx);
}

int shell(const std::string& args) {
  const int rc = std::system((std::string(KERKER_BIN) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::vector<std::vector<double>> read_dat(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<double>> rows;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> r;
    for (double v; ls >> v;) r.push_back(v);
    rows.push_back(r);
  }
  return rows;
}

const char* kPatternYaml = R"(
moments:
  a: [1, [0.5, 0.25]]
  b: [1]
n_theta: 181
n_phi: 8
)";

}  // namespace

TEST_CASE("YAML and JSON configs are the same experiment") {
  const Json y = parse_config_text(kPatternYaml);
  const Json j = parse_config_text(R"({"moments": {"a": [1, [0.5, 0.25]], "b": [1]}, "n_theta": 181, "n_phi": 8})");
  CHECK(y == j);
  const fs::path a = scratch("yaml"), b = scratch("json");
  CHECK(run("pattern", y, a) == kExitOk);
  CHECK(run("pattern", j, b) == kExitOk);
  CHECK(slurp(a / "pattern.csv") == slurp(b / "pattern.csv"));
  CHECK(parse_config_text("name: '12'")["name"].is_string());
}

TEST_CASE("unknown keys fail before anything is computed or written") {
  Json cfg = parse_config_text(kPatternYaml);
  cfg["n_thetaa"] = 10;
  const fs::path out = scratch("strict");
  CHECK_THROWS_AS(run("pattern", cfg, out), UsageError);
  CHECK_FALSE(fs::exists(out));

  Json nested = parse_config_text(kPatternYaml);
  nested["moments"]["c"] = 1;
  CHECK_THROWS_AS(run("pattern", nested, out), UsageError);

  Json sweep = parse_config_text("kind: length\nlength_nm: [100]\nantenna: {diameter_nm: 60, colour: red}\n");
  CHECK_THROWS_AS(run("sweep", sweep, out), UsageError);
  CHECK_FALSE(fs::exists(out));
  CHECK_THROWS_AS(run("frobnicate", Json::object(), out), UsageError);
}

TEST_CASE("polar cuts are normalised two-column files") {
  const fs::path out = scratch("cuts");
  REQUIRE(run("pattern", parse_config_text("moments: {a: [1]}\nn_theta: 181\nn_phi: 8\n"), out) == kExitOk);
  const auto in_plane = read_dat(out / "pattern_inplane.dat");
  const auto out_plane = read_dat(out / "pattern_outofplane.dat");
  REQUIRE(in_plane.size() == 181);
  double peak = 0.0;
  for (const auto& r : in_plane) {
    CHECK(r.size() == 2);
    peak = std::max(peak, r[1]);
  }
  CHECK(peak == 1.0);
  // Electric dipole: cos^2 in the scattering plane, flat across it.
  CHECK(in_plane[90][1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out_plane[90][1] == doctest::Approx(1.0));
}

TEST_CASE("re-running from a manifest reproduces the outputs") {
  const fs::path a = scratch("m1"), b = scratch("m2");
  const Json cfg = parse_config_text(
      "model: {tau0_ns: 31, pump_ratio: 0.2}\nmontecarlo: {duration_s: 0.01, bin_width_ns: 4}\n");
  REQUIRE(run("g2", cfg, a, 99) == kExitOk);
  const Json manifest = load_config_file((a / "manifest.json").string());
  const auto replay = as_manifest(manifest);
  REQUIRE(replay);
  CHECK(replay->command == "g2");
  CHECK(replay->seed == 99);
  REQUIRE(run(replay->command, replay->config, b, replay->seed) == kExitOk);
  const Json m2 = load_config_file((b / "manifest.json").string());
  CHECK(manifest["outputs"] == m2["outputs"]);
  CHECK(manifest["config_sha256"] == m2["config_sha256"]);
  CHECK(manifest["outputs"]["g2.csv"] == sha256_file(b / "g2.csv"));
  CHECK_FALSE(as_manifest(cfg));
}

TEST_CASE("Monte Carlo output depends on the seed, not the thread count") {
  const Json cfg = parse_config_text(
      "model: {tau0_ns: 20, pump_ratio: 0.1}\nmontecarlo: {duration_s: 0.005, bin_width_ns: 2}\n");
  const fs::path a = scratch("t1"), b = scratch("t3"), c = scratch("s2");
  REQUIRE(run("g2", cfg, a, 1, 1) == kExitOk);
  REQUIRE(run("g2", cfg, b, 1, 3) == kExitOk);
  REQUIRE(run("g2", cfg, c, 2, 1) == kExitOk);
  CHECK(slurp(a / "g2.csv") == slurp(b / "g2.csv"));
  CHECK(slurp(a / "g2.csv") != slurp(c / "g2.csv"));
  CHECK(slurp(a / "g2.csv").rfind("tau_ns,g2_closed,g2_mc,mc_err\n", 0) == 0);
}

TEST_CASE("sweeps write sorted rows with the plot columns") {
  const fs::path out = scratch("sweep");
  const Json cfg = parse_config_text(R"(
kind: reflector
spacing_nm: [120, 60]
antenna: {length_nm: 50, diameter_nm: 40, gap_nm: 40, emitter_nm: 0}
resolution_nm: 10
reference: vacuum
)");
  REQUIRE(run("sweep", cfg, out) == kExitOk);
  const auto rows = read_dat(out / "sweep_plot.dat");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][0] == 60.0);
  CHECK(rows[1][0] == 120.0);
  for (const auto& r : rows) {
    CHECK(r.size() == 3);
    CHECK(r[1] > 0.0);
    CHECK(r[2] > 0.0);
    CHECK(r[2] <= 1.0);
  }
  CHECK(slurp(out / "sweep_plot.dat").rfind("# spacing_nm relative_rate CE\n", 0) == 0);
}

TEST_CASE("a sweep whose points mostly fail exits with the partial-failure code") {
  const Json cfg = parse_config_text(R"(
kind: length
length_nm: [50, 60]
antenna: {diameter_nm: 40, gap_nm: 40, emitter_nm: 0}
solver: {max_iterations: 1, tolerance: 1.0e-12}
)");
  const fs::path out = scratch("fail");
  CHECK(run("sweep", cfg, out) == kExitPartial);
  CHECK(slurp(out / "sweep.csv").find("failed:") != std::string::npos);
  CHECK_THROWS_AS(run("sweep", parse_config_text("kind: moments\ncases: []\n"), out), UsageError);
}

TEST_CASE("plot data refuses missing columns") {
  Table t{{"x", "y"}, {}};
  t.add({1.0, 2.0});
  CHECK_THROWS_AS(plot_data(t, {"x", "z"}), std::invalid_argument);
  CHECK(plot_data(t, {"y", "x"}) == "# y x\n2 1\n");
  CHECK_THROWS(t.add({1.0}));
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1e300) == "1e+300");
}

TEST_CASE("binary exit codes") {
  const fs::path out = scratch("bin");
  CHECK(shell("budget --out " + out.string()) == 0);
  CHECK(shell("") == 1);
  CHECK(shell("pattern --no-such-flag") == 1);
  std::ofstream(out / "bad.yaml") << "qe_i: 2.0\n";
  CHECK(shell("budget --config " + (out / "bad.yaml").string() + " --out " + out.string()) == 1);
  std::ofstream(out / "grid.csv") << "not a grid\n";
  CHECK(shell("decompose --input " + (out / "grid.csv").string() + " --out " + out.string()) == 2);
  std::ofstream(out / "fail.yaml") << "kind: length\nlength_nm: [50]\nantenna: {diameter_nm: 40, gap_nm: 40, "
                                      "emitter_nm: 0}\nsolver: {max_iterations: 1, tolerance: 1.0e-12}\n";
  CHECK(shell("sweep --config " + (out / "fail.yaml").string() + " --out " + out.string()) == 3);
}
