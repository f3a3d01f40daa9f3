// kerker: multipole decomposition, Kerker patterns and emitter figures of
// merit from the command line. Exit codes: 0 success, 1 usage, 2 compute
// failure, 3 partial sweep failure.

#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "app/commands.hpp"

int main(int argc, char** argv) {
  using namespace kerker::app;

  CLI::App app{"Multipole, Kerker-pattern and single-photon-source toolkit"};
  app.set_version_flag("--version", std::string(KERKER_VERSION));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir = ".", input, oracle;
  std::uint64_t seed = 0;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides the config)");
  app.add_option("--config", config_path, "YAML or JSON config, or a manifest.json to replay")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  const char* help[] = {"Far-field pattern and Kerker metrics of given Mie moments",
                        "Cartesian multipoles of a solved field grid",
                        "Grid-then-refine search over moment magnitudes",
                        "Collection efficiency inside a lens NA",
                        "Relative decay rate from paired dipole solves",
                        "Closed-form and Monte Carlo g2(tau)",
                        "Photon-rate budget arithmetic",
                        "Parameter sweep over moments, antenna length or reflector spacing"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < command_names().size(); ++i) subs.push_back(app.add_subcommand(command_names()[i], help[i]));
  CLI::App* dec = subs[1];
  dec->add_option("--input", input, "FieldGrid CSV")->check(CLI::ExistingFile);
  dec->add_option("--oracle", oracle, "Analytic reference field instead of a grid")->check(CLI::IsMember({"sphere"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::string command;
  for (auto* s : subs)
    if (s->parsed()) command = s->get_name();

  try {
    Json config = config_path.empty() ? Json::object() : load_config_file(config_path);
    RunContext ctx;
    if (auto replay = as_manifest(config)) {
      if (replay->command != command)
        throw UsageError("manifest was written by '" + replay->command + "', not '" + command + "'");
      config = replay->config;
      ctx.seed = replay->seed;
    }
    if (seed_opt->count()) ctx.seed = seed;
    ctx.out_dir = out_dir;
    ctx.threads = threads;
    ctx.input = input;
    ctx.oracle = oracle;
    return run_command(command, config, ctx);
  } catch (const UsageError& e) {
    std::cerr << "kerker: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "kerker " << command << ": " << e.what() << "\n";
    return kExitCompute;
  }
}
