#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "app/config.hpp"

namespace kerker::app {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitCompute = 2, kExitPartial = 3 };

struct RunContext {
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;  // overrides the config seed
  int threads = 1;
  std::string input;   // decompose: FieldGrid CSV
  std::string oracle;  // decompose: "sphere"
  std::ostream* log = nullptr;  // progress and warnings; stderr when null
};

const std::vector<std::string>& command_names();

/// Validates `config` for `command` (UsageError on any problem, before
/// computing), runs it, writes the outputs and manifest into ctx.out_dir
/// and returns the exit code. Compute failures propagate as exceptions.
int run_command(const std::string& command, const Json& config, const RunContext& ctx);

/// A manifest written by an earlier run: returns its command, config and
/// seed; nullopt for an ordinary config.
struct ManifestReplay {
  std::string command;
  Json config;
  std::uint64_t seed = 1;
};
std::optional<ManifestReplay> as_manifest(const Json& j);

}  // namespace kerker::app
