#pragma once
// Subcommands of the `hessvar` tool. Each returns the process exit code.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hessvar::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitNotConverged = 2,
  kExitUsage = 64,
  kExitData = 65,
};

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::vector<std::string> inputs;  ///< positional files
};

/// Runs `name` (solve, diagnose, hamstat, campanato, report-merge); errors are
/// reported on `err` and mapped to exit codes.
int run_command(const std::string& name, const CommandOptions& options, std::ostream& out,
                std::ostream& err);

const std::vector<std::string>& command_names();

}  // namespace hessvar::cli
