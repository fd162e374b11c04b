#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace folharm {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitConfigError = 2, kExitRuntimeError = 3 };

struct CliOptions {
  std::string command;              // tension | energy | flow | verify | report
  std::vector<std::string> checks;  // verify: restrict to these checks
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

// Output directory: --out, else $FOLHARM_OUT, else the config's output_dir.
std::string resolve_output_dir(const std::optional<std::string>& flag, const std::string& configured);

// Loads the config, runs the subcommand and writes its artifacts. Never throws;
// errors are reported on `err` and mapped to exit codes.
int run_command(const CliOptions& options, std::ostream& out, std::ostream& err);

}  // namespace folharm
