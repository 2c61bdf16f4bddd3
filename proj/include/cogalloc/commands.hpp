#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "cogalloc/config.hpp"

namespace cogalloc {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitInfeasible = 3,
  kExitOracleMismatch = 4,
};

struct CommandOptions {
  std::filesystem::path out_dir = ".";
  unsigned jobs = 1;
};

int cmd_optimize(const RunConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_compare_oracle(const RunConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_compare_nonjoint(const RunConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_simulate(const RunConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_probe_hessian(const RunConfig& config, const CommandOptions& options, std::ostream& log);

/// Dispatches by subcommand name; unknown names return kExitConfig.
int run_command(std::string_view name, const RunConfig& config, const CommandOptions& options,
                std::ostream& log);

}  // namespace cogalloc
