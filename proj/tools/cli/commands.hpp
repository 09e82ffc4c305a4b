#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "config.hpp"

namespace disco::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumeric = 4,
  kExitCheckFailed = 5,
  kExitInternal = 6,
};

struct CommandOptions {
  std::string out_dir = ".";
  std::string data_path;   // overrides data.generator / data.path
  std::string checkpoint;  // eval only
};

// Each command writes its artefacts under options.out_dir and a short summary
// to `log`. Library errors propagate; run_cli maps them to exit codes.
int cmd_toy(const ExperimentConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_train(const ExperimentConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_eval(const ExperimentConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_gradcheck(const ExperimentConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_sweep(const ExperimentConfig& config, const CommandOptions& options, std::ostream& log);

/// Full command line entry point.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace disco::cli
