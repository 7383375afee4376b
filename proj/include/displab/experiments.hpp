#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "displab/config.hpp"

namespace displab {

// Desk-scale caps; lifted by override_budget.
inline constexpr double kDeskBudgetConvolution = 1e7;
inline constexpr double kDeskBudgetSingle = 1e8;

struct RunOptions {
  bool oracle = false;                 // brute-force evaluation paths
  bool override_budget = false;
  std::optional<std::uint64_t> seed;   // replaces the config's seed
};

struct OutputFile {
  std::string name;
  std::string content;
};

struct ExperimentResult {
  std::string command;
  std::string config_hash;        // hex, echoed in every CSV row
  std::vector<OutputFile> files;  // files[0] is the main CSV
  std::string summary;            // "key = value" lines
  bool ok = true;                 // exact checks of the command held
};

const std::vector<std::string>& experiment_names();

// Throws ConfigError for unknown commands or keys, BudgetExceeded past the
// desk caps.
ExperimentResult run_experiment(const std::string& command, const Config& config,
                                const RunOptions& opts = {});

}  // namespace displab
