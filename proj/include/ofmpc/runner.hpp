#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ofmpc/closedloop.hpp"

namespace ofmpc {

/// One CSV row per step: k, t, r*, y*, e*, u*, xhat*, theta*, nmpc_iters,
/// nmpc_kkt, refgen_res; starred groups expand per dimension. Doubles are
/// written with 17 significant digits so logs are reproducible bit for bit.
std::string log_to_csv(const ClosedLoopLog& log);
ClosedLoopLog log_from_csv(const std::string& text);

std::string metrics_report(const Scenario& scenario, const Metrics& metrics);
Metrics metrics_from_report(const std::string& text);

struct RunConfig {
  std::string scenario;     // preset name
  std::string config_path;  // or explicit config file
  bool all = false;         // or the whole preset battery
  std::string output_dir = ".";
  std::optional<unsigned int> seed;
  std::optional<int> steps;
};

/// Parses command-line arguments (without argv[0]); throws ConfigError on
/// unknown flags, missing values, or unless exactly one of
/// --scenario/--config/--all is given.
RunConfig parse_args(const std::vector<std::string>& args);

/// Runs the selected scenario(s), writing <name>.csv and <name>.metrics.txt
/// into the output directory, plus comparison.txt in batch mode. Returns 0
/// on success, nonzero on any failure; nothing is written until the output
/// directory has been verified writable.
int execute(const RunConfig& config);

}  // namespace ofmpc
