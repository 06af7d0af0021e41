#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "stab/config.hpp"

namespace stab {

// Command-line overrides applied on top of the [run] section.
struct RunOverrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<int> signals;
};

struct RunResult {
  // 0 all checks pass, 2 check failure, 3 construction error, 4 config error
  int exit_code = 0;
  std::string report_text;  // summary block + structured report (codes 0 and 2)
  std::string diagnostic;   // human-readable cause (codes 3 and 4)
};

// Executes the configured pipeline and writes trajectories/*.csv,
// change_table.csv and report.txt under the output directory.
RunResult run_config(const std::string& config_path, const RunOverrides& ov = {});
RunResult run_config_parsed(const ConfigFile& cfg, const RunOverrides& ov = {});

}  // namespace stab
