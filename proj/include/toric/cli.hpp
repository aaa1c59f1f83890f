#pragma once

#include <string>
#include <vector>

#include "toric/driver.hpp"

namespace toric {

enum class CliMode {
  sample,
  hysteresis,
  thermalization,
  T_sweep,
  h_sweep,
  lmbda_sweep,
  circle_sweep,
  oracle,
};

struct CliOptions {
  CliMode mode = CliMode::sample;
  RunConfig cfg;
  SweepSpec sweep;
  std::string output_directory = ".";
  std::string folder_name;
  int replicas = 1;
  int workers = 1;
  int process_index = 0;
  bool emit_csv = false;
  bool help = false;
};

// Throws UsageError naming the offending flag. A token is a flag when it
// starts with '-' followed by something other than a digit or '.', so
// negative numbers are values. "-flag=value" is accepted everywhere.
CliOptions parse_cli(const std::vector<std::string>& args);

std::string cli_usage();

// Runs the selected mode and writes its files. Returns the process exit code:
// 0 success, 1 usage or configuration error, 2 runtime error.
int run_cli(int argc, char** argv);

}  // namespace toric
