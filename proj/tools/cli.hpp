#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "lqg/model.hpp"

namespace lqg::cli {

// Malformed input of any kind; maps to exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Contents of a scenario file. Experiment grids are optional and fall back
// to the defaults below.
struct Scenario {
  ScenarioParams params;
  std::vector<double> p2_grid{1, 2, 3, 4, 5};
  double budget = 20.0;
  std::vector<double> splits{0, 2.5, 5, 7.5, 10, 12.5, 15, 17.5, 20};
};

Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

// Writes through a temporary file in the same directory and renames it, so
// the target is either complete or absent.
void write_atomic(const std::string& path, const std::string& contents);

// Exit codes: 0 success, 1 failed validation or non-convergence, 2 malformed
// input.
int run_command(int argc, char** argv);

}  // namespace lqg::cli
