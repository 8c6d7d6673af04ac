#pragma once

#include "gridguard/config.hpp"
#include "gridguard/grid_model.hpp"

#include <string>
#include <vector>

namespace fixture {

/// Fresh empty folder under the test build tree.
std::string temp_dir(const std::string& name);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

std::string grids_dir();  ///< the shipped fixture feeders
std::vector<gridguard::GridModel> feeders();

/// Two-bus grid with one line b0 -> b1.
gridguard::GridModel two_bus(double r, double x);

/// Small, fast desk-scale config rooted in `dir` (results, raw data there).
gridguard::ExperimentConfig desk_config(const std::string& dir);

}  // namespace fixture
