#pragma once

#include "config.hpp"

#include <string_view>
#include <vector>

namespace uvm::cli {

/// Builtin experiments. Each carries the benchmark case it reproduces and
/// the reference price in `description` / `reference`. Budgets are reduced;
/// apply_paper_scale restores the full ones.
const std::vector<ExperimentConfig>& presets();

/// Throws std::invalid_argument listing the known names on a miss.
const ExperimentConfig& find_preset(std::string_view name);

}  // namespace uvm::cli
