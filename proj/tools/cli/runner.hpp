#pragma once

#include "config.hpp"
#include "output.hpp"

#include <uvm/pricer.hpp>
#include <uvm/trainer.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace uvm::cli {

struct TrainedRun {
    std::vector<StepArtifacts> steps;
    PriceReport report;
    double train_seconds = 0.0;
};

/// Trains all N steps and prices with config.paths paths. With a non-empty
/// `out_dir`, step checkpoints and learning curves are written there. The
/// clamped-correlation impact is computed when it applies (continuous
/// family, uncertain correlation, d >= 3, known reference).
TrainedRun train_and_price(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                           std::ostream* log);

ResultRow result_row(const ExperimentConfig& config, const TrainedRun& run);

/// Reference values for the configured model and payoff: the 1-D BSB finite
/// difference solution (continuous and N-interval control), Black-Scholes at
/// sigma_max for a 1-D call, and the brute-force DP for d <= 2, N <= 3.
/// Throws std::invalid_argument when no solver covers the configuration.
std::vector<ResultRow> oracle_rows(const ExperimentConfig& config);

/// Executes config.mode and writes results under config.output_dir.
/// Returns the process exit status; errors are reported on `err`.
int run(const ExperimentConfig& config, const std::string& command_line, std::ostream& log,
        std::ostream& err);

}  // namespace uvm::cli
