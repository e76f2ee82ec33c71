#pragma once

#include <uvm/trainer.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace uvm::cli {

inline constexpr const char* kResultsSchema = "#schema=uvm_results_v1";
inline constexpr const char* kCurvesSchema = "#schema=uvm_learning_curves_v1";

struct ResultRow {
    std::string option;
    int dim = 0;
    std::string policy_family;  // continuous, bangbang, or the oracle method
    std::string corr_mode;
    int steps = 0;
    std::optional<double> actor_price;
    std::optional<double> ci_halfwidth;
    std::optional<double> critic_price;
    std::optional<double> reference;
    double runtime_s = 0.0;
    std::uint64_t seed = 0;
    std::optional<double> violation_impact;
};

/// Appends one row, writing the schema tag and header first if the file is new.
void append_result(const std::filesystem::path& file, const ResultRow& row);

/// Reads rows back; throws std::runtime_error on a schema mismatch.
std::vector<ResultRow> read_results(const std::filesystem::path& file);

void write_learning_curves(const std::filesystem::path& file,
                           const std::vector<StepArtifacts>& steps);

/// checkpoints/step_NNNN.ckpt under `dir`.
std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int step);
void save_checkpoint(const std::filesystem::path& dir, const StepArtifacts& step);

}  // namespace uvm::cli
