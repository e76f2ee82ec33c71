#pragma once

#include <uvm/model.hpp>
#include <uvm/payoffs.hpp>
#include <uvm/policy.hpp>
#include <uvm/trainer.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace uvm::cli {

enum class Mode { price, sweep_N, sweep_beta, sweep_E, oracle, propcheck };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

/// Model fields with one interval shared by every asset and every pair.
struct ModelFields {
    int dim = 1;
    double spot = 100.0;
    double rate = 0.0;
    double horizon = 1.0;
    int steps = 32;
    double vol_lo = 0.1;
    double vol_hi = 0.2;
    CorrMode corr_mode = CorrMode::fixed;
    double corr_lo = -0.5;
    double corr_hi = 0.5;
    double corr_fixed = 0.0;

    bool operator==(const ModelFields&) const = default;
};

struct ExperimentConfig {
    std::string name;
    std::string description;
    std::optional<double> reference;

    ModelFields model;
    PayoffSpec payoff{PayoffKind::geo_call, {100.0}};  // dim and horizon follow the model
    PolicyFamily family = PolicyFamily::continuous;
    TrainSchedule schedule = TrainSchedule::reduced();

    std::uint64_t seed = 1;
    long paths = 1L << 19;
    std::string output_dir = "out";
    Mode mode = Mode::price;
    std::vector<double> sweep_values;  // N, beta or E_inner for the sweep modes

    ModelSpec model_spec() const;
    PayoffSpec payoff_spec() const;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// Flat "section.key = value" lines; '#' starts a comment. Keys absent from
/// the text keep the values of `base`.
ExperimentConfig parse_config(std::string_view text, const ExperimentConfig& base = {});
ExperimentConfig load_config(const std::string& path, const ExperimentConfig& base = {});
std::string serialize_config(const ExperimentConfig& config);

/// Replaces the reduced epoch and sample budgets with the full ones.
void apply_paper_scale(ExperimentConfig& config);

}  // namespace uvm::cli
