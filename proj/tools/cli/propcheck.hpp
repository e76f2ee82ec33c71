#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace uvm::cli {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;  // the measured quantity against its tolerance
};

// Invariant checks with their tolerances built in. Sample sizes are
// parameters so unit tests can run cheaper versions.
CheckResult check_cvine_psd(std::uint64_t seed, int draws_per_dim = 10000);
CheckResult check_cvine_reconstruction(std::uint64_t seed, int draws_per_dim = 10000);
CheckResult check_bernoulli_normalization(std::uint64_t seed);
CheckResult check_ppo_ratio(std::uint64_t seed, int draws = 10000);
CheckResult check_mlp_gradients(std::uint64_t seed);
CheckResult check_score_zero_mean(std::uint64_t seed, int samples = 100000);
CheckResult check_martingale(std::uint64_t seed, long paths = 1000000);

/// Every check above at full size.
std::vector<CheckResult> run_property_suite(std::uint64_t seed);

}  // namespace uvm::cli
