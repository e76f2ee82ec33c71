#pragma once

#include "uvm/dynamics.hpp"
#include "uvm/model.hpp"
#include "uvm/payoffs.hpp"
#include "uvm/trainer.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace uvm {

struct PriceReport {
    double actor_price = 0.0;
    double ci_halfwidth = 0.0;  // 95% normal interval on antithetic pair means
    double critic_price = 0.0;
    long n_paths = 0;
    double runtime_seconds = 0.0;
    std::uint64_t seed = 0;
    std::optional<double> violation_impact;
};

struct McEstimate {
    double price = 0.0;
    double ci_halfwidth = 0.0;
    double std_error = 0.0;  // of the mean, from pair means
    long n_paths = 0;
};

/// Controls applied at step n to a batch of states.
using ControlPolicy = std::function<StepControls(int n, const StateBatch& x)>;

/// Paths simulated per chunk; each chunk draws from its own substream.
inline constexpr int kPricingChunk = 1 << 14;

/// Discounted payoff of n_paths antithetic trajectories from x0 under
/// `policy`. Paths are split into chunks of kPricingChunk, each seeded from
/// (seed, chunk index), so results do not depend on how work is divided.
McEstimate monte_carlo_price(const ControlPolicy& policy, const ModelSpec& spec,
                             const TerminalPayoff& payoff, long n_paths, std::uint64_t seed,
                             bool path_dependent = false);

/// Controls from the deterministic policies of trained artifacts.
ControlPolicy deterministic_policy(const std::vector<StepArtifacts>& steps, const ModelSpec& spec);

McEstimate actor_price(const std::vector<StepArtifacts>& steps, const ModelSpec& spec,
                       const TerminalPayoff& payoff, long n_paths, std::uint64_t seed,
                       bool path_dependent = false);

/// V_{phi_0}(x0). Carries no bound guarantee.
double critic_price(const std::vector<StepArtifacts>& steps, const ModelSpec& spec,
                    bool path_dependent = false);

/// Both estimators, wall time included.
PriceReport price(const std::vector<StepArtifacts>& steps, const ModelSpec& spec,
                  const TerminalPayoff& payoff, long n_paths, std::uint64_t seed,
                  bool path_dependent = false);

/// Pairwise entries of rho projected onto [lower, upper]; diagonal kept at 1.
Eigen::MatrixXd clamp_correlation(const Eigen::MatrixXd& rho, const CorrBounds& bounds);

/// Nearest correlation matrix by eigenvalue clipping and unit-diagonal
/// rescaling. Throws PsdRepairError if the result still fails a Cholesky.
Eigen::MatrixXd repair_correlation(const Eigen::MatrixXd& rho, double min_eigenvalue = 1e-10);

/// (unclamped price - clamped price) / reference with common random numbers,
/// where the clamped run projects every correlation the actor produces onto
/// the bounds. Continuous family, uncertain correlation, d >= 3 only.
double clamped_price_impact(const std::vector<StepArtifacts>& steps, const ModelSpec& spec,
                            const TerminalPayoff& payoff, long n_paths, std::uint64_t seed,
                            double reference);

}  // namespace uvm
