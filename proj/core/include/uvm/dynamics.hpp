#pragma once

#include "uvm/model.hpp"
#include "uvm/random.hpp"

#include <Eigen/Dense>

namespace uvm {

/// Standard normal draws, one d-vector per column. When `antithetic` is set
/// the batch is [xi, -xi]: column b + B/2 is the negation of column b.
struct GaussianBatch {
    Eigen::MatrixXd draws;
    bool antithetic = false;

    Eigen::Index size() const { return draws.cols(); }
};

/// Simulated states, one per column. Rows 0..asset_dim-1 are asset prices;
/// path-dependent payoffs append (A1, A2): the running sum of squared log
/// returns between monitoring dates and the asset value at the last date.
struct StateBatch {
    Eigen::MatrixXd values;
    int asset_dim = 0;

    Eigen::Index size() const { return values.cols(); }
    int state_dim() const { return static_cast<int>(values.rows()); }
    bool augmented() const { return values.rows() > asset_dim; }
};

/// Packed storage for lower-triangular d x d factors: row i, column k <= i
/// lives at i(i+1)/2 + k.
constexpr int packed_size(int d) { return d * (d + 1) / 2; }
constexpr int packed_index(int i, int k) { return i * (i + 1) / 2 + k; }

/// Volatilities and correlation factors for one step of a batch of paths.
/// The diffusion matrix of path b is a = diag(sigma_b) L_b. L is either one
/// shared factor (fixed correlation) or one packed factor per path.
struct StepControls {
    Eigen::MatrixXd sigma;           // d x B
    Eigen::MatrixXd shared_factor;   // d x d, empty when per-path
    Eigen::MatrixXd packed_factors;  // packed_size(d) x B, empty when shared

    bool per_path() const { return packed_factors.size() > 0; }
    Eigen::Index size() const { return sigma.cols(); }

    /// Factor of path b as a dense lower-triangular matrix.
    Eigen::MatrixXd factor(Eigen::Index b) const;
    /// Controls for columns [0, B) repeated twice (for antithetic pairs).
    StepControls tiled() const;
};

Eigen::VectorXd pack_lower(const Eigen::MatrixXd& lower);

/// x' = x * exp((r - diag(a a^T)/2) dt + a sqrt(dt) xi), a = diag(sigma) L.
/// Augmentation rows are copied unchanged. Throws NumericalError when a
/// result is non-finite or not strictly positive.
StateBatch log_euler_step(const StateBatch& x, const StepControls& controls,
                          const GaussianBatch& xi, const ModelSpec& spec);

/// Draws from the training state distribution at t_n: independent log-normal
/// components, each with its own volatility uniform on [vol_lo, vol_hi] and
/// zero correlation. Row count is spec.dim (no augmentation).
StateBatch sample_states(int n, int batch, const ModelSpec& spec, RandomStream& rng);

/// Same distribution for a path-dependent state (d = 1): each path draws one
/// volatility and is simulated exactly on the monitoring dates up to t_n so
/// that (A1, A2) are consistent with the asset value.
StateBatch sample_path_states(int n, int batch, const ModelSpec& spec, RandomStream& rng);

/// First half i.i.d. N(0, I_d), second half its negation. Rejects odd sizes.
GaussianBatch draw_increments(int batch, int dim, RandomStream& rng);

/// Number of time steps between monthly monitoring dates, N / (12 T).
/// Throws std::invalid_argument when the grid does not contain every date.
int monitoring_interval(const ModelSpec& spec);

/// Updates (A1, A2) after the transition t_n -> t_{n+1}: at a monitoring date
/// A1 += ln(x_new / A2)^2 and A2 := x_new; otherwise the augmentation carries over.
StateBatch augment_path_state(const StateBatch& x_prev, const StateBatch& x_new, int n,
                              const ModelSpec& spec);

/// Initial states x0 (with A1 = 0, A2 = x0 when augmented), replicated.
StateBatch initial_states(int batch, const ModelSpec& spec, bool augmented);

/// Network features: ln(x / x0) per asset, then A1 and ln(A2 / x0).
Eigen::MatrixXd encode_states(const StateBatch& x, const ModelSpec& spec);

struct FeatureNormalization {
    Eigen::VectorXd shift;
    Eigen::VectorXd scale;
};

/// Analytic mean/scale of the encoded features under the step-n sampler.
/// At n = 0 the sampler is a point mass; its scale is taken from t_1.
FeatureNormalization feature_normalization(int n, const ModelSpec& spec, bool augmented);

}  // namespace uvm
