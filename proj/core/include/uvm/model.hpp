#pragma once

#include "uvm/corrvine.hpp"

#include <Eigen/Dense>

namespace uvm {

enum class CorrMode { uncertain, fixed };

/// Market and control-set data: asset dimension, spot, rate, horizon, time
/// steps, per-asset volatility bounds and the correlation regime.
struct ModelSpec {
    int dim = 1;
    Eigen::VectorXd spot;
    double rate = 0.0;
    double horizon = 1.0;
    int steps = 1;
    Eigen::VectorXd vol_lo;
    Eigen::VectorXd vol_hi;
    CorrBounds corr_bounds;
    CorrMode corr_mode = CorrMode::fixed;
    Eigen::MatrixXd corr_fixed;  // used when corr_mode == fixed

    double dt() const { return horizon / steps; }
    double time(int n) const { return n * dt(); }

    /// True when the correlation is part of the control (uncertain mode, d >= 2).
    bool controls_correlation() const { return corr_mode == CorrMode::uncertain && dim >= 2; }

    /// Throws std::invalid_argument describing the first violated invariant.
    void validate() const;

    /// Same bounds for every asset, every pair; fixed mode uses a constant
    /// off-diagonal correlation `fixed_corr`.
    static ModelSpec uniform(int dim, double spot, double vol_lo, double vol_hi, double rate,
                             double horizon, int steps, CorrMode mode, double corr_lo = -1.0,
                             double corr_hi = 1.0, double fixed_corr = 0.0);
};

/// Cholesky factor of the fixed correlation matrix (identity for d = 1).
CorrFactor fixed_factor(const ModelSpec& spec);

}  // namespace uvm
