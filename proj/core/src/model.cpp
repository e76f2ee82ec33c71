#include "uvm/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace uvm {

void ModelSpec::validate() const {
    if (dim < 1) throw std::invalid_argument("model: dim must be >= 1");
    if (spot.size() != dim || vol_lo.size() != dim || vol_hi.size() != dim)
        throw std::invalid_argument("model: spot and volatility bounds must have dim entries");
    if (!(horizon > 0.0)) throw std::invalid_argument("model: horizon must be positive");
    if (steps < 1) throw std::invalid_argument("model: steps must be >= 1");
    if (!(rate >= 0.0)) throw std::invalid_argument("model: rate must be nonnegative");
    for (int i = 0; i < dim; ++i) {
        if (!(spot[i] > 0.0)) throw std::invalid_argument("model: spot must be positive");
        if (!(vol_lo[i] > 0.0) || !(vol_lo[i] <= vol_hi[i]) || !std::isfinite(vol_hi[i]))
            throw std::invalid_argument("model: need 0 < vol_lo <= vol_hi < inf for asset " +
                                        std::to_string(i));
    }
    if (corr_bounds.dim() != dim)
        throw std::invalid_argument("model: correlation bounds must be dim x dim");
    if (corr_mode == CorrMode::fixed) {
        if (corr_fixed.rows() != dim || corr_fixed.cols() != dim)
            throw std::invalid_argument("model: fixed correlation must be dim x dim");
        if (!corr_fixed.isApprox(corr_fixed.transpose(), 1e-14))
            throw std::invalid_argument("model: fixed correlation must be symmetric");
        for (int i = 0; i < dim; ++i)
            if (std::abs(corr_fixed(i, i) - 1.0) > 1e-12)
                throw std::invalid_argument("model: fixed correlation must have unit diagonal");
        Eigen::LLT<Eigen::MatrixXd> llt(corr_fixed);
        if (llt.info() != Eigen::Success)
            throw std::invalid_argument("model: fixed correlation is not positive definite");
    }
}

ModelSpec ModelSpec::uniform(int dim, double spot, double vol_lo, double vol_hi, double rate,
                             double horizon, int steps, CorrMode mode, double corr_lo,
                             double corr_hi, double fixed_corr) {
    ModelSpec m;
    m.dim = dim;
    m.spot = Eigen::VectorXd::Constant(dim, spot);
    m.rate = rate;
    m.horizon = horizon;
    m.steps = steps;
    m.vol_lo = Eigen::VectorXd::Constant(dim, vol_lo);
    m.vol_hi = Eigen::VectorXd::Constant(dim, vol_hi);
    m.corr_bounds = CorrBounds::uniform(dim, corr_lo, corr_hi);
    m.corr_mode = mode;
    m.corr_fixed = Eigen::MatrixXd::Constant(dim, dim, fixed_corr);
    m.corr_fixed.diagonal().setOnes();
    return m;
}

CorrFactor fixed_factor(const ModelSpec& spec) {
    if (spec.dim == 1) return CorrFactor::identity(1);
    Eigen::LLT<Eigen::MatrixXd> llt(spec.corr_fixed);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("fixed_factor: correlation is not positive definite");
    return {llt.matrixL()};
}

}  // namespace uvm
