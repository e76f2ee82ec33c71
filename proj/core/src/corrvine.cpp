#include "uvm/corrvine.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace uvm {

int vine_index(int dim, int level, int j) {
    if (level < 0 || j <= level || j >= dim)
        throw std::out_of_range("vine_index: need 0 <= level < j < dim");
    const int before = level * (dim - 1) - level * (level - 1) / 2;
    return before + (j - level - 1);
}

PartialCorrVector::PartialCorrVector(int dim, std::vector<double> entries)
    : dim_(dim), entries_(std::move(entries)) {
    if (dim < 1) throw std::invalid_argument("PartialCorrVector: dimension must be >= 1");
    if (static_cast<int>(entries_.size()) != corr_pair_count(dim))
        throw std::invalid_argument("PartialCorrVector: expected " +
                                    std::to_string(corr_pair_count(dim)) + " entries, got " +
                                    std::to_string(entries_.size()));
    for (double y : entries_) {
        if (!(std::abs(y) < 1.0))
            throw std::domain_error("PartialCorrVector: partial correlation " +
                                    std::to_string(y) + " outside (-1, 1)");
    }
}

CorrBounds::CorrBounds(Eigen::MatrixXd lower, Eigen::MatrixXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
    const auto d = lower_.rows();
    if (lower_.cols() != d || upper_.rows() != d || upper_.cols() != d)
        throw std::invalid_argument("CorrBounds: bound matrices must be square and congruent");
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i + 1; j < d; ++j) {
            const double lo = lower_(i, j), hi = upper_(i, j);
            if (lo != lower_(j, i) || hi != upper_(j, i))
                throw std::invalid_argument("CorrBounds: bounds must be symmetric");
            if (lo < -1.0 || hi > 1.0 || lo > hi)
                throw std::invalid_argument("CorrBounds: need -1 <= lower <= upper <= 1 for pair (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
}

CorrBounds CorrBounds::uniform(int dim, double lo, double hi) {
    Eigen::MatrixXd l = Eigen::MatrixXd::Constant(dim, dim, lo);
    Eigen::MatrixXd u = Eigen::MatrixXd::Constant(dim, dim, hi);
    l.diagonal().setOnes();
    u.diagonal().setOnes();
    return CorrBounds(std::move(l), std::move(u));
}

bool CorrBounds::contains(const Eigen::MatrixXd& rho) const {
    for (int i = 0; i < dim(); ++i)
        for (int j = i + 1; j < dim(); ++j)
            if (rho(i, j) < lower_(i, j) || rho(i, j) > upper_(i, j)) return false;
    return true;
}

CorrFactor cvine_build(const PartialCorrVector& y) {
    const int d = y.dim();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(d, d);
    L(0, 0) = 1.0;
    for (int j = 1; j < d; ++j) {
        // w carries prod_{m<k} sqrt(1 - y_{mj}^2); each row has unit norm by telescoping.
        double w = 1.0;
        for (int k = 0; k < j; ++k) {
            const double p = y.at(k, j);
            L(j, k) = p * w;
            w *= std::sqrt(1.0 - p * p);
        }
        L(j, j) = w;
    }
    return {std::move(L)};
}

Eigen::MatrixXd cvine_pairwise(const PartialCorrVector& y) {
    const int d = y.dim();
    Eigen::MatrixXd rho = Eigen::MatrixXd::Identity(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            // Peel the conditioning set {0..i-1} one variable at a time:
            // rho_{ij;S\k} = rho_{ij;S} sqrt((1-rho_{ki;S\k}^2)(1-rho_{kj;S\k}^2)) + rho_{ki;S\k} rho_{kj;S\k}
            double v = y.at(i, j);
            for (int k = i - 1; k >= 0; --k) {
                const double a = y.at(k, i);
                const double b = y.at(k, j);
                v = v * std::sqrt((1.0 - a * a) * (1.0 - b * b)) + a * b;
            }
            rho(i, j) = v;
            rho(j, i) = v;
        }
    }
    return rho;
}

PartialCorrVector cvine_partials(const CorrFactor& factor) {
    const int d = factor.dim();
    std::vector<double> y(static_cast<std::size_t>(corr_pair_count(d)));
    for (int j = 1; j < d; ++j) {
        double w = 1.0;
        for (int k = 0; k < j; ++k) {
            if (!(w > 0.0)) throw std::domain_error("cvine_partials: singular correlation factor");
            const double p = factor.lower(j, k) / w;
            if (!(std::abs(p) < 1.0))
                throw std::domain_error("cvine_partials: partial correlation on the boundary");
            y[static_cast<std::size_t>(vine_index(d, k, j))] = p;
            w *= std::sqrt(1.0 - p * p);
        }
    }
    return PartialCorrVector(d, std::move(y));
}

double huber(double v, double delta) {
    return v <= delta ? v * v / (2.0 * delta) : v - 0.5 * delta;
}

double huber_derivative(double v, double delta) { return v <= delta ? v / delta : 1.0; }

namespace {

void check_penalty_args(const Eigen::MatrixXd& rho, const CorrBounds& bounds, double beta,
                        double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("corr_penalty: delta must be positive");
    if (!(beta >= 0.0)) throw std::invalid_argument("corr_penalty: beta must be nonnegative");
    if (rho.rows() != bounds.dim() || rho.cols() != bounds.dim())
        throw std::invalid_argument("corr_penalty: correlation and bounds dimensions differ");
}

double bound_range(const CorrBounds& bounds, int i, int j) {
    const double range = bounds.upper(i, j) - bounds.lower(i, j);
    if (!(range > 0.0))
        throw std::invalid_argument("corr_penalty: degenerate bounds for pair (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
    return range;
}

}  // namespace

double corr_penalty(const Eigen::MatrixXd& rho, const CorrBounds& bounds, double beta,
                    double delta) {
    check_penalty_args(rho, bounds, beta, delta);
    const int d = bounds.dim();
    if (d < 2) return 0.0;
    double total = 0.0;
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            const double range = bound_range(bounds, i, j);
            const double over = std::max(rho(i, j) - bounds.upper(i, j), 0.0) / range;
            const double under = std::max(bounds.lower(i, j) - rho(i, j), 0.0) / range;
            total += huber(over, delta) + huber(under, delta);
        }
    }
    return beta * total / corr_pair_count(d);
}

Eigen::MatrixXd corr_penalty_gradient(const Eigen::MatrixXd& rho, const CorrBounds& bounds,
                                      double beta, double delta) {
    check_penalty_args(rho, bounds, beta, delta);
    const int d = bounds.dim();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
    if (d < 2) return g;
    const double scale = beta / corr_pair_count(d);
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            const double range = bound_range(bounds, i, j);
            const double over = rho(i, j) - bounds.upper(i, j);
            const double under = bounds.lower(i, j) - rho(i, j);
            double gij = 0.0;
            if (over > 0.0) gij += huber_derivative(over / range, delta) / range;
            if (under > 0.0) gij -= huber_derivative(under / range, delta) / range;
            g(i, j) = g(j, i) = scale * gij;
        }
    }
    return g;
}

Eigen::MatrixXd factor_gradient_from_corr(const CorrFactor& factor,
                                          const Eigen::MatrixXd& grad_rho) {
    Eigen::MatrixXd s = grad_rho;
    s.diagonal().setZero();
    Eigen::MatrixXd g = s * factor.lower;
    return g.triangularView<Eigen::Lower>();
}

std::vector<double> cvine_backprop(const PartialCorrVector& y, const Eigen::MatrixXd& grad_lower) {
    const int d = y.dim();
    std::vector<double> gy(static_cast<std::size_t>(corr_pair_count(d)), 0.0);
    std::vector<double> w(static_cast<std::size_t>(d) + 1);
    for (int j = 1; j < d; ++j) {
        w[0] = 1.0;
        for (int k = 0; k < j; ++k) {
            const double p = y.at(k, j);
            w[k + 1] = w[k] * std::sqrt(1.0 - p * p);
        }
        double gw = grad_lower(j, j);  // adjoint of w_{k+1}
        for (int k = j - 1; k >= 0; --k) {
            const double p = y.at(k, j);
            const double c = std::sqrt(1.0 - p * p);
            const double glk = grad_lower(j, k);
            gy[static_cast<std::size_t>(vine_index(d, k, j))] = glk * w[k] - gw * w[k] * p / c;
            gw = glk * p + gw * c;
        }
    }
    return gy;
}

}  // namespace uvm
