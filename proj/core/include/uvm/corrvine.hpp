#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace uvm {

/// Number of pairwise correlations for `dim` assets, d(d-1)/2.
constexpr int corr_pair_count(int dim) { return dim * (dim - 1) / 2; }

/// Position of the partial correlation between `level` and `j` (level < j,
/// conditioned on assets 0..level-1) inside a PartialCorrVector.
///
/// Entries are stored level-major: all of tree level 0 first (pairs (0,1),
/// (0,2), ..., (0,d-1)), then level 1 ((1,2|0), (1,3|0), ...), and so on.
/// For d = 3 this is (y12, y13, y23|1) in one-based asset labels.
int vine_index(int dim, int level, int j);

/// C-vine partial correlations, every entry strictly inside (-1, 1).
class PartialCorrVector {
public:
    PartialCorrVector(int dim, std::vector<double> entries);

    int dim() const { return dim_; }
    std::span<const double> entries() const { return entries_; }
    double operator[](std::size_t i) const { return entries_[i]; }
    double at(int level, int j) const { return entries_[vine_index(dim_, level, j)]; }

private:
    int dim_;
    std::vector<double> entries_;
};

/// Lower-triangular factor L of a correlation matrix, rho = L L^T.
/// Rows have unit norm and the diagonal is strictly positive.
struct CorrFactor {
    Eigen::MatrixXd lower;

    int dim() const { return static_cast<int>(lower.rows()); }
    Eigen::MatrixXd correlation() const { return lower * lower.transpose(); }

    static CorrFactor identity(int dim) { return {Eigen::MatrixXd::Identity(dim, dim)}; }
};

/// Pairwise correlation bounds. Only the strictly lower/upper off-diagonal
/// entries are meaningful; both matrices are kept symmetric.
class CorrBounds {
public:
    CorrBounds() = default;
    CorrBounds(Eigen::MatrixXd lower, Eigen::MatrixXd upper);

    static CorrBounds uniform(int dim, double lo, double hi);

    int dim() const { return static_cast<int>(lower_.rows()); }
    double lower(int i, int j) const { return lower_(i, j); }
    double upper(int i, int j) const { return upper_(i, j); }
    const Eigen::MatrixXd& lower_matrix() const { return lower_; }
    const Eigen::MatrixXd& upper_matrix() const { return upper_; }

    bool contains(const Eigen::MatrixXd& rho) const;

private:
    Eigen::MatrixXd lower_;
    Eigen::MatrixXd upper_;
};

/// Builds the Cholesky factor row by row from the partial correlations.
/// Throws std::domain_error if any |y| >= 1.
CorrFactor cvine_build(const PartialCorrVector& y);

/// Pairwise correlations via the partial-correlation recursion, without
/// going through L.
Eigen::MatrixXd cvine_pairwise(const PartialCorrVector& y);

/// Inverse of cvine_build: reads the partial correlations back off a factor.
/// Throws std::domain_error if the factor is singular or a recovered entry
/// reaches +-1.
PartialCorrVector cvine_partials(const CorrFactor& factor);

/// Huber function with threshold delta: v^2/(2 delta) below, v - delta/2 above.
double huber(double v, double delta);
double huber_derivative(double v, double delta);

/// Average pairwise Huber penalty on normalized bound violations, times beta.
/// Throws std::invalid_argument for delta <= 0, beta < 0 or a degenerate
/// bound pair (lower == upper).
double corr_penalty(const Eigen::MatrixXd& rho, const CorrBounds& bounds, double beta,
                    double delta);

/// d corr_penalty / d rho^{ij} for i < j, stored symmetrically with a zero
/// diagonal.
Eigen::MatrixXd corr_penalty_gradient(const Eigen::MatrixXd& rho, const CorrBounds& bounds,
                                      double beta, double delta);

/// Reverse-mode pass through cvine_build. Given G = dPsi/dL (lower-triangular
/// part used), returns dPsi/dy in vine order.
std::vector<double> cvine_backprop(const PartialCorrVector& y, const Eigen::MatrixXd& grad_lower);

/// dPsi/dL for a function Psi of the off-diagonal correlations with gradient
/// `grad_rho` (symmetric, as returned by corr_penalty_gradient).
Eigen::MatrixXd factor_gradient_from_corr(const CorrFactor& factor,
                                          const Eigen::MatrixXd& grad_rho);

}  // namespace uvm
