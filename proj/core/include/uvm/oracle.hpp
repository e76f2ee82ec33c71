#pragma once

#include "uvm/model.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace uvm {

/// Closed-form Black-Scholes call. Handles the sigma sqrt(T) -> 0 limit.
double black_scholes_call(double x, double K, double sigma, double r, double T);

/// Uniform log-price grid for the explicit one-dimensional solver.
/// The domain is ln x0 +- half_width * sigma_max sqrt(T).
struct FdGrid {
    int space_nodes = 2001;
    int time_steps = 0;
    double half_width = 6.0;  // in units of sigma_max sqrt(T)

    /// Enough time steps for the explicit scheme to be stable (with a 10%
    /// margin) for the given volatility ceiling and rate.
    static FdGrid stable(int space_nodes, double sigma_hi, double r, double T,
                         double half_width = 6.0);

    /// Throws std::invalid_argument when the explicit step violates
    /// dt <= 1 / (sigma_hi^2 / h^2 + r) or the drift term breaks
    /// monotonicity (h > sigma_lo^2 / |r - sigma_lo^2 / 2|).
    void validate(double sigma_lo, double sigma_hi, double r, double T) const;
};

struct FdSolution {
    Eigen::VectorXd log_x;   // grid nodes
    Eigen::VectorXd values;  // value at t = 0

    /// Linear interpolation in log-price.
    double value_at(double x) const;
};

using Payoff1d = std::function<double(double)>;

/// Explicit scheme for V_t + sup_sigma [sigma^2/2 (V_uu - V_u)] + r V_u - r V = 0
/// in u = ln x: sigma_hi where the discrete (V_uu - V_u) >= 0, sigma_lo
/// elsewhere. Linear extrapolation (V_uu = 0) at both edges.
FdSolution bsb1d_solve(const Payoff1d& payoff, double x0, double sigma_lo, double sigma_hi,
                       double r, double T, const FdGrid& grid);

/// Discrete-time counterpart: N control intervals, volatility constant inside
/// each and chosen from `sigmas` to maximize the value node by node. Each
/// candidate is propagated by the same explicit scheme.
FdSolution bsb1d_piecewise_solve(const Payoff1d& payoff, double x0,
                                 const std::vector<double>& sigmas, double r, double T,
                                 int control_steps, int space_nodes, double half_width = 6.0);

/// Probabilists' Gauss-Hermite rule: sum_k w_k f(x_k) ~ E f(Z), Z ~ N(0, 1).
struct Quadrature {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};
Quadrature gauss_hermite(int n);

struct DpAction {
    Eigen::VectorXd sigma;
    Eigen::MatrixXd corr;  // d x d; ignored for d = 1
};

struct DpOptions {
    int quadrature_nodes = 64;  // per dimension
    int grid_nodes = 201;       // per dimension
    double half_width = 6.0;    // in units of max sigma sqrt(T)
};

using PayoffNd = std::function<double(const Eigen::VectorXd&)>;
/// Payoffs of many states at once, one state per column.
using PayoffBatchNd = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

/// Backward V_n(x) = max_a e^{-r dt} E[V_{n+1}(F(x, a, xi))] over a finite
/// action set, Gauss-Hermite for the expectation, tensor grid in log-price
/// with (bi)linear interpolation for the intermediate value functions.
/// Requires N <= 3 and d <= 2. Out-of-grid lookups are clamped to the edge
/// and reported through a diagnostic.
double dp_bruteforce(const ModelSpec& spec, const PayoffNd& payoff,
                     const std::vector<DpAction>& actions, const DpOptions& options = {});
double dp_bruteforce(const ModelSpec& spec, const PayoffBatchNd& payoff,
                     const std::vector<DpAction>& actions, const DpOptions& options = {});

/// The same expectation for one fixed action at every step.
double dp_fixed_action(const ModelSpec& spec, const PayoffNd& payoff, const DpAction& action,
                       const DpOptions& options = {});
double dp_fixed_action(const ModelSpec& spec, const PayoffBatchNd& payoff, const DpAction& action,
                       const DpOptions& options = {});

}  // namespace uvm
