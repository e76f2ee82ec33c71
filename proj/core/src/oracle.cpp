#include "uvm/oracle.hpp"

#include "uvm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace uvm {

namespace {

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

double black_scholes_call(double x, double K, double sigma, double r, double T) {
    if (!(x > 0.0) || !(K > 0.0) || sigma < 0.0 || T < 0.0)
        throw std::invalid_argument("black_scholes_call: need x, K > 0 and sigma, T >= 0");
    const double disc_k = K * std::exp(-r * T);
    const double s = sigma * std::sqrt(T);
    if (s < 1e-14) return std::max(x - disc_k, 0.0);
    const double d1 = (std::log(x / K) + (r + 0.5 * sigma * sigma) * T) / s;
    return x * norm_cdf(d1) - disc_k * norm_cdf(d1 - s);
}

namespace {

double grid_spacing(int nodes, double half_width, double sigma_hi, double T) {
    return 2.0 * half_width * sigma_hi * std::sqrt(T) / double(nodes - 1);
}

double max_stable_dt(double h, double sigma_hi, double r) {
    return 1.0 / (sigma_hi * sigma_hi / (h * h) + r);
}

// One explicit step in time-to-maturity. With sigma_lo == sigma_hi this is
// the plain Black-Scholes operator.
void explicit_step(Eigen::VectorXd& v, Eigen::VectorXd& scratch, double h, double dt, double r,
                   double sigma_lo, double sigma_hi) {
    const Eigen::Index m = v.size();
    const double lo2 = sigma_lo * sigma_lo, hi2 = sigma_hi * sigma_hi;
    for (Eigen::Index i = 1; i + 1 < m; ++i) {
        const double d2 = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
        const double d1 = (v[i + 1] - v[i - 1]) / (2.0 * h);
        const double g = d2 - d1;
        const double s2 = g >= 0.0 ? hi2 : lo2;
        scratch[i] = v[i] + dt * (0.5 * s2 * g + r * d1 - r * v[i]);
    }
    scratch[0] = 2.0 * scratch[1] - scratch[2];
    scratch[m - 1] = 2.0 * scratch[m - 2] - scratch[m - 3];
    v.swap(scratch);
}

Eigen::VectorXd log_grid(double x0, double width, int nodes) {
    return Eigen::VectorXd::LinSpaced(nodes, std::log(x0) - width, std::log(x0) + width);
}

}  // namespace

FdGrid FdGrid::stable(int space_nodes, double sigma_hi, double r, double T, double half_width) {
    if (space_nodes < 3) throw std::invalid_argument("FdGrid: need at least 3 space nodes");
    FdGrid g;
    g.space_nodes = space_nodes;
    g.half_width = half_width;
    const double h = grid_spacing(space_nodes, half_width, sigma_hi, T);
    g.time_steps = static_cast<int>(std::ceil(T / (0.9 * max_stable_dt(h, sigma_hi, r))));
    return g;
}

void FdGrid::validate(double sigma_lo, double sigma_hi, double r, double T) const {
    if (space_nodes < 3) throw std::invalid_argument("FdGrid: need at least 3 space nodes");
    if (time_steps < 1) throw std::invalid_argument("FdGrid: need at least 1 time step");
    if (!(half_width > 0.0)) throw std::invalid_argument("FdGrid: half_width must be positive");
    const double h = grid_spacing(space_nodes, half_width, sigma_hi, T);
    const double dt = T / time_steps;
    if (dt > max_stable_dt(h, sigma_hi, r))
        throw std::invalid_argument("FdGrid: explicit step dt = " + std::to_string(dt) +
                                    " exceeds the stability bound " +
                                    std::to_string(max_stable_dt(h, sigma_hi, r)));
    for (double s : {sigma_lo, sigma_hi}) {
        const double drift = std::abs(r - 0.5 * s * s);
        if (drift > 0.0 && h > s * s / drift)
            throw std::invalid_argument("FdGrid: space step too coarse for a monotone scheme");
    }
}

double FdSolution::value_at(double x) const {
    const double u = std::log(x);
    const Eigen::Index m = log_x.size();
    if (u <= log_x[0]) return values[0];
    if (u >= log_x[m - 1]) return values[m - 1];
    const double h = (log_x[m - 1] - log_x[0]) / double(m - 1);
    const auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>((u - log_x[0]) / h), m - 2);
    const double w = (u - log_x[i]) / h;
    return (1.0 - w) * values[i] + w * values[i + 1];
}

FdSolution bsb1d_solve(const Payoff1d& payoff, double x0, double sigma_lo, double sigma_hi,
                       double r, double T, const FdGrid& grid) {
    if (!(sigma_lo > 0.0) || sigma_lo > sigma_hi)
        throw std::invalid_argument("bsb1d_solve: need 0 < sigma_lo <= sigma_hi");
    if (!(T > 0.0) || !(x0 > 0.0)) throw std::invalid_argument("bsb1d_solve: need T, x0 > 0");
    grid.validate(sigma_lo, sigma_hi, r, T);
    FdSolution sol;
    sol.log_x = log_grid(x0, grid.half_width * sigma_hi * std::sqrt(T), grid.space_nodes);
    sol.values = sol.log_x.unaryExpr([&](double u) { return payoff(std::exp(u)); });
    const double h = sol.log_x[1] - sol.log_x[0];
    const double dt = T / grid.time_steps;
    Eigen::VectorXd scratch(sol.values.size());
    for (int k = 0; k < grid.time_steps; ++k)
        explicit_step(sol.values, scratch, h, dt, r, sigma_lo, sigma_hi);
    return sol;
}

FdSolution bsb1d_piecewise_solve(const Payoff1d& payoff, double x0,
                                 const std::vector<double>& sigmas, double r, double T,
                                 int control_steps, int space_nodes, double half_width) {
    if (sigmas.empty()) throw std::invalid_argument("bsb1d_piecewise_solve: no volatilities");
    if (control_steps < 1) throw std::invalid_argument("bsb1d_piecewise_solve: need N >= 1");
    const double s_hi = *std::max_element(sigmas.begin(), sigmas.end());
    const double s_lo = *std::min_element(sigmas.begin(), sigmas.end());
    if (!(s_lo > 0.0)) throw std::invalid_argument("bsb1d_piecewise_solve: volatilities must be positive");

    const FdGrid per_total = FdGrid::stable(space_nodes, s_hi, r, T, half_width);
    const int sub_steps = (per_total.time_steps + control_steps - 1) / control_steps;
    FdGrid check = per_total;
    check.time_steps = sub_steps * control_steps;
    check.validate(s_lo, s_hi, r, T);

    FdSolution sol;
    sol.log_x = log_grid(x0, half_width * s_hi * std::sqrt(T), space_nodes);
    sol.values = sol.log_x.unaryExpr([&](double u) { return payoff(std::exp(u)); });
    const double h = sol.log_x[1] - sol.log_x[0];
    const double dt = T / (double(sub_steps) * control_steps);
    Eigen::VectorXd scratch(sol.values.size());
    for (int k = 0; k < control_steps; ++k) {
        Eigen::VectorXd best =
            Eigen::VectorXd::Constant(sol.values.size(), -std::numeric_limits<double>::infinity());
        for (double s : sigmas) {
            Eigen::VectorXd v = sol.values;
            for (int j = 0; j < sub_steps; ++j) explicit_step(v, scratch, h, dt, r, s, s);
            best = best.cwiseMax(v);
        }
        sol.values = std::move(best);
    }
    return sol;
}

Quadrature gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: need n >= 1");
    // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(double(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
    Quadrature q;
    q.nodes = eig.eigenvalues();
    q.weights = eig.eigenvectors().row(0).transpose().array().square();
    q.weights /= q.weights.sum();
    return q;
}

namespace {

// Value function on a tensor grid in log-price (1 or 2 axes).
struct GridFunction {
    std::vector<Eigen::VectorXd> axes;
    Eigen::VectorXd values;  // index i0 + nodes * i1

    int nodes() const { return static_cast<int>(axes[0].size()); }

    // Index and weight of the left neighbour; clamps outside the grid.
    static void locate(const Eigen::VectorXd& axis, double u, Eigen::Index& i, double& w, bool& out) {
        const Eigen::Index m = axis.size();
        const double h = (axis[m - 1] - axis[0]) / double(m - 1);
        double t = (u - axis[0]) / h;
        out = t < 0.0 || t > double(m - 1);
        t = std::clamp(t, 0.0, double(m - 1));
        i = std::min<Eigen::Index>(static_cast<Eigen::Index>(t), m - 2);
        w = t - double(i);
    }

    double eval(const Eigen::VectorXd& u, long& outside) const {
        Eigen::Index i0, i1;
        double w0, w1;
        bool o0, o1 = false;
        locate(axes[0], u[0], i0, w0, o0);
        if (axes.size() == 1) {
            outside += o0;
            return (1.0 - w0) * values[i0] + w0 * values[i0 + 1];
        }
        locate(axes[1], u[1], i1, w1, o1);
        outside += (o0 || o1);
        const int m = nodes();
        auto at = [&](Eigen::Index a, Eigen::Index b) { return values[a + m * b]; };
        return (1.0 - w0) * (1.0 - w1) * at(i0, i1) + w0 * (1.0 - w1) * at(i0 + 1, i1) +
               (1.0 - w0) * w1 * at(i0, i1 + 1) + w0 * w1 * at(i0 + 1, i1 + 1);
    }
};

struct PreparedAction {
    Eigen::VectorXd drift;   // (r - sigma^2/2) dt per asset
    Eigen::MatrixXd shocks;  // sigma sqrt(dt) L xi, one column per quadrature node
};

}  // namespace

double dp_bruteforce(const ModelSpec& spec, const PayoffNd& payoff,
                     const std::vector<DpAction>& actions, const DpOptions& options) {
    const PayoffBatchNd batch = [&payoff](const Eigen::MatrixXd& x) {
        Eigen::VectorXd v(x.cols());
        for (Eigen::Index b = 0; b < x.cols(); ++b) v[b] = payoff(x.col(b));
        return v;
    };
    return dp_bruteforce(spec, batch, actions, options);
}

double dp_bruteforce(const ModelSpec& spec, const PayoffBatchNd& payoff,
                     const std::vector<DpAction>& actions, const DpOptions& options) {
    const int d = spec.dim;
    const int N = spec.steps;
    if (d < 1 || d > 2) throw std::invalid_argument("dp_bruteforce: needs d <= 2");
    if (N < 1 || N > 3) throw std::invalid_argument("dp_bruteforce: needs 1 <= N <= 3");
    if (actions.empty()) throw std::invalid_argument("dp_bruteforce: empty action set");
    if (options.grid_nodes < 3 || options.quadrature_nodes < 1)
        throw std::invalid_argument("dp_bruteforce: bad grid or quadrature size");

    const double dt = spec.dt();
    const double disc = std::exp(-spec.rate * dt);
    const Quadrature gh = gauss_hermite(options.quadrature_nodes);
    const int Q = options.quadrature_nodes;
    const int nq = d == 1 ? Q : Q * Q;

    Eigen::VectorXd weights(nq);
    std::vector<PreparedAction> prepared;
    Eigen::VectorXd sig_max = Eigen::VectorXd::Zero(d);
    for (const auto& a : actions) {
        if (a.sigma.size() != d) throw std::invalid_argument("dp_bruteforce: action sigma size");
        Eigen::MatrixXd L = Eigen::MatrixXd::Identity(d, d);
        if (d == 2) {
            Eigen::LLT<Eigen::MatrixXd> llt(a.corr);
            if (a.corr.rows() != 2 || llt.info() != Eigen::Success)
                throw std::invalid_argument("dp_bruteforce: action correlation must be 2x2 PD");
            L = llt.matrixL();
        }
        PreparedAction p;
        p.drift = ((spec.rate - 0.5 * a.sigma.array().square()) * dt).matrix();
        p.shocks.resize(d, nq);
        for (int k = 0; k < nq; ++k) {
            Eigen::VectorXd xi(d);
            xi[0] = gh.nodes[k % Q];
            if (d == 2) xi[1] = gh.nodes[k / Q];
            p.shocks.col(k) = (a.sigma.array() * (L * xi).array()).matrix() * std::sqrt(dt);
        }
        prepared.push_back(std::move(p));
        sig_max = sig_max.cwiseMax(a.sigma);
    }
    for (int k = 0; k < nq; ++k)
        weights[k] = d == 1 ? gh.weights[k] : gh.weights[k % Q] * gh.weights[k / Q];

    const Eigen::VectorXd u0 = spec.spot.array().log().matrix();
    GridFunction grid;
    for (int i = 0; i < d; ++i)
        grid.axes.push_back(Eigen::VectorXd::LinSpaced(
            options.grid_nodes, u0[i] - options.half_width * sig_max[i] * std::sqrt(spec.horizon),
            u0[i] + options.half_width * sig_max[i] * std::sqrt(spec.horizon)));
    const int m = options.grid_nodes;
    const long grid_points = d == 1 ? m : long(m) * m;

    long outside = 0;
    Eigen::VectorXd u_next(d);
    Eigen::MatrixXd x_next(d, nq);
    // Value at log-state u for step n, given V_{n+1} on the grid (unused at n = N-1).
    auto backup = [&](const Eigen::VectorXd& u, int n, const GridFunction& next) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& p : prepared) {
            double acc = 0.0;
            if (n == N - 1) {
                x_next = (p.shocks.colwise() + (u + p.drift)).array().exp().matrix();
                acc = weights.dot(payoff(x_next));
            } else {
                for (int k = 0; k < nq; ++k) {
                    u_next = u + p.drift + p.shocks.col(k);
                    acc += weights[k] * next.eval(u_next, outside);
                }
            }
            best = std::max(best, acc);
        }
        return disc * best;
    };

    GridFunction next = grid;
    for (int n = N - 1; n >= 1; --n) {
        GridFunction cur = grid;
        cur.values.resize(grid_points);
        Eigen::VectorXd u(d);
        for (long idx = 0; idx < grid_points; ++idx) {
            u[0] = grid.axes[0][idx % m];
            if (d == 2) u[1] = grid.axes[1][idx / m];
            cur.values[idx] = backup(u, n, next);
        }
        next = std::move(cur);
    }
    const double v0 = backup(u0, 0, next);
    if (outside > 0)
        diagnostic("dp_bruteforce: " + std::to_string(outside) +
                   " lookups fell outside the state grid and were extrapolated flat");
    return v0;
}

double dp_fixed_action(const ModelSpec& spec, const PayoffNd& payoff, const DpAction& action,
                       const DpOptions& options) {
    return dp_bruteforce(spec, payoff, {action}, options);
}

double dp_fixed_action(const ModelSpec& spec, const PayoffBatchNd& payoff, const DpAction& action,
                       const DpOptions& options) {
    return dp_bruteforce(spec, payoff, {action}, options);
}

}  // namespace uvm
