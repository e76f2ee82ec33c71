#include <uvm/oracle.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace uvm;

namespace {

Payoff1d call1(double K) {
    return [K](double x) { return std::max(x - K, 0.0); };
}

// E[(x e^{(r - s^2/2)T + s sqrt(T) Z} - K)^+] e^{-rT} by a dense midpoint rule.
double integrated_call(double x, double K, double s, double r, double T) {
    const int n = 400000;
    const double lo = -10.0, h = 20.0 / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = lo + (i + 0.5) * h;
        const double xt = x * std::exp((r - 0.5 * s * s) * T + s * std::sqrt(T) * z);
        acc += std::max(xt - K, 0.0) * std::exp(-0.5 * z * z);
    }
    return std::exp(-r * T) * acc * h / std::sqrt(2.0 * M_PI);
}

}  // namespace

TEST(BlackScholes, MatchesDirectIntegration) {
    EXPECT_NEAR(black_scholes_call(100, 100, 0.2, 0.0, 1.0), integrated_call(100, 100, 0.2, 0.0, 1.0), 1e-6);
    EXPECT_NEAR(black_scholes_call(100, 90, 0.3, 0.05, 0.5), integrated_call(100, 90, 0.3, 0.05, 0.5), 1e-6);
    EXPECT_NEAR(black_scholes_call(100, 100, 0.2, 0.0, 1.0), 7.965567455405804, 1e-10);
}

TEST(BlackScholes, Limits) {
    EXPECT_NEAR(black_scholes_call(100, 90, 1e-9, 0.05, 1.0), 100 - 90 * std::exp(-0.05), 1e-8);
    EXPECT_NEAR(black_scholes_call(100, 90, 0.2, 0.05, 0.0), 10.0, 1e-12);
    EXPECT_GT(black_scholes_call(100, 100, 0.3, 0.0, 1.0), black_scholes_call(100, 100, 0.2, 0.0, 1.0));
}

TEST(GaussHermite, MomentsOfStandardNormal) {
    const Quadrature q = gauss_hermite(20);
    EXPECT_NEAR(q.weights.sum(), 1.0, 1e-14);
    const Eigen::ArrayXd z = q.nodes.array();
    EXPECT_NEAR(q.weights.dot(z.matrix()), 0.0, 1e-13);
    EXPECT_NEAR(q.weights.dot(z.square().matrix()), 1.0, 1e-12);
    EXPECT_NEAR(q.weights.dot(z.pow(4).matrix()), 3.0, 1e-11);
    EXPECT_NEAR(q.weights.dot(z.pow(8).matrix()), 105.0, 1e-8);
    EXPECT_NEAR(q.weights.dot(z.exp().matrix()), std::exp(0.5), 1e-12);
    EXPECT_THROW(gauss_hermite(0), std::invalid_argument);
}

TEST(FiniteDifference, DegenerateIntervalIsBlackScholes) {
    const FdGrid grid = FdGrid::stable(2001, 0.2, 0.05, 1.0);
    const double v = bsb1d_solve(call1(100), 100, 0.2, 0.2, 0.05, 1.0, grid).value_at(100);
    EXPECT_NEAR(v, black_scholes_call(100, 100, 0.2, 0.05, 1.0), 1e-3 * v);
}

TEST(FiniteDifference, ConvexAndConcavePayoffsPickTheExtremes) {
    const FdGrid grid = FdGrid::stable(2001, 0.3, 0.0, 1.0);
    const double convex = bsb1d_solve(call1(100), 100, 0.1, 0.3, 0.0, 1.0, grid).value_at(100);
    EXPECT_NEAR(convex, black_scholes_call(100, 100, 0.3, 0.0, 1.0), 1e-3 * convex);
    // Short call: the supremum is attained at the lowest volatility.
    const Payoff1d short_call = [](double x) { return -std::max(x - 100.0, 0.0); };
    const double concave = bsb1d_solve(short_call, 100, 0.1, 0.3, 0.0, 1.0, grid).value_at(100);
    EXPECT_NEAR(concave, -black_scholes_call(100, 100, 0.1, 0.0, 1.0), 1e-3 * std::abs(concave));
}

TEST(FiniteDifference, CallSpreadExceedsBothConstantVolatilities) {
    const Payoff1d spread = [](double x) { return std::max(x - 90.0, 0.0) - std::max(x - 110.0, 0.0); };
    const FdGrid grid = FdGrid::stable(2001, 0.3, 0.0, 1.0);
    const double v = bsb1d_solve(spread, 100, 0.1, 0.3, 0.0, 1.0, grid).value_at(100);
    auto bs_spread = [](double s) {
        return black_scholes_call(100, 90, s, 0.0, 1.0) - black_scholes_call(100, 110, s, 0.0, 1.0);
    };
    EXPECT_GT(v, bs_spread(0.1) + 0.1);
    EXPECT_GT(v, bs_spread(0.3) + 0.1);
    EXPECT_LT(v, 20.0);
}

TEST(FiniteDifference, PiecewiseControlConvergesToContinuous) {
    const Payoff1d spread = [](double x) { return std::max(x - 90.0, 0.0) - std::max(x - 110.0, 0.0); };
    const FdGrid grid = FdGrid::stable(1001, 0.3, 0.0, 1.0);
    const double cont = bsb1d_solve(spread, 100, 0.1, 0.3, 0.0, 1.0, grid).value_at(100);
    double prev = 0.0, prev_gap = 0.0;
    for (int N : {1, 4, 16, 64}) {
        const double v = bsb1d_piecewise_solve(spread, 100, {0.1, 0.3}, 0.0, 1.0, N, 1001).value_at(100);
        EXPECT_GT(v, prev - 1e-6);
        EXPECT_LE(v, cont + 1e-3);
        if (N > 1) EXPECT_LT(cont - v, 0.6 * prev_gap) << "N = " << N;
        prev = v;
        prev_gap = cont - v;
    }
    EXPECT_NEAR(prev, cont, 0.01 * cont);
}

TEST(FiniteDifference, GridValidation) {
    FdGrid g = FdGrid::stable(201, 0.2, 0.0, 1.0);
    EXPECT_NO_THROW(g.validate(0.1, 0.2, 0.0, 1.0));
    g.time_steps = 1;
    EXPECT_THROW(g.validate(0.1, 0.2, 0.0, 1.0), std::invalid_argument);
    g = FdGrid::stable(201, 0.2, 0.0, 1.0);
    g.space_nodes = 2;
    EXPECT_THROW(g.validate(0.1, 0.2, 0.0, 1.0), std::invalid_argument);
}

TEST(BruteForceDp, SingleActionSingleStepIsBlackScholes) {
    const ModelSpec spec = ModelSpec::uniform(1, 100.0, 0.2, 0.2, 0.02, 1.0, 1, CorrMode::fixed);
    DpAction a{Eigen::VectorXd::Constant(1, 0.2), Eigen::MatrixXd::Identity(1, 1)};
    const PayoffNd smooth = [](const Eigen::VectorXd& x) { return x[0] * x[0]; };
    const double second_moment = 1e4 * std::exp(2 * 0.02 + 0.04) * std::exp(-0.02);
    EXPECT_NEAR(dp_fixed_action(spec, smooth, a), second_moment, 1e-9 * second_moment);
    // The kink of a call limits Gauss-Hermite to algebraic convergence.
    const PayoffNd g = [](const Eigen::VectorXd& x) { return std::max(x[0] - 100.0, 0.0); };
    const double bs = black_scholes_call(100, 100, 0.2, 0.02, 1.0);
    DpOptions fine;
    fine.quadrature_nodes = 400;
    EXPECT_NEAR(dp_fixed_action(spec, g, a), bs, 1e-2 * bs);
    EXPECT_NEAR(dp_bruteforce(spec, g, {a}, fine), bs, 2e-3 * bs);
}

TEST(BruteForceDp, ConvexPayoffPicksHighestVolatility) {
    const ModelSpec spec = ModelSpec::uniform(1, 100.0, 0.1, 0.3, 0.0, 1.0, 2, CorrMode::fixed);
    const PayoffNd g = [](const Eigen::VectorXd& x) { return std::max(x[0] - 100.0, 0.0); };
    DpAction lo{Eigen::VectorXd::Constant(1, 0.1), Eigen::MatrixXd::Identity(1, 1)};
    DpAction hi{Eigen::VectorXd::Constant(1, 0.3), Eigen::MatrixXd::Identity(1, 1)};
    const double best = dp_bruteforce(spec, g, {lo, hi});
    EXPECT_NEAR(best, dp_fixed_action(spec, g, hi), 1e-10);
    EXPECT_NEAR(best, black_scholes_call(100, 100, 0.3, 0.0, 1.0), 5e-3 * best);
}

TEST(BruteForceDp, EnvelopeOfFixedActionsAndMonotoneInActionSet) {
    const ModelSpec spec = ModelSpec::uniform(1, 100.0, 0.1, 0.3, 0.0, 1.0, 2, CorrMode::fixed);
    const PayoffNd spread = [](const Eigen::VectorXd& x) {
        return std::max(x[0] - 90.0, 0.0) - std::max(x[0] - 110.0, 0.0);
    };
    std::vector<DpAction> acts;
    double best_fixed = -1.0;
    for (double s : {0.1, 0.2, 0.3}) {
        acts.push_back({Eigen::VectorXd::Constant(1, s), Eigen::MatrixXd::Identity(1, 1)});
        best_fixed = std::max(best_fixed, dp_fixed_action(spec, spread, acts.back()));
    }
    const double two = dp_bruteforce(spec, spread, {acts[0], acts[2]});
    const double three = dp_bruteforce(spec, spread, acts);
    EXPECT_GE(two, best_fixed - 1e-9);
    EXPECT_GE(three, two - 1e-9);
    // Two control intervals of the same problem by finite differences.
    const Payoff1d s1 = [](double x) { return std::max(x - 90.0, 0.0) - std::max(x - 110.0, 0.0); };
    const double fd = bsb1d_piecewise_solve(s1, 100, {0.1, 0.3}, 0.0, 1.0, 2, 2001).value_at(100);
    EXPECT_NEAR(two, fd, 5e-3 * fd);
}

TEST(BruteForceDp, TwoAssetsWithCorrelationChoice) {
    const ModelSpec spec = ModelSpec::uniform(2, 100.0, 0.2, 0.2, 0.0, 1.0, 1, CorrMode::uncertain, -0.5, 0.5);
    // Spread x1 - x2 at the money: variance grows as correlation falls.
    const PayoffBatchNd g = [](const Eigen::MatrixXd& x) {
        return (x.row(0) - x.row(1)).array().max(0.0).matrix().transpose().eval();
    };
    auto act = [](double c) {
        DpAction a{Eigen::VectorXd::Constant(2, 0.2), Eigen::MatrixXd::Identity(2, 2)};
        a.corr(0, 1) = a.corr(1, 0) = c;
        return a;
    };
    DpOptions opt;
    opt.quadrature_nodes = 24;
    opt.grid_nodes = 41;
    const double neg = dp_fixed_action(spec, g, act(-0.5), opt);
    const double pos = dp_fixed_action(spec, g, act(0.5), opt);
    EXPECT_GT(neg, pos);
    // Margrabe with zero rate: sigma_eff^2 = 2 sigma^2 (1 - rho).
    const double m = black_scholes_call(100, 100, std::sqrt(2 * 0.04 * 1.5), 0.0, 1.0);
    EXPECT_NEAR(neg, m, 5e-3 * m);
    EXPECT_NEAR(dp_bruteforce(spec, g, {act(0.5), act(-0.5)}, opt), neg, 1e-10);
}

TEST(BruteForceDp, RejectsLargeProblems) {
    const PayoffNd g = [](const Eigen::VectorXd& x) { return x[0]; };
    DpAction a{Eigen::VectorXd::Constant(1, 0.2), Eigen::MatrixXd::Identity(1, 1)};
    const ModelSpec longer = ModelSpec::uniform(1, 100.0, 0.1, 0.2, 0.0, 1.0, 4, CorrMode::fixed);
    EXPECT_THROW(dp_bruteforce(longer, g, {a}), std::invalid_argument);
    const ModelSpec wide = ModelSpec::uniform(3, 100.0, 0.1, 0.2, 0.0, 1.0, 1, CorrMode::fixed);
    EXPECT_THROW(dp_bruteforce(wide, g, {a}), std::invalid_argument);
    const ModelSpec ok = ModelSpec::uniform(1, 100.0, 0.1, 0.2, 0.0, 1.0, 1, CorrMode::fixed);
    EXPECT_THROW(dp_bruteforce(ok, g, {}), std::invalid_argument);
}
