#include <uvm/dynamics.hpp>
#include <uvm/errors.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace uvm;

namespace {

ModelSpec spec_of(int d, double rate = 0.0, int steps = 4) {
    return ModelSpec::uniform(d, 100.0, 0.1, 0.2, rate, 1.0, steps, CorrMode::fixed, -0.5, 0.5, 0.3);
}

}  // namespace

TEST(LogEuler, MatchesTheClosedFormOneStepMap) {
    const ModelSpec s = spec_of(2, 0.05);
    StateBatch x{Eigen::MatrixXd(2, 2), 2};
    x.values << 100, 90,
                110, 80;
    StepControls c;
    c.sigma.resize(2, 2);
    c.sigma << 0.1, 0.2,
               0.15, 0.12;
    const double rho = 0.3;
    c.shared_factor.resize(2, 2);
    c.shared_factor << 1, 0, rho, std::sqrt(1 - rho * rho);
    GaussianBatch xi{Eigen::MatrixXd(2, 2), false};
    xi.draws << 0.5, -1.0,
                1.2, 0.3;
    const StateBatch y = log_euler_step(x, c, xi, s);
    const double dt = s.dt();
    for (int b = 0; b < 2; ++b) {
        const double s1 = c.sigma(0, b), s2 = c.sigma(1, b);
        const double w1 = xi.draws(0, b);
        const double w2 = rho * xi.draws(0, b) + std::sqrt(1 - rho * rho) * xi.draws(1, b);
        EXPECT_NEAR(y.values(0, b), x.values(0, b) * std::exp((0.05 - 0.5 * s1 * s1) * dt + s1 * std::sqrt(dt) * w1), 1e-10);
        EXPECT_NEAR(y.values(1, b), x.values(1, b) * std::exp((0.05 - 0.5 * s2 * s2) * dt + s2 * std::sqrt(dt) * w2), 1e-10);
    }
}

TEST(LogEuler, PackedFactorsAgreeWithSharedFactor) {
    const ModelSpec s = spec_of(3);
    RandomStream rng(1);
    const StateBatch x = sample_states(2, 6, s, rng);
    StepControls shared;
    shared.sigma = Eigen::MatrixXd::Constant(3, 6, 0.15);
    shared.shared_factor = fixed_factor(s).lower;
    StepControls packed = shared;
    packed.shared_factor.resize(0, 0);
    packed.packed_factors = pack_lower(fixed_factor(s).lower).replicate(1, 6);
    const GaussianBatch xi = draw_increments(6, 3, rng);
    EXPECT_LT((log_euler_step(x, shared, xi, s).values - log_euler_step(x, packed, xi, s).values).norm(), 1e-10);
}

TEST(LogEuler, AugmentationRowsCarryOver) {
    const ModelSpec s = ModelSpec::uniform(1, 100.0, 0.1, 0.2, 0.0, 1.0, 24, CorrMode::fixed);
    StateBatch x = initial_states(2, s, true);
    x.values(1, 0) = 0.3;
    StepControls c;
    c.sigma = Eigen::MatrixXd::Constant(1, 2, 0.2);
    c.shared_factor = Eigen::MatrixXd::Identity(1, 1);
    RandomStream rng(2);
    const StateBatch y = log_euler_step(x, c, draw_increments(2, 1, rng), s);
    EXPECT_EQ(y.values.row(1), x.values.row(1));
    EXPECT_EQ(y.values.row(2), x.values.row(2));
}

TEST(LogEuler, OverflowIsANumericalError) {
    const ModelSpec s = spec_of(1);
    StateBatch x = initial_states(2, s, false);
    StepControls c;
    c.sigma = Eigen::MatrixXd::Constant(1, 2, 1e3);
    c.shared_factor = Eigen::MatrixXd::Identity(1, 1);
    GaussianBatch xi{Eigen::MatrixXd::Constant(1, 2, 50.0), false};
    EXPECT_THROW(log_euler_step(x, c, xi, s), NumericalError);
}

TEST(Increments, AntitheticHalves) {
    RandomStream rng(3);
    const GaussianBatch g = draw_increments(10, 3, rng);
    EXPECT_TRUE(g.antithetic);
    EXPECT_EQ(g.draws.leftCols(5), -g.draws.rightCols(5));
    EXPECT_THROW(draw_increments(7, 3, rng), std::invalid_argument);
}

TEST(Sampler, LogNormalMixtureMoments) {
    // Each component is a martingale times e^{rt}; the log has mean (r - E[s^2]/2) t.
    const ModelSpec s = spec_of(2, 0.03, 8);
    RandomStream rng(4);
    const int n = 200000;
    const int step = 5;
    const StateBatch x = sample_states(step, n, s, rng);
    const double t = s.time(step);
    const Eigen::MatrixXd f = encode_states(x, s);
    const FeatureNormalization fn = feature_normalization(step, s, false);
    for (int i = 0; i < 2; ++i) {
        const Eigen::ArrayXd xi = x.values.row(i).transpose().array();
        const double mean = xi.mean();
        const double se = std::sqrt((xi - mean).square().sum() / (n - 1) / n);
        EXPECT_NEAR(mean, 100.0 * std::exp(0.03 * t), 5 * se);
        const Eigen::ArrayXd fi = f.row(i).transpose().array();
        const double fse = std::sqrt((fi - fi.mean()).square().sum() / (n - 1) / n);
        EXPECT_NEAR(fi.mean(), fn.shift[i], 5 * fse);
        const double sd = std::sqrt((fi - fi.mean()).square().sum() / (n - 1));
        EXPECT_NEAR(sd / fn.scale[i], 1.0, 0.02);
    }
}

TEST(Sampler, StepZeroIsThePointMass) {
    const ModelSpec s = spec_of(3);
    RandomStream rng(5);
    const StateBatch x = sample_states(0, 4, s, rng);
    EXPECT_TRUE(x.values.isApprox(Eigen::MatrixXd::Constant(3, 4, 100.0)));
    EXPECT_GT(feature_normalization(0, s, false).scale.minCoeff(), 0.0);
}

TEST(Monitoring, IntervalDividesTheGrid) {
    EXPECT_EQ(monitoring_interval(ModelSpec::uniform(1, 100, 0.1, 0.2, 0, 1.0, 192, CorrMode::fixed)), 16);
    EXPECT_EQ(monitoring_interval(ModelSpec::uniform(1, 100, 0.1, 0.2, 0, 0.5, 12, CorrMode::fixed)), 2);
    EXPECT_THROW(monitoring_interval(ModelSpec::uniform(1, 100, 0.1, 0.2, 0, 1.0, 100, CorrMode::fixed)),
                 std::invalid_argument);
    EXPECT_THROW(monitoring_interval(ModelSpec::uniform(1, 100, 0.1, 0.2, 0, 0.3, 12, CorrMode::fixed)),
                 std::invalid_argument);
}

TEST(Monitoring, AugmentUpdatesOnlyOnMonitoringDates) {
    const ModelSpec s = ModelSpec::uniform(1, 100.0, 0.1, 0.2, 0.0, 1.0, 24, CorrMode::fixed);
    StateBatch prev = initial_states(1, s, true);
    prev.values(1, 0) = 0.01;
    prev.values(2, 0) = 95.0;
    StateBatch next = prev;
    next.values(0, 0) = 105.0;
    const StateBatch off = augment_path_state(prev, next, 0, s);  // t_1 is half a month
    EXPECT_EQ(off.values(1, 0), 0.01);
    EXPECT_EQ(off.values(2, 0), 95.0);
    const StateBatch on = augment_path_state(prev, next, 1, s);  // t_2 is a month end
    EXPECT_NEAR(on.values(1, 0), 0.01 + std::pow(std::log(105.0 / 95.0), 2), 1e-15);
    EXPECT_EQ(on.values(2, 0), 105.0);
}

TEST(Monitoring, PathSamplerIsConsistentAtMonitoringDates) {
    const ModelSpec s = ModelSpec::uniform(1, 100.0, 0.1, 0.2, 0.0, 1.0, 24, CorrMode::fixed);
    RandomStream rng(6);
    const StateBatch x = sample_path_states(4, 1000, s, rng);  // t_4 = two months
    EXPECT_EQ(x.state_dim(), 3);
    for (int b = 0; b < 1000; ++b) {
        EXPECT_NEAR(x.values(0, b), x.values(2, b), 1e-9 * x.values(0, b));
        EXPECT_GT(x.values(1, b), 0.0);
    }
}

TEST(Encoding, FeaturesAreLogMoneynessAndAugmentation) {
    const ModelSpec s = ModelSpec::uniform(1, 100.0, 0.1, 0.2, 0.0, 1.0, 12, CorrMode::fixed);
    StateBatch x{Eigen::MatrixXd(3, 1), 1};
    x.values << 110.0, 0.02, 90.0;
    const Eigen::MatrixXd f = encode_states(x, s);
    EXPECT_NEAR(f(0, 0), std::log(1.1), 1e-15);
    EXPECT_EQ(f(1, 0), 0.02);
    EXPECT_NEAR(f(2, 0), std::log(0.9), 1e-15);
    const StateBatch x0 = initial_states(2, s, true);
    EXPECT_EQ(x0.values(1, 1), 0.0);
    EXPECT_EQ(x0.values(2, 1), 100.0);
}
