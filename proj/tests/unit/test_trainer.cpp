#include <uvm/diagnostics.hpp>
#include <uvm/errors.hpp>
#include <uvm/pricer.hpp>
#include <uvm/trainer.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <string>

using namespace uvm;

namespace {

Eigen::MatrixXd random_matrix(int r, int c, RandomStream& rng, double scale = 1.0) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
    return m;
}

TrainSetup tiny_call_setup(PolicyFamily family, int steps = 2) {
    TrainSetup s;
    s.spec = ModelSpec::uniform(1, 100.0, 0.1, 0.2, 0.0, 1.0, steps, CorrMode::fixed);
    s.schedule.outer_epochs = 20;
    s.schedule.inner_epochs = 3;
    s.schedule.mc_samples = 1 << 10;
    s.schedule.minibatch = 1 << 8;
    s.schedule.hidden = 8;
    s.family = family;
    s.seed = 42;
    return s;
}

TerminalPayoff call(double K) {
    return [K](const StateBatch& x) { return (x.values.row(0).array() - K).max(0.0).matrix().transpose().eval(); };
}

}  // namespace

TEST(Anneal, SigmoidShape) {
    const double start = 1.0, end = 0.01;
    const int E = 101;
    EXPECT_NEAR(anneal(50, E, start, end), 0.5 * (start + end), 1e-12);
    EXPECT_NEAR(anneal(0, E, start, end), end + (start - end) / (1 + std::exp(-6.0)), 1e-12);
    EXPECT_NEAR(anneal(E - 1, E, start, end), end + (start - end) / (1 + std::exp(6.0)), 1e-12);
    for (int e = 1; e < E; ++e) EXPECT_LT(anneal(e, E, start, end), anneal(e - 1, E, start, end));
    EXPECT_NEAR(anneal(0, 1, start, end), end + (start - end) / (1 + std::exp(6.0)), 1e-12);
    EXPECT_THROW(anneal(3, 3, start, end), std::invalid_argument);
    EXPECT_THROW(anneal(0, 0, start, end), std::invalid_argument);
}

TEST(Schedule, DefaultsAndValidation) {
    TrainSchedule s;
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(s.epochs_for(9, 10), 500);
    EXPECT_EQ(s.epochs_for(3, 10), 10);
    EXPECT_NEAR(s.lr(0, 10, true), s.lr(0, 10, false) / 10.0, 1e-15);
    TrainSchedule bad = s;
    bad.clip = 0.0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = s;
    bad.temp_end = 2.0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = s;
    bad.minibatch = 3000;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    const TrainSchedule r = TrainSchedule::reduced();
    EXPECT_EQ(r.outer_epochs, 200);
    EXPECT_EQ(r.mc_samples, 1 << 14);
}

TEST(Surrogate, ContinuousAtFrozenParametersIsMeanAdvantage) {
    RandomStream rng(1);
    const Eigen::MatrixXd m = random_matrix(3, 50, rng);
    const Eigen::MatrixXd z = m + 0.3 * random_matrix(3, 50, rng);
    const Eigen::VectorXd adv = random_matrix(50, 1, rng);
    double frac = -1;
    EXPECT_NEAR(continuous_surrogate(m, m, z, adv, 0.1, 0.2, nullptr, &frac), adv.mean(), 1e-14);
    EXPECT_EQ(frac, 0.0);
}

TEST(Surrogate, ContinuousGradientMatchesFiniteDifferences) {
    RandomStream rng(2);
    const double lambda = 0.5, clip = 0.2;
    const Eigen::MatrixXd mo = random_matrix(2, 40, rng);
    const Eigen::MatrixXd z = mo + std::sqrt(lambda) * random_matrix(2, 40, rng);
    const Eigen::MatrixXd m = mo + 0.05 * random_matrix(2, 40, rng);
    const Eigen::VectorXd adv = random_matrix(40, 1, rng);
    Eigen::MatrixXd g;
    continuous_surrogate(m, mo, z, adv, lambda, clip, &g);
    const double h = 1e-7;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        Eigen::MatrixXd p = m, q = m;
        p.data()[i] += h;
        q.data()[i] -= h;
        const double fd = (continuous_surrogate(p, mo, z, adv, lambda, clip, nullptr) -
                           continuous_surrogate(q, mo, z, adv, lambda, clip, nullptr)) / (2 * h);
        EXPECT_NEAR(g.data()[i], fd, 1e-6);
    }
}

TEST(Surrogate, BangBangGradientMatchesFiniteDifferences) {
    RandomStream rng(3);
    const Eigen::MatrixXd lo = random_matrix(3, 40, rng);
    const Eigen::MatrixXd l = lo + 0.05 * random_matrix(3, 40, rng);
    Eigen::MatrixXd bits(3, 40);
    for (Eigen::Index i = 0; i < bits.size(); ++i) bits.data()[i] = rng.uniform() < 0.5;
    const Eigen::VectorXd adv = random_matrix(40, 1, rng);
    EXPECT_NEAR(bangbang_surrogate(lo, lo, bits, adv, 0.2, nullptr), adv.mean(), 1e-14);
    Eigen::MatrixXd g;
    bangbang_surrogate(l, lo, bits, adv, 0.2, &g);
    const double h = 1e-7;
    for (Eigen::Index i = 0; i < l.size(); ++i) {
        Eigen::MatrixXd p = l, q = l;
        p.data()[i] += h;
        q.data()[i] -= h;
        const double fd = (bangbang_surrogate(p, lo, bits, adv, 0.2, nullptr) -
                           bangbang_surrogate(q, lo, bits, adv, 0.2, nullptr)) / (2 * h);
        EXPECT_NEAR(g.data()[i], fd, 1e-6);
    }
}

TEST(Surrogate, EntropyGradientMatchesFiniteDifferences) {
    RandomStream rng(4);
    const Eigen::MatrixXd l = random_matrix(3, 10, rng, 2.0);
    Eigen::MatrixXd g;
    mean_entropy(l, &g);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < l.size(); ++i) {
        Eigen::MatrixXd p = l, q = l;
        p.data()[i] += h;
        q.data()[i] -= h;
        EXPECT_NEAR(g.data()[i], (mean_entropy(p, nullptr) - mean_entropy(q, nullptr)) / (2 * h), 1e-8);
    }
}

TEST(Advantages, NormalizedOrRawWhenDegenerate) {
    RandomStream rng(5);
    Mlp critic = Mlp::xavier(1, 4, 1, rng);
    EpochBatch batch;
    batch.features = random_matrix(1, 100, rng);
    batch.targets = random_matrix(100, 1, rng);
    const Eigen::VectorXd adv = epoch_advantages(critic, batch);
    EXPECT_NEAR(adv.mean(), 0.0, 1e-12);
    EXPECT_NEAR((adv.array() - adv.mean()).square().mean(), 1.0, 1e-12);

    int warnings = 0;
    set_diagnostic_sink([&](std::string_view) { ++warnings; });
    batch.targets = forward(critic, batch.features).row(0).transpose().array() + 1.0;
    const Eigen::VectorXd raw = epoch_advantages(critic, batch);
    set_diagnostic_sink({});
    EXPECT_EQ(warnings, 1);
    EXPECT_NEAR(raw.minCoeff(), 1.0, 1e-12);
    EXPECT_NEAR(raw.maxCoeff(), 1.0, 1e-12);
}

TEST(Targets, DiscountedContinuationIsUnbiasedForAMartingale) {
    // With V_{n+1}(x) = x, the antithetic target has mean x exactly.
    TrainSetup setup = tiny_call_setup(PolicyFamily::continuous);
    setup.spec.rate = 0.05;
    const TerminalPayoff identity = [](const StateBatch& x) { return x.values.row(0).transpose().eval(); };
    const Continuation next = Continuation::terminal(identity);
    const int B = 100000;
    StateBatch x{Eigen::MatrixXd::Constant(1, B, 100.0), 1};
    StepControls c;
    c.sigma = Eigen::MatrixXd::Constant(1, B, 0.2);
    c.shared_factor = Eigen::MatrixXd::Identity(1, 1);
    RandomStream rng(6);
    const Eigen::VectorXd t = continuation_targets(x, c, 1, next, setup, rng);
    const double se = std::sqrt((t.array() - t.mean()).square().sum() / (B - 1) / B);
    EXPECT_NEAR(t.mean(), 100.0, 5 * se);
}

TEST(Transfer, WarmStartPreservesBothNetworks) {
    const TrainSetup setup = tiny_call_setup(PolicyFamily::continuous, 4);
    const StepArtifacts last = cold_start(setup);
    EXPECT_TRUE(last.untrained);
    EXPECT_EQ(last.step, 3);
    const StepArtifacts prev = warm_start(last, 0, setup);
    EXPECT_FALSE(prev.untrained);
    RandomStream rng(7);
    const Eigen::MatrixXd f = random_matrix(1, 20, rng, 0.2);
    EXPECT_LT((forward(prev.critic, f) - forward(last.critic, f)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((forward(actor_net(prev.actor), f) - forward(actor_net(last.actor), f)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Training, TinyRunProducesFiniteArtifactsForBothFamilies) {
    for (PolicyFamily fam : {PolicyFamily::continuous, PolicyFamily::bangbang}) {
        const TrainSetup setup = tiny_call_setup(fam, 3);
        std::vector<int> order;
        const auto steps = train_backward(setup, call(100.0), [&](const StepArtifacts& s) { order.push_back(s.step); });
        ASSERT_EQ(steps.size(), 3u);
        EXPECT_EQ(order, (std::vector<int>{2, 1, 0}));
        EXPECT_EQ(steps[2].learning_curve.size(), 20u);
        EXPECT_EQ(steps[0].learning_curve.size(), 3u);
        for (const auto& s : steps) {
            EXPECT_TRUE(s.critic.all_finite());
            EXPECT_TRUE(std::isfinite(s.final_critic_loss));
            EXPECT_FALSE(s.untrained);
            for (const auto& e : s.learning_curve) {
                EXPECT_EQ(e.step, s.step);
                EXPECT_LT(e.clip_fraction, 1.0);
            }
        }
        const double v0 = critic_price(steps, setup.spec);
        EXPECT_GT(v0, 4.0);
        EXPECT_LT(v0, 12.0);
    }
}

TEST(Training, SameSeedSameNetworks) {
    const TrainSetup setup = tiny_call_setup(PolicyFamily::continuous, 2);
    const auto a = train_backward(setup, call(100.0));
    const auto b = train_backward(setup, call(100.0));
    EXPECT_EQ(a[0].critic.params(), b[0].critic.params());
    EXPECT_EQ(actor_net(a[0].actor).params(), actor_net(b[0].actor).params());
}

TEST(Training, FailuresCarryStepAndEpoch) {
    const TrainSetup setup = tiny_call_setup(PolicyFamily::continuous, 2);
    const TerminalPayoff broken = [](const StateBatch& x) {
        return Eigen::VectorXd::Constant(x.size(), std::nan(""));
    };
    try {
        train_backward(setup, broken);
        FAIL() << "expected TrainingError";
    } catch (const TrainingError& e) {
        EXPECT_EQ(e.step(), 1);
        EXPECT_GE(e.epoch(), 0);
    }
}

TEST(Training, RejectsWrongFamilyInit) {
    const TrainSetup setup = tiny_call_setup(PolicyFamily::continuous, 2);
    TrainSetup other = setup;
    other.family = PolicyFamily::bangbang;
    EXPECT_THROW(train_step(1, Continuation::terminal(call(100.0)), setup, cold_start(other)),
                 std::invalid_argument);
}
