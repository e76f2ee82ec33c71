#include <uvm/diagnostics.hpp>
#include <uvm/payoffs.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <string>

using namespace uvm;

namespace {

StateBatch states(const Eigen::MatrixXd& v, int assets) { return StateBatch{v, assets}; }

double eval1(const PayoffSpec& p, const Eigen::VectorXd& x, int assets) {
    return evaluate(p, states(x, assets))[0];
}

}  // namespace

TEST(Payoff, GeoOutperformer) {
    const PayoffSpec p{PayoffKind::geo_outperformer, {}, 3};
    EXPECT_NEAR(eval1(p, Eigen::Vector3d(100, 121, 144), 3), std::sqrt(121.0 * 144.0) - 100.0, 1e-12);
    EXPECT_EQ(eval1(p, Eigen::Vector3d(200, 121, 144), 3), 0.0);
}

TEST(Payoff, OutperformerSpread) {
    const PayoffSpec p{PayoffKind::outperformer_spread, {}, 2};
    EXPECT_NEAR(eval1(p, Eigen::Vector2d(100, 95), 2), 5.0, 1e-12);
    EXPECT_NEAR(eval1(p, Eigen::Vector2d(100, 130), 2), 20.0, 1e-12);  // capped at 0.2 x1
    EXPECT_EQ(eval1(p, Eigen::Vector2d(100, 80), 2), 0.0);
}

TEST(Payoff, BestOfButterfly) {
    const PayoffSpec p{PayoffKind::best_of_butterfly, {85, 115}, 2};
    EXPECT_NEAR(eval1(p, Eigen::Vector2d(90, 100), 2), 15.0, 1e-12);  // peak at the midpoint
    EXPECT_NEAR(eval1(p, Eigen::Vector2d(110, 70), 2), 5.0, 1e-12);
    EXPECT_EQ(eval1(p, Eigen::Vector2d(80, 84), 2), 0.0);
    EXPECT_NEAR(eval1(p, Eigen::Vector2d(150, 70), 2), 0.0, 1e-12);
}

TEST(Payoff, GeoCallSpread) {
    const PayoffSpec p{PayoffKind::geo_call_spread, {90, 110}, 2};
    EXPECT_NEAR(eval1(p, Eigen::Vector2d(100, 100), 2), 10.0, 1e-12);
    EXPECT_NEAR(eval1(p, Eigen::Vector2d(400, 100), 2), 20.0, 1e-12);
    EXPECT_NEAR(eval1(p, Eigen::Vector2d(81, 100), 2), 0.0, 1e-12);
}

TEST(Payoff, GeometricMeanInHighDimensionStaysFinite) {
    const PayoffSpec p{PayoffKind::geo_call, {100}, 80};
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(80, 1e5);
    EXPECT_NEAR(eval1(p, x, 80), 1e5 - 100.0, 1e-6);
}

TEST(Payoff, CallSharpeUsesRealizedVariance) {
    const PayoffSpec p{PayoffKind::call_sharpe, {100}, 1, 1.0};
    EXPECT_EQ(payoff_dimension(p), 3);
    EXPECT_TRUE(is_path_dependent(p));
    EXPECT_NEAR(eval1(p, Eigen::Vector3d(110, 0.04, 108), 1), 10.0 / 0.2, 1e-12);
    EXPECT_EQ(eval1(p, Eigen::Vector3d(90, 0.04, 92), 1), 0.0);
    EXPECT_EQ(eval1(p, Eigen::Vector3d(90, 0.0, 92), 1), 0.0);
}

TEST(Payoff, CallSharpeZeroVarianceInTheMoneyIsCappedWithDiagnostic) {
    std::string seen;
    set_diagnostic_sink([&](std::string_view m) { seen = std::string(m); });
    const PayoffSpec p{PayoffKind::call_sharpe, {100}, 1, 1.0, 1234.0};
    EXPECT_EQ(eval1(p, Eigen::Vector3d(110, 0.0, 100), 1), 1234.0);
    EXPECT_NE(seen.find("cap"), std::string::npos);
    set_diagnostic_sink({});
}

TEST(Payoff, ValidationAndNames) {
    EXPECT_THROW((PayoffSpec{PayoffKind::geo_call_spread, {110, 90}, 2}.validate()), std::invalid_argument);
    EXPECT_THROW((PayoffSpec{PayoffKind::geo_call, {}, 2}.validate()), std::invalid_argument);
    EXPECT_THROW((PayoffSpec{PayoffKind::outperformer_spread, {}, 3}.validate()), std::invalid_argument);
    EXPECT_THROW((PayoffSpec{PayoffKind::call_sharpe, {100}, 2}.validate()), std::invalid_argument);
    EXPECT_THROW(parse_payoff_kind("asian"), std::invalid_argument);
    EXPECT_EQ(parse_payoff_kind(to_string(PayoffKind::best_of_butterfly)), PayoffKind::best_of_butterfly);
    const PayoffSpec p{PayoffKind::geo_call, {100}, 2};
    EXPECT_THROW(evaluate(p, states(Eigen::Vector3d(1, 2, 3), 3)), std::invalid_argument);
}
