#pragma once

#include "uvm/dynamics.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string_view>
#include <vector>

namespace uvm {

enum class PayoffKind {
    geo_outperformer,     // (geomean(X2..Xd) - X1)+
    outperformer_spread,  // (X2 - 0.9 X1)+ - (X2 - 1.1 X1)+
    best_of_butterfly,    // butterfly on max_i Xi, strikes K1 < K2
    geo_call_spread,      // call spread on geomean(X1..Xd), strikes K1 < K2
    geo_call,             // call on geomean(X1..Xd), strike K
    call_sharpe,          // (X - K)+ / sqrt(A1 / T), d = 1 with augmented state
};

std::string_view to_string(PayoffKind kind);
PayoffKind parse_payoff_kind(std::string_view text);

struct PayoffSpec {
    PayoffKind kind = PayoffKind::geo_call;
    std::vector<double> strikes;
    int dim = 1;
    double horizon = 1.0;       // call_sharpe normalizes A1 by T
    double sharpe_cap = 1e6;    // call_sharpe value when V_T = 0 but in the money

    /// Throws std::invalid_argument on wrong strike count/order or dimension.
    void validate() const;
};

/// State rows the payoff reads: d, or d + 2 for call_sharpe.
int payoff_dimension(const PayoffSpec& spec);

/// True if the payoff needs the (A1, A2) augmentation.
bool is_path_dependent(const PayoffSpec& spec);

/// One payoff per column of `terminal`.
Eigen::VectorXd evaluate(const PayoffSpec& spec, const StateBatch& terminal);

/// Terminal condition used by training and pricing. Any callable works, so
/// tests can plug in e.g. g(x) = x.
using TerminalPayoff = std::function<Eigen::VectorXd(const StateBatch&)>;

TerminalPayoff make_payoff(PayoffSpec spec);

}  // namespace uvm
