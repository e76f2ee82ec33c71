#include "uvm/payoffs.hpp"

#include "uvm/diagnostics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace uvm {

std::string_view to_string(PayoffKind kind) {
    switch (kind) {
        case PayoffKind::geo_outperformer: return "geo_outperformer";
        case PayoffKind::outperformer_spread: return "outperformer_spread";
        case PayoffKind::best_of_butterfly: return "best_of_butterfly";
        case PayoffKind::geo_call_spread: return "geo_call_spread";
        case PayoffKind::geo_call: return "geo_call";
        case PayoffKind::call_sharpe: return "call_sharpe";
    }
    return "?";
}

PayoffKind parse_payoff_kind(std::string_view text) {
    for (auto k : {PayoffKind::geo_outperformer, PayoffKind::outperformer_spread,
                   PayoffKind::best_of_butterfly, PayoffKind::geo_call_spread,
                   PayoffKind::geo_call, PayoffKind::call_sharpe})
        if (text == to_string(k)) return k;
    throw std::invalid_argument("unknown payoff kind '" + std::string(text) + "'");
}

void PayoffSpec::validate() const {
    auto need = [&](std::size_t n) {
        if (strikes.size() != n)
            throw std::invalid_argument("payoff " + std::string(to_string(kind)) + " needs " +
                                        std::to_string(n) + " strike(s), got " +
                                        std::to_string(strikes.size()));
    };
    if (dim < 1) throw std::invalid_argument("payoff: dim must be >= 1");
    switch (kind) {
        case PayoffKind::geo_outperformer:
            need(0);
            if (dim < 2) throw std::invalid_argument("geo_outperformer needs d >= 2");
            break;
        case PayoffKind::outperformer_spread:
            need(0);
            if (dim != 2) throw std::invalid_argument("outperformer_spread needs d = 2");
            break;
        case PayoffKind::best_of_butterfly:
        case PayoffKind::geo_call_spread:
            need(2);
            if (!(strikes[0] < strikes[1]))
                throw std::invalid_argument("payoff strikes must satisfy K1 < K2");
            break;
        case PayoffKind::geo_call: need(1); break;
        case PayoffKind::call_sharpe:
            need(1);
            if (dim != 1) throw std::invalid_argument("call_sharpe needs d = 1");
            if (!(horizon > 0.0)) throw std::invalid_argument("call_sharpe needs T > 0");
            if (!(sharpe_cap > 0.0)) throw std::invalid_argument("call_sharpe cap must be positive");
            break;
    }
}

int payoff_dimension(const PayoffSpec& spec) { return spec.dim + (is_path_dependent(spec) ? 2 : 0); }

bool is_path_dependent(const PayoffSpec& spec) { return spec.kind == PayoffKind::call_sharpe; }

namespace {

double pos(double v) { return v > 0.0 ? v : 0.0; }

// exp(mean(log x[first..last))), evaluated in log space.
double geomean(const Eigen::MatrixXd& x, Eigen::Index col, int first, int last) {
    double s = 0.0;
    for (int i = first; i < last; ++i) s += std::log(x(i, col));
    return std::exp(s / double(last - first));
}

}  // namespace

Eigen::VectorXd evaluate(const PayoffSpec& spec, const StateBatch& terminal) {
    const int d = spec.dim;
    if (terminal.asset_dim != d || terminal.state_dim() < payoff_dimension(spec))
        throw std::invalid_argument("payoff: terminal state has " +
                                    std::to_string(terminal.state_dim()) + " rows, expected " +
                                    std::to_string(payoff_dimension(spec)));
    const auto& x = terminal.values;
    const Eigen::Index batch = terminal.size();
    Eigen::VectorXd g(batch);
    const auto& K = spec.strikes;
    long capped = 0;
    for (Eigen::Index b = 0; b < batch; ++b) {
        switch (spec.kind) {
            case PayoffKind::geo_outperformer:
                g[b] = pos(geomean(x, b, 1, d) - x(0, b));
                break;
            case PayoffKind::outperformer_spread:
                g[b] = pos(x(1, b) - 0.9 * x(0, b)) - pos(x(1, b) - 1.1 * x(0, b));
                break;
            case PayoffKind::best_of_butterfly: {
                const double m = x.col(b).head(d).maxCoeff();
                g[b] = pos(m - K[0]) - 2.0 * pos(m - 0.5 * (K[0] + K[1])) + pos(m - K[1]);
                break;
            }
            case PayoffKind::geo_call_spread: {
                const double G = geomean(x, b, 0, d);
                g[b] = pos(G - K[0]) - pos(G - K[1]);
                break;
            }
            case PayoffKind::geo_call:
                g[b] = pos(geomean(x, b, 0, d) - K[0]);
                break;
            case PayoffKind::call_sharpe: {
                const double intrinsic = pos(x(0, b) - K[0]);
                const double v = x(1, b) / spec.horizon;
                if (intrinsic == 0.0) {
                    g[b] = 0.0;
                } else if (v > 0.0) {
                    g[b] = intrinsic / std::sqrt(v);
                } else {
                    g[b] = spec.sharpe_cap;
                    ++capped;
                }
                break;
            }
        }
    }
    if (capped > 0)
        diagnostic("call_sharpe: " + std::to_string(capped) +
                   " in-the-money path(s) with zero realized variance set to the cap");
    return g;
}

TerminalPayoff make_payoff(PayoffSpec spec) {
    spec.validate();
    return [spec](const StateBatch& x) { return evaluate(spec, x); };
}

}  // namespace uvm
