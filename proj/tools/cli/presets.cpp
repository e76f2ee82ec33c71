#include "presets.hpp"

#include <cstdio>
#include <stdexcept>
#include <string>

namespace uvm::cli {

namespace {

std::string price_text(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

ExperimentConfig base(std::string name, std::string description, double reference, int dim,
                      int steps, PayoffKind kind, std::vector<double> strikes) {
    ExperimentConfig c;
    c.name = std::move(name);
    c.description = std::move(description);
    c.reference = reference;
    c.model.dim = dim;
    c.model.steps = steps;
    c.payoff.kind = kind;
    c.payoff.strikes = std::move(strikes);
    c.output_dir = "out/" + c.name;
    return c;
}

ExperimentConfig uncertain(ExperimentConfig c) {
    c.model.corr_mode = CorrMode::uncertain;
    return c;
}

ExperimentConfig bangbang(ExperimentConfig c) {
    c.name += "_bb";
    c.output_dir += "_bb";
    c.family = PolicyFamily::bangbang;
    c.description += ", bang-bang policy";
    return c;
}

std::vector<ExperimentConfig> build() {
    std::vector<ExperimentConfig> out;

    ExperimentConfig call = base("call_1d",
                                 "one-dimensional call K=100; reference is Black-Scholes at sigma_max",
                                 7.965567455405804, 1, 32, PayoffKind::geo_call, {100.0});
    out.push_back(call);
    out.push_back(bangbang(call));

    const char* uc = "uncertain-correlation benchmark";
    for (auto [d, ref] : {std::pair{2, 13.75}, {3, 12.96}, {4, 12.73}, {5, 12.64}}) {
        ExperimentConfig c = uncertain(base(
            "geo_outperformer_d" + std::to_string(d),
            std::string(uc) + ", geo-outperformer, d=" + std::to_string(d) + ", reference " +
                price_text(ref),
            ref, d, 128, PayoffKind::geo_outperformer, {}));
        out.push_back(c);
        if (d == 2) out.push_back(bangbang(c));
    }

    ExperimentConfig spread = uncertain(base(
        "outperformer_spread_d2", std::string(uc) + ", outperformer spread, d=2, reference 12.83",
        12.83, 2, 128, PayoffKind::outperformer_spread, {}));
    out.push_back(spread);
    out.push_back(bangbang(spread));

    ExperimentConfig fly = uncertain(base(
        "best_of_butterfly_d2",
        std::string(uc) + ", best-of butterfly K=85/115, d=2, reference 6.70 "
                          "(sigma in [0.3, 0.5], rho in [0.3, 0.5], T=0.25, r=0.05)",
        6.70, 2, 128, PayoffKind::best_of_butterfly, {85.0, 115.0}));
    fly.model.vol_lo = 0.3;
    fly.model.vol_hi = 0.5;
    fly.model.corr_lo = 0.3;
    fly.model.corr_hi = 0.5;
    fly.model.horizon = 0.25;
    fly.model.rate = 0.05;
    out.push_back(fly);
    out.push_back(bangbang(fly));

    const char* fc = "fixed-correlation benchmark";
    for (auto [d, ref] : {std::pair{2, 10.50}, {5, 9.70}, {10, 9.55}, {20, 9.53}, {40, 9.51}, {80, 9.51}}) {
        out.push_back(base("geo_call_spread_d" + std::to_string(d),
                           std::string(fc) + ", geo-call spread K=90/110, rho=0, d=" +
                               std::to_string(d) + ", reference " + price_text(ref),
                           ref, d, d <= 10 ? 64 : 32, PayoffKind::geo_call_spread, {90.0, 110.0}));
    }

    ExperimentConfig sharpe = base("call_sharpe",
                                   std::string(fc) + ", call Sharpe K=100, d=1, monthly "
                                                     "realized volatility, reference 58.40",
                                   58.40, 1, 192, PayoffKind::call_sharpe, {100.0});
    out.push_back(sharpe);
    out.push_back(bangbang(sharpe));
    return out;
}

}  // namespace

const std::vector<ExperimentConfig>& presets() {
    static const std::vector<ExperimentConfig> all = build();
    return all;
}

const ExperimentConfig& find_preset(std::string_view name) {
    for (const auto& p : presets())
        if (p.name == name) return p;
    std::string known;
    for (const auto& p : presets()) known += (known.empty() ? "" : ", ") + p.name;
    throw std::invalid_argument("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace uvm::cli
