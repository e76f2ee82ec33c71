#include "uvm/pricer.hpp"

#include "uvm/diagnostics.hpp"
#include "uvm/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace uvm {

McEstimate monte_carlo_price(const ControlPolicy& policy, const ModelSpec& spec,
                             const TerminalPayoff& payoff, long n_paths, std::uint64_t seed,
                             bool path_dependent) {
    if (n_paths < 2 || n_paths % 2 != 0)
        throw std::invalid_argument("pricing: n_paths must be even and >= 2");
    const double disc = std::exp(-spec.rate * spec.horizon);
    double sum = 0.0, sum_sq = 0.0;
    long pairs = 0;
    long chunk_index = 0;
    for (long done = 0; done < n_paths; done += kPricingChunk, ++chunk_index) {
        const int batch = static_cast<int>(std::min<long>(kPricingChunk, n_paths - done));
        RandomStream rng(derive_seed(seed, StreamDomain::pricing, std::uint64_t(chunk_index)));
        StateBatch x = initial_states(batch, spec, path_dependent);
        for (int n = 0; n < spec.steps; ++n) {
            const GaussianBatch xi = draw_increments(batch, spec.dim, rng);
            StateBatch next = log_euler_step(x, policy(n, x), xi, spec);
            x = path_dependent ? augment_path_state(x, next, n, spec) : std::move(next);
        }
        const Eigen::VectorXd g = disc * payoff(x);
        const int half = batch / 2;
        for (int b = 0; b < half; ++b) {
            const double m = 0.5 * (g[b] + g[b + half]);
            sum += m;
            sum_sq += m * m;
        }
        pairs += half;
    }
    McEstimate est;
    est.n_paths = n_paths;
    est.price = sum / double(pairs);
    const double var = pairs > 1 ? std::max(sum_sq - pairs * est.price * est.price, 0.0) / (pairs - 1) : 0.0;
    est.std_error = std::sqrt(var / double(pairs));
    est.ci_halfwidth = 1.96 * est.std_error;
    if (!std::isfinite(est.price)) throw NumericalError("pricing: non-finite actor price");
    return est;
}

ControlPolicy deterministic_policy(const std::vector<StepArtifacts>& steps, const ModelSpec& spec) {
    if (static_cast<int>(steps.size()) != spec.steps)
        throw std::invalid_argument("pricing: artifacts must cover all N steps");
    return [&steps, &spec](int n, const StateBatch& x) {
        return deterministic_controls(steps[n].actor, x, spec);
    };
}

McEstimate actor_price(const std::vector<StepArtifacts>& steps, const ModelSpec& spec,
                       const TerminalPayoff& payoff, long n_paths, std::uint64_t seed,
                       bool path_dependent) {
    return monte_carlo_price(deterministic_policy(steps, spec), spec, payoff, n_paths, seed,
                             path_dependent);
}

double critic_price(const std::vector<StepArtifacts>& steps, const ModelSpec& spec,
                    bool path_dependent) {
    if (steps.empty()) throw std::invalid_argument("pricing: no trained steps");
    const StateBatch x0 = initial_states(1, spec, path_dependent);
    return forward(steps.front().critic, encode_states(x0, spec))(0, 0);
}

PriceReport price(const std::vector<StepArtifacts>& steps, const ModelSpec& spec,
                  const TerminalPayoff& payoff, long n_paths, std::uint64_t seed,
                  bool path_dependent) {
    const auto t0 = std::chrono::steady_clock::now();
    const McEstimate est = actor_price(steps, spec, payoff, n_paths, seed, path_dependent);
    PriceReport r;
    r.actor_price = est.price;
    r.ci_halfwidth = est.ci_halfwidth;
    r.critic_price = critic_price(steps, spec, path_dependent);
    r.n_paths = n_paths;
    r.seed = seed;
    r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

Eigen::MatrixXd clamp_correlation(const Eigen::MatrixXd& rho, const CorrBounds& bounds) {
    Eigen::MatrixXd out = rho;
    const int d = static_cast<int>(rho.rows());
    for (int i = 0; i < d; ++i) {
        out(i, i) = 1.0;
        for (int j = i + 1; j < d; ++j) {
            const double v = std::clamp(rho(i, j), bounds.lower(i, j), bounds.upper(i, j));
            out(i, j) = out(j, i) = v;
        }
    }
    return out;
}

Eigen::MatrixXd repair_correlation(const Eigen::MatrixXd& rho, double min_eigenvalue) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rho);
    if (eig.info() != Eigen::Success) throw PsdRepairError("PSD repair: eigensolver failed");
    const Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(min_eigenvalue);
    Eigen::MatrixXd fixed = eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
    const Eigen::VectorXd inv = fixed.diagonal().cwiseSqrt().cwiseInverse();
    fixed = inv.asDiagonal() * fixed * inv.asDiagonal();
    fixed = 0.5 * (fixed + fixed.transpose());
    fixed.diagonal().setOnes();
    Eigen::LLT<Eigen::MatrixXd> llt(fixed);
    if (llt.info() != Eigen::Success || !fixed.allFinite())
        throw PsdRepairError("PSD repair: repaired matrix is still not positive definite");
    return fixed;
}

double clamped_price_impact(const std::vector<StepArtifacts>& steps, const ModelSpec& spec,
                            const TerminalPayoff& payoff, long n_paths, std::uint64_t seed,
                            double reference) {
    if (!spec.controls_correlation() || spec.dim < 3)
        throw std::invalid_argument("clamped_price_impact: needs uncertain correlation with d >= 3");
    if (!(reference > 0.0)) throw std::invalid_argument("clamped_price_impact: reference must be positive");
    for (const auto& s : steps)
        if (family_of(s.actor) != PolicyFamily::continuous)
            throw std::invalid_argument("clamped_price_impact: needs continuous-policy artifacts");

    diagnostic("clamped pricing: projecting pairwise correlations onto their bounds does not "
               "guarantee a positive semidefinite matrix; failing matrices are repaired");
    const ControlPolicy base = deterministic_policy(steps, spec);
    long repaired = 0;
    const ControlPolicy clamped = [&](int n, const StateBatch& x) {
        StepControls c = base(n, x);
        for (Eigen::Index b = 0; b < c.size(); ++b) {
            const Eigen::MatrixXd L = c.factor(b);
            Eigen::MatrixXd rho = clamp_correlation(L * L.transpose(), spec.corr_bounds);
            Eigen::LLT<Eigen::MatrixXd> llt(rho);
            if (llt.info() != Eigen::Success) {
                rho = repair_correlation(rho);
                llt.compute(rho);
                ++repaired;
            }
            c.packed_factors.col(b) = pack_lower(llt.matrixL());
        }
        return c;
    };
    const double unclamped_price = monte_carlo_price(base, spec, payoff, n_paths, seed).price;
    const double clamped_price = monte_carlo_price(clamped, spec, payoff, n_paths, seed).price;
    if (repaired > 0)
        diagnostic("clamped pricing: " + std::to_string(repaired) +
                   " projected matrices needed nearest-PSD repair");
    return (unclamped_price - clamped_price) / reference;
}

}  // namespace uvm
