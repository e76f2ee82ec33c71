#include "propcheck.hpp"

#include <uvm/corrvine.hpp>
#include <uvm/dynamics.hpp>
#include <uvm/model.hpp>
#include <uvm/neural.hpp>
#include <uvm/policy.hpp>
#include <uvm/random.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace uvm::cli {

namespace {

std::string format(const char* fmt, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, fmt, a, b);
    return buf;
}

RandomStream stream(std::uint64_t seed, std::uint64_t check) {
    return RandomStream(derive_seed(seed, StreamDomain::property, check));
}

PartialCorrVector random_partials(int d, RandomStream& rng) {
    std::vector<double> y(corr_pair_count(d));
    for (double& v : y) v = rng.uniform(-1.0, 1.0);
    return PartialCorrVector(d, std::move(y));
}

// Mean and standard error of each row of a sample matrix (one sample per column).
void row_moments(const Eigen::MatrixXd& s, Eigen::VectorXd& mean, Eigen::VectorXd& se) {
    const double n = double(s.cols());
    mean = s.rowwise().mean();
    const Eigen::MatrixXd c = s.colwise() - mean;
    se = (c.array().square().rowwise().sum() / (n - 1.0) / n).sqrt();
}

}  // namespace

CheckResult check_cvine_psd(std::uint64_t seed, int draws_per_dim) {
    RandomStream rng = stream(seed, 1);
    double min_eig = std::numeric_limits<double>::infinity();
    double diag_err = 0.0;
    for (int d = 2; d <= 10; ++d) {
        for (int k = 0; k < draws_per_dim; ++k) {
            const Eigen::MatrixXd rho = cvine_build(random_partials(d, rng)).correlation();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rho, Eigen::EigenvaluesOnly);
            min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
            diag_err = std::max(diag_err, (rho.diagonal().array() - 1.0).abs().maxCoeff());
        }
    }
    return {"cvine_psd", min_eig > 0.0 && diag_err <= 1e-12,
            format("min eigenvalue %.3e (> 0), max |diag - 1| %.2e (<= 1e-12)", min_eig, diag_err)};
}

CheckResult check_cvine_reconstruction(std::uint64_t seed, int draws_per_dim) {
    RandomStream rng = stream(seed, 2);
    double norm_err = 0.0, recon_err = 0.0;
    for (int d = 2; d <= 10; ++d) {
        for (int k = 0; k < draws_per_dim; ++k) {
            const PartialCorrVector y = random_partials(d, rng);
            const CorrFactor f = cvine_build(y);
            norm_err = std::max(norm_err, (f.lower.rowwise().norm().array() - 1.0).abs().maxCoeff());
            recon_err = std::max(recon_err, (f.correlation() - cvine_pairwise(y)).cwiseAbs().maxCoeff());
        }
    }
    return {"cvine_reconstruction", norm_err <= 1e-12 && recon_err <= 1e-12,
            format("max |row norm - 1| %.2e, max |LL^T - rho| %.2e (both <= 1e-12)", norm_err, recon_err)};
}

CheckResult check_bernoulli_normalization(std::uint64_t seed) {
    RandomStream rng = stream(seed, 3);
    double worst = 0.0;
    for (int d = 1; d <= 10; ++d) {
        for (int rep = 0; rep < 10; ++rep) {
            Eigen::VectorXd logits(d);
            for (int i = 0; i < d; ++i) logits[i] = 3.0 * rng.normal();
            const Eigen::VectorXd q = bernoulli_probabilities(logits);
            double total = 0.0;
            BangBangAction a{Eigen::VectorXi(d)};
            for (unsigned mask = 0; mask < (1u << d); ++mask) {
                for (int i = 0; i < d; ++i) a.bits[i] = (mask >> i) & 1u;
                total += std::exp(bernoulli_log_density(q, a));
            }
            worst = std::max(worst, std::abs(total - 1.0));
        }
    }
    return {"bernoulli_normalization", worst < 1e-12,
            format("max |sum - 1| %.2e (< %.0e)", worst, 1e-12)};
}

CheckResult check_ppo_ratio(std::uint64_t seed, int draws) {
    RandomStream rng = stream(seed, 4);
    double worst = 0.0;
    for (int k = 0; k < draws; ++k) {
        const int dim = 1 + k % 15;
        const double lambda = std::exp(rng.uniform(std::log(0.01), 0.0));
        Eigen::VectorXd m(dim), mo(dim), z(dim);
        for (int i = 0; i < dim; ++i) {
            mo[i] = rng.normal();
            m[i] = mo[i] + 0.1 * rng.normal();
            z[i] = mo[i] + std::sqrt(lambda) * rng.normal();
        }
        const double ratio = gaussian_ppo_ratio(m, mo, z, lambda);
        const double direct = std::exp(gaussian_log_density(z, m, lambda)) /
                              std::exp(gaussian_log_density(z, mo, lambda));
        if (!std::isfinite(direct) || direct == 0.0) continue;  // quotient of underflowed densities
        worst = std::max(worst, std::abs(ratio - direct) / direct);
    }
    return {"ppo_ratio", worst <= 1e-10, format("max relative error %.2e (<= %.0e)", worst, 1e-10)};
}

CheckResult check_mlp_gradients(std::uint64_t seed) {
    RandomStream rng = stream(seed, 5);
    double worst = 0.0;
    const int shapes[][4] = {{1, 8, 1, 5}, {3, 16, 6, 7}, {5, 32, 15, 4}, {21, 32, 20, 3}};
    for (const auto& s : shapes) {
        Mlp net = Mlp::xavier(s[0], s[1], s[2], rng);
        for (Eigen::Index i = 0; i < net.param_count(); ++i) net.params()[i] += 0.1 * rng.normal();
        Eigen::VectorXd shift(s[0]), scale(s[0]);
        for (int i = 0; i < s[0]; ++i) {
            shift[i] = 0.1 * rng.normal();
            scale[i] = 0.5 + rng.uniform();
        }
        net.set_input_normalization(shift, scale);
        Eigen::MatrixXd x(s[0], s[3]), up(s[2], s[3]);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
        for (Eigen::Index i = 0; i < up.size(); ++i) up.data()[i] = rng.normal();

        const Eigen::VectorXd analytic = backward(net, x, up);
        Eigen::VectorXd numeric(net.param_count());
        const double h = 1e-6;
        for (Eigen::Index i = 0; i < net.param_count(); ++i) {
            const double keep = net.params()[i];
            net.params()[i] = keep + h;
            const double fp = (up.array() * forward(net, x).array()).sum();
            net.params()[i] = keep - h;
            const double fm = (up.array() * forward(net, x).array()).sum();
            net.params()[i] = keep;
            numeric[i] = (fp - fm) / (2.0 * h);
        }
        const double denom = std::max({analytic.norm(), numeric.norm(), 1e-300});
        worst = std::max(worst, (analytic - numeric).norm() / denom);
    }
    return {"mlp_gradients", worst < 1e-5,
            format("max relative error %.2e (< %.0e)", worst, 1e-5)};
}

CheckResult check_score_zero_mean(std::uint64_t seed, int samples) {
    RandomStream rng = stream(seed, 6);
    const double h = 1e-5;
    double worst_ratio = 0.0;

    // Continuous: 6-dimensional latent (d = 3 with controlled correlation).
    {
        const int k = 6;
        const double lambda = 0.3;
        Eigen::VectorXd m(k);
        for (int i = 0; i < k; ++i) m[i] = rng.normal();
        const Eigen::MatrixXd z = sample_latents(m.replicate(1, samples), lambda, rng);
        Eigen::MatrixXd score(k, samples);
        for (int b = 0; b < samples; ++b) {
            for (int i = 0; i < k; ++i) {
                Eigen::VectorXd mp = m, mm = m;
                mp[i] += h;
                mm[i] -= h;
                score(i, b) = (gaussian_log_density(z.col(b), mp, lambda) -
                               gaussian_log_density(z.col(b), mm, lambda)) / (2.0 * h);
            }
        }
        Eigen::VectorXd mean, se;
        row_moments(score, mean, se);
        worst_ratio = std::max(worst_ratio, mean.norm() / se.norm());
    }

    // Bang-bang: 3 bits, score with respect to the logits.
    {
        const int k = 3;
        Eigen::VectorXd logits(k);
        for (int i = 0; i < k; ++i) logits[i] = rng.normal();
        const Eigen::VectorXd q = bernoulli_probabilities(logits);
        const Eigen::MatrixXd bits = sample_bits(q.replicate(1, samples), rng);
        Eigen::MatrixXd score(k, samples);
        BangBangAction a{Eigen::VectorXi(k)};
        for (int b = 0; b < samples; ++b) {
            a.bits = bits.col(b).cast<int>();
            for (int i = 0; i < k; ++i) {
                Eigen::VectorXd lp = logits, lm = logits;
                lp[i] += h;
                lm[i] -= h;
                score(i, b) = (bernoulli_log_density(bernoulli_probabilities(lp), a) -
                               bernoulli_log_density(bernoulli_probabilities(lm), a)) / (2.0 * h);
            }
        }
        Eigen::VectorXd mean, se;
        row_moments(score, mean, se);
        worst_ratio = std::max(worst_ratio, mean.norm() / se.norm());
    }
    return {"score_zero_mean", worst_ratio < 5.0,
            format("|mean score| / SE = %.2f (< %.0f), continuous and bang-bang", worst_ratio, 5.0)};
}

CheckResult check_martingale(std::uint64_t seed, long paths) {
    RandomStream rng = stream(seed, 7);
    const ModelSpec spec = ModelSpec::uniform(3, 100.0, 0.1, 0.4, 0.0, 1.0, 4, CorrMode::uncertain, -0.5, 0.5);
    const int chunk = 1 << 16;
    double worst = 0.0;
    for (int family = 0; family < 2; ++family) {
        const long pairs = paths / 2;
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(spec.dim), sum_sq = Eigen::VectorXd::Zero(spec.dim);
        for (long done = 0; done < paths; done += chunk) {
            const int batch = int(std::min<long>(chunk, paths - done));
            const int half = batch / 2;
            StepControls controls;
            if (family == 0) {
                Eigen::MatrixXd z(latent_dim(spec), half);
                for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = 1.5 * rng.normal();
                controls = controls_from_latents(z, spec);
            } else {
                Eigen::MatrixXd bits(bernoulli_dim(spec), half);
                for (Eigen::Index i = 0; i < bits.size(); ++i) bits.data()[i] = rng.uniform() < 0.5;
                controls = controls_from_bits(bits, spec);
            }
            const StateBatch x = initial_states(batch, spec, false);
            const GaussianBatch xi = draw_increments(batch, spec.dim, rng);
            const StateBatch next = log_euler_step(x, controls.tiled(), xi, spec);
            const Eigen::MatrixXd pair_mean =
                0.5 * (next.values.leftCols(half) + next.values.rightCols(half));
            sum += pair_mean.rowwise().sum();
            sum_sq += pair_mean.array().square().matrix().rowwise().sum();
        }
        const Eigen::ArrayXd mean = sum.array() / double(pairs);
        const Eigen::ArrayXd var = (sum_sq.array() / double(pairs) - mean.square()) * pairs / (pairs - 1.0);
        const Eigen::ArrayXd se = (var / double(pairs)).sqrt();
        worst = std::max(worst, ((mean - spec.spot.array()).abs() / se).maxCoeff());
    }
    return {"martingale_log_euler", worst < 4.0,
            format("max |E[x'] - x| / SE = %.2f (< %.0f), continuous and bang-bang controls", worst, 4.0)};
}

std::vector<CheckResult> run_property_suite(std::uint64_t seed) {
    return {check_cvine_psd(seed),        check_cvine_reconstruction(seed),
            check_bernoulli_normalization(seed), check_ppo_ratio(seed),
            check_mlp_gradients(seed),    check_score_zero_mean(seed),
            check_martingale(seed)};
}

}  // namespace uvm::cli
