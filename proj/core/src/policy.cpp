#include "uvm/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace uvm {

std::string_view to_string(PolicyFamily family) {
    return family == PolicyFamily::continuous ? "continuous" : "bangbang";
}

PolicyFamily parse_policy_family(std::string_view text) {
    if (text == "continuous") return PolicyFamily::continuous;
    if (text == "bangbang" || text == "bang-bang") return PolicyFamily::bangbang;
    throw std::invalid_argument("unknown policy family '" + std::string(text) + "'");
}

int latent_dim(const ModelSpec& spec) {
    return spec.controls_correlation() ? packed_size(spec.dim) : spec.dim;
}

int bernoulli_dim(const ModelSpec& spec) {
    return spec.dim + (spec.controls_correlation() && spec.dim == 2 ? 1 : 0);
}

PolicyFamily family_of(const Actor& actor) {
    return std::holds_alternative<GaussianPolicyState>(actor) ? PolicyFamily::continuous
                                                             : PolicyFamily::bangbang;
}

const Mlp& actor_net(const Actor& actor) {
    if (const auto* g = std::get_if<GaussianPolicyState>(&actor)) return g->mean_net;
    return std::get<BernoulliPolicyState>(actor).logit_net;
}

Mlp& actor_net(Actor& actor) {
    if (auto* g = std::get_if<GaussianPolicyState>(&actor)) return g->mean_net;
    return std::get<BernoulliPolicyState>(actor).logit_net;
}

namespace {

double safe_tanh(double z) {
    const double t = std::tanh(z);
    return std::clamp(t, -1.0 + kSquashMargin, 1.0 - kSquashMargin);
}

double rho12_mid(const ModelSpec& s) { return 0.5 * (s.corr_bounds.lower(0, 1) + s.corr_bounds.upper(0, 1)); }
double rho12_half(const ModelSpec& s) { return 0.5 * (s.corr_bounds.upper(0, 1) - s.corr_bounds.lower(0, 1)); }

CorrFactor two_asset_factor(double rho) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(2, 2);
    L(0, 0) = 1.0;
    L(1, 0) = rho;
    L(1, 1) = std::sqrt(1.0 - rho * rho);
    return {L};
}

// Correlation factor from the correlation part of a latent vector.
CorrFactor latent_factor(const Eigen::VectorXd& z, const ModelSpec& spec) {
    const int d = spec.dim;
    if (!spec.controls_correlation()) return fixed_factor(spec);
    if (d == 2) return two_asset_factor(rho12_mid(spec) + rho12_half(spec) * safe_tanh(z[2]));
    std::vector<double> y(corr_pair_count(d));
    for (int k = 0; k < corr_pair_count(d); ++k) y[k] = safe_tanh(z[d + k]);
    return cvine_build(PartialCorrVector(d, std::move(y)));
}

void check_latent(const Eigen::VectorXd& z, const ModelSpec& spec) {
    if (z.size() != latent_dim(spec))
        throw std::invalid_argument("latent has " + std::to_string(z.size()) + " entries, expected " +
                                    std::to_string(latent_dim(spec)));
}

Eigen::VectorXd features_of(const Eigen::VectorXd& x, const ModelSpec& spec) {
    StateBatch batch{x, spec.dim};
    return encode_states(batch, spec).col(0);
}

}  // namespace

ContinuousAction squash_map(const Eigen::VectorXd& z, const ModelSpec& spec) {
    check_latent(z, spec);
    const int d = spec.dim;
    ContinuousAction a;
    a.sigma.resize(d);
    for (int i = 0; i < d; ++i) {
        const double mid = 0.5 * (spec.vol_lo[i] + spec.vol_hi[i]);
        const double half = 0.5 * (spec.vol_hi[i] - spec.vol_lo[i]);
        a.sigma[i] = mid + half * std::tanh(z[i]);
    }
    a.factor = latent_factor(z, spec);
    a.latent = z;
    return a;
}

Eigen::VectorXd squash_unmap(const ContinuousAction& action, const ModelSpec& spec) {
    const int d = spec.dim;
    if (action.sigma.size() != d) throw std::invalid_argument("squash_unmap: sigma size mismatch");
    Eigen::VectorXd z(latent_dim(spec));
    for (int i = 0; i < d; ++i) {
        const double mid = 0.5 * (spec.vol_lo[i] + spec.vol_hi[i]);
        const double half = 0.5 * (spec.vol_hi[i] - spec.vol_lo[i]);
        if (half <= 0.0) {
            z[i] = 0.0;
            continue;
        }
        const double u = (action.sigma[i] - mid) / half;
        if (!(std::abs(u) < 1.0))
            throw std::domain_error("squash_unmap: volatility on or outside its bounds");
        z[i] = std::atanh(u);
    }
    if (!spec.controls_correlation()) return z;
    if (action.factor.dim() != d) throw std::invalid_argument("squash_unmap: factor size mismatch");
    if (d == 2) {
        const double rho = action.factor.lower(1, 0);
        const double u = (rho - rho12_mid(spec)) / rho12_half(spec);
        if (!(std::abs(u) < 1.0))
            throw std::domain_error("squash_unmap: correlation on or outside its bounds");
        z[2] = std::atanh(u);
        return z;
    }
    const PartialCorrVector y = cvine_partials(action.factor);
    for (int k = 0; k < corr_pair_count(d); ++k) z[d + k] = std::atanh(y[k]);
    return z;
}

StepControls controls_from_latents(const Eigen::MatrixXd& latents, const ModelSpec& spec) {
    const int d = spec.dim;
    if (latents.rows() != latent_dim(spec))
        throw std::invalid_argument("controls_from_latents: latent dimension mismatch");
    const Eigen::Index batch = latents.cols();
    StepControls c;
    c.sigma.resize(d, batch);
    for (int i = 0; i < d; ++i) {
        const double mid = 0.5 * (spec.vol_lo[i] + spec.vol_hi[i]);
        const double half = 0.5 * (spec.vol_hi[i] - spec.vol_lo[i]);
        c.sigma.row(i) = (mid + half * latents.row(i).array().tanh()).matrix();
    }
    if (!spec.controls_correlation()) {
        c.shared_factor = fixed_factor(spec).lower;
        return c;
    }
    c.packed_factors.resize(packed_size(d), batch);
    for (Eigen::Index b = 0; b < batch; ++b)
        c.packed_factors.col(b) = pack_lower(latent_factor(latents.col(b), spec).lower);
    return c;
}

Eigen::MatrixXd sample_latents(const Eigen::MatrixXd& means, double lambda, RandomStream& rng) {
    if (!(lambda > 0.0)) throw std::invalid_argument("sample_latents: temperature must be positive");
    const double sd = std::sqrt(lambda);
    Eigen::MatrixXd z(means.rows(), means.cols());
    for (Eigen::Index b = 0; b < means.cols(); ++b)
        for (Eigen::Index i = 0; i < means.rows(); ++i) z(i, b) = means(i, b) + sd * rng.normal();
    return z;
}

double gaussian_log_density(const Eigen::VectorXd& z, const Eigen::VectorXd& mean, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("gaussian_log_density: lambda must be positive");
    const double k = static_cast<double>(z.size());
    return -0.5 * (z - mean).squaredNorm() / lambda - 0.5 * k * std::log(2.0 * M_PI * lambda);
}

double gaussian_ppo_ratio(const Eigen::VectorXd& new_mean, const Eigen::VectorXd& old_mean,
                          const Eigen::VectorXd& latent, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("gaussian_ppo_ratio: lambda must be positive");
    if (new_mean.size() != old_mean.size() || latent.size() != old_mean.size())
        throw std::invalid_argument("gaussian_ppo_ratio: size mismatch");
    const Eigen::VectorXd mid = 0.5 * (new_mean + old_mean);
    return std::exp((new_mean - old_mean).dot(latent - mid) / lambda);
}

ContinuousAction gaussian_sample(const GaussianPolicyState& policy, const Eigen::VectorXd& x,
                                 const ModelSpec& spec, RandomStream& rng) {
    const Eigen::MatrixXd mean = forward(policy.mean_net, features_of(x, spec));
    return squash_map(sample_latents(mean, policy.temperature, rng).col(0), spec);
}

double mean_penalty(const Eigen::MatrixXd& means, const ModelSpec& spec, double beta,
                    double delta, Eigen::MatrixXd* grad) {
    const int d = spec.dim;
    const Eigen::Index batch = means.cols();
    if (grad) *grad = Eigen::MatrixXd::Zero(means.rows(), batch);
    if (!spec.controls_correlation() || d < 3 || batch == 0) return 0.0;
    if (means.rows() != latent_dim(spec))
        throw std::invalid_argument("mean_penalty: latent dimension mismatch");
    const int pairs = corr_pair_count(d);
    double total = 0.0;
    for (Eigen::Index b = 0; b < batch; ++b) {
        std::vector<double> y(pairs);
        for (int k = 0; k < pairs; ++k) y[k] = safe_tanh(means(d + k, b));
        const PartialCorrVector pv(d, y);
        const CorrFactor L = cvine_build(pv);
        const Eigen::MatrixXd rho = L.correlation();
        const double psi = corr_penalty(rho, spec.corr_bounds, beta, delta);
        total += psi;
        if (!grad || psi == 0.0) continue;
        const Eigen::MatrixXd g_rho = corr_penalty_gradient(rho, spec.corr_bounds, beta, delta);
        const std::vector<double> g_y = cvine_backprop(pv, factor_gradient_from_corr(L, g_rho));
        for (int k = 0; k < pairs; ++k) {
            const double t = std::tanh(means(d + k, b));
            // The clamp is flat, so no gradient flows past it.
            const double dt = std::abs(t) >= 1.0 - kSquashMargin ? 0.0 : 1.0 - t * t;
            (*grad)(d + k, b) = g_y[k] * dt / double(batch);
        }
    }
    return total / double(batch);
}

Eigen::MatrixXd bernoulli_probabilities(const Eigen::MatrixXd& logits) {
    return (1.0 / (1.0 + (-logits.array()).exp())).cwiseMax(kProbFloor).cwiseMin(1.0 - kProbFloor);
}

Eigen::MatrixXd sample_bits(const Eigen::MatrixXd& probs, RandomStream& rng) {
    Eigen::MatrixXd bits(probs.rows(), probs.cols());
    for (Eigen::Index b = 0; b < probs.cols(); ++b)
        for (Eigen::Index i = 0; i < probs.rows(); ++i)
            bits(i, b) = rng.uniform() < probs(i, b) ? 1.0 : 0.0;
    return bits;
}

StepControls controls_from_bits(const Eigen::MatrixXd& bits, const ModelSpec& spec) {
    const int d = spec.dim;
    if (bits.rows() != bernoulli_dim(spec))
        throw std::invalid_argument("controls_from_bits: bit dimension mismatch");
    const Eigen::Index batch = bits.cols();
    StepControls c;
    c.sigma.resize(d, batch);
    for (int i = 0; i < d; ++i)
        c.sigma.row(i) =
            (spec.vol_lo[i] + bits.row(i).array() * (spec.vol_hi[i] - spec.vol_lo[i])).matrix();
    if (bernoulli_dim(spec) == d) {
        c.shared_factor = fixed_factor(spec).lower;
        return c;
    }
    const double lo = spec.corr_bounds.lower(0, 1);
    const double hi = spec.corr_bounds.upper(0, 1);
    c.packed_factors.resize(3, batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
        const double rho = std::clamp(bits(2, b) > 0.5 ? hi : lo, -1.0 + kSquashMargin,
                                      1.0 - kSquashMargin);
        c.packed_factors.col(b) = pack_lower(two_asset_factor(rho).lower);
    }
    return c;
}

double bernoulli_log_density(const Eigen::VectorXd& q, const BangBangAction& a) {
    if (q.size() != a.bits.size()) throw std::invalid_argument("bernoulli_log_density: size mismatch");
    double s = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) s += a.bits[i] ? std::log(q[i]) : std::log1p(-q[i]);
    return s;
}

double bernoulli_entropy(const Eigen::VectorXd& q) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        const double p = q[i];
        if (p > 0.0) h -= p * std::log(p);
        if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
    }
    return h;
}

BangBangAction bernoulli_sample(const BernoulliPolicyState& policy, const Eigen::VectorXd& x,
                                const ModelSpec& spec, RandomStream& rng) {
    const Eigen::MatrixXd q = bernoulli_probabilities(forward(policy.logit_net, features_of(x, spec)));
    return {sample_bits(q, rng).col(0).cast<int>()};
}

ContinuousAction bangbang_controls(const BangBangAction& a, const ModelSpec& spec) {
    const StepControls c = controls_from_bits(a.bits.cast<double>(), spec);
    return {c.sigma.col(0), {c.factor(0)}, {}};
}

ContinuousAction deterministic_action(const GaussianPolicyState& policy, const Eigen::VectorXd& x,
                                      const ModelSpec& spec) {
    return squash_map(forward(policy.mean_net, features_of(x, spec)).col(0), spec);
}

BangBangAction threshold_bits(const Eigen::VectorXd& q) {
    return {(q.array() >= 0.5).cast<int>().matrix()};
}

BangBangAction deterministic_action(const BernoulliPolicyState& policy, const Eigen::VectorXd& x,
                                    const ModelSpec& spec) {
    return threshold_bits(
        bernoulli_probabilities(forward(policy.logit_net, features_of(x, spec))).col(0));
}

StepControls deterministic_controls(const Actor& actor, const StateBatch& x, const ModelSpec& spec) {
    const Eigen::MatrixXd out = forward(actor_net(actor), encode_states(x, spec));
    if (family_of(actor) == PolicyFamily::continuous) return controls_from_latents(out, spec);
    const Eigen::MatrixXd bits = (bernoulli_probabilities(out).array() >= 0.5).cast<double>();
    return controls_from_bits(bits, spec);
}

}  // namespace uvm
