#pragma once

#include "uvm/corrvine.hpp"
#include "uvm/dynamics.hpp"
#include "uvm/model.hpp"
#include "uvm/neural.hpp"
#include "uvm/random.hpp"

#include <Eigen/Dense>

#include <string_view>
#include <variant>

namespace uvm {

enum class PolicyFamily { continuous, bangbang };

std::string_view to_string(PolicyFamily family);
PolicyFamily parse_policy_family(std::string_view text);

/// Bound on |tanh| before it reaches a correlation; keeps sqrt(1 - y^2) > 0.
inline constexpr double kSquashMargin = 1e-7;
/// Bernoulli probabilities are clamped to [kProbFloor, 1 - kProbFloor].
inline constexpr double kProbFloor = 1e-6;

/// Length of the Gaussian latent: d(d+1)/2 when correlations are controlled,
/// d otherwise. Layout is (z_sigma[0..d), z_rho in vine order).
int latent_dim(const ModelSpec& spec);

/// Number of Bernoulli bits: one per volatility, plus one for rho12 when
/// d = 2 with uncertain correlation. For d >= 3 the bang-bang family keeps
/// the fixed correlation of `spec`.
int bernoulli_dim(const ModelSpec& spec);

struct ContinuousAction {
    Eigen::VectorXd sigma;
    CorrFactor factor;
    Eigen::VectorXd latent;
};

struct BangBangAction {
    Eigen::VectorXi bits;
};

struct GaussianPolicyState {
    Mlp mean_net;
    double temperature = 1.0;
};

struct BernoulliPolicyState {
    Mlp logit_net;
};

using Actor = std::variant<GaussianPolicyState, BernoulliPolicyState>;

PolicyFamily family_of(const Actor& actor);
const Mlp& actor_net(const Actor& actor);
Mlp& actor_net(Actor& actor);

// ---- continuous family ----------------------------------------------------

/// sigma_i = mid_i + half_i tanh(z_i); correlations from the remaining
/// entries (vine for d >= 3, scaled tanh between the bounds for d = 2, the
/// fixed factor otherwise).
ContinuousAction squash_map(const Eigen::VectorXd& z, const ModelSpec& spec);

/// Inverse of squash_map. Throws std::domain_error when sigma sits on a bound
/// or a recovered partial correlation has magnitude >= 1.
Eigen::VectorXd squash_unmap(const ContinuousAction& action, const ModelSpec& spec);

/// squash_map applied column by column, packed for log_euler_step.
StepControls controls_from_latents(const Eigen::MatrixXd& latents, const ModelSpec& spec);

/// Z = mean + sqrt(lambda) N(0, I), column by column.
Eigen::MatrixXd sample_latents(const Eigen::MatrixXd& means, double lambda, RandomStream& rng);

double gaussian_log_density(const Eigen::VectorXd& z, const Eigen::VectorXd& mean, double lambda);

/// pi_new(Z) / pi_old(Z) for isotropic Gaussians with common variance lambda.
double gaussian_ppo_ratio(const Eigen::VectorXd& new_mean, const Eigen::VectorXd& old_mean,
                          const Eigen::VectorXd& latent, double lambda);

/// One column per state; the policy network sees encode_states(x).
ContinuousAction gaussian_sample(const GaussianPolicyState& policy, const Eigen::VectorXd& x,
                                 const ModelSpec& spec, RandomStream& rng);

/// Mean correlation penalty over a batch of actor means, and optionally its
/// gradient with respect to each mean column. Zero unless `spec` controls
/// correlation through the vine (d >= 3 uncertain).
double mean_penalty(const Eigen::MatrixXd& means, const ModelSpec& spec, double beta,
                    double delta, Eigen::MatrixXd* grad = nullptr);

// ---- bang-bang family -----------------------------------------------------

/// Sigmoid of the logits clamped to [kProbFloor, 1 - kProbFloor].
Eigen::MatrixXd bernoulli_probabilities(const Eigen::MatrixXd& logits);

Eigen::MatrixXd sample_bits(const Eigen::MatrixXd& probs, RandomStream& rng);

/// Bits (0/1 stored as doubles), one column per path, to step controls.
StepControls controls_from_bits(const Eigen::MatrixXd& bits, const ModelSpec& spec);

double bernoulli_log_density(const Eigen::VectorXd& q, const BangBangAction& a);
double bernoulli_entropy(const Eigen::VectorXd& q);

BangBangAction bernoulli_sample(const BernoulliPolicyState& policy, const Eigen::VectorXd& x,
                                const ModelSpec& spec, RandomStream& rng);

/// Volatility and correlation selected by a bit vector.
ContinuousAction bangbang_controls(const BangBangAction& a, const ModelSpec& spec);

// ---- deterministic policies ----------------------------------------------

ContinuousAction deterministic_action(const GaussianPolicyState& policy, const Eigen::VectorXd& x,
                                      const ModelSpec& spec);
/// Bit i is 1 iff q_i >= 1/2.
BangBangAction deterministic_action(const BernoulliPolicyState& policy, const Eigen::VectorXd& x,
                                    const ModelSpec& spec);
BangBangAction threshold_bits(const Eigen::VectorXd& q);

/// Deterministic controls for a batch of states.
StepControls deterministic_controls(const Actor& actor, const StateBatch& x, const ModelSpec& spec);

}  // namespace uvm
