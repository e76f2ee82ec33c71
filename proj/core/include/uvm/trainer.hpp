#pragma once

#include "uvm/dynamics.hpp"
#include "uvm/model.hpp"
#include "uvm/neural.hpp"
#include "uvm/payoffs.hpp"
#include "uvm/policy.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

namespace uvm {

/// Sigmoid decay v(p) = v_end + (v_start - v_end) / (1 + exp(k (p - c))),
/// p = epoch / (total - 1) in [0, 1].
struct AnnealShape {
    double midpoint = 0.5;
    double steepness = 12.0;
};

/// Throws std::invalid_argument for total <= 0 or epoch outside [0, total).
double anneal(int epoch, int total, double v_start, double v_end, AnnealShape shape = {});

struct TrainSchedule {
    int outer_epochs = 500;   // step N-1
    int inner_epochs = 10;    // steps n <= N-2
    double lr_start = 5e-3;
    double lr_end = 1e-4;
    double inner_lr_divisor = 10.0;
    double temp_start = 1.0;
    double temp_end = 0.01;
    double entropy_start = 0.01;
    double entropy_end = 0.0;
    double clip = 0.2;
    double beta = 10.0;
    double delta = 0.05;
    int mc_samples = 1 << 15;
    int minibatch = 1 << 10;
    int hidden = 32;
    AnnealShape shape;
    // Optional early stop when the epoch critic loss stops improving.
    bool plateau_stop = false;
    int plateau_patience = 20;

    void validate() const;

    int epochs_for(int n, int steps) const { return n == steps - 1 ? outer_epochs : inner_epochs; }
    double lr(int epoch, int total, bool inner) const;
    double temperature(int epoch, int total) const;
    double entropy_coef(int epoch, int total) const;

    /// Budgets used by the presets and acceptance runs: 200 / 10 epochs, M = 2^14.
    static TrainSchedule reduced();
};

struct EpochRecord {
    int step = 0;
    int epoch = 0;
    double critic_loss = 0.0;
    double actor_objective = 0.0;
    double penalty = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double lr = 0.0;
    double lambda_or_gamma = 0.0;
};

struct StepArtifacts {
    int step = 0;
    Actor actor;
    Mlp critic;
    std::vector<EpochRecord> learning_curve;
    double final_critic_loss = 0.0;  // the deterministic-policy critic epoch
    bool untrained = false;          // set by cold_start; see train_step
};

/// V_{n+1}: the terminal payoff at n = N-1, otherwise the next step's critic.
class Continuation {
public:
    static Continuation terminal(TerminalPayoff payoff) { return Continuation(std::move(payoff), nullptr); }
    static Continuation critic(const Mlp& net) { return Continuation({}, &net); }

    bool is_terminal() const { return critic_ == nullptr; }
    Eigen::VectorXd value(const StateBatch& x, const ModelSpec& spec) const;

private:
    Continuation(TerminalPayoff payoff, const Mlp* critic) : payoff_(std::move(payoff)), critic_(critic) {}
    TerminalPayoff payoff_;
    const Mlp* critic_;
};

struct TrainSetup {
    ModelSpec spec;
    TrainSchedule schedule;
    PolicyFamily family = PolicyFamily::continuous;
    bool path_dependent = false;  // states carry (A1, A2)
    std::uint64_t seed = 0;
};

/// Data gathered once per epoch under the frozen policy.
struct EpochBatch {
    StateBatch states;
    Eigen::MatrixXd features;     // encoded states
    Eigen::MatrixXd actions;      // latents (continuous) or 0/1 bits
    Eigen::MatrixXd old_outputs;  // frozen means or logits
    Eigen::VectorXd targets;      // e^{-r dt} (V(F(x,a,xi)) + V(F(x,a,-xi))) / 2
};

/// Training states for step n (path-augmented when requested).
StateBatch sample_training_states(int n, int batch, const TrainSetup& setup, RandomStream& rng);

/// Discounted antithetic continuation targets for given states and controls.
Eigen::VectorXd continuation_targets(const StateBatch& x, const StepControls& controls, int n,
                                     const Continuation& next, const TrainSetup& setup,
                                     RandomStream& rng);

/// Samples actions from the frozen actor (temperature lambda for the
/// continuous family) and computes their continuation targets.
EpochBatch collect_epoch(int n, const Actor& actor, double lambda, const Continuation& next,
                         const TrainSetup& setup, RandomStream& rng);

/// One Adam step per minibatch of the squared loss; returns the epoch-mean loss.
/// `order` is the visiting permutation of the batch columns.
double critic_update(Mlp& critic, AdamState& adam, const Eigen::MatrixXd& features,
                     const Eigen::VectorXd& targets, const std::vector<Eigen::Index>& order,
                     int minibatch, double lr);

/// Advantages targets - V(x), normalized to zero mean and unit variance unless
/// the variance is below 1e-12 (then left raw, with a diagnostic).
Eigen::VectorXd epoch_advantages(const Mlp& critic, const EpochBatch& batch);

struct ActorStats {
    double objective = 0.0;
    double penalty = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
};

/// Clipped-surrogate value and its gradient with respect to the network
/// outputs, for the continuous family. `outputs` are the current means.
double continuous_surrogate(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& old_outputs,
                            const Eigen::MatrixXd& latents, const Eigen::VectorXd& adv,
                            double lambda, double clip, Eigen::MatrixXd* grad,
                            double* clip_fraction = nullptr);

/// Same for the bang-bang family; `outputs` are logits.
double bangbang_surrogate(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& old_outputs,
                          const Eigen::MatrixXd& bits, const Eigen::VectorXd& adv, double clip,
                          Eigen::MatrixXd* grad, double* clip_fraction = nullptr);

/// Mean entropy of the factorized Bernoulli policy and its gradient w.r.t. logits.
double mean_entropy(const Eigen::MatrixXd& logits, Eigen::MatrixXd* grad);

/// Minibatch ascent on surrogate - penalty at the means.
ActorStats actor_update_continuous(GaussianPolicyState& actor, AdamState& adam,
                                   const EpochBatch& batch, const Eigen::VectorXd& adv,
                                   const std::vector<Eigen::Index>& order, const ModelSpec& spec,
                                   const TrainSchedule& schedule, double lr);

/// Minibatch ascent on surrogate + gamma * entropy.
ActorStats actor_update_bangbang(BernoulliPolicyState& actor, AdamState& adam,
                                 const EpochBatch& batch, const Eigen::VectorXd& adv,
                                 const std::vector<Eigen::Index>& order,
                                 const TrainSchedule& schedule, double gamma, double lr);

/// Fresh networks for the last time step, normalized for step N-1. On such
/// an untrained critic, train_step sets the output bias to the mean of the
/// first epoch's targets so the regression starts at the right level.
StepArtifacts cold_start(const TrainSetup& setup);

/// Networks of step n+1 copied to step n with the input normalization
/// rebased so that both networks compute the same function.
StepArtifacts warm_start(const StepArtifacts& next, int n, const TrainSetup& setup);

/// Trains step n from `init`. Failures surface as TrainingError(n, epoch).
StepArtifacts train_step(int n, const Continuation& next, const TrainSetup& setup,
                         StepArtifacts init);

using StepCallback = std::function<void(const StepArtifacts&)>;

/// Backward loop n = N-1 ... 0. Returns artifacts indexed by step.
std::vector<StepArtifacts> train_backward(const TrainSetup& setup, const TerminalPayoff& payoff,
                                          const StepCallback& on_step = {});

// Step checkpoint: "UVMSPGCK" | u32 version | u32 0x01020304 byte-order tag |
// u32 family | u32 step | f64 temperature | u32 output ordering version |
// actor network | critic network (see checkpoint.hpp).
void write_step_checkpoint(std::ostream& os, const StepArtifacts& step);
StepArtifacts read_step_checkpoint(std::istream& is);

}  // namespace uvm
