#include "uvm/trainer.hpp"

#include "uvm/checkpoint.hpp"
#include "uvm/diagnostics.hpp"
#include "uvm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace uvm {

double anneal(int epoch, int total, double v_start, double v_end, AnnealShape shape) {
    if (total <= 0) throw std::invalid_argument("anneal: total epochs must be positive");
    if (epoch < 0 || epoch >= total) throw std::invalid_argument("anneal: epoch out of range");
    const double p = total == 1 ? 1.0 : double(epoch) / double(total - 1);
    return v_end + (v_start - v_end) / (1.0 + std::exp(shape.steepness * (p - shape.midpoint)));
}

void TrainSchedule::validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("schedule: " + m); };
    if (outer_epochs < 1 || inner_epochs < 1) fail("epoch budgets must be >= 1");
    if (!(lr_start > 0.0) || !(lr_end > 0.0)) fail("learning rates must be positive");
    if (!(inner_lr_divisor > 0.0)) fail("inner_lr_divisor must be positive");
    if (!(temp_end > 0.0) || !(temp_end < temp_start)) fail("need 0 < temp_end < temp_start");
    if (entropy_start < 0.0 || entropy_end < 0.0) fail("entropy coefficients must be >= 0");
    if (!(clip > 0.0) || !(clip < 1.0)) fail("clip must lie in (0, 1)");
    if (beta < 0.0) fail("beta must be >= 0");
    if (!(delta > 0.0)) fail("delta must be positive");
    if (mc_samples < 1 || minibatch < 1) fail("mc_samples and minibatch must be >= 1");
    if (mc_samples % minibatch != 0) fail("minibatch must divide mc_samples");
    if (hidden < 1) fail("hidden must be >= 1");
    if (!(shape.steepness > 0.0) || !(shape.midpoint > 0.0 && shape.midpoint < 1.0))
        fail("anneal shape needs steepness > 0 and midpoint in (0, 1)");
    if (plateau_patience < 1) fail("plateau_patience must be >= 1");
}

double TrainSchedule::lr(int epoch, int total, bool inner) const {
    return anneal(epoch, total, lr_start, lr_end, shape) / (inner ? inner_lr_divisor : 1.0);
}

double TrainSchedule::temperature(int epoch, int total) const {
    return anneal(epoch, total, temp_start, temp_end, shape);
}

double TrainSchedule::entropy_coef(int epoch, int total) const {
    return anneal(epoch, total, entropy_start, entropy_end, shape);
}

TrainSchedule TrainSchedule::reduced() {
    TrainSchedule s;
    s.outer_epochs = 200;
    s.inner_epochs = 10;
    s.mc_samples = 1 << 14;
    s.minibatch = 1 << 10;
    return s;
}

Eigen::VectorXd Continuation::value(const StateBatch& x, const ModelSpec& spec) const {
    if (critic_) return forward(*critic_, encode_states(x, spec)).row(0).transpose();
    return payoff_(x);
}

StateBatch sample_training_states(int n, int batch, const TrainSetup& setup, RandomStream& rng) {
    return setup.path_dependent ? sample_path_states(n, batch, setup.spec, rng)
                                : sample_states(n, batch, setup.spec, rng);
}

Eigen::VectorXd continuation_targets(const StateBatch& x, const StepControls& controls, int n,
                                     const Continuation& next, const TrainSetup& setup,
                                     RandomStream& rng) {
    const ModelSpec& spec = setup.spec;
    const Eigen::Index B = x.size();
    StateBatch both{Eigen::MatrixXd(x.state_dim(), 2 * B), x.asset_dim};
    both.values << x.values, x.values;
    const GaussianBatch xi = draw_increments(static_cast<int>(2 * B), spec.dim, rng);
    StateBatch moved = log_euler_step(both, controls.tiled(), xi, spec);
    if (setup.path_dependent) moved = augment_path_state(both, moved, n, spec);
    const Eigen::VectorXd v = next.value(moved, spec);
    if (!v.allFinite()) throw NumericalError("non-finite continuation value");
    return std::exp(-spec.rate * spec.dt()) * 0.5 * (v.head(B) + v.tail(B));
}

EpochBatch collect_epoch(int n, const Actor& actor, double lambda, const Continuation& next,
                         const TrainSetup& setup, RandomStream& rng) {
    EpochBatch batch;
    batch.states = sample_training_states(n, setup.schedule.mc_samples, setup, rng);
    batch.features = encode_states(batch.states, setup.spec);
    batch.old_outputs = forward(actor_net(actor), batch.features);
    StepControls controls;
    if (family_of(actor) == PolicyFamily::continuous) {
        batch.actions = sample_latents(batch.old_outputs, lambda, rng);
        controls = controls_from_latents(batch.actions, setup.spec);
    } else {
        batch.actions = sample_bits(bernoulli_probabilities(batch.old_outputs), rng);
        controls = controls_from_bits(batch.actions, setup.spec);
    }
    batch.targets = continuation_targets(batch.states, controls, n, next, setup, rng);
    return batch;
}

namespace {

std::vector<Eigen::Index> slice(const std::vector<Eigen::Index>& order, std::size_t start,
                                std::size_t len) {
    return {order.begin() + start, order.begin() + std::min(order.size(), start + len)};
}

std::vector<Eigen::Index> shuffled(Eigen::Index n, RandomStream& rng) {
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng.engine());
    return order;
}

}  // namespace

double critic_update(Mlp& critic, AdamState& adam, const Eigen::MatrixXd& features,
                     const Eigen::VectorXd& targets, const std::vector<Eigen::Index>& order,
                     int minibatch, double lr) {
    if (minibatch < 1) throw std::invalid_argument("critic_update: minibatch must be >= 1");
    double total = 0.0;
    int count = 0;
    ForwardCache cache;
    for (std::size_t start = 0; start < order.size(); start += minibatch) {
        const auto idx = slice(order, start, minibatch);
        const Eigen::MatrixXd x = features(Eigen::all, idx);
        const Eigen::RowVectorXd y = targets(idx).transpose();
        const Eigen::MatrixXd v = forward(critic, x, cache);
        const Eigen::RowVectorXd err = v.row(0) - y;
        const double loss = err.squaredNorm() / double(idx.size());
        if (!std::isfinite(loss)) throw NumericalError("critic loss is not finite");
        const Eigen::MatrixXd upstream = (2.0 / double(idx.size())) * err;
        adam_step(critic, backward(critic, cache, upstream), adam, lr);
        total += loss;
        ++count;
    }
    return count ? total / count : 0.0;
}

Eigen::VectorXd epoch_advantages(const Mlp& critic, const EpochBatch& batch) {
    Eigen::VectorXd adv = batch.targets - forward(critic, batch.features).row(0).transpose();
    const double mean = adv.mean();
    const double var = (adv.array() - mean).square().mean();
    if (!(var >= 1e-12)) {
        diagnostic("advantage variance " + std::to_string(var) +
                   " below 1e-12; using raw advantages");
        return adv;
    }
    return (adv.array() - mean) / std::sqrt(var);
}

double continuous_surrogate(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& old_outputs,
                            const Eigen::MatrixXd& latents, const Eigen::VectorXd& adv,
                            double lambda, double clip, Eigen::MatrixXd* grad,
                            double* clip_fraction) {
    const Eigen::Index B = outputs.cols();
    if (grad) grad->setZero(outputs.rows(), B);
    double total = 0.0;
    long clipped = 0;
    for (Eigen::Index b = 0; b < B; ++b) {
        const auto m = outputs.col(b);
        const auto mo = old_outputs.col(b);
        const auto z = latents.col(b);
        // Capped so that a runaway ratio stays finite; min() below discards it anyway.
        const double log_r = std::min((m - mo).dot(z - 0.5 * (m + mo)) / lambda, 50.0);
        const double r = std::exp(log_r);
        const double rc = std::clamp(r, 1.0 - clip, 1.0 + clip);
        const double a = adv[b];
        total += std::min(r * a, rc * a);
        if (r < 1.0 - clip || r > 1.0 + clip) ++clipped;
        if (grad && r * a <= rc * a) grad->col(b) = (a * r / lambda / double(B)) * (z - m);
    }
    if (clip_fraction) *clip_fraction = B ? double(clipped) / double(B) : 0.0;
    return B ? total / double(B) : 0.0;
}

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

bool unclamped(double raw_q) { return raw_q > kProbFloor && raw_q < 1.0 - kProbFloor; }

}  // namespace

double bangbang_surrogate(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& old_outputs,
                          const Eigen::MatrixXd& bits, const Eigen::VectorXd& adv, double clip,
                          Eigen::MatrixXd* grad, double* clip_fraction) {
    const Eigen::Index B = outputs.cols();
    const Eigen::MatrixXd q = bernoulli_probabilities(outputs);
    const Eigen::MatrixXd qo = bernoulli_probabilities(old_outputs);
    if (grad) grad->setZero(outputs.rows(), B);
    double total = 0.0;
    long clipped = 0;
    for (Eigen::Index b = 0; b < B; ++b) {
        double log_r = 0.0;
        for (Eigen::Index i = 0; i < q.rows(); ++i)
            log_r += bits(i, b) > 0.5 ? std::log(q(i, b) / qo(i, b))
                                      : std::log((1.0 - q(i, b)) / (1.0 - qo(i, b)));
        const double r = std::exp(std::min(log_r, 50.0));
        const double rc = std::clamp(r, 1.0 - clip, 1.0 + clip);
        const double a = adv[b];
        total += std::min(r * a, rc * a);
        if (r < 1.0 - clip || r > 1.0 + clip) ++clipped;
        if (grad && r * a <= rc * a) {
            for (Eigen::Index i = 0; i < q.rows(); ++i)
                if (unclamped(sigmoid(outputs(i, b))))
                    (*grad)(i, b) = a * r * (bits(i, b) - q(i, b)) / double(B);
        }
    }
    if (clip_fraction) *clip_fraction = B ? double(clipped) / double(B) : 0.0;
    return B ? total / double(B) : 0.0;
}

double mean_entropy(const Eigen::MatrixXd& logits, Eigen::MatrixXd* grad) {
    const Eigen::Index B = logits.cols();
    const Eigen::MatrixXd q = bernoulli_probabilities(logits);
    if (grad) grad->setZero(logits.rows(), B);
    double total = 0.0;
    for (Eigen::Index b = 0; b < B; ++b) {
        total += bernoulli_entropy(q.col(b));
        if (!grad) continue;
        for (Eigen::Index i = 0; i < q.rows(); ++i) {
            const double p = q(i, b);
            if (unclamped(sigmoid(logits(i, b))))
                (*grad)(i, b) = std::log((1.0 - p) / p) * p * (1.0 - p) / double(B);
        }
    }
    return B ? total / double(B) : 0.0;
}

ActorStats actor_update_continuous(GaussianPolicyState& actor, AdamState& adam,
                                   const EpochBatch& batch, const Eigen::VectorXd& adv,
                                   const std::vector<Eigen::Index>& order, const ModelSpec& spec,
                                   const TrainSchedule& schedule, double lr) {
    ActorStats stats;
    int count = 0;
    ForwardCache cache;
    Eigen::MatrixXd g_sur, g_pen;
    for (std::size_t start = 0; start < order.size(); start += schedule.minibatch) {
        const auto idx = slice(order, start, schedule.minibatch);
        const Eigen::MatrixXd m = forward(actor.mean_net, batch.features(Eigen::all, idx), cache);
        double clip_frac = 0.0;
        const double sur = continuous_surrogate(m, batch.old_outputs(Eigen::all, idx),
                                                batch.actions(Eigen::all, idx), adv(idx),
                                                actor.temperature, schedule.clip, &g_sur, &clip_frac);
        const double pen = mean_penalty(m, spec, schedule.beta, schedule.delta, &g_pen);
        const double obj = sur - pen;
        if (!std::isfinite(obj)) throw NumericalError("actor objective is not finite");
        // Adam descends, so feed it the gradient of -objective.
        const Eigen::MatrixXd upstream = g_pen - g_sur;
        adam_step(actor.mean_net, backward(actor.mean_net, cache, upstream), adam, lr);
        stats.objective += obj;
        stats.penalty += pen;
        stats.clip_fraction += clip_frac;
        ++count;
    }
    if (count) {
        stats.objective /= count;
        stats.penalty /= count;
        stats.clip_fraction /= count;
    }
    return stats;
}

ActorStats actor_update_bangbang(BernoulliPolicyState& actor, AdamState& adam,
                                 const EpochBatch& batch, const Eigen::VectorXd& adv,
                                 const std::vector<Eigen::Index>& order,
                                 const TrainSchedule& schedule, double gamma, double lr) {
    ActorStats stats;
    int count = 0;
    ForwardCache cache;
    Eigen::MatrixXd g_sur, g_ent;
    for (std::size_t start = 0; start < order.size(); start += schedule.minibatch) {
        const auto idx = slice(order, start, schedule.minibatch);
        const Eigen::MatrixXd l = forward(actor.logit_net, batch.features(Eigen::all, idx), cache);
        double clip_frac = 0.0;
        const double sur = bangbang_surrogate(l, batch.old_outputs(Eigen::all, idx),
                                              batch.actions(Eigen::all, idx), adv(idx),
                                              schedule.clip, &g_sur, &clip_frac);
        const double ent = mean_entropy(l, &g_ent);
        const double obj = sur + gamma * ent;
        if (!std::isfinite(obj)) throw NumericalError("actor objective is not finite");
        const Eigen::MatrixXd upstream = -(g_sur + gamma * g_ent);
        adam_step(actor.logit_net, backward(actor.logit_net, cache, upstream), adam, lr);
        stats.objective += obj;
        stats.entropy += ent;
        stats.clip_fraction += clip_frac;
        ++count;
    }
    if (count) {
        stats.objective /= count;
        stats.entropy /= count;
        stats.clip_fraction /= count;
    }
    return stats;
}

namespace {

int state_dim(const TrainSetup& setup) { return setup.spec.dim + (setup.path_dependent ? 2 : 0); }

void normalize_for_step(Mlp& net, int n, const TrainSetup& setup, bool rebase) {
    const FeatureNormalization fn = feature_normalization(n, setup.spec, setup.path_dependent);
    if (rebase)
        net.rebase_input_normalization(fn.shift, fn.scale);
    else
        net.set_input_normalization(fn.shift, fn.scale);
}

}  // namespace

StepArtifacts cold_start(const TrainSetup& setup) {
    const ModelSpec& spec = setup.spec;
    const int n = spec.steps - 1;
    RandomStream rng(derive_seed(setup.seed, StreamDomain::init));
    const int in = state_dim(setup);
    const int h = setup.schedule.hidden;
    StepArtifacts art;
    art.step = n;
    art.untrained = true;
    if (setup.family == PolicyFamily::continuous) {
        GaussianPolicyState g{Mlp::xavier(in, h, latent_dim(spec), rng), setup.schedule.temp_start};
        normalize_for_step(g.mean_net, n, setup, false);
        art.actor = std::move(g);
    } else {
        BernoulliPolicyState b{Mlp::xavier(in, h, bernoulli_dim(spec), rng)};
        normalize_for_step(b.logit_net, n, setup, false);
        art.actor = std::move(b);
    }
    art.critic = Mlp::xavier(in, h, 1, rng);
    normalize_for_step(art.critic, n, setup, false);
    return art;
}

StepArtifacts warm_start(const StepArtifacts& next, int n, const TrainSetup& setup) {
    StepArtifacts art;
    art.step = n;
    art.actor = next.actor;
    actor_net(art.actor) = transfer_init(actor_net(next.actor));
    art.critic = transfer_init(next.critic);
    normalize_for_step(actor_net(art.actor), n, setup, true);
    normalize_for_step(art.critic, n, setup, true);
    return art;
}

StepArtifacts train_step(int n, const Continuation& next, const TrainSetup& setup,
                         StepArtifacts init) {
    const ModelSpec& spec = setup.spec;
    const TrainSchedule& sched = setup.schedule;
    if (n < 0 || n >= spec.steps) throw std::invalid_argument("train_step: step out of range");
    if (family_of(init.actor) != setup.family)
        throw std::invalid_argument("train_step: initial actor has the wrong policy family");

    StepArtifacts art = std::move(init);
    art.step = n;
    art.learning_curve.clear();
    const int epochs = sched.epochs_for(n, spec.steps);
    const bool inner = n < spec.steps - 1;
    AdamState actor_adam, critic_adam;
    double best_loss = std::numeric_limits<double>::infinity();
    int since_best = 0;
    double last_lr = sched.lr(epochs - 1, epochs, inner);

    int epoch = 0;
    try {
        for (; epoch < epochs; ++epoch) {
            const double lr = sched.lr(epoch, epochs, inner);
            const double lambda = sched.temperature(epoch, epochs);
            const double gamma = sched.entropy_coef(epoch, epochs);
            last_lr = lr;
            if (auto* g = std::get_if<GaussianPolicyState>(&art.actor)) g->temperature = lambda;

            RandomStream rng(derive_seed(setup.seed, StreamDomain::collect, std::uint64_t(n),
                                         std::uint64_t(epoch)));
            const EpochBatch batch = collect_epoch(n, art.actor, lambda, next, setup, rng);
            if (art.untrained) {
                art.critic.b2()[0] = batch.targets.mean();
                art.untrained = false;
            }

            EpochRecord rec;
            rec.step = n;
            rec.epoch = epoch;
            rec.lr = lr;
            const auto critic_order = shuffled(batch.targets.size(), rng);
            rec.critic_loss = critic_update(art.critic, critic_adam, batch.features, batch.targets,
                                            critic_order, sched.minibatch, lr);

            const Eigen::VectorXd adv = epoch_advantages(art.critic, batch);
            const auto actor_order = shuffled(batch.targets.size(), rng);
            ActorStats stats;
            if (auto* g = std::get_if<GaussianPolicyState>(&art.actor)) {
                stats = actor_update_continuous(*g, actor_adam, batch, adv, actor_order, spec, sched, lr);
                rec.lambda_or_gamma = lambda;
            } else {
                auto& b = std::get<BernoulliPolicyState>(art.actor);
                stats = actor_update_bangbang(b, actor_adam, batch, adv, actor_order, sched, gamma, lr);
                rec.lambda_or_gamma = gamma;
            }
            rec.actor_objective = stats.objective;
            rec.penalty = stats.penalty;
            rec.entropy = stats.entropy;
            rec.clip_fraction = stats.clip_fraction;
            art.learning_curve.push_back(rec);

            if (sched.plateau_stop) {
                if (rec.critic_loss < best_loss) {
                    best_loss = rec.critic_loss;
                    since_best = 0;
                } else if (++since_best >= sched.plateau_patience) {
                    ++epoch;
                    break;
                }
            }
        }

        // Last critic pass: regress onto the continuation under the
        // deterministic policy that will be used for pricing.
        RandomStream rng(derive_seed(setup.seed, StreamDomain::final_critic, std::uint64_t(n)));
        const StateBatch states = sample_training_states(n, sched.mc_samples, setup, rng);
        const StepControls controls = deterministic_controls(art.actor, states, spec);
        const Eigen::VectorXd targets = continuation_targets(states, controls, n, next, setup, rng);
        const Eigen::MatrixXd features = encode_states(states, spec);
        art.final_critic_loss = critic_update(art.critic, critic_adam, features, targets,
                                              shuffled(targets.size(), rng), sched.minibatch, last_lr);
    } catch (const TrainingError&) {
        throw;
    } catch (const std::exception& e) {
        throw TrainingError(n, epoch, e.what());
    }
    if (!art.critic.all_finite() || !actor_net(art.actor).all_finite())
        throw TrainingError(n, epoch, "network parameters became non-finite");
    return art;
}

std::vector<StepArtifacts> train_backward(const TrainSetup& setup, const TerminalPayoff& payoff,
                                          const StepCallback& on_step) {
    setup.spec.validate();
    setup.schedule.validate();
    if (setup.path_dependent) {
        if (setup.spec.dim != 1)
            throw std::invalid_argument("train_backward: path-dependent states need d = 1");
        monitoring_interval(setup.spec);
    }
    const int N = setup.spec.steps;
    std::vector<StepArtifacts> steps(N);
    for (int n = N - 1; n >= 0; --n) {
        StepArtifacts init = n == N - 1 ? cold_start(setup) : warm_start(steps[n + 1], n, setup);
        const Continuation next =
            n == N - 1 ? Continuation::terminal(payoff) : Continuation::critic(steps[n + 1].critic);
        steps[n] = train_step(n, next, setup, std::move(init));
        if (on_step) on_step(steps[n]);
    }
    return steps;
}

namespace {

constexpr char kMagic[8] = {'U', 'V', 'M', 'S', 'P', 'G', 'C', 'K'};
constexpr std::uint32_t kByteOrderTag = 0x01020304;

}  // namespace

void write_step_checkpoint(std::ostream& os, const StepArtifacts& step) {
    os.write(kMagic, sizeof kMagic);
    write_u32(os, kCheckpointVersion);
    write_u32(os, kByteOrderTag);
    write_u32(os, family_of(step.actor) == PolicyFamily::continuous ? 0 : 1);
    write_u32(os, static_cast<std::uint32_t>(step.step));
    const auto* g = std::get_if<GaussianPolicyState>(&step.actor);
    write_f64(os, g ? g->temperature : 0.0);
    write_u32(os, kOutputOrderingVersion);
    write_mlp(os, actor_net(step.actor));
    write_mlp(os, step.critic);
    if (!os) throw std::runtime_error("checkpoint: write failed");
}

StepArtifacts read_step_checkpoint(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw std::runtime_error("checkpoint: bad magic (not a step checkpoint)");
    if (const auto v = read_u32(is); v != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(v));
    if (read_u32(is) != kByteOrderTag) throw std::runtime_error("checkpoint: bad byte-order tag");
    const auto family = read_u32(is);
    if (family > 1) throw std::runtime_error("checkpoint: unknown policy family");
    StepArtifacts art;
    art.step = static_cast<int>(read_u32(is));
    const double temperature = read_f64(is);
    if (const auto v = read_u32(is); v != kOutputOrderingVersion)
        throw std::runtime_error("checkpoint: output ordering version " + std::to_string(v) +
                                 " does not match this build");
    Mlp actor = read_mlp(is);
    art.critic = read_mlp(is);
    if (family == 0)
        art.actor = GaussianPolicyState{std::move(actor), temperature};
    else
        art.actor = BernoulliPolicyState{std::move(actor)};
    return art;
}

}  // namespace uvm
