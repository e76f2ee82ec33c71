#pragma once

#include "uvm/random.hpp"

#include <Eigen/Dense>

namespace uvm {

/// One-hidden-layer network: out = W2 ELU(LayerNorm(W1 normalize(x) + b1)) + b2.
///
/// Batches are column-major: one sample per column. Trainable parameters live
/// in a single flat vector laid out as
///   W1 (hidden x in, column-major) | b1 | ln_gain | ln_bias | W2 (out x hidden) | b2
/// so optimizers and checkpoints can treat them as one array. The input
/// normalization (x - shift) / scale is fixed, not trained.
class Mlp {
public:
    Mlp() = default;
    Mlp(int in_dim, int hidden_dim, int out_dim);

    /// Symmetric uniform initialization in +-sqrt(6 / (fan_in + fan_out));
    /// biases zero, layer-norm gain one, bias zero.
    static Mlp xavier(int in_dim, int hidden_dim, int out_dim, RandomStream& rng);

    int in_dim() const { return in_; }
    int hidden_dim() const { return hidden_; }
    int out_dim() const { return out_; }
    Eigen::Index param_count() const { return params_.size(); }

    Eigen::VectorXd& params() { return params_; }
    const Eigen::VectorXd& params() const { return params_; }

    Eigen::Map<Eigen::MatrixXd> w1() { return {params_.data() + off_w1(), hidden_, in_}; }
    Eigen::Map<const Eigen::MatrixXd> w1() const { return {params_.data() + off_w1(), hidden_, in_}; }
    Eigen::Map<Eigen::VectorXd> b1() { return {params_.data() + off_b1(), hidden_}; }
    Eigen::Map<const Eigen::VectorXd> b1() const { return {params_.data() + off_b1(), hidden_}; }
    Eigen::Map<Eigen::VectorXd> ln_gain() { return {params_.data() + off_gain(), hidden_}; }
    Eigen::Map<const Eigen::VectorXd> ln_gain() const { return {params_.data() + off_gain(), hidden_}; }
    Eigen::Map<Eigen::VectorXd> ln_bias() { return {params_.data() + off_bias(), hidden_}; }
    Eigen::Map<const Eigen::VectorXd> ln_bias() const { return {params_.data() + off_bias(), hidden_}; }
    Eigen::Map<Eigen::MatrixXd> w2() { return {params_.data() + off_w2(), out_, hidden_}; }
    Eigen::Map<const Eigen::MatrixXd> w2() const { return {params_.data() + off_w2(), out_, hidden_}; }
    Eigen::Map<Eigen::VectorXd> b2() { return {params_.data() + off_b2(), out_}; }
    Eigen::Map<const Eigen::VectorXd> b2() const { return {params_.data() + off_b2(), out_}; }

    const Eigen::VectorXd& input_shift() const { return shift_; }
    const Eigen::VectorXd& input_scale() const { return scale_; }

    /// Replaces the input normalization; the network function changes.
    void set_input_normalization(Eigen::VectorXd shift, Eigen::VectorXd scale);

    /// Replaces the input normalization and folds the change into W1/b1 so the
    /// map x -> output stays the same.
    void rebase_input_normalization(const Eigen::VectorXd& shift, const Eigen::VectorXd& scale);

    bool all_finite() const;

private:
    Eigen::Index off_w1() const { return 0; }
    Eigen::Index off_b1() const { return Eigen::Index(hidden_) * in_; }
    Eigen::Index off_gain() const { return off_b1() + hidden_; }
    Eigen::Index off_bias() const { return off_gain() + hidden_; }
    Eigen::Index off_w2() const { return off_bias() + hidden_; }
    Eigen::Index off_b2() const { return off_w2() + Eigen::Index(out_) * hidden_; }

    int in_ = 0;
    int hidden_ = 0;
    int out_ = 0;
    Eigen::VectorXd params_;
    Eigen::VectorXd shift_;
    Eigen::VectorXd scale_;
};

/// Intermediate activations kept for the backward pass.
struct ForwardCache {
    Eigen::MatrixXd input;       // normalized input
    Eigen::MatrixXd normalized;  // layer-norm output before the affine map
    Eigen::RowVectorXd inv_std;
    Eigen::MatrixXd activation;  // ELU output
    Eigen::MatrixXd ln_out;      // affine layer-norm output (ELU argument)
};

inline constexpr double kLayerNormEps = 1e-12;

Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& x);
Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& x, ForwardCache& cache);

/// Gradient of sum_b <upstream_b, out_b> with respect to every trainable
/// parameter, in the flat layout of Mlp::params().
Eigen::VectorXd backward(const Mlp& net, const ForwardCache& cache,
                         const Eigen::MatrixXd& upstream);
Eigen::VectorXd backward(const Mlp& net, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXd& upstream);

struct AdamState {
    Eigen::VectorXd first_moment;
    Eigen::VectorXd second_moment;
    long step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_hat = 1e-8;

    static AdamState for_params(Eigen::Index n);
};

/// One bias-corrected Adam descent step. Throws NumericalError on non-finite
/// gradients, std::invalid_argument on lr <= 0 or shape mismatch.
void adam_step(Mlp& net, const Eigen::VectorXd& grads, AdamState& state, double lr);

/// Independent copy of `source`, used to warm-start the previous time step.
inline Mlp transfer_init(const Mlp& source) { return source; }

}  // namespace uvm
