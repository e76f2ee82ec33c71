#include "uvm/neural.hpp"

#include "uvm/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace uvm {

Mlp::Mlp(int in_dim, int hidden_dim, int out_dim)
    : in_(in_dim), hidden_(hidden_dim), out_(out_dim) {
    if (in_dim < 1 || hidden_dim < 1 || out_dim < 1)
        throw std::invalid_argument("Mlp: all layer sizes must be >= 1");
    params_ = Eigen::VectorXd::Zero(off_b2() + out_);
    ln_gain().setOnes();
    shift_ = Eigen::VectorXd::Zero(in_);
    scale_ = Eigen::VectorXd::Ones(in_);
}

Mlp Mlp::xavier(int in_dim, int hidden_dim, int out_dim, RandomStream& rng) {
    Mlp net(in_dim, hidden_dim, out_dim);
    const double a1 = std::sqrt(6.0 / (in_dim + hidden_dim));
    const double a2 = std::sqrt(6.0 / (hidden_dim + out_dim));
    auto w1 = net.w1();
    for (Eigen::Index j = 0; j < w1.cols(); ++j)
        for (Eigen::Index i = 0; i < w1.rows(); ++i) w1(i, j) = rng.uniform(-a1, a1);
    auto w2 = net.w2();
    for (Eigen::Index j = 0; j < w2.cols(); ++j)
        for (Eigen::Index i = 0; i < w2.rows(); ++i) w2(i, j) = rng.uniform(-a2, a2);
    return net;
}

void Mlp::set_input_normalization(Eigen::VectorXd shift, Eigen::VectorXd scale) {
    if (shift.size() != in_ || scale.size() != in_)
        throw std::invalid_argument("Mlp: normalization vectors must have in_dim entries");
    if (!(scale.array() > 0.0).all() || !scale.allFinite() || !shift.allFinite())
        throw std::invalid_argument("Mlp: input scale must be positive and finite");
    shift_ = std::move(shift);
    scale_ = std::move(scale);
}

void Mlp::rebase_input_normalization(const Eigen::VectorXd& shift, const Eigen::VectorXd& scale) {
    const Eigen::VectorXd old_shift = shift_;
    const Eigen::VectorXd old_scale = scale_;
    set_input_normalization(shift, scale);
    const Eigen::VectorXd offset = ((shift - old_shift).array() / old_scale.array()).matrix();
    b1() += w1() * offset;
    w1() = w1() * (scale.array() / old_scale.array()).matrix().asDiagonal();
}

bool Mlp::all_finite() const {
    return params_.allFinite() && shift_.allFinite() && scale_.allFinite();
}

Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& x) {
    ForwardCache cache;
    return forward(net, x, cache);
}

Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& x, ForwardCache& cache) {
    if (x.rows() != net.in_dim())
        throw std::invalid_argument("forward: input has " + std::to_string(x.rows()) +
                                    " rows, network expects " + std::to_string(net.in_dim()));
    if (!x.allFinite()) throw std::invalid_argument("forward: non-finite input");

    const Eigen::Index h = net.hidden_dim();
    cache.input = ((x.colwise() - net.input_shift()).array().colwise() /
                   net.input_scale().array())
                      .matrix();
    Eigen::MatrixXd pre = net.w1() * cache.input;
    pre.colwise() += net.b1();

    const Eigen::RowVectorXd mean = pre.colwise().mean();
    pre.rowwise() -= mean;
    const Eigen::RowVectorXd var = pre.array().square().colwise().sum().matrix() / double(h);
    cache.inv_std = (var.array() + kLayerNormEps).rsqrt().matrix();
    cache.normalized = (pre.array().rowwise() * cache.inv_std.array()).matrix();

    cache.ln_out = (cache.normalized.array().colwise() * net.ln_gain().array()).matrix();
    cache.ln_out.colwise() += net.ln_bias();
    cache.activation =
        (cache.ln_out.array() > 0.0).select(cache.ln_out.array(), cache.ln_out.array().exp() - 1.0);

    Eigen::MatrixXd out = net.w2() * cache.activation;
    out.colwise() += net.b2();
    return out;
}

Eigen::VectorXd backward(const Mlp& net, const ForwardCache& cache,
                         const Eigen::MatrixXd& upstream) {
    if (upstream.rows() != net.out_dim() || upstream.cols() != cache.activation.cols())
        throw std::invalid_argument("backward: upstream gradient shape mismatch");

    const Eigen::Index h = net.hidden_dim();
    Eigen::VectorXd grads(net.param_count());

    Eigen::Index off = 0;
    auto take = [&](Eigen::Index n) {
        Eigen::Map<Eigen::VectorXd> v(grads.data() + off, n);
        off += n;
        return v;
    };
    auto g_w1 = take(h * net.in_dim());
    auto g_b1 = take(h);
    auto g_gain = take(h);
    auto g_bias = take(h);
    auto g_w2 = take(Eigen::Index(net.out_dim()) * h);
    auto g_b2 = take(net.out_dim());

    Eigen::Map<Eigen::MatrixXd>(g_w2.data(), net.out_dim(), h) =
        upstream * cache.activation.transpose();
    g_b2 = upstream.rowwise().sum();

    // ELU'(v) = 1 for v > 0, e^v = ELU(v) + 1 otherwise.
    Eigen::MatrixXd g_ln = net.w2().transpose() * upstream;
    g_ln.array() *=
        (cache.ln_out.array() > 0.0).select(Eigen::ArrayXXd::Ones(h, g_ln.cols()),
                                            cache.activation.array() + 1.0);

    g_gain = (g_ln.array() * cache.normalized.array()).rowwise().sum().matrix();
    g_bias = g_ln.rowwise().sum();

    const Eigen::MatrixXd g_norm = (g_ln.array().colwise() * net.ln_gain().array()).matrix();
    const Eigen::RowVectorXd mean_g = g_norm.colwise().mean();
    const Eigen::RowVectorXd mean_gn =
        (g_norm.array() * cache.normalized.array()).colwise().sum().matrix() / double(h);
    Eigen::MatrixXd g_pre =
        g_norm.array() - cache.normalized.array().rowwise() * mean_gn.array();
    g_pre.rowwise() -= mean_g;
    g_pre.array().rowwise() *= cache.inv_std.array();

    Eigen::Map<Eigen::MatrixXd>(g_w1.data(), h, net.in_dim()) = g_pre * cache.input.transpose();
    g_b1 = g_pre.rowwise().sum();
    return grads;
}

Eigen::VectorXd backward(const Mlp& net, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXd& upstream) {
    ForwardCache cache;
    forward(net, x, cache);
    return backward(net, cache, upstream);
}

AdamState AdamState::for_params(Eigen::Index n) {
    AdamState s;
    s.first_moment = Eigen::VectorXd::Zero(n);
    s.second_moment = Eigen::VectorXd::Zero(n);
    return s;
}

void adam_step(Mlp& net, const Eigen::VectorXd& grads, AdamState& state, double lr) {
    if (!(lr > 0.0)) throw std::invalid_argument("adam_step: learning rate must be positive");
    if (grads.size() != net.param_count())
        throw std::invalid_argument("adam_step: gradient size does not match parameters");
    if (state.first_moment.size() != net.param_count()) {
        if (state.step_count != 0)
            throw std::invalid_argument("adam_step: optimizer state does not match parameters");
        state.first_moment = Eigen::VectorXd::Zero(net.param_count());
        state.second_moment = Eigen::VectorXd::Zero(net.param_count());
    }
    if (!grads.allFinite()) throw NumericalError("adam_step: non-finite gradient");

    state.step_count += 1;
    state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads;
    state.second_moment =
        state.beta2 * state.second_moment + (1.0 - state.beta2) * grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(state.beta1, double(state.step_count));
    const double c2 = 1.0 - std::pow(state.beta2, double(state.step_count));
    net.params().array() -= lr * (state.first_moment.array() / c1) /
                            ((state.second_moment.array() / c2).sqrt() + state.eps_hat);
}

}  // namespace uvm
