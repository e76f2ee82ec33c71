#include "uvm/dynamics.hpp"

#include "uvm/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace uvm {

Eigen::MatrixXd StepControls::factor(Eigen::Index b) const {
    if (!per_path()) return shared_factor;
    const int d = static_cast<int>(sigma.rows());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k <= i; ++k) L(i, k) = packed_factors(packed_index(i, k), b);
    return L;
}

StepControls StepControls::tiled() const {
    StepControls out;
    out.sigma.resize(sigma.rows(), 2 * sigma.cols());
    out.sigma << sigma, sigma;
    out.shared_factor = shared_factor;
    if (per_path()) {
        out.packed_factors.resize(packed_factors.rows(), 2 * packed_factors.cols());
        out.packed_factors << packed_factors, packed_factors;
    }
    return out;
}

Eigen::VectorXd pack_lower(const Eigen::MatrixXd& lower) {
    const int d = static_cast<int>(lower.rows());
    Eigen::VectorXd p(packed_size(d));
    for (int i = 0; i < d; ++i)
        for (int k = 0; k <= i; ++k) p[packed_index(i, k)] = lower(i, k);
    return p;
}

StateBatch log_euler_step(const StateBatch& x, const StepControls& controls,
                          const GaussianBatch& xi, const ModelSpec& spec) {
    const int d = spec.dim;
    const Eigen::Index batch = x.size();
    if (x.asset_dim != d || controls.sigma.rows() != d || xi.draws.rows() != d)
        throw std::invalid_argument("log_euler_step: dimension mismatch");
    if (controls.size() != batch || xi.size() != batch)
        throw std::invalid_argument("log_euler_step: batch size mismatch");
    if (controls.per_path() ? controls.packed_factors.cols() != batch
                            : controls.shared_factor.rows() != d)
        throw std::invalid_argument("log_euler_step: correlation factor shape mismatch");

    const double dt = spec.dt();
    const double sqdt = std::sqrt(dt);

    Eigen::MatrixXd corr_noise(d, batch);  // L xi
    Eigen::MatrixXd row_norm2(d, batch);   // sum_k L_ik^2
    if (controls.per_path()) {
        for (Eigen::Index b = 0; b < batch; ++b) {
            for (int i = 0; i < d; ++i) {
                double s = 0.0, n2 = 0.0;
                for (int k = 0; k <= i; ++k) {
                    const double l = controls.packed_factors(packed_index(i, k), b);
                    s += l * xi.draws(k, b);
                    n2 += l * l;
                }
                corr_noise(i, b) = s;
                row_norm2(i, b) = n2;
            }
        }
    } else {
        const Eigen::MatrixXd L = controls.shared_factor.triangularView<Eigen::Lower>();
        corr_noise.noalias() = L * xi.draws;
        row_norm2 = L.rowwise().squaredNorm().replicate(1, batch);
    }

    StateBatch out = x;
    const Eigen::ArrayXXd sig = controls.sigma.array();
    const Eigen::ArrayXXd exponent = (spec.rate - 0.5 * sig.square() * row_norm2.array()) * dt +
                                     sig * corr_noise.array() * sqdt;
    out.values.topRows(d).array() = x.values.topRows(d).array() * exponent.exp();

    const auto assets = out.values.topRows(d);
    if (!assets.allFinite() || !(assets.array() > 0.0).all())
        throw NumericalError("log_euler_step: non-finite or non-positive state (overflow)");
    return out;
}

StateBatch sample_states(int n, int batch, const ModelSpec& spec, RandomStream& rng) {
    if (n < 0 || n >= spec.steps)
        throw std::invalid_argument("sample_states: need 0 <= n <= N-1");
    if (batch < 0) throw std::invalid_argument("sample_states: negative batch");
    const int d = spec.dim;
    const double t = spec.time(n);
    const double sqt = std::sqrt(t);
    StateBatch out{Eigen::MatrixXd(d, batch), d};
    for (int b = 0; b < batch; ++b) {
        for (int i = 0; i < d; ++i) {
            const double s = rng.uniform(spec.vol_lo[i], spec.vol_hi[i]);
            const double y = rng.normal();
            out.values(i, b) = spec.spot[i] * std::exp((spec.rate - 0.5 * s * s) * t + s * sqt * y);
        }
    }
    return out;
}

int monitoring_interval(const ModelSpec& spec) {
    const double months = 12.0 * spec.horizon;
    const long m = std::lround(months);
    if (m < 1 || std::abs(months - double(m)) > 1e-9)
        throw std::invalid_argument("monitoring: 12 T must be a positive integer");
    if (spec.steps % m != 0)
        throw std::invalid_argument("monitoring: N = " + std::to_string(spec.steps) +
                                    " is not a multiple of the " + std::to_string(m) +
                                    " monitoring dates");
    return static_cast<int>(spec.steps / m);
}

StateBatch sample_path_states(int n, int batch, const ModelSpec& spec, RandomStream& rng) {
    if (spec.dim != 1)
        throw std::invalid_argument("sample_path_states: path-dependent states require d = 1");
    if (n < 0 || n >= spec.steps)
        throw std::invalid_argument("sample_path_states: need 0 <= n <= N-1");
    const int interval = monitoring_interval(spec);
    const int months_done = n / interval;
    const double month = 1.0 / 12.0;
    const double t = spec.time(n);
    const double tau = months_done * month;
    const double x0 = spec.spot[0];

    StateBatch out{Eigen::MatrixXd(3, batch), 1};
    for (int b = 0; b < batch; ++b) {
        const double s = rng.uniform(spec.vol_lo[0], spec.vol_hi[0]);
        const double drift = spec.rate - 0.5 * s * s;
        double log_x = std::log(x0);
        double a1 = 0.0;
        for (int k = 0; k < months_done; ++k) {
            const double ret = drift * month + s * std::sqrt(month) * rng.normal();
            a1 += ret * ret;
            log_x += ret;
        }
        const double a2 = std::exp(log_x);
        const double rest = t - tau;
        const double x = a2 * std::exp(drift * rest + s * std::sqrt(rest) * rng.normal());
        out.values(0, b) = x;
        out.values(1, b) = a1;
        out.values(2, b) = a2;
    }
    return out;
}

GaussianBatch draw_increments(int batch, int dim, RandomStream& rng) {
    if (batch % 2 != 0) throw std::invalid_argument("draw_increments: batch must be even");
    if (batch < 0 || dim < 1) throw std::invalid_argument("draw_increments: bad shape");
    const int half = batch / 2;
    GaussianBatch g{Eigen::MatrixXd(dim, batch), true};
    for (int b = 0; b < half; ++b)
        for (int i = 0; i < dim; ++i) g.draws(i, b) = rng.normal();
    g.draws.rightCols(half) = -g.draws.leftCols(half);
    return g;
}

StateBatch augment_path_state(const StateBatch& x_prev, const StateBatch& x_new, int n,
                              const ModelSpec& spec) {
    if (!x_prev.augmented() || !x_new.augmented() || x_prev.size() != x_new.size())
        throw std::invalid_argument("augment_path_state: augmented batches of equal size required");
    const int interval = monitoring_interval(spec);
    const int d = x_new.asset_dim;
    StateBatch out = x_new;
    out.values.row(d) = x_prev.values.row(d);
    out.values.row(d + 1) = x_prev.values.row(d + 1);
    if ((n + 1) % interval != 0) return out;
    for (Eigen::Index b = 0; b < out.size(); ++b) {
        const double r = std::log(x_new.values(0, b) / x_prev.values(d + 1, b));
        out.values(d, b) += r * r;
        out.values(d + 1, b) = x_new.values(0, b);
    }
    return out;
}

StateBatch initial_states(int batch, const ModelSpec& spec, bool augmented) {
    const int d = spec.dim;
    StateBatch out{Eigen::MatrixXd(augmented ? d + 2 : d, batch), d};
    out.values.topRows(d) = spec.spot.replicate(1, batch);
    if (augmented) {
        out.values.row(d).setZero();
        out.values.row(d + 1).setConstant(spec.spot[0]);
    }
    return out;
}

Eigen::MatrixXd encode_states(const StateBatch& x, const ModelSpec& spec) {
    const int d = spec.dim;
    Eigen::MatrixXd f(x.state_dim(), x.size());
    f.topRows(d) = (x.values.topRows(d).array().colwise() / spec.spot.array()).log().matrix();
    if (x.augmented()) {
        f.row(d) = x.values.row(d);
        f.row(d + 1) = (x.values.row(d + 1).array() / spec.spot[0]).log().matrix();
    }
    return f;
}

namespace {

// Moments of ln(X_t / x0) when sigma ~ U[lo, hi] and Y ~ N(0, 1).
struct LogMoments {
    double mean;
    double stddev;
};

LogMoments log_moments(double lo, double hi, double rate, double t, double t_scale) {
    double m2, m4;
    if (hi - lo < 1e-14) {
        m2 = lo * lo;
        m4 = m2 * m2;
    } else {
        m2 = (lo * lo + lo * hi + hi * hi) / 3.0;
        m4 = (std::pow(hi, 5) - std::pow(lo, 5)) / (5.0 * (hi - lo));
    }
    const double var_s2 = std::max(m4 - m2 * m2, 0.0);
    const double var = t_scale * t_scale * var_s2 / 4.0 + m2 * t_scale;
    return {(rate - 0.5 * m2) * t, std::sqrt(var)};
}

double mean_sigma2(double lo, double hi) { return (lo * lo + lo * hi + hi * hi) / 3.0; }

}  // namespace

FeatureNormalization feature_normalization(int n, const ModelSpec& spec, bool augmented) {
    const int d = spec.dim;
    const int rows = augmented ? d + 2 : d;
    FeatureNormalization fn{Eigen::VectorXd(rows), Eigen::VectorXd(rows)};
    const double t = spec.time(n);
    const double t_scale = std::max(t, spec.dt());
    for (int i = 0; i < d; ++i) {
        const auto mom = log_moments(spec.vol_lo[i], spec.vol_hi[i], spec.rate, t, t_scale);
        fn.shift[i] = mom.mean;
        fn.scale[i] = mom.stddev;
    }
    if (augmented) {
        const int interval = monitoring_interval(spec);
        const int months = n / interval;
        const double tau = months / 12.0;
        const double s2 = mean_sigma2(spec.vol_lo[0], spec.vol_hi[0]);
        fn.shift[d] = s2 * tau;
        fn.scale[d] = s2 * std::max(tau, 1.0 / 12.0);
        const auto mom = log_moments(spec.vol_lo[0], spec.vol_hi[0], spec.rate, tau,
                                     std::max(tau, 1.0 / 12.0));
        fn.shift[d + 1] = mom.mean;
        fn.scale[d + 1] = mom.stddev;
    }
    return fn;
}

}  // namespace uvm
