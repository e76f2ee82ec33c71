#include <uvm/corrvine.hpp>
#include <uvm/dynamics.hpp>
#include <uvm/neural.hpp>
#include <uvm/policy.hpp>

#include <benchmark/benchmark.h>

using namespace uvm;

namespace {

Eigen::MatrixXd gaussian(int rows, int cols, RandomStream& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

// args: input dim, batch
void BM_MlpForward(benchmark::State& state) {
    RandomStream rng(1);
    const int in = static_cast<int>(state.range(0)), batch = static_cast<int>(state.range(1));
    const Mlp net = Mlp::xavier(in, 32, in + 1, rng);
    const Eigen::MatrixXd x = gaussian(in, batch, rng);
    for (auto _ : state) benchmark::DoNotOptimize(forward(net, x));
    state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpForward)->Args({1, 1024})->Args({20, 1024})->Args({80, 1024});

void BM_MlpBackward(benchmark::State& state) {
    RandomStream rng(2);
    const int in = static_cast<int>(state.range(0)), batch = static_cast<int>(state.range(1));
    const Mlp net = Mlp::xavier(in, 32, in + 1, rng);
    const Eigen::MatrixXd x = gaussian(in, batch, rng);
    ForwardCache cache;
    const Eigen::MatrixXd out = forward(net, x, cache);
    const Eigen::MatrixXd up = gaussian(out.rows(), batch, rng);
    for (auto _ : state) benchmark::DoNotOptimize(backward(net, cache, up));
    state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpBackward)->Args({1, 1024})->Args({20, 1024})->Args({80, 1024});

void BM_AdamStep(benchmark::State& state) {
    RandomStream rng(3);
    Mlp net = Mlp::xavier(20, 32, 21, rng);
    AdamState adam = AdamState::for_params(net.param_count());
    const Eigen::VectorXd g = gaussian(static_cast<int>(net.param_count()), 1, rng) * 1e-3;
    for (auto _ : state) adam_step(net, g, adam, 1e-6);
}
BENCHMARK(BM_AdamStep);

// args: dim, batch; shared identity factor as in the fixed-correlation tests
void BM_LogEulerStepShared(benchmark::State& state) {
    RandomStream rng(4);
    const int d = static_cast<int>(state.range(0)), batch = static_cast<int>(state.range(1));
    const ModelSpec spec = ModelSpec::uniform(d, 100.0, 0.1, 0.2, 0.0, 1.0, 32, CorrMode::fixed);
    const StateBatch x{Eigen::MatrixXd::Constant(d, batch, 100.0), d};
    StepControls c;
    c.sigma = Eigen::MatrixXd::Constant(d, batch, 0.15);
    c.shared_factor = Eigen::MatrixXd::Identity(d, d);
    const GaussianBatch xi = draw_increments(batch, d, rng);
    for (auto _ : state) benchmark::DoNotOptimize(log_euler_step(x, c, xi, spec));
    state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_LogEulerStepShared)->Args({2, 16384})->Args({20, 16384});

// per-path factors from the continuous policy with uncertain correlation
void BM_LogEulerStepPerPath(benchmark::State& state) {
    RandomStream rng(5);
    const int d = static_cast<int>(state.range(0)), batch = static_cast<int>(state.range(1));
    const ModelSpec spec = ModelSpec::uniform(d, 100.0, 0.1, 0.2, 0.0, 1.0, 32, CorrMode::uncertain, -0.5, 0.5);
    const StateBatch x{Eigen::MatrixXd::Constant(d, batch, 100.0), d};
    const StepControls c = controls_from_latents(gaussian(latent_dim(spec), batch, rng), spec);
    const GaussianBatch xi = draw_increments(batch, d, rng);
    for (auto _ : state) benchmark::DoNotOptimize(log_euler_step(x, c, xi, spec));
    state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_LogEulerStepPerPath)->Args({3, 16384})->Args({5, 16384});

void BM_ControlsFromLatents(benchmark::State& state) {
    RandomStream rng(6);
    const int d = static_cast<int>(state.range(0));
    const ModelSpec spec = ModelSpec::uniform(d, 100.0, 0.1, 0.2, 0.0, 1.0, 32, CorrMode::uncertain, -0.5, 0.5);
    const Eigen::MatrixXd z = gaussian(latent_dim(spec), 4096, rng);
    for (auto _ : state) benchmark::DoNotOptimize(controls_from_latents(z, spec));
    state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(BM_ControlsFromLatents)->Arg(3)->Arg(5)->Arg(10);

void BM_CvineBuild(benchmark::State& state) {
    RandomStream rng(7);
    const int d = static_cast<int>(state.range(0));
    std::vector<double> y(corr_pair_count(d));
    for (double& v : y) v = rng.uniform(-0.9, 0.9);
    const PartialCorrVector partials(d, y);
    for (auto _ : state) benchmark::DoNotOptimize(cvine_build(partials));
}
BENCHMARK(BM_CvineBuild)->Arg(3)->Arg(10)->Arg(40);

}  // namespace

BENCHMARK_MAIN();
