#include "runner.hpp"

#include "propcheck.hpp"

#include <uvm/errors.hpp>
#include <uvm/oracle.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <ostream>
#include <stdexcept>

#ifndef UVM_GIT_HASH
#define UVM_GIT_HASH "unknown"
#endif

namespace uvm::cli {

namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string corr_mode_text(const ExperimentConfig& c) {
    return c.model.corr_mode == CorrMode::uncertain ? "uncertain" : "fixed";
}

void write_metadata(const fs::path& dir, const ExperimentConfig& config, const std::string& command_line) {
    fs::create_directories(dir);
    std::ofstream os(dir / "run_metadata.txt");
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    os << "# uvm-spg run\n"
       << "git_hash = " << UVM_GIT_HASH << '\n'
       << "started_utc = " << stamp << '\n'
       << "seed = " << config.seed << '\n'
       << "command = " << command_line << "\n\n"
       << serialize_config(config);
}

// Payoff of a single terminal state, for the grid oracles. The grid oracles
// call this millions of times, so the state buffer is reused.
double payoff_at(const TerminalPayoff& g, const Eigen::VectorXd& x) {
    thread_local StateBatch s;
    s.values = x;
    s.asset_dim = static_cast<int>(x.size());
    return g(s)[0];
}

template <class F>
std::pair<double, double> timed(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    const double v = f();
    return {v, seconds_since(t0)};
}

}  // namespace

TrainedRun train_and_price(const ExperimentConfig& config, const fs::path& out_dir, std::ostream* log) {
    config.validate();
    TrainSetup setup;
    setup.spec = config.model_spec();
    setup.schedule = config.schedule;
    setup.family = config.family;
    setup.path_dependent = is_path_dependent(config.payoff_spec());
    setup.seed = config.seed;
    const TerminalPayoff payoff = make_payoff(config.payoff_spec());

    TrainedRun run;
    const auto t0 = std::chrono::steady_clock::now();
    auto on_step = [&](const StepArtifacts& s) {
        if (!out_dir.empty()) save_checkpoint(out_dir, s);
        if (log && !s.learning_curve.empty()) {
            const EpochRecord& last = s.learning_curve.back();
            *log << "  step " << s.step << ": critic loss " << last.critic_loss << ", final critic "
                 << s.final_critic_loss << ", clip " << last.clip_fraction << " ("
                 << seconds_since(t0) << " s)\n";
        }
    };
    run.steps = train_backward(setup, payoff, on_step);
    run.train_seconds = seconds_since(t0);
    if (!out_dir.empty()) write_learning_curves(out_dir / "learning_curves.csv", run.steps);

    run.report = price(run.steps, setup.spec, payoff, config.paths, config.seed, setup.path_dependent);
    run.report.runtime_seconds += run.train_seconds;
    if (config.family == PolicyFamily::continuous && setup.spec.controls_correlation() &&
        setup.spec.dim >= 3 && config.reference) {
        try {
            run.report.violation_impact = clamped_price_impact(run.steps, setup.spec, payoff, config.paths,
                                                               config.seed, *config.reference);
        } catch (const PsdRepairError& e) {
            if (log) *log << "  clamped-correlation diagnostic skipped: " << e.what() << '\n';
        }
    }
    return run;
}

ResultRow result_row(const ExperimentConfig& config, const TrainedRun& run) {
    ResultRow r;
    r.option = std::string(to_string(config.payoff.kind));
    r.dim = config.model.dim;
    r.policy_family = std::string(to_string(config.family));
    r.corr_mode = corr_mode_text(config);
    r.steps = config.model.steps;
    r.actor_price = run.report.actor_price;
    r.ci_halfwidth = run.report.ci_halfwidth;
    r.critic_price = run.report.critic_price;
    r.reference = config.reference;
    r.runtime_s = run.report.runtime_seconds;
    r.seed = config.seed;
    r.violation_impact = run.report.violation_impact;
    return r;
}

std::vector<ResultRow> oracle_rows(const ExperimentConfig& config) {
    config.validate();
    const ModelSpec spec = config.model_spec();
    const PayoffSpec pspec = config.payoff_spec();
    if (is_path_dependent(pspec))
        throw std::invalid_argument("oracle: no reference solver for path-dependent payoffs");
    const TerminalPayoff g = make_payoff(pspec);
    const double lo = spec.vol_lo[0], hi = spec.vol_hi[0];

    std::vector<ResultRow> rows;
    auto row = [&](const std::string& method, std::pair<double, double> value_and_time) {
        ResultRow r;
        r.option = std::string(to_string(pspec.kind));
        r.dim = spec.dim;
        r.policy_family = method;
        r.corr_mode = corr_mode_text(config);
        r.steps = spec.steps;
        r.reference = value_and_time.first;
        r.runtime_s = value_and_time.second;
        r.seed = config.seed;
        rows.push_back(r);
    };

    if (spec.dim == 1) {
        const Payoff1d g1 = [&](double x) { return payoff_at(g, Eigen::VectorXd::Constant(1, x)); };
        const double x0 = spec.spot[0];
        row("bsb1d_fd", timed([&] {
                const FdGrid grid = FdGrid::stable(2001, hi, spec.rate, spec.horizon);
                return bsb1d_solve(g1, x0, lo, hi, spec.rate, spec.horizon, grid).value_at(x0);
            }));
        row("bsb1d_fd_piecewise", timed([&] {
                return bsb1d_piecewise_solve(g1, x0, {lo, hi}, spec.rate, spec.horizon, spec.steps, 2001)
                    .value_at(x0);
            }));
        if (pspec.kind == PayoffKind::geo_call)
            row("black_scholes_sigma_max", timed([&] {
                    return black_scholes_call(x0, pspec.strikes[0], hi, spec.rate, spec.horizon);
                }));
    }
    if (spec.dim <= 2 && spec.steps <= 3) {
        std::vector<DpAction> actions;
        std::vector<double> corrs = {0.0};
        if (spec.dim == 2)
            corrs = spec.controls_correlation()
                        ? std::vector<double>{spec.corr_bounds.lower(0, 1), spec.corr_bounds.upper(0, 1)}
                        : std::vector<double>{spec.corr_fixed(0, 1)};
        for (unsigned mask = 0; mask < (1u << spec.dim); ++mask)
            for (double c : corrs) {
                DpAction a;
                a.sigma.resize(spec.dim);
                for (int i = 0; i < spec.dim; ++i) a.sigma[i] = (mask >> i) & 1u ? spec.vol_hi[i] : spec.vol_lo[i];
                a.corr = Eigen::MatrixXd::Identity(spec.dim, spec.dim);
                if (spec.dim == 2) a.corr(0, 1) = a.corr(1, 0) = c;
                actions.push_back(a);
            }
        const PayoffBatchNd gn = [&](const Eigen::MatrixXd& x) {
            StateBatch s;
            s.values = x;
            s.asset_dim = spec.dim;
            return Eigen::VectorXd(g(s));
        };
        row("dp_bruteforce", timed([&] { return dp_bruteforce(spec, gn, actions); }));
    }
    if (rows.empty())
        throw std::invalid_argument("oracle: no reference solver for d = " + std::to_string(spec.dim) +
                                    ", N = " + std::to_string(spec.steps) +
                                    " (finite differences need d = 1, brute-force DP needs d <= 2 and N <= 3)");
    return rows;
}

int run(const ExperimentConfig& config, const std::string& command_line, std::ostream& log,
        std::ostream& err) {
    if (config.mode == Mode::propcheck) {
        bool ok = true;
        for (const CheckResult& r : run_property_suite(config.seed)) {
            log << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
            ok = ok && r.passed;
        }
        return ok ? 0 : 1;
    }

    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        err << "invalid config: " << e.what() << '\n';
        return 2;
    }

    const fs::path out = config.output_dir;
    write_metadata(out, config, command_line);
    const fs::path results = out / "results.csv";

    if (config.mode == Mode::oracle) {
        try {
            for (const ResultRow& r : oracle_rows(config)) {
                append_result(results, r);
                log << r.policy_family << ": " << *r.reference << '\n';
            }
        } catch (const std::invalid_argument& e) {
            err << e.what() << '\n';
            return 2;
        }
        return 0;
    }

    std::vector<std::pair<ExperimentConfig, fs::path>> jobs;
    if (config.mode == Mode::price) {
        jobs.emplace_back(config, out);
    } else {
        for (double v : config.sweep_values) {
            ExperimentConfig c = config;
            std::string tag;
            char buf[32];
            std::snprintf(buf, sizeof buf, "%g", v);
            if (config.mode == Mode::sweep_N) {
                c.model.steps = static_cast<int>(v);
                tag = std::string("N_") + buf;
            } else if (config.mode == Mode::sweep_beta) {
                c.schedule.beta = v;
                tag = std::string("beta_") + buf;
            } else {
                c.schedule.inner_epochs = static_cast<int>(v);
                tag = std::string("E_") + buf;
            }
            try {
                c.validate();
            } catch (const std::invalid_argument& e) {
                err << "invalid sweep value " << buf << ": " << e.what() << '\n';
                return 2;
            }
            jobs.emplace_back(c, out / tag);
        }
    }

    for (const auto& [c, dir] : jobs) {
        log << c.name << " " << to_string(c.payoff.kind) << " d=" << c.model.dim << " N=" << c.model.steps
            << " " << to_string(c.family) << " beta=" << c.schedule.beta
            << " E_inner=" << c.schedule.inner_epochs << '\n';
        TrainedRun run;
        try {
            run = train_and_price(c, dir, &log);
        } catch (const TrainingError& e) {
            err << "training failed at " << e.what() << "; checkpoints of completed steps are in "
                << (dir / "checkpoints").string() << '\n';
            return 3;
        } catch (const std::exception& e) {
            err << "run failed: " << e.what() << '\n';
            return 3;
        }
        const ResultRow r = result_row(c, run);
        append_result(results, r);
        log << "  actor " << *r.actor_price << " +- " << *r.ci_halfwidth << ", critic " << *r.critic_price;
        if (r.reference) log << ", reference " << *r.reference;
        if (r.violation_impact) log << ", clamped impact " << *r.violation_impact;
        log << " (" << r.runtime_s << " s)\n";
    }
    return 0;
}

}  // namespace uvm::cli
