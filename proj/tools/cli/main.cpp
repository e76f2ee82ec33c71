#include "config.hpp"
#include "presets.hpp"
#include "runner.hpp"

#include <CLI11.hpp>

#include <malloc.h>

#include <iostream>
#include <sstream>

int main(int argc, char** argv) {
    // Training allocates many short-lived matrices above glibc's default mmap
    // threshold; serving them from the heap avoids page-fault churn.
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);

    using namespace uvm::cli;
    CLI::App app{"Robust option prices under uncertain volatility by backward actor-critic training"};
    app.require_subcommand(1);

    std::string config_path, preset_name, out_dir, sweep_param, sweep_values;
    std::uint64_t seed = 0;
    long paths = 0;
    bool paper_scale = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key = value config file (overrides the preset)");
        sub->add_option("--preset", preset_name, "builtin experiment, see list-presets");
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--paths", paths, "Monte Carlo paths for the actor price");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_flag("--paper-scale", paper_scale, "full epoch and sample budgets");
    };

    auto* price = app.add_subcommand("price", "train all steps, then price with actor and critic");
    add_common(price);
    auto* sweep = app.add_subcommand("sweep", "repeat the price run over N, beta or the inner epoch budget E");
    add_common(sweep);
    sweep->add_option("--param", sweep_param, "swept parameter")
        ->check(CLI::IsMember({"N", "beta", "E"}));
    sweep->add_option("--values", sweep_values, "comma-separated values, e.g. 8,16,32,64");
    auto* oracle = app.add_subcommand("oracle", "reference values from finite differences and brute-force DP");
    add_common(oracle);
    auto* propcheck = app.add_subcommand("propcheck", "run the invariant property suite");
    propcheck->add_option("--seed", seed, "master seed");
    auto* show = app.add_subcommand("config", "print the resolved configuration");
    add_common(show);
    auto* list = app.add_subcommand("list-presets", "list builtin experiments");

    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        for (const auto& p : presets())
            std::cout << p.name << "\n    " << p.description << "\n";
        return 0;
    }

    ExperimentConfig cfg;
    try {
        if (!preset_name.empty()) cfg = find_preset(preset_name);
        if (!config_path.empty()) cfg = load_config(config_path, cfg);
        if (paper_scale) apply_paper_scale(cfg);
        if (seed != 0) cfg.seed = seed;
        if (paths != 0) cfg.paths = paths;
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (price->parsed()) cfg.mode = Mode::price;
        if (oracle->parsed()) cfg.mode = Mode::oracle;
        if (propcheck->parsed()) cfg.mode = Mode::propcheck;
        if (sweep->parsed()) {
            if (!sweep_param.empty())
                cfg.mode = sweep_param == "N" ? Mode::sweep_N : sweep_param == "beta" ? Mode::sweep_beta : Mode::sweep_E;
            else if (cfg.mode != Mode::sweep_N && cfg.mode != Mode::sweep_beta && cfg.mode != Mode::sweep_E)
                throw std::invalid_argument("sweep: give --param or a sweep mode in the config");
            if (!sweep_values.empty()) cfg = parse_config("experiment.sweep_values = " + sweep_values, cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return 2;
    }

    if (show->parsed()) {
        std::cout << serialize_config(cfg);
        return 0;
    }

    std::ostringstream cmd;
    for (int i = 0; i < argc; ++i) cmd << (i ? " " : "") << argv[i];
    return run(cfg, cmd.str(), std::cout, std::cerr);
}
