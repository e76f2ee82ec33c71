#include "config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace uvm::cli {

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::price: return "price";
        case Mode::sweep_N: return "sweep_N";
        case Mode::sweep_beta: return "sweep_beta";
        case Mode::sweep_E: return "sweep_E";
        case Mode::oracle: return "oracle";
        case Mode::propcheck: return "propcheck";
    }
    return "?";
}

Mode parse_mode(std::string_view text) {
    for (Mode m : {Mode::price, Mode::sweep_N, Mode::sweep_beta, Mode::sweep_E, Mode::oracle,
                   Mode::propcheck})
        if (to_string(m) == text) return m;
    throw std::invalid_argument("unknown mode '" + std::string(text) + "'");
}

namespace {

std::string_view corr_mode_name(CorrMode m) { return m == CorrMode::uncertain ? "uncertain" : "fixed"; }

CorrMode parse_corr_mode(std::string_view s) {
    if (s == "uncertain") return CorrMode::uncertain;
    if (s == "fixed") return CorrMode::fixed;
    throw std::invalid_argument("expected 'uncertain' or 'fixed', got '" + std::string(s) + "'");
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double to_double(std::string_view s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    return v;
}

template <class Int>
Int to_int(std::string_view s) {
    Int v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
    return v;
}

bool to_bool(std::string_view s) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw std::invalid_argument("expected true or false, got '" + std::string(s) + "'");
}

std::string fmt_list(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += fmt(xs[i]);
    }
    return out;
}

std::vector<double> to_list(std::string_view s) {
    std::vector<double> out;
    std::string item;
    std::istringstream in{std::string(s)};
    while (std::getline(in, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) out.push_back(to_double(t));
    }
    return out;
}

struct Field {
    const char* key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, std::string_view)> set;
};

#define UVM_DOUBLE(KEY, MEMBER)                                                   \
    Field{KEY, [](const ExperimentConfig& c) { return fmt(c.MEMBER); },           \
          [](ExperimentConfig& c, std::string_view v) { c.MEMBER = to_double(v); }}
#define UVM_INT(KEY, MEMBER)                                                          \
    Field{KEY, [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); },    \
          [](ExperimentConfig& c, std::string_view v) {                               \
              c.MEMBER = to_int<decltype(c.MEMBER)>(v);                               \
          }}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        Field{"experiment.name", [](const ExperimentConfig& c) { return c.name; },
              [](ExperimentConfig& c, std::string_view v) { c.name = std::string(v); }},
        Field{"experiment.description", [](const ExperimentConfig& c) { return c.description; },
              [](ExperimentConfig& c, std::string_view v) { c.description = std::string(v); }},
        Field{"experiment.reference",
              [](const ExperimentConfig& c) { return c.reference ? fmt(*c.reference) : std::string("none"); },
              [](ExperimentConfig& c, std::string_view v) {
                  if (v == "none" || v.empty()) c.reference.reset();
                  else c.reference = to_double(v);
              }},
        Field{"experiment.mode", [](const ExperimentConfig& c) { return std::string(to_string(c.mode)); },
              [](ExperimentConfig& c, std::string_view v) { c.mode = parse_mode(v); }},
        UVM_INT("experiment.seed", seed),
        UVM_INT("experiment.paths", paths),
        Field{"experiment.output_dir", [](const ExperimentConfig& c) { return c.output_dir; },
              [](ExperimentConfig& c, std::string_view v) { c.output_dir = std::string(v); }},
        Field{"experiment.sweep_values", [](const ExperimentConfig& c) { return fmt_list(c.sweep_values); },
              [](ExperimentConfig& c, std::string_view v) { c.sweep_values = to_list(v); }},

        UVM_INT("model.dim", model.dim),
        UVM_DOUBLE("model.spot", model.spot),
        UVM_DOUBLE("model.rate", model.rate),
        UVM_DOUBLE("model.horizon", model.horizon),
        UVM_INT("model.steps", model.steps),
        UVM_DOUBLE("model.vol_lo", model.vol_lo),
        UVM_DOUBLE("model.vol_hi", model.vol_hi),
        Field{"model.corr_mode",
              [](const ExperimentConfig& c) { return std::string(corr_mode_name(c.model.corr_mode)); },
              [](ExperimentConfig& c, std::string_view v) { c.model.corr_mode = parse_corr_mode(v); }},
        UVM_DOUBLE("model.corr_lo", model.corr_lo),
        UVM_DOUBLE("model.corr_hi", model.corr_hi),
        UVM_DOUBLE("model.corr_fixed", model.corr_fixed),

        Field{"payoff.kind", [](const ExperimentConfig& c) { return std::string(to_string(c.payoff.kind)); },
              [](ExperimentConfig& c, std::string_view v) { c.payoff.kind = parse_payoff_kind(v); }},
        Field{"payoff.strikes", [](const ExperimentConfig& c) { return fmt_list(c.payoff.strikes); },
              [](ExperimentConfig& c, std::string_view v) { c.payoff.strikes = to_list(v); }},
        UVM_DOUBLE("payoff.sharpe_cap", payoff.sharpe_cap),

        Field{"policy.family", [](const ExperimentConfig& c) { return std::string(to_string(c.family)); },
              [](ExperimentConfig& c, std::string_view v) { c.family = parse_policy_family(v); }},

        UVM_INT("schedule.outer_epochs", schedule.outer_epochs),
        UVM_INT("schedule.inner_epochs", schedule.inner_epochs),
        UVM_DOUBLE("schedule.lr_start", schedule.lr_start),
        UVM_DOUBLE("schedule.lr_end", schedule.lr_end),
        UVM_DOUBLE("schedule.inner_lr_divisor", schedule.inner_lr_divisor),
        UVM_DOUBLE("schedule.temp_start", schedule.temp_start),
        UVM_DOUBLE("schedule.temp_end", schedule.temp_end),
        UVM_DOUBLE("schedule.entropy_start", schedule.entropy_start),
        UVM_DOUBLE("schedule.entropy_end", schedule.entropy_end),
        UVM_DOUBLE("schedule.clip", schedule.clip),
        UVM_DOUBLE("schedule.beta", schedule.beta),
        UVM_DOUBLE("schedule.delta", schedule.delta),
        UVM_INT("schedule.mc_samples", schedule.mc_samples),
        UVM_INT("schedule.minibatch", schedule.minibatch),
        UVM_INT("schedule.hidden", schedule.hidden),
        UVM_DOUBLE("schedule.anneal_midpoint", schedule.shape.midpoint),
        UVM_DOUBLE("schedule.anneal_steepness", schedule.shape.steepness),
        Field{"schedule.plateau_stop",
              [](const ExperimentConfig& c) { return std::string(c.schedule.plateau_stop ? "true" : "false"); },
              [](ExperimentConfig& c, std::string_view v) { c.schedule.plateau_stop = to_bool(v); }},
        UVM_INT("schedule.plateau_patience", schedule.plateau_patience),
    };
    return table;
}

#undef UVM_DOUBLE
#undef UVM_INT

}  // namespace

ModelSpec ExperimentConfig::model_spec() const {
    return ModelSpec::uniform(model.dim, model.spot, model.vol_lo, model.vol_hi, model.rate,
                              model.horizon, model.steps, model.corr_mode, model.corr_lo,
                              model.corr_hi, model.corr_fixed);
}

PayoffSpec ExperimentConfig::payoff_spec() const {
    PayoffSpec p = payoff;
    p.dim = model.dim;
    p.horizon = model.horizon;
    return p;
}

void ExperimentConfig::validate() const {
    auto wrap = [](const char* section, auto&& check) {
        try {
            check();
        } catch (const std::exception& e) {
            throw std::invalid_argument(std::string(section) + ": " + e.what());
        }
    };
    if (model.dim < 1) throw std::invalid_argument("model.dim: must be >= 1");
    if (model.steps < 1) throw std::invalid_argument("model.steps: must be >= 1");
    wrap("model", [&] { model_spec().validate(); });
    wrap("payoff", [&] { payoff_spec().validate(); });
    wrap("schedule", [&] { schedule.validate(); });
    if (payoff.kind == PayoffKind::call_sharpe) {
        wrap("model.steps", [&] { (void)monitoring_interval(model_spec()); });
    }
    if (family == PolicyFamily::bangbang && model.corr_mode == CorrMode::uncertain && model.dim >= 3)
        throw std::invalid_argument(
            "policy.family: bangbang controls the correlation only for d <= 2; "
            "use model.corr_mode = fixed or the continuous family");
    if (paths < 2 || paths % 2 != 0) throw std::invalid_argument("experiment.paths: must be even and >= 2");
    if (mode == Mode::sweep_N || mode == Mode::sweep_beta || mode == Mode::sweep_E) {
        if (sweep_values.empty())
            throw std::invalid_argument("experiment.sweep_values: required for " + std::string(to_string(mode)));
        for (double v : sweep_values) {
            const bool integral = mode != Mode::sweep_beta;
            if (integral && (v < 1 || v != static_cast<long>(v)))
                throw std::invalid_argument("experiment.sweep_values: " + fmt(v) + " is not a positive integer");
            if (!integral && !(v >= 0.0))
                throw std::invalid_argument("experiment.sweep_values: beta must be >= 0");
        }
    }
    if (reference && !(*reference > 0.0)) throw std::invalid_argument("experiment.reference: must be positive");
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    for (const Field& f : fields())
        if (f.get(a) != f.get(b)) return false;
    // Text forms are exact for doubles, but compare the numeric lists directly too.
    return a.payoff.strikes == b.payoff.strikes && a.sweep_values == b.sweep_values &&
           a.reference == b.reference;
}

ExperimentConfig parse_config(std::string_view text, const ExperimentConfig& base) {
    ExperimentConfig cfg = base;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string value = trim(std::string_view(t).substr(eq + 1));
        bool found = false;
        for (const Field& f : fields()) {
            if (key != f.key) continue;
            try {
                f.set(cfg, value);
            } catch (const std::exception& e) {
                throw std::invalid_argument(key + " (line " + std::to_string(lineno) + "): " + e.what());
            }
            found = true;
            break;
        }
        if (!found)
            throw std::invalid_argument("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path, const ExperimentConfig& base) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), base);
}

std::string serialize_config(const ExperimentConfig& config) {
    std::string out;
    std::string section;
    for (const Field& f : fields()) {
        const std::string_view key = f.key;
        const std::string sec(key.substr(0, key.find('.')));
        if (sec != section) {
            if (!section.empty()) out += '\n';
            section = sec;
        }
        out += f.key;
        out += " = ";
        out += f.get(config);
        out += '\n';
    }
    return out;
}

void apply_paper_scale(ExperimentConfig& config) {
    const TrainSchedule full;
    config.schedule.outer_epochs = full.outer_epochs;
    config.schedule.inner_epochs = full.inner_epochs;
    config.schedule.mc_samples = full.mc_samples;
}

}  // namespace uvm::cli
