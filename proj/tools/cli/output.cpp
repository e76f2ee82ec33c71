#include "output.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace uvm::cli {

namespace {

const char* kResultsHeader =
    "option,d,policy_family,corr_mode,N,actor_price,ci_halfwidth,critic_price,reference,"
    "runtime_s,seed,violation_impact";

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::optional<double> parse_opt(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return std::stod(s);
}

}  // namespace

void append_result(const std::filesystem::path& file, const ResultRow& r) {
    const bool fresh = !std::filesystem::exists(file) || std::filesystem::file_size(file) == 0;
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream os(file, std::ios::app);
    if (!os) throw std::runtime_error("cannot open " + file.string());
    if (fresh) os << kResultsSchema << '\n' << kResultsHeader << '\n';
    os << r.option << ',' << r.dim << ',' << r.policy_family << ',' << r.corr_mode << ','
       << r.steps << ',' << opt(r.actor_price) << ',' << opt(r.ci_halfwidth) << ','
       << opt(r.critic_price) << ',' << opt(r.reference) << ',' << num(r.runtime_s) << ','
       << r.seed << ',' << opt(r.violation_impact) << '\n';
}

std::vector<ResultRow> read_results(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw std::runtime_error("cannot open " + file.string());
    std::string line;
    if (!std::getline(is, line) || line != kResultsSchema)
        throw std::runtime_error(file.string() + ": missing " + std::string(kResultsSchema));
    if (!std::getline(is, line) || line != kResultsHeader)
        throw std::runtime_error(file.string() + ": unexpected column header");
    std::vector<ResultRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 12) throw std::runtime_error(file.string() + ": bad row '" + line + "'");
        ResultRow r;
        r.option = f[0];
        r.dim = std::stoi(f[1]);
        r.policy_family = f[2];
        r.corr_mode = f[3];
        r.steps = std::stoi(f[4]);
        r.actor_price = parse_opt(f[5]);
        r.ci_halfwidth = parse_opt(f[6]);
        r.critic_price = parse_opt(f[7]);
        r.reference = parse_opt(f[8]);
        r.runtime_s = std::stod(f[9]);
        r.seed = std::stoull(f[10]);
        r.violation_impact = parse_opt(f[11]);
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_learning_curves(const std::filesystem::path& file, const std::vector<StepArtifacts>& steps) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream os(file);
    if (!os) throw std::runtime_error("cannot open " + file.string());
    os << kCurvesSchema << '\n'
       << "step,epoch,critic_loss,actor_objective,penalty,entropy,clip_fraction,lr,lambda_or_gamma\n";
    for (const auto& s : steps)
        for (const auto& e : s.learning_curve)
            os << e.step << ',' << e.epoch << ',' << num(e.critic_loss) << ',' << num(e.actor_objective)
               << ',' << num(e.penalty) << ',' << num(e.entropy) << ',' << num(e.clip_fraction) << ','
               << num(e.lr) << ',' << num(e.lambda_or_gamma) << '\n';
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int step) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%04d.ckpt", step);
    return dir / "checkpoints" / name;
}

void save_checkpoint(const std::filesystem::path& dir, const StepArtifacts& step) {
    const auto path = checkpoint_path(dir, step.step);
    std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    write_step_checkpoint(os, step);
}

}  // namespace uvm::cli
