// Experiment driver: L-sweep validation, SMI-rate Pareto study, gradient
// check and single ADMM runs. Exit codes: 0 success, 2 infeasible rate
// floor, 1 numerical or input failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "isac/experiments.hpp"

namespace {

using namespace isac;
namespace ex = isac::experiments;

struct CommonOptions {
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, CommonOptions& opts) {
    app->add_option("--config", opts.config_path, "Key/value scenario file (defaults used when omitted)");
    app->add_option("--out", opts.out_path, "Output CSV path (stdout when omitted)");
    app->add_option("--seed", opts.seed, "Override the config seed");
}

ScenarioConfig load(const CommonOptions& opts) {
    ScenarioConfig cfg = opts.config_path.empty() ? ScenarioConfig{} : load_config(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    validate(cfg);
    return cfg;
}

template <typename Writer>
void emit(const std::string& path, Writer&& write) {
    if (path.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file '" + path + "'");
    write(out);
    if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sensing mutual information of pilot+data waveforms and SMI-optimal precoding"};
    app.require_subcommand(1);

    CommonOptions sweep_opts;
    std::vector<int> slots;
    std::optional<long> sweep_trials;
    auto* sweep = app.add_subcommand("l-sweep", "Deterministic equivalent vs Monte-Carlo SMI over L");
    add_common(sweep, sweep_opts);
    sweep->add_option("--slots", slots, "Slot counts (default 4 8 16 32 64 128)");
    sweep->add_option("--trials", sweep_trials, "Override mc_trials");

    CommonOptions pareto_opts;
    int pareto_points = 10;
    auto* pareto = app.add_subcommand("pareto", "SMI-rate trade-off with baselines");
    add_common(pareto, pareto_opts);
    pareto->add_option("--points", pareto_points, "Rate floors k/N * capacity, k = 1..N")->check(CLI::PositiveNumber);

    CommonOptions grad_opts;
    int grad_thetas = 0;
    int grad_directions = 16;
    double grad_h = 1e-6;
    bool grad_orthogonal = false;
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the SMI gradient");
    add_common(gradcheck, grad_opts);
    gradcheck->add_option("--random-thetas", grad_thetas, "Extra random feasible covariances to check");
    gradcheck->add_option("--directions", grad_directions, "Random directions per covariance");
    gradcheck->add_option("--step", grad_h, "Central-difference step");
    gradcheck->add_flag("--orthogonal", grad_orthogonal, "Only directions with a_t^H E a_t = 0");

    CommonOptions admm_opts;
    std::optional<double> admm_r0;
    std::optional<double> admm_fraction;
    auto* admm = app.add_subcommand("admm", "Single ADMM run with per-iteration trace");
    add_common(admm, admm_opts);
    auto* r0_opt = admm->add_option("--r0", admm_r0, "Rate floor in nats (default: config rate_floor)");
    admm->add_option("--r0-fraction", admm_fraction, "Rate floor as a fraction of capacity")->excludes(r0_opt);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sweep) {
            ScenarioConfig cfg = load(sweep_opts);
            if (sweep_trials) cfg.mc_trials = *sweep_trials;
            ex::SweepSpec spec;
            spec.variable = ex::SweepVariable::slots;
            spec.base = cfg;
            spec.output_path = sweep_opts.out_path;
            if (slots.empty()) {
                spec.values = ex::default_slot_grid();
            } else {
                spec.values.assign(slots.begin(), slots.end());
            }
            const auto rows = ex::run_l_sweep(spec);
            emit(spec.output_path, [&](std::ostream& out) { ex::write_l_sweep_csv(rows, cfg, out); });
        } else if (*pareto) {
            const ScenarioConfig cfg = load(pareto_opts);
            ex::SweepSpec spec;
            spec.variable = ex::SweepVariable::rate_floor;
            spec.base = cfg;
            spec.values = ex::default_rate_grid(cfg, pareto_points);
            spec.output_path = pareto_opts.out_path;
            const auto res = ex::run_pareto(spec);
            emit(spec.output_path, [&](std::ostream& out) { ex::write_pareto_csv(res, cfg, out); });
            for (const auto& r : res.proposed) {
                if (r.infeasible) std::cerr << "warning: infeasible rate floor " << r.record.r0 << "\n";
            }
        } else if (*gradcheck) {
            const ScenarioConfig cfg = load(grad_opts);
            const auto s = ex::run_gradcheck(cfg, grad_thetas, grad_directions, grad_h, grad_orthogonal);
            if (!grad_opts.out_path.empty()) {
                emit(grad_opts.out_path, [&](std::ostream& out) { ex::write_gradcheck_csv(s, out); });
            }
            if (grad_orthogonal) {
                std::cout << "max |directional derivative| = " << ex::format_real(s.max_abs) << " (tolerance "
                          << ex::format_real(ex::kOrthogonalTolerance) << ")\n";
            } else {
                std::cout << "max relative error = " << ex::format_real(s.max_rel_error) << " (tolerance "
                          << ex::format_real(ex::kGradcheckTolerance) << ")\n";
            }
            std::cout << (s.passed ? "PASS" : "FAIL") << "\n";
            return s.passed ? 0 : 1;
        } else if (*admm) {
            const ScenarioConfig cfg = load(admm_opts);
            double r0 = cfg.rate_floor;
            if (admm_r0) r0 = *admm_r0;
            if (admm_fraction) r0 = *admm_fraction * ex::waterfilling_capacity(Scenario::build(cfg));
            const auto s = ex::run_admm_once(cfg, r0);
            emit(admm_opts.out_path, [&](std::ostream& out) { ex::write_admm_csv(s, cfg, out); });
            std::cerr << ex::admm_summary_line(s, cfg) << "\n";
        }
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << " (capacity bound " << ex::format_real(e.bound()) << ")\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
