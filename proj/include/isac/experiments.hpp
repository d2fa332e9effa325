#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "isac/config.hpp"
#include "isac/gradient.hpp"
#include "isac/optimizer.hpp"
#include "isac/scenario.hpp"
#include "isac/smi.hpp"

namespace isac::experiments {

// ---------------------------------------------------------------------------
// CSV helpers: comma separated, '.' decimal point, 17 significant digits.

inline std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void header(std::initializer_list<const char*> names) {
        bool first = true;
        for (const char* n : names) {
            if (!first) out_ << ',';
            out_ << n;
            first = false;
        }
        out_ << '\n';
    }

    template <typename... Cells>
    void row(const Cells&... cells) {
        bool first = true;
        ((emit(cells, first)), ...);
        out_ << '\n';
    }

private:
    void emit(double v, bool& first) { sep(first); out_ << format_real(v); }
    void emit(long v, bool& first) { sep(first); out_ << v; }
    void emit(int v, bool& first) { sep(first); out_ << v; }
    void emit(const std::string& v, bool& first) { sep(first); out_ << v; }
    void emit(const char* v, bool& first) { sep(first); out_ << v; }
    void sep(bool& first) {
        if (!first) out_ << ',';
        first = false;
    }

    std::ostream& out_;
};

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
/// written by index; scheduling never affects them.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned threads = 0) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// ---------------------------------------------------------------------------

enum class SweepVariable { slots, rate_floor };

struct SweepSpec {
    SweepVariable variable = SweepVariable::slots;
    std::vector<double> values;
    ScenarioConfig base;
    std::string output_path;
};

inline void validate(const SweepSpec& spec, SweepVariable expected) {
    if (spec.variable != expected) throw InvalidArgument("sweep variable does not match the experiment");
    if (spec.values.empty()) throw InvalidArgument("sweep values must be nonempty");
    for (std::size_t i = 1; i < spec.values.size(); ++i) {
        if (!(spec.values[i] > spec.values[i - 1])) {
            throw InvalidArgument("sweep values must be strictly increasing");
        }
    }
}

inline std::vector<double> default_slot_grid() { return {4, 8, 16, 32, 64, 128}; }

// ---------------------------------------------------------------------------
// L sweep: deterministic equivalent vs Monte-Carlo at isotropic Theta.

struct LSweepRow {
    int slots = 0;
    double smi_theoretical = 0.0;
    double smi_empirical_mean = 0.0;
    double smi_empirical_stderr = 0.0;
    double fp_residual = 0.0;
    double rel_error = 0.0;
};

inline std::vector<LSweepRow> run_l_sweep(const SweepSpec& spec, unsigned threads = 0) {
    validate(spec, SweepVariable::slots);
    std::vector<LSweepRow> rows(spec.values.size());
    for (double v : spec.values) {
        if (v != std::floor(v) || v < spec.base.n_tx) {
            throw InvalidArgument("slot count " + format_real(v) + " must be an integer >= n_tx");
        }
    }
    parallel_for(rows.size(), [&](std::size_t i) {
        ScenarioConfig cfg = spec.base;
        cfg.slots = static_cast<int>(spec.values[i]);
        const Scenario sc = Scenario::build(cfg);
        const PrecoderCovariance theta = isotropic(cfg.n_tx, cfg.power_budget);
        const SmiDeterministic det = smi_deterministic(theta, sc);
        const SmiEstimate mc = smi_monte_carlo(theta, sc.pilot, sc, 1);
        LSweepRow& r = rows[i];
        r.slots = cfg.slots;
        r.smi_theoretical = det.value;
        r.smi_empirical_mean = mc.mean;
        r.smi_empirical_stderr = mc.std_error;
        r.fp_residual = det.solution.residual;
        r.rel_error = std::abs(det.value - mc.mean) / mc.mean;
    }, threads);
    return rows;
}

inline void write_l_sweep_csv(const std::vector<LSweepRow>& rows, const ScenarioConfig& cfg,
                              std::ostream& out) {
    CsvWriter csv(out);
    csv.header({"L", "smi_theoretical", "smi_empirical_mean", "smi_empirical_stderr", "fp_residual",
                "rel_error"});
    for (const auto& r : rows) {
        csv.row(r.slots, cfg.to_output_units(r.smi_theoretical), cfg.to_output_units(r.smi_empirical_mean),
                cfg.to_output_units(r.smi_empirical_stderr), r.fp_residual, r.rel_error);
    }
}

// ---------------------------------------------------------------------------
// Pareto study.

struct ParetoRow {
    ParetoRecord record;
    long iterations = 0;
    double primal_residual = 0.0;
    bool infeasible = false;
};

struct ParetoResult {
    std::vector<ParetoRow> proposed;
    ParetoRow sensing;
    ParetoRow comm;
    std::vector<ParetoRow> timeshare;
    double capacity = 0.0;
};

inline double waterfilling_capacity(const Scenario& sc) {
    const PrecoderCovariance wf = waterfilling(sc.channel, sc.cfg.power_budget, sc.cfg.noise_power);
    return comm_rate(sc.channel, wf, sc.cfg.noise_power);
}

/// `count` evenly spaced fractions k / count (k = 1..count) of capacity.
inline std::vector<double> default_rate_grid(const ScenarioConfig& cfg, int count = 10) {
    const double cap = waterfilling_capacity(Scenario::build(cfg));
    std::vector<double> grid;
    for (int k = 1; k <= count; ++k) grid.push_back(cap * k / count);
    return grid;
}

inline ParetoResult run_pareto(const SweepSpec& spec, unsigned threads = 0) {
    validate(spec, SweepVariable::rate_floor);
    const Scenario base = Scenario::build(spec.base);
    const ScenarioConfig& cfg = base.cfg;

    ParetoResult res;
    const PrecoderCovariance theta_s = sensing_oriented(base.a_t, cfg.power_budget);
    const PrecoderCovariance theta_c = waterfilling(base.channel, cfg.power_budget, cfg.noise_power);
    res.capacity = comm_rate(base.channel, theta_c, cfg.noise_power);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    res.sensing.record = {nan, comm_rate(base.channel, theta_s, cfg.noise_power),
                          smi_deterministic(theta_s, base).value, "sensing"};
    res.comm.record = {nan, res.capacity, smi_deterministic(theta_c, base).value, "comm"};
    for (int k = 0; k <= 10; ++k) {
        ParetoRow row;
        row.record = time_sharing(res.sensing.record, res.comm.record, k / 10.0);
        res.timeshare.push_back(row);
    }

    res.proposed.resize(spec.values.size());
    parallel_for(spec.values.size(), [&](std::size_t i) {
        Scenario sc = base;
        sc.cfg.rate_floor = spec.values[i];
        ParetoRow& row = res.proposed[i];
        row.record.method = "proposed";
        row.record.r0 = spec.values[i];
        try {
            const AdmmResult r = admm_solve(sc);
            row.record.rate = r.rate;
            row.record.smi = r.smi;
            row.iterations = r.state.iteration;
            row.primal_residual = r.state.primal_residual;
        } catch (const InfeasibleError&) {
            row.infeasible = true;
            row.record.rate = nan;
            row.record.smi = nan;
            row.iterations = 0;
            row.primal_residual = nan;
        }
    }, threads);
    return res;
}

inline void write_pareto_csv(const ParetoResult& res, const ScenarioConfig& cfg, std::ostream& out) {
    CsvWriter csv(out);
    csv.header({"method", "r0", "rate", "smi", "iterations", "primal_residual"});
    auto emit = [&](const ParetoRow& r) {
        const std::string method = r.infeasible ? r.record.method + "_infeasible" : r.record.method;
        const double r0 = r.record.method == "timeshare" ? r.record.r0 : cfg.to_output_units(r.record.r0);
        csv.row(method, r0, cfg.to_output_units(r.record.rate), cfg.to_output_units(r.record.smi),
                r.iterations, r.primal_residual);
    };
    for (const auto& r : res.proposed) emit(r);
    emit(res.sensing);
    emit(res.comm);
    for (const auto& r : res.timeshare) emit(r);
}

// ---------------------------------------------------------------------------
// Gradient check.

struct GradCheckSummary {
    std::vector<GradCheckReport> reports;  // [0] isotropic, then random feasible covariances
    double max_rel_error = 0.0;
    double max_abs = 0.0;  // largest |analytic| or |numeric| seen
    bool orthogonal = false;
    bool passed = false;
};

inline constexpr double kGradcheckTolerance = 1e-5;
inline constexpr double kOrthogonalTolerance = 1e-10;

inline GradCheckSummary run_gradcheck(const ScenarioConfig& cfg, int random_thetas = 0, int directions = 16,
                                      double h = 1e-6, bool orthogonal = false) {
    const Scenario sc = Scenario::build(cfg);
    std::vector<PrecoderCovariance> thetas{isotropic(cfg.n_tx, cfg.power_budget)};
    auto rng = make_stream(cfg.seed, StreamTag::test_directions, 1);
    for (int k = 0; k < random_thetas; ++k) {
        thetas.push_back(random_feasible_covariance(cfg.n_tx, cfg.power_budget, rng));
    }

    GradCheckSummary s;
    s.orthogonal = orthogonal;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        s.reports.push_back(finite_diff_check(thetas[k], sc, h, directions, orthogonal, k));
        s.max_rel_error = std::max(s.max_rel_error, s.reports.back().max_rel_error);
        s.max_abs = std::max({s.max_abs, s.reports.back().max_abs_analytic, s.reports.back().max_abs_numeric});
    }
    s.passed = orthogonal ? s.max_abs <= kOrthogonalTolerance : s.max_rel_error <= kGradcheckTolerance;
    return s;
}

inline void write_gradcheck_csv(const GradCheckSummary& s, std::ostream& out) {
    CsvWriter csv(out);
    csv.header({"theta_index", "directions", "max_rel_error", "max_abs_analytic", "max_abs_numeric"});
    for (std::size_t k = 0; k < s.reports.size(); ++k) {
        const auto& r = s.reports[k];
        csv.row(static_cast<long>(k), r.directions, r.max_rel_error, r.max_abs_analytic, r.max_abs_numeric);
    }
}

// ---------------------------------------------------------------------------
// Single ADMM run.

struct AdmmSummary {
    AdmmResult result;
    double trace = 0.0;
    double min_eig = 0.0;
};

inline AdmmSummary run_admm_once(const ScenarioConfig& cfg, double r0) {
    ScenarioConfig c = cfg;
    c.rate_floor = r0;
    const Scenario sc = Scenario::build(c);
    AdmmSummary s;
    s.result = admm_solve(sc);
    s.trace = s.result.theta.trace();
    s.min_eig = linalg::min_eigenvalue(s.result.theta.entries);
    return s;
}

inline void write_admm_csv(const AdmmSummary& s, const ScenarioConfig& cfg, std::ostream& out) {
    CsvWriter csv(out);
    csv.header({"iteration", "objective", "primal_residual", "dual_residual", "smi", "rate"});
    for (const auto& r : s.result.trace) {
        csv.row(r.iteration, r.objective, r.primal_residual, r.dual_residual, cfg.to_output_units(r.smi),
                cfg.to_output_units(r.rate));
    }
}

inline std::string admm_summary_line(const AdmmSummary& s, const ScenarioConfig& cfg) {
    return "rate=" + format_real(cfg.to_output_units(s.result.rate)) +
           " smi=" + format_real(cfg.to_output_units(s.result.smi)) + " trace=" + format_real(s.trace) +
           " min_eig=" + format_real(s.min_eig) + " iterations=" + std::to_string(s.result.state.iteration) +
           " primal_residual=" + format_real(s.result.state.primal_residual);
}

}  // namespace isac::experiments
