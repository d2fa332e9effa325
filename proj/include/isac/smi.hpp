#pragma once

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "isac/linalg.hpp"
#include "isac/precoder.hpp"
#include "isac/random.hpp"
#include "isac/scenario.hpp"
#include "isac/types.hpp"

namespace isac {

/// Converged (delta, delta_tilde) pair of the coupled fixed-point system.
struct FixedPointSolution {
    double delta = 0.0;
    double delta_tilde = 0.0;
    double residual = 0.0;  // max of the two equation residuals
    long iterations = 0;
};

/// Scalar inputs of the fixed-point system. Everything the deterministic
/// equivalent needs is captured by these four numbers.
struct FixedPointProblem {
    double rho = 0.0;       // effective sensing SNR
    double gain = 0.0;      // d = a_t^H Theta a_t
    double at_norm2 = 0.0;  // ||a_t||^2
    int slots = 1;          // L
};

struct FixedPointOptions {
    double tol = 1e-12;
    long max_iters = 100000;
    double damping = 0.5;
    double init_delta = 1.0;
    double init_delta_tilde = 1.0;
};

namespace detail {

// Denominators of the two fixed-point equations.
inline double denom_first(const FixedPointProblem& p, double delta, double delta_tilde) {
    return (1.0 + delta_tilde * p.gain) / p.rho + p.at_norm2 / (p.slots * (1.0 + delta));
}

inline double denom_second(const FixedPointProblem& p, double delta, double delta_tilde) {
    return (1.0 + delta) / p.rho + p.at_norm2 / (p.slots * (1.0 + delta_tilde * p.gain));
}

inline std::pair<double, double> fixed_point_map(const FixedPointProblem& p, double delta,
                                                 double delta_tilde) {
    const double L = p.slots;
    const double next_delta = p.gain / (L * denom_first(p, delta, delta_tilde));
    const double next_delta_tilde =
        1.0 / (L * denom_second(p, delta, delta_tilde)) + (L - 1.0) / L * p.rho / (1.0 + delta);
    return {next_delta, next_delta_tilde};
}

}  // namespace detail

/// Residual max(|delta - Phi_1|, |delta_tilde - Phi_2|) of a candidate pair.
inline double fixed_point_residual(const FixedPointProblem& p, double delta, double delta_tilde) {
    if (p.rho == 0.0) return std::max(std::abs(delta), std::abs(delta_tilde));
    const auto [nd, ndt] = detail::fixed_point_map(p, delta, delta_tilde);
    return std::max(std::abs(delta - nd), std::abs(delta_tilde - ndt));
}

/// Damped simultaneous iteration x <- (1 - eta) x + eta Phi(x).
inline FixedPointSolution solve_fixed_point(const FixedPointProblem& p,
                                            const FixedPointOptions& opt = {}) {
    if (p.rho < 0.0 || p.gain < 0.0 || p.at_norm2 < 0.0 || p.slots < 1) {
        throw DimensionError("solve_fixed_point: need rho, d, ||a_t||^2 >= 0 and L >= 1");
    }
    if (p.rho == 0.0) return {};

    double x = opt.init_delta;
    double y = opt.init_delta_tilde;
    double residual = 0.0;
    for (long it = 0; it <= opt.max_iters; ++it) {
        const auto [nx, ny] = detail::fixed_point_map(p, x, y);
        residual = std::max(std::abs(x - nx), std::abs(y - ny));
        if (residual <= opt.tol) return {x, y, residual, it};
        x = (1.0 - opt.damping) * x + opt.damping * nx;
        y = (1.0 - opt.damping) * y + opt.damping * ny;
    }
    throw NumericalError("fixed-point iteration did not converge", opt.max_iters, residual);
}

inline FixedPointSolution solve_fixed_point(double rho, double gain, double at_norm2, int slots,
                                            double fp_tol, long max_iters) {
    FixedPointOptions opt;
    opt.tol = fp_tol;
    opt.max_iters = max_iters;
    return solve_fixed_point(FixedPointProblem{rho, gain, at_norm2, slots}, opt);
}

/// Closed-form value at a given (delta, delta_tilde):
///   log(1 + dt*d + rho*||a||^2 / (L(1+delta))) + L log(1+delta) - L*delta*dt/rho.
inline double deterministic_smi_value(const FixedPointProblem& p, const FixedPointSolution& s) {
    if (p.rho == 0.0) return 0.0;
    const double L = p.slots;
    return std::log1p(s.delta_tilde * p.gain + p.rho * p.at_norm2 / (L * (1.0 + s.delta))) +
           L * std::log1p(s.delta) - L * s.delta * s.delta_tilde / p.rho;
}

struct SmiDeterministic {
    double value = 0.0;
    FixedPointSolution solution;
    double rho = 0.0;
    double gain = 0.0;
};

inline SmiDeterministic smi_deterministic(const FixedPointProblem& p,
                                          const FixedPointOptions& opt = {}) {
    SmiDeterministic out;
    out.rho = p.rho;
    out.gain = p.gain;
    out.solution = solve_fixed_point(p, opt);
    out.value = deterministic_smi_value(p, out.solution);
    return out;
}

inline FixedPointProblem fixed_point_problem(const Scenario& sc, const PrecoderCovariance& theta) {
    return {sc.rho, std::max(0.0, beam_gain(theta, sc.a_t)), sc.a_t.norm2(), sc.cfg.slots};
}

inline FixedPointOptions fixed_point_options(const ScenarioConfig& cfg) {
    FixedPointOptions opt;
    opt.tol = cfg.fp_tol;
    opt.max_iters = cfg.max_fp_iters;
    return opt;
}

inline SmiDeterministic smi_deterministic(const PrecoderCovariance& theta, const Scenario& sc) {
    return smi_deterministic(fixed_point_problem(sc, theta), fixed_point_options(sc.cfg));
}

inline SmiDeterministic smi_deterministic(const PrecoderCovariance& theta,
                                          const ScenarioConfig& cfg) {
    return smi_deterministic(theta, Scenario::build(cfg));
}

// ---------------------------------------------------------------------------
// Per-realization SMI

/// log|I + |alpha|^2/(L sigma^2) (R_r kron R_t^{1/2} X X^H R_t^{1/2})| evaluated
/// densely. O((N_t N_r)^3); only meant as a reference for small arrays.
inline double smi_sample_full(const CMatrix& x, const SteeringVector& a_t,
                              const SteeringVector& a_r, cdouble alpha, double sigma2) {
    if (x.rows() != a_t.size()) throw DimensionError("smi_sample_full: X rows != N_t");
    if (sigma2 <= 0.0) throw DimensionError("smi_sample_full: sigma^2 must be > 0");
    const Eigen::Index nt = a_t.size();
    const Eigen::Index nr = a_r.size();
    const double L = static_cast<double>(x.cols());

    const CMatrix r_r = a_r.entries * a_r.entries.adjoint();
    const CMatrix r_t = a_t.entries * a_t.entries.adjoint();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(r_t);
    const CMatrix r_t_half = es.eigenvectors() *
                             es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                             es.eigenvectors().adjoint();
    const CMatrix inner = r_t_half * x * x.adjoint() * r_t_half;

    CMatrix kron(nr * nt, nr * nt);
    for (Eigen::Index i = 0; i < nr; ++i) {
        for (Eigen::Index j = 0; j < nr; ++j) {
            kron.block(i * nt, j * nt, nt, nt) = r_r(i, j) * inner;
        }
    }
    const double scale = std::norm(alpha) / (L * sigma2);
    const CMatrix m = CMatrix::Identity(nr * nt, nr * nt) + scale * kron;
    return linalg::logdet_pd(m);
}

/// log(1 + rho ||a_t^H X||^2 / L).
inline double smi_sample_reduced(const CMatrix& x, const SteeringVector& a_t, double rho,
                                 int slots) {
    if (x.rows() != a_t.size()) throw DimensionError("smi_sample_reduced: X rows != N_t");
    if (rho < 0.0) throw DimensionError("smi_sample_reduced: rho must be >= 0");
    const double z2 = (a_t.entries.adjoint() * x).squaredNorm();
    return std::log1p(rho * z2 / slots);
}

struct SmiEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long trials = 0;
};

/// Monte-Carlo SMI with X = S_p + F S_d, S_d i.i.d. CN(0, 1). Trial k draws
/// from its own stream keyed by (seed, k), so results are identical for any
/// thread count.
inline SmiEstimate smi_monte_carlo(const PrecoderCovariance& theta, const PilotMatrix& pilot,
                                   const Scenario& sc, unsigned threads = 0) {
    const ScenarioConfig& cfg = sc.cfg;
    if (pilot.entries.rows() != cfg.n_tx || pilot.entries.cols() != cfg.slots) {
        throw DimensionError("smi_monte_carlo: pilot shape does not match config");
    }
    const CMatrix f = extract_precoder(theta);
    const long n = cfg.mc_trials;
    std::vector<double> samples(static_cast<std::size_t>(n));

    auto run_range = [&](long begin, long end) {
        for (long k = begin; k < end; ++k) {
            auto rng = make_stream(cfg.seed, StreamTag::payload, static_cast<std::uint64_t>(k));
            const CMatrix x = pilot.entries + f * complex_gaussian(cfg.n_tx, cfg.slots, rng);
            samples[static_cast<std::size_t>(k)] = smi_sample_reduced(x, sc.a_t, sc.rho, cfg.slots);
        }
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<long>(threads, n));
    if (threads <= 1) {
        run_range(0, n);
    } else {
        std::vector<std::jthread> pool;
        const long chunk = (n + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const long begin = t * chunk;
            const long end = std::min(n, begin + chunk);
            if (begin < end) pool.emplace_back(run_range, begin, end);
        }
    }

    linalg::CompensatedSum sum;
    for (double v : samples) sum.add(v);
    SmiEstimate est;
    est.trials = n;
    est.mean = sum.value() / static_cast<double>(n);
    if (n > 1) {
        linalg::CompensatedSum sq;
        for (double v : samples) sq.add((v - est.mean) * (v - est.mean));
        const double sample_var = sq.value() / static_cast<double>(n - 1);
        est.std_error = std::sqrt(sample_var / static_cast<double>(n));
    }
    return est;
}

inline SmiEstimate smi_monte_carlo(const PrecoderCovariance& theta, const PilotMatrix& pilot,
                                   const ScenarioConfig& cfg) {
    return smi_monte_carlo(theta, pilot, Scenario::build(cfg));
}

// ---------------------------------------------------------------------------
// Communication rate

/// I_c = log|I + G Theta G^H / sigma^2|. Rejects non-Hermitian or
/// non-PSD (min eigenvalue < -1e-10) covariances.
inline double comm_rate(const CommChannel& g, const PrecoderCovariance& theta, double sigma2) {
    if (g.entries.cols() != theta.dim()) throw DimensionError("comm_rate: dimension mismatch");
    if (!linalg::is_hermitian(theta.entries)) {
        throw DimensionError("comm_rate: covariance is not Hermitian");
    }
    if (linalg::min_eigenvalue(theta.entries) < -1e-10) {
        throw DimensionError("comm_rate: covariance is not positive semidefinite");
    }
    const Eigen::Index m = g.entries.rows();
    const CMatrix k = CMatrix::Identity(m, m) +
                      g.entries * linalg::hermitian_part(theta.entries) * g.entries.adjoint() / sigma2;
    return linalg::logdet_pd(k);
}

}  // namespace isac
