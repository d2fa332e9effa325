#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "isac/gradient.hpp"
#include "isac/linalg.hpp"
#include "isac/precoder.hpp"
#include "isac/scenario.hpp"
#include "isac/smi.hpp"

namespace isac {

// ---------------------------------------------------------------------------
// Baselines

/// Theta_s = p a_t a_t^H / ||a_t||^2: all power on the target direction.
inline PrecoderCovariance sensing_oriented(const SteeringVector& a_t, double p) {
    const double n2 = a_t.norm2();
    if (n2 == 0.0) throw InvalidArgument("sensing_oriented: zero steering vector");
    if (p < 0.0) throw InvalidArgument("sensing_oriented: negative power");
    return PrecoderCovariance{p * (a_t.entries * a_t.entries.adjoint()) / n2};
}

struct WaterfillingResult {
    PrecoderCovariance theta;
    RVector powers;      // per-mode allocation q_i
    double level = 0.0;  // water level mu
    bool fallback = false;
};

/// Capacity-achieving covariance under tr(Theta) <= p. With G = U S V^H the
/// allocation is q_i = max(0, mu - sigma^2 / s_i^2) with the level mu found
/// by bisection so that sum(q_i) = p.
inline WaterfillingResult waterfilling_detailed(const CommChannel& g, double p, double sigma2) {
    if (p <= 0.0) throw InvalidArgument("waterfilling: power must be > 0");
    const Eigen::Index n = g.entries.cols();
    Eigen::JacobiSVD<CMatrix> svd(g.entries, Eigen::ComputeFullV);
    const RVector s = svd.singularValues();
    const double s_max = s.size() > 0 ? s.maxCoeff() : 0.0;

    WaterfillingResult out;
    if (s_max == 0.0) {
        out.theta = isotropic(static_cast<int>(n), p);
        out.powers = RVector::Constant(n, p / n);
        out.fallback = true;
        return out;
    }

    std::vector<double> floor;  // sigma^2 / s_i^2 for usable modes
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s[i] > 1e-12 * s_max) floor.push_back(sigma2 / (s[i] * s[i]));
    }
    auto allocated = [&](double mu) {
        double acc = 0.0;
        for (double f : floor) acc += std::max(0.0, mu - f);
        return acc;
    };
    double lo = 0.0;
    double hi = p + *std::max_element(floor.begin(), floor.end());
    for (int it = 0; it < 300 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (allocated(mid) < p ? lo : hi) = mid;
        if (std::abs(allocated(hi) - p) <= 1e-12 * p) break;
    }
    out.level = hi;

    out.powers = RVector::Zero(n);
    for (std::size_t i = 0; i < floor.size(); ++i) {
        out.powers[static_cast<Eigen::Index>(i)] = std::max(0.0, hi - floor[i]);
    }
    const CMatrix& v = svd.matrixV();
    out.theta = PrecoderCovariance{linalg::hermitian_part(v * out.powers.asDiagonal() * v.adjoint())};
    return out;
}

inline PrecoderCovariance waterfilling(const CommChannel& g, double p, double sigma2) {
    return waterfilling_detailed(g, p, sigma2).theta;
}

/// One point of the SMI-rate plane.
struct ParetoRecord {
    double r0 = 0.0;
    double rate = 0.0;
    double smi = 0.0;
    std::string method;
};

/// Convex combination lambda * s + (1 - lambda) * c of two operating points.
inline ParetoRecord time_sharing(const ParetoRecord& point_s, const ParetoRecord& point_c,
                                 double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw InvalidArgument("time_sharing: lambda must lie in [0, 1]");
    }
    ParetoRecord r;
    r.method = "timeshare";
    r.r0 = lambda;
    r.rate = lambda * point_s.rate + (1.0 - lambda) * point_c.rate;
    r.smi = lambda * point_s.smi + (1.0 - lambda) * point_c.smi;
    return r;
}

/// Best SMI attainable by time-sharing the two baselines at a given rate.
/// Rates at or below the sensing point's rate get the sensing point's SMI.
inline double timeshare_smi_at(const ParetoRecord& point_s, const ParetoRecord& point_c,
                               double rate) {
    if (rate <= point_s.rate) return point_s.smi;
    if (rate >= point_c.rate) return point_c.smi;
    const double lambda = (point_c.rate - rate) / (point_c.rate - point_s.rate);
    return lambda * point_s.smi + (1.0 - lambda) * point_c.smi;
}

// ---------------------------------------------------------------------------
// ADMM

struct AdmmState {
    CMatrix theta;
    CMatrix omega;
    CMatrix u;
    long iteration = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    std::vector<double> smi_trace;
};

/// Per-iteration convergence record.
struct AdmmTraceRow {
    long iteration = 0;
    double objective = 0.0;  // augmented Lagrangian at (Theta, Omega, U)
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double smi = 0.0;
    double rate = 0.0;
};

inline AdmmState initial_state(const PrecoderCovariance& theta) {
    AdmmState s;
    s.theta = theta.entries;
    s.omega = theta.entries;
    s.u = CMatrix::Zero(theta.dim(), theta.dim());
    return s;
}

struct ThetaUpdateResult {
    PrecoderCovariance theta;
    long iterations = 0;
    double pg_norm = 0.0;  // norm of the gradient mapping at exit
    std::vector<double> objective_trace;
};

/// Gradient projection on
///   min -Ibar(Theta) + (gamma/2) ||Theta - Omega + U||^2  s.t. Theta PSD, tr <= P.
/// Each step is Theta <- Proj(Theta - beta * grad) with Armijo backtracking
/// on beta, starting from the configured step every iteration.
inline ThetaUpdateResult theta_update(const AdmmState& state, const Scenario& sc) {
    const ScenarioConfig& cfg = sc.cfg;
    const double gamma = cfg.penalty;
    const double budget = cfg.power_budget;
    const CMatrix target = state.omega - state.u;
    const CMatrix ata = sc.a_t.entries * sc.a_t.entries.adjoint();

    auto objective = [&](const CMatrix& th, double smi) {
        return -smi + 0.5 * gamma * (th - target).squaredNorm();
    };

    ThetaUpdateResult out;
    CMatrix theta = linalg::psd_trace_project(state.theta, budget);
    SmiGradient grad = smi_gradient(PrecoderCovariance{theta}, sc);
    double f = objective(theta, grad.value.value);
    out.objective_trace.push_back(f);

    for (long it = 0; it < cfg.max_gp_iters; ++it) {
        const CMatrix full_grad = -grad.scalar * ata + gamma * (theta - target);
        double beta = cfg.gp_step;
        CMatrix next;
        double next_smi = 0.0;
        double next_f = 0.0;
        for (;;) {
            next = linalg::psd_trace_project(theta - beta * full_grad, budget);
            const CMatrix step = next - theta;
            next_smi = smi_deterministic(PrecoderCovariance{next}, sc).value;
            next_f = objective(next, next_smi);
            const double model = f + linalg::inner(full_grad, step) + step.squaredNorm() / (2.0 * beta);
            if (next_f <= model + 1e-14 * std::max(1.0, std::abs(f))) break;
            beta *= 0.5;
            if (beta < 1e-20) {
                throw NumericalError("theta_update: step size underflow in backtracking", it, beta);
            }
        }
        out.pg_norm = (theta - next).norm() / beta;
        ++out.iterations;
        const bool stalled = (next - theta).norm() == 0.0;
        theta = next;
        f = next_f;
        out.objective_trace.push_back(next_f);
        if (out.pg_norm <= cfg.gp_tol || stalled) break;
        grad = smi_gradient(PrecoderCovariance{theta}, sc);
    }
    out.theta = PrecoderCovariance{theta};
    return out;
}

inline ThetaUpdateResult theta_update(const AdmmState& state, const ScenarioConfig& cfg) {
    return theta_update(state, Scenario::build(cfg));
}

struct OmegaUpdateResult {
    PrecoderCovariance omega;
    bool active = false;         // rate constraint binding
    long newton_iterations = 0;
    double duality_gap = 0.0;    // (n + 1) / (gamma * t_final) bound
    double stationarity = 0.0;   // barrier-gradient norm scaled to projection units
    double rate = 0.0;
};

struct BarrierOptions {
    double t_initial = 1.0;
    double t_final = 1e8;
    double t_factor = 10.0;
    double epsilon = 1e-12;  // log det(Omega + eps I)
    long max_newton = 200;
};

namespace detail {

struct RateEval {
    double rate = 0.0;
    CMatrix grad;  // G^H (sigma^2 I + G Omega G^H)^{-1} G = dI_c/dOmega
    bool ok = false;
};

inline RateEval rate_and_grad(const CMatrix& g_scaled, const CMatrix& omega) {
    RateEval r;
    const Eigen::Index m = g_scaled.rows();
    const CMatrix k = CMatrix::Identity(m, m) + g_scaled * omega * g_scaled.adjoint();
    Eigen::LLT<CMatrix> llt(linalg::hermitian_part(k));
    if (llt.info() != Eigen::Success) return r;
    const CMatrix& factor = llt.matrixLLT();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) acc += std::log(factor(i, i).real());
    r.rate = 2.0 * acc;
    const CMatrix w = llt.matrixL().solve(g_scaled);
    r.grad = linalg::hermitian_part(w.adjoint() * w);
    r.ok = std::isfinite(r.rate);
    return r;
}

}  // namespace detail

/// Projection of V = Theta + U onto {Omega PSD, I_c(Omega) >= R0}.
///
/// If the PSD part of V already meets the rate floor it is the answer.
/// Otherwise a path-following barrier method minimizes
///   (gamma t / 2) ||Omega - V||^2 - log(I_c(Omega) - R0) - log det(Omega + eps I)
/// by damped Newton steps in real Hermitian coordinates, multiplying t by
/// t_factor up to t_final. The start is a strictly feasible blend of PSD(V)
/// and the waterfilling covariance.
inline OmegaUpdateResult omega_update(const CMatrix& v, const CommChannel& g, double sigma2, double r0,
                                      double gamma, const PrecoderCovariance& waterfill,
                                      const BarrierOptions& opt = {}) {
    OmegaUpdateResult out;
    const Eigen::Index n = v.rows();
    const CMatrix w = linalg::psd_project(v);
    const CMatrix g_scaled = g.entries / std::sqrt(sigma2);

    const double rate_w = detail::rate_and_grad(g_scaled, w).rate;
    if (r0 <= 0.0 || rate_w >= r0) {
        out.omega = PrecoderCovariance{w};
        out.rate = rate_w;
        return out;
    }
    out.active = true;

    const CMatrix eye = CMatrix::Identity(n, n);
    const double pad = 1e-6 * std::max({w.trace().real(), waterfill.trace(), 1e-6}) / n;
    const CMatrix start_a = w + pad * eye;
    const CMatrix start_b = waterfill.entries + pad * eye;
    const double rate_b = detail::rate_and_grad(g_scaled, start_b).rate;
    if (!(rate_b > r0)) {
        throw InfeasibleError("omega_update: rate floor exceeds attainable rate", rate_b);
    }
    // Smallest blend weight with a margin of slack; I_c is concave along the
    // segment so the feasible weights form an interval.
    const double margin = std::min(1e-3, 0.5 * (rate_b - r0));
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double rate_mid = detail::rate_and_grad(g_scaled, (1.0 - mid) * start_a + mid * start_b).rate;
        (rate_mid >= r0 + margin ? hi : lo) = mid;
    }
    CMatrix omega = (1.0 - hi) * start_a + hi * start_b;

    const Eigen::Index dim = linalg::hermitian_coord_count(n);
    std::vector<CMatrix> basis;
    basis.reserve(static_cast<std::size_t>(dim));
    for (Eigen::Index k = 0; k < dim; ++k) {
        basis.push_back(linalg::coords_to_hermitian(RVector::Unit(dim, k), n));
    }

    struct Eval {
        double value = 0.0;
        bool ok = false;
        detail::RateEval rate;
        CMatrix inv;  // (Omega + eps I)^{-1}
    };
    auto evaluate = [&](const CMatrix& om, double t) {
        Eval e;
        const CMatrix shifted = om + opt.epsilon * eye;
        Eigen::LLT<CMatrix> llt(linalg::hermitian_part(shifted));
        if (llt.info() != Eigen::Success) return e;
        double logdet = 0.0;
        const CMatrix& factor = llt.matrixLLT();
        for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(factor(i, i).real());
        e.rate = detail::rate_and_grad(g_scaled, om);
        if (!e.rate.ok || !(e.rate.rate > r0)) return e;
        e.inv = llt.solve(eye);
        e.value = 0.5 * gamma * t * (om - v).squaredNorm() - std::log(e.rate.rate - r0) - logdet;
        e.ok = std::isfinite(e.value);
        return e;
    };

    double t = opt.t_initial;
    for (;;) {
        Eval cur = evaluate(omega, t);
        if (!cur.ok) throw NumericalError("omega_update: lost strict feasibility", out.newton_iterations, 0.0);
        for (long it = 0; it < opt.max_newton; ++it) {
            const double slack = cur.rate.rate - r0;
            const CMatrix& m = cur.rate.grad;
            const CMatrix grad_m = gamma * t * (omega - v) - m / slack - cur.inv;
            const RVector grad = linalg::hermitian_to_coords(linalg::hermitian_part(grad_m));

            Eigen::MatrixXd hess(dim, dim);
            for (Eigen::Index k = 0; k < dim; ++k) {
                const CMatrix& e = basis[static_cast<std::size_t>(k)];
                const CMatrix he = gamma * t * e + (m * e * m) / slack +
                                   (linalg::inner(m, e) / (slack * slack)) * m + cur.inv * e * cur.inv;
                hess.col(k) = linalg::hermitian_to_coords(linalg::hermitian_part(he));
            }
            hess = 0.5 * (hess + hess.transpose()).eval();
            const RVector step = hess.ldlt().solve(-grad);
            const double decrement2 = -grad.dot(step);
            ++out.newton_iterations;
            out.stationarity = grad.norm() / (gamma * t);
            if (!(decrement2 > 1e-14)) break;

            const CMatrix dir = linalg::coords_to_hermitian(step, n);
            double alpha = 1.0;
            bool accepted = false;
            Eval next;
            for (int ls = 0; ls < 60; ++ls) {
                next = evaluate(omega + alpha * dir, t);
                if (next.ok && next.value <= cur.value - 0.25 * alpha * decrement2) {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) {
                // Decrease below the resolution of the objective: converged.
                if (decrement2 < 1e-6) break;
                throw NumericalError("omega_update: Newton line search failed", out.newton_iterations,
                                     decrement2);
            }
            omega += alpha * dir;
            cur = std::move(next);
            if (decrement2 < 1e-14) break;
        }
        if (t >= opt.t_final) break;
        t = std::min(opt.t_final, t * opt.t_factor);
    }
    out.omega = PrecoderCovariance{linalg::hermitian_part(omega)};
    out.rate = detail::rate_and_grad(g_scaled, out.omega.entries).rate;
    out.duality_gap = static_cast<double>(n + 1) / (gamma * t);
    return out;
}

inline OmegaUpdateResult omega_update(const AdmmState& state, const Scenario& sc,
                                      const PrecoderCovariance& waterfill, const BarrierOptions& opt = {}) {
    return omega_update(state.theta + state.u, sc.channel, sc.cfg.noise_power, sc.cfg.rate_floor,
                        sc.cfg.penalty, waterfill, opt);
}

inline OmegaUpdateResult omega_update(const AdmmState& state, const CommChannel& g,
                                      const ScenarioConfig& cfg) {
    return omega_update(state.theta + state.u, g, cfg.noise_power, cfg.rate_floor, cfg.penalty,
                        waterfilling(g, cfg.power_budget, cfg.noise_power));
}

/// Scaled dual ascent U <- U + Theta - Omega.
inline AdmmState dual_update(AdmmState state) {
    state.u = linalg::hermitian_part(state.u + state.theta - state.omega);
    return state;
}

struct AdmmResult {
    PrecoderCovariance theta;      // returned covariance (after rate repair)
    PrecoderCovariance raw_theta;  // ADMM iterate before repair
    AdmmState state;
    std::vector<AdmmTraceRow> trace;
    double capacity = 0.0;
    double rate = 0.0;
    double smi = 0.0;
    double repair_weight = 0.0;    // weight on the waterfilling point, 0 if unused
    bool converged = false;
};

/// Moves Theta toward the waterfilling covariance along the segment until
/// I_c >= r0. Trace and PSD feasibility are preserved by convexity.
inline double repair_rate(CMatrix& theta, const CommChannel& g, double sigma2, double r0,
                          const PrecoderCovariance& waterfill) {
    const double base = comm_rate(g, PrecoderCovariance{theta}, sigma2);
    if (base >= r0) return 0.0;
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const CMatrix blend = (1.0 - mid) * theta + mid * waterfill.entries;
        (comm_rate(g, PrecoderCovariance{blend}, sigma2) >= r0 ? hi : lo) = mid;
    }
    theta = linalg::hermitian_part((1.0 - hi) * theta + hi * waterfill.entries);
    return hi;
}

/// Solves max Ibar(Theta) s.t. tr(Theta) <= P, I_c(Omega) >= R0, Theta = Omega
/// by ADMM. Stops when both residuals are below admm_tol or after
/// max_admm_iters iterations.
inline AdmmResult admm_solve(const Scenario& sc, const std::optional<PrecoderCovariance>& warm = std::nullopt,
                             const BarrierOptions& barrier = {}) {
    const ScenarioConfig& cfg = sc.cfg;
    const double gamma = cfg.penalty;
    const PrecoderCovariance wf = waterfilling(sc.channel, cfg.power_budget, cfg.noise_power);

    AdmmResult res;
    res.capacity = comm_rate(sc.channel, wf, cfg.noise_power);
    if (cfg.rate_floor > res.capacity) {
        throw InfeasibleError("rate floor " + std::to_string(cfg.rate_floor) +
                                  " exceeds the waterfilling capacity " + std::to_string(res.capacity),
                              res.capacity);
    }

    AdmmState state = initial_state(warm ? *warm : isotropic(cfg.n_tx, cfg.power_budget));
    for (long m = 1; m <= cfg.max_admm_iters; ++m) {
        try {
            state.theta = theta_update(state, sc).theta.entries;
            const CMatrix previous = state.omega;
            state.omega = omega_update(state, sc, wf, barrier).omega.entries;
            state = dual_update(std::move(state));
            state.iteration = m;
            state.primal_residual = (state.theta - state.omega).norm();
            state.dual_residual = gamma * (state.omega - previous).norm();
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " (ADMM iteration " + std::to_string(m) + ")", m,
                                 e.residual());
        }

        AdmmTraceRow row;
        row.iteration = m;
        row.smi = smi_deterministic(PrecoderCovariance{state.theta}, sc).value;
        row.rate = comm_rate(sc.channel, PrecoderCovariance{state.theta}, cfg.noise_power);
        row.objective = -row.smi + 0.5 * gamma * (state.theta - state.omega + state.u).squaredNorm();
        row.primal_residual = state.primal_residual;
        row.dual_residual = state.dual_residual;
        state.smi_trace.push_back(row.smi);
        res.trace.push_back(row);

        if (state.primal_residual <= cfg.admm_tol && state.dual_residual <= cfg.admm_tol) {
            res.converged = true;
            break;
        }
    }

    res.raw_theta = PrecoderCovariance{state.theta};
    CMatrix theta = state.theta;
    res.repair_weight = repair_rate(theta, sc.channel, cfg.noise_power, cfg.rate_floor, wf);
    res.theta = PrecoderCovariance{theta};
    res.state = std::move(state);
    res.rate = comm_rate(sc.channel, res.theta, cfg.noise_power);
    res.smi = smi_deterministic(res.theta, sc).value;
    return res;
}

inline AdmmResult admm_solve(const ScenarioConfig& cfg, const CommChannel& g,
                             const std::optional<PrecoderCovariance>& warm = std::nullopt) {
    Scenario sc = Scenario::build(cfg);
    sc.channel = g;
    return admm_solve(sc, warm);
}

}  // namespace isac
