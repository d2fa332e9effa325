#pragma once

#include <algorithm>
#include <cmath>

#include "isac/linalg.hpp"
#include "isac/random.hpp"
#include "isac/scenario.hpp"
#include "isac/smi.hpp"

namespace isac {

/// Implicit-differentiation data of the fixed point with respect to d.
///
/// Differentiating both fixed-point equations gives the 2x2 linear system
///   a11 * delta' + a12 * delta_tilde' = b1
///   a21 * delta' + a22 * delta_tilde' = b2
/// with ' = d/dd. Since d = a_t^H Theta a_t, the matrix derivatives are
/// Delta = c1 a_t a_t^H and Delta_tilde = c2 a_t a_t^H.
struct GradCoefficients {
    double a11 = 1.0, a12 = 0.0, a21 = 0.0, a22 = 1.0;
    double b1 = 0.0, b2 = 0.0;
    double c1 = 0.0, c2 = 0.0;
    double determinant = 1.0;
    double condition = 1.0;  // 2-norm condition number of [a11 a12; a21 a22]
    double residual = 0.0;   // max |A c - b|
};

inline GradCoefficients grad_coefficients(const FixedPointSolution& sol, const FixedPointProblem& p) {
    GradCoefficients g;
    if (p.rho == 0.0) return g;

    const double L = p.slots;
    const double d = p.gain;
    const double an = p.at_norm2;
    const double x = sol.delta;
    const double y = sol.delta_tilde;
    const double A = detail::denom_first(p, x, y);
    const double B = detail::denom_second(p, x, y);
    const double ex = 1.0 + x;
    const double ey = 1.0 + y * d;

    g.a11 = 1.0 - d * an / (L * L * ex * ex * A * A);
    g.a12 = d * d / (p.rho * L * A * A);
    g.b1 = 1.0 / (L * A) - d * y / (p.rho * L * A * A);
    g.a21 = 1.0 / (p.rho * L * B * B) + (L - 1.0) * p.rho / (L * ex * ex);
    g.a22 = 1.0 - an * d / (L * L * ey * ey * B * B);
    g.b2 = an * y / (L * L * ey * ey * B * B);

    g.determinant = g.a11 * g.a22 - g.a12 * g.a21;
    if (std::abs(g.determinant) < 1e-14) {
        throw NumericalError("singular derivative system (det = " + std::to_string(g.determinant) + ")",
                             0, g.determinant);
    }
    g.c1 = (g.b1 * g.a22 - g.a12 * g.b2) / g.determinant;
    g.c2 = (g.a11 * g.b2 - g.a21 * g.b1) / g.determinant;
    g.residual = std::max(std::abs(g.a11 * g.c1 + g.a12 * g.c2 - g.b1),
                          std::abs(g.a21 * g.c1 + g.a22 * g.c2 - g.b2));

    Eigen::Matrix2d m;
    m << g.a11, g.a12, g.a21, g.a22;
    const Eigen::Vector2d sv = Eigen::JacobiSVD<Eigen::Matrix2d>(m).singularValues();
    g.condition = sv[0] / sv[1];
    return g;
}

/// d(Ibar)/dd assembled from the total derivative of the closed form,
/// including the implicit dependence of (delta, delta_tilde) on d.
inline double smi_gain_derivative(const FixedPointSolution& sol, const FixedPointProblem& p,
                                  const GradCoefficients& c) {
    if (p.rho == 0.0) return 0.0;
    const double L = p.slots;
    const double x = sol.delta;
    const double y = sol.delta_tilde;
    const double A = detail::denom_first(p, x, y);
    const double inv_rho = 1.0 / p.rho;
    const double log_term =
        (inv_rho * (p.gain * c.c2 + y) - p.at_norm2 / (L * (1.0 + x) * (1.0 + x)) * c.c1) / A;
    return log_term + L / (1.0 + x) * c.c1 - inv_rho * L * (x * c.c2 + y * c.c1);
}

struct SmiGradient {
    CMatrix matrix;      // dIbar/dTheta, Hermitian
    double scalar = 0.0; // dIbar/dd; matrix = scalar * a_t a_t^H
    SmiDeterministic value;
};

inline SmiGradient smi_gradient(const PrecoderCovariance& theta, const Scenario& sc) {
    const FixedPointProblem p = fixed_point_problem(sc, theta);
    SmiGradient g;
    g.value = smi_deterministic(p, fixed_point_options(sc.cfg));
    const GradCoefficients c = grad_coefficients(g.value.solution, p);
    g.scalar = smi_gain_derivative(g.value.solution, p, c);
    g.matrix = g.scalar * (sc.a_t.entries * sc.a_t.entries.adjoint());
    return g;
}

inline SmiGradient smi_gradient(const PrecoderCovariance& theta, const ScenarioConfig& cfg) {
    return smi_gradient(theta, Scenario::build(cfg));
}

struct GradCheckReport {
    double max_rel_error = 0.0;
    double max_abs_analytic = 0.0;
    double max_abs_numeric = 0.0;
    int directions = 0;
    int skipped = 0;  // directions where no two-sided PSD step was found
};

/// Random Hermitian direction with unit Frobenius norm. With
/// `orthogonal_to` set, the direction also satisfies a^H E a = 0.
template <typename Rng>
CMatrix random_hermitian_direction(Eigen::Index n, Rng& rng, const SteeringVector* orthogonal_to = nullptr) {
    const CMatrix z = complex_gaussian(n, n, rng);
    CMatrix e = linalg::hermitian_part(z);
    if (orthogonal_to != nullptr) {
        const CVector& a = orthogonal_to->entries;
        const double n2 = a.squaredNorm();
        const double along = (a.adjoint() * e * a)(0, 0).real();
        e -= (along / (n2 * n2)) * (a * a.adjoint());
    }
    return e / e.norm();
}

/// Compares <grad, E> = Re tr(grad^H E) against the central difference
/// (Ibar(Theta + hE) - Ibar(Theta - hE)) / 2h over random directions.
/// h is halved (at most 10 times) until Theta - hE is PSD.
inline GradCheckReport finite_diff_check(const PrecoderCovariance& theta, const Scenario& sc, double h,
                                         int n_directions, bool orthogonal_only = false,
                                         std::uint64_t direction_seed = 0) {
    if (h <= 0.0) throw DimensionError("finite_diff_check: h must be > 0");
    const SmiGradient grad = smi_gradient(theta, sc);
    auto rng = make_stream(sc.cfg.seed ^ direction_seed, StreamTag::test_directions);
    const bool theta_psd = linalg::min_eigenvalue(theta.entries) >= -1e-12;

    GradCheckReport report;
    for (int k = 0; k < n_directions; ++k) {
        const CMatrix e = random_hermitian_direction(theta.dim(), rng, orthogonal_only ? &sc.a_t : nullptr);
        double step = h;
        bool ok = !theta_psd;
        for (int shrink = 0; shrink <= 10 && !ok; ++shrink) {
            ok = linalg::min_eigenvalue(theta.entries - step * e) >= 0.0 &&
                 linalg::min_eigenvalue(theta.entries + step * e) >= 0.0;
            if (!ok) step *= 0.5;
        }
        if (!ok) {
            ++report.skipped;
            continue;
        }
        const double plus = smi_deterministic(PrecoderCovariance{theta.entries + step * e}, sc).value;
        const double minus = smi_deterministic(PrecoderCovariance{theta.entries - step * e}, sc).value;
        const double numeric = (plus - minus) / (2.0 * step);
        const double analytic = linalg::inner(grad.matrix, e);

        const double scale = std::max(std::abs(analytic), std::abs(numeric));
        const double rel = scale <= 1e-10 ? 0.0 : std::abs(analytic - numeric) / scale;
        report.max_rel_error = std::max(report.max_rel_error, rel);
        report.max_abs_analytic = std::max(report.max_abs_analytic, std::abs(analytic));
        report.max_abs_numeric = std::max(report.max_abs_numeric, std::abs(numeric));
        ++report.directions;
    }
    return report;
}

}  // namespace isac
