#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "isac/types.hpp"

namespace isac::linalg {

inline CMatrix hermitian_part(const CMatrix& m) {
    return 0.5 * (m + m.adjoint());
}

inline double hermitian_defect(const CMatrix& m) {
    if (m.size() == 0) return 0.0;
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const CMatrix& m, double tol = 1e-12) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return hermitian_defect(m) <= tol * scale;
}

inline double min_eigenvalue(const CMatrix& m) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// Real Frobenius inner product Re tr(A^H B).
inline double inner(const CMatrix& a, const CMatrix& b) {
    return (a.adjoint() * b).trace().real();
}

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped).
inline CMatrix psd_project(const CMatrix& m) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(m));
    const RVector lambda = es.eigenvalues().cwiseMax(0.0);
    return hermitian_part(es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().adjoint());
}

/// Euclidean projection of v onto {x >= 0, sum(x) <= cap}.
inline RVector capped_simplex_project(const RVector& v, double cap) {
    RVector clipped = v.cwiseMax(0.0);
    if (clipped.sum() <= cap) return clipped;

    // Find tau >= 0 with sum(max(v - tau, 0)) = cap by sorting breakpoints.
    std::vector<double> sorted(v.data(), v.data() + v.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double prefix = 0.0;
    double tau = 0.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        prefix += sorted[k];
        const double candidate = (prefix - cap) / static_cast<double>(k + 1);
        const bool last = k + 1 == sorted.size();
        if (last || sorted[k + 1] <= candidate) {
            tau = candidate;
            break;
        }
    }
    return (v.array() - tau).cwiseMax(0.0).matrix();
}

/// Euclidean projection onto {Theta PSD, tr(Theta) <= cap}.
inline CMatrix psd_trace_project(const CMatrix& m, double cap) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(m));
    const RVector lambda = capped_simplex_project(es.eigenvalues(), cap);
    return hermitian_part(es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().adjoint());
}

/// log det of a Hermitian positive definite matrix. Throws NumericalError
/// if the Cholesky factorization fails.
inline double logdet_pd(const CMatrix& m) {
    Eigen::LLT<CMatrix> llt(hermitian_part(m));
    if (llt.info() != Eigen::Success) {
        throw NumericalError("log-det of a matrix that is not positive definite", 0, 0.0);
    }
    const CMatrix& factor = llt.matrixLLT();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < factor.rows(); ++i) acc += std::log(factor(i, i).real());
    return 2.0 * acc;
}

inline bool is_positive_definite(const CMatrix& m) {
    Eigen::LLT<CMatrix> llt(hermitian_part(m));
    return llt.info() == Eigen::Success;
}

/// Neumaier-compensated accumulator.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Orthonormal real coordinates for n x n Hermitian matrices under the
// Re tr(A^H B) inner product: diagonal entries, then sqrt(2)*Re and
// sqrt(2)*Im of each strictly-upper entry.
inline Eigen::Index hermitian_coord_count(Eigen::Index n) { return n * n; }

inline RVector hermitian_to_coords(const CMatrix& m) {
    const Eigen::Index n = m.rows();
    RVector x(n * n);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i) x[k++] = m(i, i).real();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            x[k++] = std::sqrt(2.0) * m(i, j).real();
            x[k++] = std::sqrt(2.0) * m(i, j).imag();
        }
    }
    return x;
}

inline CMatrix coords_to_hermitian(const RVector& x, Eigen::Index n) {
    CMatrix m = CMatrix::Zero(n, n);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i) m(i, i) = x[k++];
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const cdouble v(x[k] / std::sqrt(2.0), x[k + 1] / std::sqrt(2.0));
            k += 2;
            m(i, j) = v;
            m(j, i) = std::conj(v);
        }
    }
    return m;
}

}  // namespace isac::linalg
