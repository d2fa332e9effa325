#pragma once

#include "isac/linalg.hpp"
#include "isac/types.hpp"

namespace isac {

/// F = V diag(sqrt(lambda)) from Theta = V diag(lambda) V^H, so F F^H = Theta.
/// Negative eigenvalues (roundoff) are clipped to zero.
inline CMatrix extract_precoder(const PrecoderCovariance& theta) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(linalg::hermitian_part(theta.entries));
    const RVector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal();
}

}  // namespace isac
