#pragma once

#include <cstdint>
#include <random>

#include "isac/types.hpp"

namespace isac {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream purposes; distinct tags keep e.g. the channel draw independent of
// the Monte-Carlo payload draws under the same seed.
enum class StreamTag : std::uint64_t {
    comm_channel = 1,
    payload = 2,
    test_directions = 3,
};

/// Independent generator keyed by (seed, tag, index). The same key always
/// yields the same sequence regardless of evaluation order.
inline std::mt19937_64 make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
    h = splitmix64(h ^ index);
    return std::mt19937_64(h);
}

/// Circularly-symmetric CN(0, 1) entries.
template <typename Rng>
CMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    CMatrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            m(i, j) = cdouble(re, im);
        }
    }
    return m;
}

/// Random PSD covariance Z Z^H scaled to trace = fraction * power with
/// fraction uniform in [min_fraction, 1].
template <typename Rng>
PrecoderCovariance random_feasible_covariance(Eigen::Index n, double power, Rng& rng,
                                              double min_fraction = 0.2) {
    const CMatrix z = complex_gaussian(n, n, rng);
    CMatrix theta = z * z.adjoint();
    theta = 0.5 * (theta + theta.adjoint()).eval();
    std::uniform_real_distribution<double> uniform(min_fraction, 1.0);
    theta *= uniform(rng) * power / theta.trace().real();
    return PrecoderCovariance{theta};
}

}  // namespace isac
