#pragma once

#include <cmath>
#include <numbers>

#include "isac/config.hpp"
#include "isac/linalg.hpp"
#include "isac/random.hpp"
#include "isac/types.hpp"

namespace isac {

/// Half-wavelength ULA response: entry k = exp(i*pi*k*sin(angle)).
inline SteeringVector make_steering(double angle_deg, int n) {
    if (n < 1) throw DimensionError("steering vector length must be >= 1");
    const double phase = std::numbers::pi * std::sin(angle_deg * std::numbers::pi / 180.0);
    SteeringVector a{CVector(n)};
    for (int k = 0; k < n; ++k) a.entries[k] = std::polar(1.0, phase * k);
    return a;
}

/// First n_tx rows of the unitary L-point DFT matrix, so S_p S_p^H = I.
inline PilotMatrix make_pilot(int n_tx, int slots) {
    if (n_tx < 1 || slots < n_tx) {
        throw DimensionError("pilot needs 1 <= n_tx <= slots (got n_tx=" + std::to_string(n_tx) +
                             ", slots=" + std::to_string(slots) + ")");
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(slots));
    PilotMatrix p{CMatrix(n_tx, slots)};
    for (int k = 0; k < n_tx; ++k) {
        for (int l = 0; l < slots; ++l) {
            // Reduce k*l mod L first so the phase argument stays small.
            const long kl = (static_cast<long>(k) * l) % slots;
            p.entries(k, l) = std::polar(scale, -2.0 * std::numbers::pi * kl / slots);
        }
    }
    return p;
}

/// i.i.d. CN(0, 1) channel drawn from the seeded comm-channel stream.
inline CommChannel make_comm_channel(const ScenarioConfig& cfg) {
    auto rng = make_stream(cfg.seed, StreamTag::comm_channel);
    return CommChannel{complex_gaussian(cfg.n_rx_comm, cfg.n_tx, rng)};
}

/// rho = |alpha|^2 tr(R_r) / sigma^2 with R_r = a_r a_r^H.
inline double effective_snr(const ScenarioConfig& cfg, const SteeringVector& a_r) {
    return std::norm(cfg.path_gain()) * a_r.norm2() / cfg.noise_power;
}

/// d = a_t^H Theta a_t.
inline double beam_gain(const PrecoderCovariance& theta, const SteeringVector& a_t) {
    if (theta.dim() != a_t.size()) throw DimensionError("beam_gain: dimension mismatch");
    if (!linalg::is_hermitian(theta.entries)) {
        throw DimensionError("beam_gain: covariance is not Hermitian");
    }
    return (a_t.entries.adjoint() * theta.entries * a_t.entries)(0, 0).real();
}

/// Everything derived from a config that the evaluators need repeatedly.
struct Scenario {
    ScenarioConfig cfg;
    SteeringVector a_t;
    SteeringVector a_r;
    PilotMatrix pilot;
    CommChannel channel;
    double rho = 0.0;

    static Scenario build(const ScenarioConfig& cfg) {
        validate(cfg);
        Scenario s;
        s.cfg = cfg;
        s.a_t = make_steering(cfg.aod_deg, cfg.n_tx);
        s.a_r = make_steering(cfg.aoa_deg, cfg.n_rx_sense);
        s.pilot = make_pilot(cfg.n_tx, cfg.slots);
        s.channel = make_comm_channel(cfg);
        s.rho = effective_snr(cfg, s.a_r);
        return s;
    }
};

inline PrecoderCovariance isotropic(int n_tx, double power) {
    return PrecoderCovariance{CMatrix::Identity(n_tx, n_tx) * (power / n_tx)};
}

}  // namespace isac
