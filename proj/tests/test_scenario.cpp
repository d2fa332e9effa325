#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "isac/config.hpp"
#include "isac/random.hpp"
#include "isac/scenario.hpp"

namespace isac {
namespace {

TEST(Steering, BroadsideIsAllOnes) {
    const SteeringVector a = make_steering(0.0, 4);
    ASSERT_EQ(a.size(), 4);
    for (Eigen::Index k = 0; k < 4; ++k) {
        EXPECT_DOUBLE_EQ(a.entries[k].real(), 1.0);
        EXPECT_DOUBLE_EQ(a.entries[k].imag(), 0.0);
    }
}

TEST(Steering, PhaseProgressionAndNorm) {
    const SteeringVector a = make_steering(10.0, 4);
    const double phase = std::numbers::pi * std::sin(10.0 * std::numbers::pi / 180.0);
    for (int k = 0; k < 4; ++k) {
        EXPECT_NEAR(std::abs(a.entries[k] - std::polar(1.0, phase * k)), 0.0, 1e-15);
    }
    EXPECT_NEAR(a.norm2(), 4.0, 1e-12);
}

TEST(Steering, NegativeAngleConjugates) {
    const SteeringVector p = make_steering(10.0, 4);
    const SteeringVector m = make_steering(-10.0, 4);
    EXPECT_LE((p.entries.conjugate() - m.entries).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Steering, NormEqualsLengthForManyAngles) {
    for (int n = 1; n <= 64; n *= 2) {
        for (double deg = -90.0; deg <= 90.0; deg += 7.5) {
            const SteeringVector a = make_steering(deg, n);
            EXPECT_NEAR(a.norm2(), n, 1e-12);
            EXPECT_LE((a.entries.cwiseAbs().array() - 1.0).abs().maxCoeff(), 1e-14);
        }
    }
}

TEST(Pilot, ScalarCase) {
    const PilotMatrix p = make_pilot(1, 1);
    ASSERT_EQ(p.entries.rows(), 1);
    ASSERT_EQ(p.entries.cols(), 1);
    EXPECT_NEAR(std::abs(p.entries(0, 0) - cdouble(1.0, 0.0)), 0.0, 1e-15);
}

TEST(Pilot, RowsAreOrthonormal) {
    for (int n_tx = 1; n_tx <= 8; ++n_tx) {
        for (int slots = n_tx; slots <= 70; slots += 3) {
            const PilotMatrix p = make_pilot(n_tx, slots);
            const CMatrix gram = p.entries * p.entries.adjoint();
            const double err = (gram - CMatrix::Identity(n_tx, n_tx)).cwiseAbs().maxCoeff();
            EXPECT_LE(err, 1e-12) << "n_tx=" << n_tx << " slots=" << slots;
        }
    }
}

TEST(Pilot, TooFewSlotsIsDimensionError) {
    EXPECT_THROW(make_pilot(4, 3), DimensionError);
}

TEST(CommChannel, SeededAndShaped) {
    ScenarioConfig cfg;
    cfg.n_rx_comm = 2;
    cfg.n_tx = 4;
    const CommChannel g1 = make_comm_channel(cfg);
    const CommChannel g2 = make_comm_channel(cfg);
    EXPECT_EQ(g1.entries.rows(), 2);
    EXPECT_EQ(g1.entries.cols(), 4);
    EXPECT_TRUE(g1.entries == g2.entries);
    EXPECT_TRUE(g1.entries.allFinite());

    cfg.seed += 1;
    const CommChannel g3 = make_comm_channel(cfg);
    EXPECT_FALSE(g1.entries == g3.entries);
}

TEST(EffectiveSnr, ZeroGain) {
    ScenarioConfig cfg;
    cfg.alpha = cdouble(0.0, 0.0);
    EXPECT_EQ(effective_snr(cfg, make_steering(20.0, 6)), 0.0);
}

TEST(EffectiveSnr, UnitGainToNoiseRatio) {
    ScenarioConfig cfg;
    cfg.noise_power = 2.5e-3;
    cfg.alpha = cdouble(0.0, std::sqrt(2.5e-3));
    EXPECT_NEAR(effective_snr(cfg, make_steering(20.0, 6)), 6.0, 1e-12);
}

TEST(EffectiveSnr, DefaultScenario) {
    const ScenarioConfig cfg;  // sigma^2 = -90 dBm, rho_target = 10
    const double rho = effective_snr(cfg, make_steering(cfg.aoa_deg, cfg.n_rx_sense));
    EXPECT_NEAR(rho, std::norm(cfg.path_gain()) * 6.0 * 1e12, 1e-9);
    EXPECT_NEAR(rho, 10.0, 1e-9);
}

TEST(EffectiveSnr, ScalesQuadraticallyInGainInverselyInNoise) {
    ScenarioConfig cfg;
    const SteeringVector a_r = make_steering(cfg.aoa_deg, cfg.n_rx_sense);
    cfg.alpha = cdouble(3e-6, -1e-6);
    const double base = effective_snr(cfg, a_r);
    cfg.alpha = *cfg.alpha * 3.0;
    EXPECT_NEAR(effective_snr(cfg, a_r), 9.0 * base, 1e-9 * base);
    cfg.noise_power *= 4.0;
    EXPECT_NEAR(effective_snr(cfg, a_r), 9.0 * base / 4.0, 1e-9 * base);
}

TEST(BeamGain, Examples) {
    const SteeringVector a = make_steering(10.0, 4);
    EXPECT_EQ(beam_gain(PrecoderCovariance{CMatrix::Zero(4, 4)}, a), 0.0);
    EXPECT_NEAR(beam_gain(isotropic(4, 2.0), a), 2.0, 1e-12);
    const PrecoderCovariance matched{2.0 * a.entries * a.entries.adjoint() / a.norm2()};
    EXPECT_NEAR(beam_gain(matched, a), 2.0 * a.norm2(), 1e-12);
}

TEST(BeamGain, RejectsNonHermitian) {
    CMatrix m = CMatrix::Identity(4, 4);
    m(0, 1) = cdouble(0.5, 0.0);
    EXPECT_THROW(beam_gain(PrecoderCovariance{m}, make_steering(10.0, 4)), DimensionError);
}

TEST(BeamGain, LinearAndBlindToNullDirections) {
    const SteeringVector a = make_steering(10.0, 4);
    auto rng = make_stream(7, StreamTag::test_directions);
    for (int trial = 0; trial < 20; ++trial) {
        const PrecoderCovariance t1 = random_feasible_covariance(4, 1.0, rng);
        const PrecoderCovariance t2 = random_feasible_covariance(4, 1.0, rng);
        const double lin = beam_gain(PrecoderCovariance{0.3 * t1.entries + 0.7 * t2.entries}, a);
        EXPECT_NEAR(lin, 0.3 * beam_gain(t1, a) + 0.7 * beam_gain(t2, a), 1e-12);

        // M with a^H M a = 0
        CMatrix m = complex_gaussian(4, 4, rng);
        m = 0.5 * (m + m.adjoint()).eval();
        const double along = (a.entries.adjoint() * m * a.entries)(0, 0).real();
        m -= along / (a.norm2() * a.norm2()) * a.entries * a.entries.adjoint();
        EXPECT_NEAR(beam_gain(PrecoderCovariance{t1.entries + m}, a), beam_gain(t1, a), 1e-12);
        EXPECT_LE(beam_gain(t1, a), a.norm2() * t1.trace() + 1e-12);
    }
}

TEST(Config, DbmConversion) {
    EXPECT_NEAR(dbm_to_watts(30.0), 1.0, 1e-15);
    EXPECT_NEAR(dbm_to_watts(-90.0), 1e-12, 1e-27);
}

TEST(Config, ParsesKeysAndComments) {
    const ScenarioConfig cfg = parse_config_string(
        "# scenario\n"
        "n_tx = 2\n"
        "slots = 8   # trailing comment\n"
        "\n"
        "power_budget_dbm = 20\n"
        "noise_power_dbm = -80\n"
        "alpha_re = 1e-5\n"
        "alpha_im = -2e-5\n"
        "units = bits\n");
    EXPECT_EQ(cfg.n_tx, 2);
    EXPECT_EQ(cfg.slots, 8);
    EXPECT_NEAR(cfg.power_budget, 0.1, 1e-15);
    EXPECT_NEAR(cfg.noise_power, 1e-11, 1e-25);
    ASSERT_TRUE(cfg.alpha.has_value());
    EXPECT_EQ(*cfg.alpha, cdouble(1e-5, -2e-5));
    EXPECT_TRUE(cfg.output_bits);
}

TEST(Config, ErrorsCarryLineNumbers) {
    try {
        parse_config_string("n_tx = 4\nslots = sixteen\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 2);
    }
    try {
        parse_config_string("n_tx = 4\n\n\nbogus_key = 1\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 4);
    }
    EXPECT_THROW(parse_config_string("just some words\n"), ConfigError);
}

TEST(Config, ValidationRejectsInvariantViolations) {
    EXPECT_THROW(parse_config_string("n_tx = 8\nslots = 4\n"), ConfigError);
    EXPECT_THROW(parse_config_string("noise_power = 0\n"), ConfigError);
    EXPECT_THROW(parse_config_string("gp_step = -1\n"), ConfigError);
    EXPECT_THROW(parse_config_string("mc_trials = 0\n"), ConfigError);
}

}  // namespace
}  // namespace isac
