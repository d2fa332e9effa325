#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "isac/random.hpp"
#include "isac/smi.hpp"
#include "oracles.hpp"

namespace isac {
namespace {

ScenarioConfig small_config() {
    ScenarioConfig cfg;
    cfg.mc_trials = 2000;
    return cfg;
}

TEST(SampleSmi, FullMatchesReducedOnRandomInstances) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> dim(1, 4);
    std::uniform_real_distribution<double> angle(-80.0, 80.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int nt = dim(rng);
        const int nr = dim(rng);
        const int slots = nt + dim(rng);
        const SteeringVector a_t = make_steering(angle(rng), nt);
        const SteeringVector a_r = make_steering(angle(rng), nr);
        const CMatrix x = complex_gaussian(nt, slots, rng);
        const cdouble alpha(0.7, -0.4);
        const double sigma2 = 0.3;
        const double rho = std::norm(alpha) * a_r.norm2() / sigma2;
        EXPECT_NEAR(smi_sample_full(x, a_t, a_r, alpha, sigma2), smi_sample_reduced(x, a_t, rho, slots), 1e-10);
    }
}

TEST(SampleSmi, PurePilotValue) {
    // ||a_t^H S_p||^2 = ||a_t||^2 for orthonormal pilot rows.
    const SteeringVector a_t = make_steering(10.0, 4);
    const PilotMatrix p = make_pilot(4, 16);
    EXPECT_NEAR(smi_sample_reduced(p.entries, a_t, 10.0, 16), std::log(1.0 + 10.0 * 4.0 / 16.0), 1e-12);
    const SteeringVector a_r = make_steering(20.0, 6);
    EXPECT_NEAR(smi_sample_full(p.entries, a_t, a_r, cdouble(1.0, 0.0), 0.6), std::log(1.0 + 10.0 * 4.0 / 16.0),
                1e-10);
}

TEST(SampleSmi, DimensionErrors) {
    const SteeringVector a_t = make_steering(10.0, 4);
    EXPECT_THROW(smi_sample_reduced(CMatrix::Zero(3, 8), a_t, 1.0, 8), DimensionError);
    EXPECT_THROW(smi_sample_full(CMatrix::Zero(3, 8), a_t, a_t, cdouble(1, 0), 1.0), DimensionError);
}

TEST(MonteCarlo, ZeroCovarianceIsDeterministicPilotValue) {
    const Scenario sc = Scenario::build(small_config());
    const SmiEstimate est = smi_monte_carlo(PrecoderCovariance{CMatrix::Zero(4, 4)}, sc.pilot, sc);
    EXPECT_NEAR(est.mean, std::log(1.0 + sc.rho * 4.0 / 16.0), 1e-12);
    EXPECT_NEAR(est.std_error, 0.0, 1e-12);
    EXPECT_EQ(est.trials, 2000);
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResult) {
    const Scenario sc = Scenario::build(small_config());
    const PrecoderCovariance theta = isotropic(4, 1.0);
    const SmiEstimate one = smi_monte_carlo(theta, sc.pilot, sc, 1);
    const SmiEstimate four = smi_monte_carlo(theta, sc.pilot, sc, 4);
    const SmiEstimate again = smi_monte_carlo(theta, sc.pilot, sc, 1);
    EXPECT_EQ(one.mean, four.mean);
    EXPECT_EQ(one.std_error, four.std_error);
    EXPECT_EQ(one.mean, again.mean);
    EXPECT_GE(one.mean, 0.0);
}

TEST(MonteCarlo, StdErrorIsSampleStdOverRootN) {
    ScenarioConfig cfg = small_config();
    cfg.mc_trials = 500;
    const Scenario sc = Scenario::build(cfg);
    const PrecoderCovariance theta = isotropic(4, 1.0);
    const CMatrix f = CMatrix::Identity(4, 4) * 0.5;  // sqrt(P / N_t)

    // Recompute the per-trial samples with the documented stream layout.
    std::vector<double> s;
    for (long k = 0; k < cfg.mc_trials; ++k) {
        auto rng = make_stream(cfg.seed, StreamTag::payload, static_cast<std::uint64_t>(k));
        const CMatrix x = sc.pilot.entries + f * complex_gaussian(4, cfg.slots, rng);
        s.push_back(std::log1p(sc.rho * (sc.a_t.entries.adjoint() * x).squaredNorm() / cfg.slots));
    }
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= s.size();
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    var /= (s.size() - 1);

    const SmiEstimate est = smi_monte_carlo(theta, sc.pilot, sc, 1);
    EXPECT_NEAR(est.mean, mean, 1e-12);
    EXPECT_NEAR(est.std_error, std::sqrt(var / s.size()), 1e-12);
}

TEST(MonteCarlo, PilotShapeMismatch) {
    const Scenario sc = Scenario::build(small_config());
    EXPECT_THROW(smi_monte_carlo(isotropic(4, 1.0), make_pilot(4, 8), sc), DimensionError);
}

TEST(FixedPoint, ZeroSnrGivesZero) {
    const FixedPointSolution s = solve_fixed_point(0.0, 1.0, 4.0, 16, 1e-12, 100000);
    EXPECT_EQ(s.delta, 0.0);
    EXPECT_EQ(s.delta_tilde, 0.0);
    FixedPointProblem p{0.0, 1.0, 4.0, 16};
    EXPECT_EQ(deterministic_smi_value(p, s), 0.0);
}

TEST(FixedPoint, ZeroGainClosedForm) {
    for (int L : {1, 4, 16, 128}) {
        for (double rho : {0.01, 1.0, 10.0, 100.0}) {
            const FixedPointProblem p{rho, 0.0, 4.0, L};
            const SmiDeterministic r = smi_deterministic(p);
            EXPECT_NEAR(r.solution.delta, 0.0, 1e-12);
            EXPECT_NEAR(r.value, std::log(1.0 + rho * 4.0 / L), 1e-10) << "rho=" << rho << " L=" << L;
        }
    }
}

TEST(FixedPoint, AgreesWithIndependentNewtonSolve) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lr(-2.0, 2.0);
    std::uniform_real_distribution<double> ud(0.0, 10.0);
    std::uniform_int_distribution<int> ul(1, 128);
    for (int k = 0; k < 50; ++k) {
        const double rho = std::pow(10.0, lr(rng));
        const double d = ud(rng);
        const int L = ul(rng);
        const FixedPointSolution s = solve_fixed_point(rho, d, 4.0, L, 1e-12, 100000);
        EXPECT_LE(s.residual, 1e-12);
        const auto [x, y] = oracle::fp_newton({rho, d, 4.0, double(L)}, 0.5, rho);
        EXPECT_NEAR(s.delta, x, 1e-8 * (1.0 + std::abs(x)));
        EXPECT_NEAR(s.delta_tilde, y, 1e-8 * (1.0 + std::abs(y)));
        const FixedPointProblem p{rho, d, 4.0, L};
        EXPECT_NEAR(deterministic_smi_value(p, s), oracle::de_value({rho, d, 4.0, double(L)}, x, y), 1e-9);
    }
}

TEST(FixedPoint, StartingPointDoesNotMatter) {
    const FixedPointProblem p{10.0, 1.5, 4.0, 16};
    FixedPointOptions base;
    const FixedPointSolution ref = solve_fixed_point(p, base);
    for (auto [x0, y0] : {std::pair{0.0, 0.0}, {10.0, 10.0}, {0.01, 50.0}, {5.0, 0.0}}) {
        FixedPointOptions o;
        o.init_delta = x0;
        o.init_delta_tilde = y0;
        const FixedPointSolution s = solve_fixed_point(p, o);
        EXPECT_NEAR(s.delta, ref.delta, 1e-10);
        EXPECT_NEAR(s.delta_tilde, ref.delta_tilde, 1e-10);
    }
}

TEST(FixedPoint, NonConvergenceThrows) {
    FixedPointOptions o;
    o.max_iters = 2;
    EXPECT_THROW(solve_fixed_point(FixedPointProblem{10.0, 1.0, 4.0, 16}, o), NumericalError);
}

TEST(Deterministic, NondecreasingInGain) {
    double prev = -1.0;
    for (double d = 0.0; d <= 20.0; d += 0.25) {
        const double v = smi_deterministic(FixedPointProblem{10.0, d, 4.0, 16}).value;
        EXPECT_GE(v, prev - 1e-12);
        prev = v;
    }
}

TEST(Deterministic, DependsOnThetaOnlyThroughGain) {
    const Scenario sc = Scenario::build(ScenarioConfig{});
    const PrecoderCovariance t1 = isotropic(4, 1.0);
    const double d = beam_gain(t1, sc.a_t);
    const PrecoderCovariance t2{d * sc.a_t.entries * sc.a_t.entries.adjoint() / (sc.a_t.norm2() * sc.a_t.norm2())};
    EXPECT_NEAR(beam_gain(t2, sc.a_t), d, 1e-12);
    EXPECT_NEAR(smi_deterministic(t1, sc).value, smi_deterministic(t2, sc).value, 1e-12);
}

TEST(Deterministic, CloseToMonteCarloAtDefaultScenario) {
    ScenarioConfig cfg;
    cfg.mc_trials = 4000;
    const Scenario sc = Scenario::build(cfg);
    const PrecoderCovariance theta = isotropic(4, 1.0);
    const double de = smi_deterministic(theta, sc).value;
    const SmiEstimate mc = smi_monte_carlo(theta, sc.pilot, sc);
    EXPECT_LE(std::abs(de - mc.mean), 0.02 * mc.mean);
}

TEST(CommRate, ScalarClosedForm) {
    CommChannel g{CMatrix::Constant(1, 1, cdouble(0.0, 2.0))};
    PrecoderCovariance t{CMatrix::Constant(1, 1, cdouble(0.5, 0.0))};
    EXPECT_NEAR(comm_rate(g, t, 0.25), std::log(1.0 + 4.0 * 0.5 / 0.25), 1e-12);
    EXPECT_EQ(comm_rate(g, PrecoderCovariance{CMatrix::Zero(1, 1)}, 0.25), 0.0);
}

TEST(CommRate, MatchesSylvesterEigenvalueForm) {
    auto rng = make_stream(3, StreamTag::test_directions);
    for (int k = 0; k < 20; ++k) {
        const CommChannel g{complex_gaussian(3, 4, rng)};
        const PrecoderCovariance t = random_feasible_covariance(4, 1.0, rng);
        // log det(I_4 + T^{1/2} G^H G T^{1/2} / sigma2) via eigenvalues.
        Eigen::SelfAdjointEigenSolver<CMatrix> es(t.entries);
        const CMatrix half = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                             es.eigenvectors().adjoint();
        const CMatrix m = half * g.entries.adjoint() * g.entries * half / 0.5;
        Eigen::SelfAdjointEigenSolver<CMatrix> em(0.5 * (m + m.adjoint()));
        double ref = 0.0;
        for (Eigen::Index i = 0; i < 4; ++i) ref += std::log1p(em.eigenvalues()[i]);
        EXPECT_NEAR(comm_rate(g, t, 0.5), ref, 1e-10);
    }
}

TEST(CommRate, RejectsInvalidCovariance) {
    const CommChannel g{CMatrix::Identity(2, 2)};
    CMatrix neg = CMatrix::Identity(2, 2);
    neg(1, 1) = -0.1;
    EXPECT_THROW(comm_rate(g, PrecoderCovariance{neg}, 1.0), DimensionError);
    CMatrix asym = CMatrix::Identity(2, 2);
    asym(0, 1) = 0.3;
    EXPECT_THROW(comm_rate(g, PrecoderCovariance{asym}, 1.0), DimensionError);
    EXPECT_THROW(comm_rate(g, PrecoderCovariance{CMatrix::Identity(3, 3)}, 1.0), DimensionError);
}

TEST(CommRate, ConcaveAlongSegments) {
    auto rng = make_stream(4, StreamTag::test_directions);
    const CommChannel g{complex_gaussian(4, 4, rng)};
    for (int k = 0; k < 20; ++k) {
        const PrecoderCovariance t1 = random_feasible_covariance(4, 1.0, rng);
        const PrecoderCovariance t2 = random_feasible_covariance(4, 1.0, rng);
        for (double lam : {0.25, 0.5, 0.75}) {
            const PrecoderCovariance mid{lam * t1.entries + (1 - lam) * t2.entries};
            EXPECT_GE(comm_rate(g, mid, 0.1),
                      lam * comm_rate(g, t1, 0.1) + (1 - lam) * comm_rate(g, t2, 0.1) - 1e-12);
        }
    }
}

}  // namespace
}  // namespace isac
