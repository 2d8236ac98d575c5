#include <cmath>

#include <doctest.h>

#include "generators.hpp"
#include "twophase/errors.hpp"
#include "twophase/linalg.hpp"
#include "twophase/model.hpp"

using namespace twophase;

namespace {

FluidConstants fluids(double A1, double gamma, double A2, double alpha, double mu = 1.0) {
    FluidConstants f;
    f.A1 = A1;
    f.gamma = gamma;
    f.A2 = A2;
    f.alpha = alpha;
    f.mu = mu;
    return f;
}

ModelSpec unit_spec(double u_plus) { return ModelSpec(FluidConstants{}, FarFieldState{1.0, 1.0, u_plus}, u_plus); }

}  // namespace

TEST_CASE("pressure laws") {
    CHECK(pressure(fluids(1, 1, 1, 1), 1.0, Phase::One) == doctest::Approx(1.0));
    CHECK(pressure(fluids(2, 3, 1, 1), 2.0, Phase::One) == doctest::Approx(16.0));
    CHECK(pressure(fluids(1, 1, 1, 2), 3.0, Phase::Two) == doctest::Approx(9.0));
    CHECK(pressure_derivative(fluids(1, 1, 1, 1), 7.0, Phase::One) == doctest::Approx(1.0));
    CHECK(pressure_derivative(fluids(2, 3, 1, 1), 2.0, Phase::One) == doctest::Approx(24.0));
    CHECK(pressure_derivative(fluids(1, 1, 1, 2), 3.0, Phase::Two) == doctest::Approx(6.0));
    CHECK_THROWS_AS(pressure(FluidConstants{}, 0.0, Phase::One), std::domain_error);
    CHECK_THROWS_AS(pressure_derivative(FluidConstants{}, -1.0, Phase::Two), std::domain_error);
}

TEST_CASE("mixture sound speed") {
    CHECK(sound_speed(FluidConstants{}, 1.0, 1.0) == doctest::Approx(1.0));
    CHECK(sound_speed(fluids(2, 3, 1, 2), 1.0, 4.0) == doctest::Approx(std::sqrt(38.0 / 5.0)).epsilon(1e-14));
    CHECK(sound_speed(fluids(1, 1, 1, 1), 3.0, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("parameter invariants are enforced") {
    CHECK_THROWS_AS(ModelSpec(fluids(0, 1, 1, 1), FarFieldState{}, -1.0), ConfigError);
    CHECK_THROWS_AS(ModelSpec(fluids(1, 0.5, 1, 1), FarFieldState{}, -1.0), ConfigError);
    CHECK_THROWS_AS(ModelSpec(fluids(1, 1, 1, 1, 0.0), FarFieldState{}, -1.0), ConfigError);
    CHECK_THROWS_AS(ModelSpec(FluidConstants{}, FarFieldState{1.0, 1.0, 0.5}, -1.0), ConfigError);
    CHECK_THROWS_AS(ModelSpec(FluidConstants{}, FarFieldState{-1.0, 1.0, -1.0}, -1.0), ConfigError);
    try {
        ModelSpec(FluidConstants{}, FarFieldState{}, 0.3);
        FAIL("positive u_minus accepted");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("u_minus must be < 0") != std::string::npos);
    }
    const ModelSpec s = ModelSpec::with_delta(FluidConstants{}, FarFieldState{1.0, 1.0, -2.0}, 0.05);
    CHECK(s.u_minus() == doctest::Approx(-2.05));
    CHECK(s.delta() == doctest::Approx(0.05));
}

TEST_CASE("regime classification") {
    const Regime sup = classify_regime(unit_spec(-2.0));
    CHECK(sup.cls == RegimeClass::Supersonic);
    CHECK(sup.mach == doctest::Approx(2.0));
    const Regime son = classify_regime(unit_spec(-1.0));
    CHECK(son.cls == RegimeClass::Sonic);
    CHECK(son.mach == doctest::Approx(1.0));
    const Regime sub = classify_regime(unit_spec(-0.5));
    CHECK(sub.cls == RegimeClass::Subsonic);
    CHECK(sub.mach == doctest::Approx(0.5));
    CHECK(classify_regime(unit_spec(-1.0 - 1e-7)).cls == RegimeClass::Supersonic);
    CHECK(classify_regime(unit_spec(-1.0 - 1e-7), 1e-6).cls == RegimeClass::Sonic);
    CHECK_THROWS_AS(classify_regime(unit_spec(-1.0), 0.0), ConfigError);
}

TEST_CASE("derived constants of the symmetric unit sonic spec") {
    const DerivedConstants d = derived_constants(unit_spec(-1.0));
    CHECK(d.c_plus == 1.0);
    CHECK(d.b == 0.0);
    CHECK(d.a == 1.0);
    CHECK(d.lambda_star == 5.0);
}

TEST_CASE("lambda_star stays in (2 + sqrt 8, 5] and equals 5 for b = 0") {
    testgen::Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const DerivedConstants d = derived_constants(testgen::sonic(rng));
        CHECK(d.lambda_star > 2.0 + std::sqrt(8.0));
        CHECK(d.lambda_star <= 5.0);
        CHECK(d.a > 0.0);
        CHECK(d.b >= 0.0);
        CHECK(derived_constants(testgen::sonic_b_zero(rng)).lambda_star == doctest::Approx(5.0).epsilon(1e-12));
    }
    // b -> infinity: u_plus^2 far from p1'(rho_plus)
    const ModelSpec big(FluidConstants{}, FarFieldState{1e6, 1e-6, -1e3}, -1e3);
    CHECK(derived_constants(big).lambda_star == doctest::Approx(2.0 + std::sqrt(8.0)).epsilon(1e-9));
}

TEST_CASE("sonic pressure-compatibility condition") {
    // equal pressure derivatives: left side vanishes
    const ModelSpec eq(FluidConstants{}, sonic_far_state(FluidConstants{}, 1.0, 1.0), -1.0);
    CHECK(sonic_pressure_condition(eq).holds);
    CHECK(sonic_pressure_condition(eq).margin >= 0.0);

    const FluidConstants f_iso = fluids(1, 1, 2, 1);
    const ModelSpec iso(f_iso, sonic_far_state(f_iso, 1.0, 1.0), -1.0);
    CHECK_FALSE(sonic_pressure_condition(iso).holds);
    CHECK(sonic_pressure_condition(iso).margin == doctest::Approx(-1.0));

    // gamma = alpha = 2, A1 = A2 = 1, rho = 1, n = 2: p1' = 2, p2' = 4, c^2 = 10/3
    const FluidConstants f2 = fluids(1, 2, 1, 2);
    const ModelSpec s2(f2, sonic_far_state(f2, 1.0, 2.0), -1.0);
    CHECK(sound_speed(s2) == doctest::Approx(std::sqrt(10.0 / 3.0)));
    const SonicCondition c = sonic_pressure_condition(s2);
    CHECK(c.holds);
    CHECK(c.margin == doctest::Approx(3.0 * std::sqrt(10.0 / 3.0) - 2.0).epsilon(1e-13));
}

TEST_CASE("monic cubic roots") {
    const auto r = linalg::solve_monic_cubic(3.0, 0.25, -3.0);
    CHECK(r[0].real() == doctest::Approx(-2.3507810593582121).epsilon(1e-13));
    CHECK(r[1].real() == doctest::Approx(-1.5).epsilon(1e-13));
    CHECK(r[2].real() == doctest::Approx(0.8507810593582121).epsilon(1e-13));
    for (const auto& z : r) CHECK(std::abs(z.imag()) < 1e-14);

    // (x - 1)(x^2 + 1): a complex pair sharing real part 0
    const auto c = linalg::solve_monic_cubic(-1.0, 1.0, -1.0);
    CHECK(std::abs(c[0] - std::complex<double>(0.0, -1.0)) < 1e-12);
    CHECK(std::abs(c[1] - std::complex<double>(0.0, 1.0)) < 1e-12);
    CHECK(std::abs(c[2] - 1.0) < 1e-12);

    // random cubics with known roots: Vieta round trip
    testgen::Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        const double a = rng.uniform(-5, 5), b = rng.uniform(-5, 5), d = rng.uniform(-5, 5);
        const auto q = linalg::solve_monic_cubic(-(a + b + d), a * b + a * d + b * d, -a * b * d);
        const auto sum = q[0] + q[1] + q[2];
        const auto prod = q[0] * q[1] * q[2];
        CHECK(std::abs(sum.real() - (a + b + d)) < 1e-9 * (1 + std::abs(a) + std::abs(b) + std::abs(d)));
        CHECK(std::abs(prod.real() - a * b * d) < 1e-8 * (1 + std::abs(a * b * d)));
    }
}

TEST_CASE("symmetric eigen-decomposition") {
    Eigen::Matrix3d m;
    m << 2, 1, 0, 1, 2, 0, 0, 0, 5;
    const auto e = linalg::symmetric_eigen(m);
    CHECK(e.values(0) == doctest::Approx(1.0));
    CHECK(e.values(1) == doctest::Approx(3.0));
    CHECK(e.values(2) == doctest::Approx(5.0));
    CHECK((e.vectors.transpose() * e.vectors - Eigen::Matrix3d::Identity()).norm() < 1e-13);
}
