#include <cmath>
#include <functional>
#include <sstream>

#include <doctest.h>

#include "generators.hpp"
#include "twophase/errors.hpp"
#include "twophase/steady.hpp"

using namespace twophase;

namespace {

// mu = 1, n+ = rho+ = 1, u+ = -2, gamma = alpha = 1, A1 = A2 = 1
ModelSpec sample(double delta) { return ModelSpec::with_delta(FluidConstants{}, FarFieldState{1.0, 1.0, -2.0}, delta); }

// Direct evaluation of the steady momentum balances in primitive variables.
Eigen::Vector3d rhs_oracle(const ModelSpec& s, const ReducedState& r) {
    const auto& f = s.fluids();
    const double j1 = s.far().rho_plus * s.far().u_plus;
    const double j2 = s.far().n_plus * s.far().u_plus;
    const double u = s.far().u_plus + r.u_bar;
    const double v = s.far().u_plus + r.v_bar;
    const double rho = j1 / u;
    const double n = j2 / v;
    const double p1 = f.A1 * std::pow(rho, f.gamma), p1p = f.A1 * std::pow(s.far().rho_plus, f.gamma);
    const double p2 = f.A2 * std::pow(n, f.alpha), p2p = f.A2 * std::pow(s.far().n_plus, f.alpha);
    // total momentum integrated from infinity: j1 u + p1 + j2 v + p2 - mu u_x - n v_x = const
    const double vx = (j1 * r.u_bar + (p1 - p1p) + j2 * r.v_bar + (p2 - p2p) - f.mu * r.w_bar) / n;
    // phase-1 momentum with rho_x = -rho u_x / u
    const double dp1 = f.A1 * f.gamma * std::pow(rho, f.gamma - 1.0);
    const double uxx = (j1 * r.w_bar - dp1 * rho * r.w_bar / u - n * (v - u)) / f.mu;
    return {r.w_bar, uxx, vx};
}

SteadyProfile synthetic(double delta, const std::function<double(double)>& dev) {
    SteadyProfile p;
    p.far = FarFieldState{1.0, 1.0, -1.0};
    p.delta = delta;
    for (int i = 0; i <= 400; ++i) {
        const double x = 0.25 * i;
        p.x.push_back(x);
        const double u = -1.0 - dev(x);
        p.u_t.push_back(u);
        p.v_t.push_back(u);
        p.rho_t.push_back(1.0 / -u);
        p.n_t.push_back(1.0 / -u);
        p.ux_t.push_back(0.0);
        p.vx_t.push_back(0.0);
    }
    return p;
}

}  // namespace

TEST_CASE("steady right-hand side") {
    const ModelSpec s = sample(0.05);
    CHECK(steady_rhs(s, {}).norm() == 0.0);

    const ReducedState r{0.01, 0.0, 0.01};
    CHECK((steady_rhs(s, r) - rhs_oracle(s, r)).norm() < 1e-14);

    FluidConstants f;
    f.A1 = 1.3;
    f.gamma = 2.0;
    f.A2 = 0.7;
    f.alpha = 1.5;
    f.mu = 0.8;
    const ModelSpec g(f, FarFieldState{1.2, 0.6, -3.0}, -3.05);
    for (const ReducedState q : {ReducedState{0.01, 0.0, 0.01}, ReducedState{-0.02, 0.03, 0.015},
                                 ReducedState{0.3, -0.1, -0.2}}) {
        const Eigen::Vector3d a = steady_rhs(g, q), b = rhs_oracle(g, q);
        CHECK((a - b).norm() < 1e-12 * (1.0 + b.norm()));
    }

    CHECK_THROWS_AS(steady_rhs(s, ReducedState{2.0, 0.0, 0.0}), SolverError);
    CHECK_THROWS_AS(steady_rhs(s, ReducedState{0.0, 0.0, 2.5}), SolverError);
}

TEST_CASE("far-field Jacobian") {
    const Eigen::Matrix3d J = farfield_jacobian(sample(0.05)).entries;
    Eigen::Matrix3d expect;
    expect << 0, 1, 0, 1, -1.5, -1, -1.5, -1, -1.5;
    CHECK((J - expect).norm() < 1e-14);

    // central differences of the nonlinear right-hand side
    testgen::Rng rng(3);
    for (int k = 0; k < 20; ++k) {
        const ModelSpec s = k % 2 ? testgen::supersonic(rng) : testgen::subsonic(rng);
        const Eigen::Matrix3d Js = farfield_jacobian(s).entries;
        const double h = 1e-6;
        Eigen::Matrix3d num;
        for (int j = 0; j < 3; ++j) {
            Eigen::Vector3d e = Eigen::Vector3d::Zero();
            e(j) = h;
            num.col(j) = (steady_rhs(s, ReducedState::from(e)) - steady_rhs(s, ReducedState::from(-e))) / (2 * h);
        }
        CHECK((num - Js).norm() < 1e-5 * (1.0 + Js.norm()));

        // quadratic remainder: (f(h e) - J h e) / h^2 stays bounded
        const Eigen::Vector3d dir = Eigen::Vector3d(0.3, -0.5, 0.8).normalized();
        double prev = -1.0;
        for (double hh : {1e-2, 5e-3, 2.5e-3}) {
            const double rem = (steady_rhs(s, ReducedState::from(hh * dir)) - Js * (hh * dir)).norm() / (hh * hh);
            if (prev > 0) CHECK(rem == doctest::Approx(prev).epsilon(0.1));
            prev = rem;
        }
    }
}

TEST_CASE("eigensystem of the sample spec") {
    const EigenSystem es = eigensystem(farfield_jacobian(sample(0.05)));
    CHECK(es.lambdas[0].real() == doctest::Approx(-2.35078).epsilon(1e-5));
    CHECK(es.lambdas[1].real() == doctest::Approx(-1.5).epsilon(1e-12));
    CHECK(es.lambdas[2].real() == doctest::Approx(0.85078).epsilon(1e-5));
    CHECK(es.pattern_string() == "(-,-,+)");
    CHECK(es.count(Sign::Neg) == 2);
    const Eigen::Matrix3d J = farfield_jacobian(sample(0.05)).entries;
    for (int i = 0; i < 3; ++i) {
        const Eigen::Vector3cd r = J.cast<std::complex<double>>() * es.vectors[i] - es.lambdas[i] * es.vectors[i];
        CHECK(r.norm() < 1e-12);
        CHECK(es.vectors[i].norm() == doctest::Approx(1.0));
    }
}

TEST_CASE("sign patterns by regime") {
    testgen::Rng rng(8);
    for (int i = 0; i < 50; ++i) {
        CHECK(eigensystem(farfield_jacobian(testgen::supersonic(rng))).pattern_string() == "(-,-,+)");
        CHECK(eigensystem(farfield_jacobian(testgen::subsonic(rng))).pattern_string() == "(-,+,+)");
        CHECK(eigensystem(farfield_jacobian(testgen::sonic(rng))).pattern_string() == "(-,0,+)");
    }
}

TEST_CASE("sigma profile") {
    CHECK(sigma_profile(1.0, 0.1, 0.0) == doctest::Approx(0.1));
    CHECK(sigma_profile(1.0, 0.1, 9.0) == doctest::Approx(0.1 / 1.9));
    // sigma_x = -a sigma^2
    const double a = 0.37, s0 = 0.05, x = 12.0, h = 1e-4;
    const double d = (sigma_profile(a, s0, x + h) - sigma_profile(a, s0, x - h)) / (2 * h);
    CHECK(d == doctest::Approx(-a * std::pow(sigma_profile(a, s0, x), 2)).epsilon(1e-7));
}

TEST_CASE("delta = 0 gives the constant profile") {
    const SteadyProfile p = solve_steady(sample(0.0));
    REQUIRE(p.size() >= 5);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(p.rho_t[i] == 1.0);
        CHECK(p.u_t[i] == -2.0);
        CHECK(p.ux_t[i] == 0.0);
        CHECK(p.vx_t[i] == 0.0);
    }
    // stencil weights sum to zero only up to rounding, amplified by 1/dx^2
    CHECK(steady_residual(sample(0.0), p) < 1e-9);
}

TEST_CASE("supersonic profile") {
    const ModelSpec s = sample(0.05);
    const SteadyProfile p = solve_steady(s);
    CHECK(p.regime.cls == RegimeClass::Supersonic);
    CHECK(p.u_t.front() == doctest::Approx(-2.05).epsilon(1e-10));
    CHECK(p.v_t.front() == doctest::Approx(-2.05).epsilon(1e-10));
    CHECK(p.boundary_compatible);
    const double res = steady_residual(s, p);
    CHECK(res < 1e-6);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(p.rho_t[i] > 0.0);
        CHECK(p.rho_t[i] * p.u_t[i] == doctest::Approx(-2.0).epsilon(1e-12));
        CHECK(p.n_t[i] * p.v_t[i] == doctest::Approx(-2.0).epsilon(1e-12));
    }

    // boundary slope scales with delta
    std::vector<double> ratio;
    for (double d : {0.0125, 0.025, 0.05}) ratio.push_back(std::abs(solve_steady(sample(d)).ux_t.front()) / d);
    CHECK(ratio[0] > 0.0);
    CHECK(ratio[2] / ratio[0] == doctest::Approx(1.0).epsilon(0.1));

    // a single bumped value is seen by the second-difference stencil
    SteadyProfile q = p;
    q.u_t[p.size() / 2] += 1e-3;
    const double dx = p.x[1] - p.x[0];
    CHECK(steady_residual(s, q) - res >= 1e-3 / (dx * dx));
}

TEST_CASE("delta ceiling") {
    CHECK_THROWS_AS(solve_steady(sample(0.2)), ConfigError);
    SteadySolveOptions o;
    o.allow_large_delta = true;
    CHECK_NOTHROW(solve_steady(sample(0.2), o));
}

TEST_CASE("subsonic profile reports its boundary pair") {
    const ModelSpec s = ModelSpec::with_delta(FluidConstants{}, FarFieldState{1.0, 1.0, -0.5}, 0.05);
    const SteadyProfile p = solve_steady(s);
    CHECK(p.regime.cls == RegimeClass::Subsonic);
    CHECK(p.achieved_u_minus == doctest::Approx(-0.55).epsilon(1e-9));
    CHECK(p.u_t.front() == doctest::Approx(-0.55).epsilon(1e-9));
    CHECK(p.achieved_v_minus == doctest::Approx(p.v_t.front()));
    CHECK(p.info.v_mismatch == doctest::Approx(p.v_t.front() - p.u_t.front()));
    CHECK(p.boundary_compatible == (std::abs(p.info.v_mismatch) < 1e-8));
}

TEST_CASE("sonic profile decays like delta / (1 + delta x)") {
    const ModelSpec s = ModelSpec::with_delta(FluidConstants{}, sonic_far_state(FluidConstants{}, 1.0, 1.0), 0.05);
    SteadySolveOptions o;
    o.x_domain = 400.0;
    const SteadyProfile p = solve_steady(s, o);
    CHECK(p.regime.cls == RegimeClass::Sonic);
    CHECK(p.u_t.front() == doctest::Approx(s.u_minus()).epsilon(1e-9));
    double lo = 1e300, hi = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p.x[i] < 0.5 * p.length()) continue;
        const double r = std::abs(p.u_t[i] - p.far.u_plus) * (1.0 + p.delta * p.x[i]) / p.delta;
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    CHECK(lo > 0.0);
    CHECK(hi / lo < 2.0);
}

TEST_CASE("spatial decay fits of exact synthetic laws") {
    const SteadyProfile e = synthetic(0.05, [](double x) { return 0.05 * std::exp(-0.7 * x); });
    const SpatialDecayFit fe = fit_spatial_decay(e, ProfileQuantity::U, SpatialLaw::Exponential, {1.0, 15.0});
    CHECK(fe.rate_or_slope == doctest::Approx(0.7).epsilon(1e-6));
    CHECK(fe.r_squared > 1.0 - 1e-12);
    CHECK(fe.prefactor == doctest::Approx(0.05).epsilon(1e-6));

    const SteadyProfile a = synthetic(0.05, [](double x) { return 0.05 / (1.0 + 0.05 * x); });
    const SpatialDecayFit fa = fit_spatial_decay(a, ProfileQuantity::U, SpatialLaw::Algebraic, {10.0, 100.0});
    CHECK(fa.rate_or_slope == doctest::Approx(-1.0).epsilon(1e-6));

    CHECK_THROWS_AS(fit_spatial_decay(a, ProfileQuantity::U, SpatialLaw::Algebraic, {10.0, 11.0}),
                    std::invalid_argument);
    const SteadyProfile z = synthetic(0.05, [](double) { return 0.0; });
    CHECK_THROWS_AS(fit_spatial_decay(z, ProfileQuantity::U, SpatialLaw::Exponential, {10.0, 40.0}),
                    std::domain_error);
}

TEST_CASE("profile CSV") {
    const SteadyProfile p = solve_steady(sample(0.05));
    std::ostringstream os;
    write_profile_csv(os, p);
    std::istringstream is(os.str());
    std::string header, row;
    std::getline(is, header);
    CHECK(header == "x,rho_t,u_t,n_t,v_t,ux_t,vx_t");
    std::getline(is, row);
    double vals[7];
    char comma;
    std::istringstream rs(row);
    rs >> vals[0];
    for (int k = 1; k < 7; ++k) rs >> comma >> vals[k];
    CHECK(vals[0] == p.x[0]);
    CHECK(vals[2] == p.u_t[0]);
    CHECK(vals[6] == p.vx_t[0]);
    std::size_t lines = 1;
    while (std::getline(is, row)) ++lines;
    CHECK(lines == p.size());
}
