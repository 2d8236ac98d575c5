#include "twophase/steady.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "twophase/errors.hpp"
#include "twophase/fit.hpp"
#include "twophase/linalg.hpp"
#include "twophase/ode.hpp"

namespace twophase {

using linalg::cplx;

char to_char(Sign s) {
    switch (s) {
        case Sign::Neg: return '-';
        case Sign::Zero: return '0';
        case Sign::Pos: return '+';
    }
    return '?';
}

int EigenSystem::count(Sign s) const {
    return static_cast<int>(std::count(sign_pattern.begin(), sign_pattern.end(), s));
}

std::string EigenSystem::pattern_string() const {
    std::string out = "(";
    for (std::size_t i = 0; i < 3; ++i) {
        if (i) out += ',';
        out += to_char(sign_pattern[i]);
    }
    return out + ")";
}

Eigen::Vector3d steady_rhs(const ModelSpec& spec, const ReducedState& s) {
    const auto& f = spec.fluids();
    const double rho = spec.far().rho_plus;
    const double n = spec.far().n_plus;
    const double up = spec.far().u_plus;
    const double ut = up + s.u_bar;
    const double vt = up + s.v_bar;
    if (!(ut < 0.0)) throw SolverError("steady_rhs: phase-1 velocity u~ reached zero (singular density rho~)");
    if (!(vt < 0.0)) throw SolverError("steady_rhs: phase-2 velocity v~ reached zero (singular density n~)");

    // (u_plus/u~)^g - 1 without cancellation for small deviations
    const double dp1 = f.A1 * std::pow(rho, f.gamma) * std::expm1(f.gamma * std::log1p(-s.u_bar / ut));
    const double dp2 = f.A2 * std::pow(n, f.alpha) * std::expm1(f.alpha * std::log1p(-s.v_bar / vt));
    const double vx = vt / (n * up) * (rho * up * s.u_bar + dp1 + n * up * s.v_bar + dp2 - f.mu * s.w_bar);
    const double p1_prime_term = f.A1 * f.gamma * std::pow(rho, f.gamma) * std::pow(up / ut, f.gamma) / ut;
    const double uxx = ((rho * up - p1_prime_term) * s.w_bar - n * up * (s.v_bar - s.u_bar) / vt) / f.mu;
    return {s.w_bar, uxx, vx};
}

FarFieldJacobian farfield_jacobian(const ModelSpec& spec) {
    const auto& f = spec.fluids();
    const double rho = spec.far().rho_plus;
    const double n = spec.far().n_plus;
    const double u = spec.far().u_plus;
    const double k1 = rho * u * u - f.A1 * f.gamma * std::pow(rho, f.gamma);
    const double k2 = n * u * u - f.A2 * f.alpha * std::pow(n, f.alpha);
    FarFieldJacobian j;
    j.entries << 0.0, 1.0, 0.0,
                 n / f.mu, k1 / (f.mu * u), -n / f.mu,
                 k1 / (n * u), -f.mu / n, k2 / (n * u);
    return j;
}

EigenSystem eigensystem(const FarFieldJacobian& jac, double zero_tolerance) {
    const Eigen::Matrix3d& m = jac.entries;
    const auto inv = linalg::invariants(m);
    EigenSystem es;
    es.zero_tolerance = zero_tolerance;
    es.lambdas = linalg::solve_monic_cubic(-inv.trace, inv.second, -inv.det);
    const double scale = m.norm();
    const Eigen::Matrix3cd mc = m.cast<cplx>();
    for (std::size_t i = 0; i < 3; ++i) {
        const cplx lam = es.lambdas[i];
        Eigen::Vector3cd v;
        linalg::null_vector(mc - lam * Eigen::Matrix3cd::Identity(), v);
        // phase: make the largest component real and positive
        Eigen::Index k = 0;
        v.cwiseAbs().maxCoeff(&k);
        v *= std::abs(v(k)) / v(k);
        if (lam.imag() == 0.0) v = v.real().cast<cplx>();
        v.normalize();
        const double resid = (mc * v - lam * v).norm() / (scale + std::abs(lam));
        if (!(resid <= 1e-8)) {
            throw SolverError("eigensystem: eigenvector residual " + std::to_string(resid) + " exceeds 1e-8");
        }
        es.vectors[i] = v;
        const double re = lam.real();
        es.sign_pattern[i] = re < -zero_tolerance ? Sign::Neg : (re > zero_tolerance ? Sign::Pos : Sign::Zero);
    }
    return es;
}

double sigma_profile(double a, double sigma0, double x) { return sigma0 / (1.0 + a * sigma0 * x); }

namespace {

/// Exact flow of the linearized system restricted to eigen-coordinates.
class LinearFlow {
public:
    explicit LinearFlow(const EigenSystem& es) {
        for (int i = 0; i < 3; ++i) {
            basis_.col(i) = es.vectors[static_cast<std::size_t>(i)];
            lambdas_(i) = es.lambdas[static_cast<std::size_t>(i)];
        }
        inverse_ = basis_.fullPivLu().inverse();
    }

    Eigen::Vector3cd coordinates(const Eigen::Vector3d& z) const { return inverse_ * z.cast<cplx>(); }

    Eigen::Vector3d propagate(const Eigen::Vector3d& z, double tau) const {
        Eigen::Vector3cd c = coordinates(z);
        for (int i = 0; i < 3; ++i) c(i) *= std::exp(lambdas_(i) * tau);
        return (basis_ * c).real();
    }

    /// Forward propagation with the non-decaying coordinates of z dropped, so
    /// rounding in a stable seed cannot excite the unstable direction.
    Eigen::Vector3d propagate_stable(const Eigen::Vector3d& z, double tau) const {
        Eigen::Vector3cd c = coordinates(z);
        for (int i = 0; i < 3; ++i) c(i) = lambdas_(i).real() < 0.0 ? c(i) * std::exp(lambdas_(i) * tau) : cplx(0.0);
        return (basis_ * c).real();
    }

private:
    Eigen::Matrix3cd basis_;
    Eigen::Matrix3cd inverse_;
    Eigen::Vector3cd lambdas_;
};

ode::Rhs make_rhs(const ModelSpec& spec) {
    return [spec](const ode::State& y) { return steady_rhs(spec, ReducedState::from(y)); };
}

/// Resample a reduced-state curve onto the uniform output grid.
template <class StateAt>
SteadyProfile assemble_profile(const ModelSpec& spec, const Regime& regime, double length, int points,
                               StateAt&& state_at) {
    SteadyProfile p;
    p.regime = regime;
    p.delta = spec.delta();
    p.fluids = spec.fluids();
    p.far = spec.far();
    const auto npts = static_cast<std::size_t>(points);
    p.x.resize(npts);
    p.rho_t.resize(npts);
    p.u_t.resize(npts);
    p.n_t.resize(npts);
    p.v_t.resize(npts);
    p.ux_t.resize(npts);
    p.vx_t.resize(npts);
    const double up = spec.far().u_plus;
    const double mass1 = spec.far().rho_plus * up;
    const double mass2 = spec.far().n_plus * up;
    for (std::size_t i = 0; i < npts; ++i) {
        const double x = i + 1 == npts ? length : length * static_cast<double>(i) / static_cast<double>(npts - 1);
        const Eigen::Vector3d s = state_at(x);
        const double ut = up + s(0);
        const double vt = up + s(2);
        p.x[i] = x;
        p.u_t[i] = ut;
        p.v_t[i] = vt;
        p.rho_t[i] = mass1 / ut;
        p.n_t[i] = mass2 / vt;
        if (!(p.rho_t[i] > 0.0) || !(p.n_t[i] > 0.0) || !std::isfinite(p.rho_t[i]) || !std::isfinite(p.n_t[i])) {
            throw SolverError("solve_steady: vacuum or non-finite density at x=" + std::to_string(x));
        }
        p.ux_t[i] = s(1);
        p.vx_t[i] = steady_rhs(spec, ReducedState::from(s))(2);
    }
    p.achieved_u_minus = p.u_t.front();
    p.achieved_v_minus = p.v_t.front();
    return p;
}

void check_farfield(const SteadyProfile& p, double tol) {
    const double dev = std::max({std::abs(p.rho_t.back() - p.far.rho_plus), std::abs(p.u_t.back() - p.far.u_plus),
                                 std::abs(p.n_t.back() - p.far.n_plus), std::abs(p.v_t.back() - p.far.u_plus)});
    if (!(dev <= tol)) {
        throw SolverError("solve_steady: profile has not reached the far field at x=" + std::to_string(p.x.back()) +
                          " (deviation " + std::to_string(dev) + ")");
    }
}

/// State at x re-integrated from the closest accepted sample; avoids the
/// cubic error of Hermite dense output in derived quantities.
std::string scientific(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

Eigen::Vector3d refined_state(const ode::Trajectory& t, const ode::Rhs& rhs, double x, const ode::Options& opt) {
    const ode::Sample& s = t.nearest(x);
    if (s.x == x) return s.y;
    return ode::integrate(rhs, s.y, s.x, x, opt).trajectory.back().y;
}

ode::Options ode_options(const SteadySolveOptions& opt, double small_scale) {
    ode::Options o;
    o.tolerance = opt.ode_tolerance;
    o.abs_scale = small_scale;
    o.h_initial = 1e-2;
    o.h_max = 0.25;
    return o;
}

SteadyProfile solve_supersonic(const ModelSpec& spec, const SteadySolveOptions& opt, const Regime& regime,
                               const EigenSystem& es, double eps_seed) {
    const double target = spec.u_minus() - spec.far().u_plus;
    const double delta = spec.delta();
    LinearFlow flow(es);

    // real basis of the two-dimensional stable subspace
    std::vector<std::size_t> stable;
    for (std::size_t i = 0; i < 3; ++i) {
        if (es.sign_pattern[i] == Sign::Neg) stable.push_back(i);
    }
    if (stable.size() != 2) throw SolverError("solve_steady: supersonic far field without a 2-d stable subspace");
    Eigen::Matrix<double, 3, 2> basis;
    if (es.lambdas[stable[0]].imag() != 0.0) {
        basis.col(0) = es.vectors[stable[0]].real();
        basis.col(1) = es.vectors[stable[0]].imag();
    } else {
        basis.col(0) = es.vectors[stable[0]].real();
        basis.col(1) = es.vectors[stable[1]].real();
    }
    double slow = std::numeric_limits<double>::infinity(), fast = 0.0;
    for (auto i : stable) {
        slow = std::min(slow, std::abs(es.lambdas[i].real()));
        fast = std::max(fast, std::abs(es.lambdas[i].real()));
    }

    // linear guess for the state at x = 0
    Eigen::Matrix2d bc;
    bc << basis(0, 0), basis(0, 1), basis(2, 0), basis(2, 1);
    Eigen::Vector2d p = bc.fullPivLu().solve(Eigen::Vector2d(target, target));
    const double guess_norm = (basis * p).norm();
    // backward integration amplifies rounding along the fast mode by exp(fast * x_far)
    constexpr double kMaxFastGain = 1e6;
    const double x_far = opt.x_far > 0.0 ? opt.x_far
                                          : std::min(std::max(1.0, std::log(guess_norm / eps_seed) / slow),
                                                     std::log(kMaxFastGain) / fast);

    const auto rhs = make_rhs(spec);
    const auto oopts = ode_options(opt, 1e-3 * eps_seed);
    auto seed_of = [&](const Eigen::Vector2d& q) { return flow.propagate(basis * q, x_far); };
    auto shoot = [&](const Eigen::Vector2d& q) {
        return ode::integrate(rhs, seed_of(q), x_far, 0.0, oopts);
    };
    auto residual = [&](const ode::Result& r, double goal) {
        const auto& y = r.trajectory.back().y;
        return Eigen::Vector2d(y(0) - goal, y(2) - goal);
    };

    // A step that no longer halves the residual near the integrator noise floor counts as converged.
    const double noise_floor = std::max(opt.newton_tolerance, 10.0 * opt.ode_tolerance * delta);
    int iter = 0;
    std::optional<ode::Result> current;
    Eigen::Vector2d res;
    auto newton = [&](double goal, double tolerance) {
        ode::Result cur = shoot(p);
        Eigen::Vector2d r = residual(cur, goal);
        int local = 0;
        while (r.lpNorm<Eigen::Infinity>() > tolerance) {
            if (local >= opt.max_iter) {
                throw SolverError("solve_steady: Newton shooting did not converge in " +
                                  std::to_string(opt.max_iter) + " iterations (residual " +
                                  scientific(r.lpNorm<Eigen::Infinity>()) + ")");
            }
            ++local;
            ++iter;
            // sensitivities on the frozen mesh of the current shot
            const Eigen::Vector3d base_end = ode::integrate_on_mesh(rhs, seed_of(p), cur.trajectory);
            Eigen::Matrix2d jac;
            for (int j = 0; j < 2; ++j) {
                Eigen::Vector2d q = p;
                const double h = 1e-6 * std::max(std::abs(p(j)), delta);
                q(j) += h;
                const Eigen::Vector3d end = ode::integrate_on_mesh(rhs, seed_of(q), cur.trajectory);
                jac.col(j) = Eigen::Vector2d(end(0) - base_end(0), end(2) - base_end(2)) / h;
            }
            const Eigen::Vector2d step = jac.fullPivLu().solve(r);
            const double before = r.norm();
            double damp = 1.0;
            bool accepted = false;
            for (int k = 0; k < 20 && !accepted; ++k, damp *= 0.5) {
                try {
                    const Eigen::Vector2d q = p - damp * step;
                    ode::Result trial = shoot(q);
                    const Eigen::Vector2d rt = residual(trial, goal);
                    if (rt.norm() < before || k == 19) {
                        p = q;
                        cur = std::move(trial);
                        r = rt;
                        accepted = true;
                    }
                } catch (const SolverError&) {
                    // singular trial state; try a shorter step
                }
            }
            if (!accepted) throw SolverError("solve_steady: Newton line search failed");
            if (r.norm() > 0.5 * before && r.lpNorm<Eigen::Infinity>() <= std::max(tolerance, noise_floor)) break;
        }
        current = std::move(cur);
        res = r;
    };

    const Eigen::Vector2d p_linear = p;
    try {
        newton(target, opt.newton_tolerance);
    } catch (const SolverError& direct) {
        // continuation in the boundary strength, starting where the linear guess is accurate
        constexpr int kSteps = 8;
        Eigen::Vector2d prev = Eigen::Vector2d::Zero();
        p = p_linear / kSteps;
        try {
            for (int k = 1; k <= kSteps; ++k) {
                if (k > 1) {
                    const Eigen::Vector2d last = p;
                    p = 2.0 * p - prev;
                    prev = last;
                }
                newton(target * k / kSteps, k < kSteps ? 1e-6 * delta : opt.newton_tolerance);
            }
        } catch (const SolverError& e) {
            throw SolverError(std::string(e.what()) + "; direct attempt: " + direct.what());
        }
    }

    const ode::Trajectory& traj = current->trajectory;
    const Eigen::Vector3d seed = seed_of(p);
    const double length = std::max(opt.x_domain, 0.0);
    auto state_at = [&](double x) -> Eigen::Vector3d {
        return x <= x_far ? refined_state(traj, rhs, x, oopts) : flow.propagate_stable(seed, x - x_far);
    };
    SteadyProfile prof = assemble_profile(spec, regime, length, opt.points, state_at);
    prof.info.method = "stable-subspace backward shooting";
    prof.info.newton_iterations = iter;
    prof.info.boundary_residual = res.lpNorm<Eigen::Infinity>();
    prof.info.x_far = x_far;
    prof.info.eps_seed = seed.norm();
    prof.info.v_mismatch = prof.v_t.front() - prof.u_t.front();
    prof.boundary_compatible = std::abs(prof.info.v_mismatch) <= opt.match_tolerance;
    return prof;
}

SteadyProfile solve_subsonic(const ModelSpec& spec, const SteadySolveOptions& opt, const Regime& regime,
                             const EigenSystem& es, double eps_seed) {
    const double target = spec.u_minus() - spec.far().u_plus;
    const double delta = spec.delta();
    std::size_t s = 3;
    for (std::size_t i = 0; i < 3; ++i) {
        if (es.sign_pattern[i] == Sign::Neg) s = i;
    }
    if (s == 3 || es.count(Sign::Neg) != 1) throw SolverError("solve_steady: subsonic far field without a 1-d stable direction");
    Eigen::Vector3d dir = es.vectors[s].real().normalized();
    if (std::abs(dir(0)) < 1e-12) throw SolverError("solve_steady: stable direction has no u-component");
    if ((dir(0) > 0.0) != (target > 0.0)) dir = -dir;
    const Eigen::Vector3d seed = eps_seed * dir;
    LinearFlow flow(es);

    const auto rhs = make_rhs(spec);
    auto oopts = ode_options(opt, 1e-3 * eps_seed);
    // the trajectory may leave along w_bar or v_bar first when dir has a small u-component
    oopts.blowup_norm = 10.0 * std::max(delta, eps_seed) / std::abs(dir(0));
    const ode::Event hit = [target](const ode::State& y) { return y(0) - target; };
    ode::Result r = ode::integrate(rhs, seed, 0.0, -opt.max_shoot_length, oopts, &hit);
    if (r.reason != ode::Stop::Event) {
        throw SolverError("solve_steady: subsonic stable trajectory does not reach u_minus - u_plus = " +
                          std::to_string(target));
    }
    const double travel = -r.trajectory.back().x;
    r.trajectory.translate(travel);
    const ode::Trajectory& traj = r.trajectory;
    auto state_at = [&](double x) -> Eigen::Vector3d {
        return x <= travel ? refined_state(traj, rhs, x, oopts) : flow.propagate_stable(seed, x - travel);
    };
    SteadyProfile prof = assemble_profile(spec, regime, std::max(opt.x_domain, 0.0), opt.points, state_at);
    prof.info.method = "stable-direction backward shooting";
    prof.info.x_far = travel;
    prof.info.eps_seed = eps_seed;
    prof.info.boundary_residual = std::abs(prof.u_t.front() - spec.u_minus());
    prof.info.v_mismatch = prof.v_t.front() - prof.u_t.front();
    prof.boundary_compatible = std::abs(prof.info.v_mismatch) <= opt.match_tolerance;
    return prof;
}

/// Multiple shooting on [0, X]: u_bar(0) = v_bar(0) = target on the left, no
/// component along the unstable eigenvector at X (centre-stable condition).
SteadyProfile solve_sonic(const ModelSpec& spec, const SteadySolveOptions& opt, const Regime& regime,
                          const EigenSystem& es) {
    const double target = spec.u_minus() - spec.far().u_plus;
    const double delta = spec.delta();
    if (!(target < 0.0)) {
        throw SolverError("solve_steady: sonic outflow needs u_minus < u_plus (decaying centre-manifold branch)");
    }
    const DerivedConstants dc = derived_constants(spec);
    const double a = dc.a;

    double length = opt.x_domain;
    if (opt.sigma_seed < delta) length = std::max(length, (1.0 / opt.sigma_seed - 1.0 / delta) / a);
    length = std::min(length, opt.max_sonic_domain);
    const int segments = std::max(1, static_cast<int>(std::ceil(length / opt.segment_length)));
    const double h = length / segments;
    const auto nodes = static_cast<std::size_t>(segments) + 1;

    std::size_t unstable = 3;
    for (std::size_t i = 0; i < 3; ++i) {
        if (es.sign_pattern[i] == Sign::Pos) unstable = i;
    }
    if (unstable == 3) throw SolverError("solve_steady: sonic far field without an unstable eigenvalue");
    // left eigenvector of the unstable eigenvalue
    const FarFieldJacobian jt{farfield_jacobian(spec).entries.transpose()};
    Eigen::Vector3cd lc;
    linalg::null_vector(jt.entries.cast<cplx>() - es.lambdas[unstable] * Eigen::Matrix3cd::Identity(), lc);
    const Eigen::Vector3d left = lc.real().normalized();

    const auto rhs = make_rhs(spec);
    const double small = std::min(opt.sigma_seed, delta);
    const auto oopts = ode_options(opt, 1e-3 * small);

    Eigen::VectorXd y(3 * static_cast<Eigen::Index>(nodes));
    for (std::size_t k = 0; k < nodes; ++k) {
        const double sig = sigma_profile(a, delta, h * static_cast<double>(k));
        y.segment<3>(3 * static_cast<Eigen::Index>(k)) << -sig, a * sig * sig, -sig;
    }

    auto flow_end = [&](const Eigen::Vector3d& u0) { return ode::integrate(rhs, u0, 0.0, h, oopts).trajectory.back().y; };
    const Eigen::Index dim = y.size();
    auto residual = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd f(dim);
        f(0) = v(0) - target;
        f(1) = v(2) - target;
        for (std::size_t k = 0; k + 1 < nodes; ++k) {
            const auto ik = 3 * static_cast<Eigen::Index>(k);
            f.segment<3>(2 + ik) = flow_end(v.segment<3>(ik)) - v.segment<3>(ik + 3);
        }
        f(dim - 1) = left.dot(v.segment<3>(dim - 3));
        return f;
    };

    Eigen::VectorXd f = residual(y);
    int iter = 0;
    while (f.lpNorm<Eigen::Infinity>() > opt.newton_tolerance * std::max(1.0, delta)) {
        if (iter >= opt.max_iter) {
            throw SolverError("solve_steady: sonic multiple shooting did not converge (residual " +
                              std::to_string(f.lpNorm<Eigen::Infinity>()) + ")");
        }
        ++iter;
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(12 * nodes));
        trip.emplace_back(0, 0, 1.0);
        trip.emplace_back(1, 2, 1.0);
        for (std::size_t k = 0; k + 1 < nodes; ++k) {
            const auto ik = 3 * static_cast<Eigen::Index>(k);
            const Eigen::Vector3d u0 = y.segment<3>(ik);
            const Eigen::Vector3d base = f.segment<3>(2 + ik) + y.segment<3>(ik + 3);
            const double eta = 1e-7 * std::max(u0.norm(), 1e-6);
            for (int j = 0; j < 3; ++j) {
                Eigen::Vector3d up = u0;
                up(j) += eta;
                const Eigen::Vector3d col = (flow_end(up) - base) / eta;
                for (int i = 0; i < 3; ++i) trip.emplace_back(2 + ik + i, ik + j, col(i));
            }
            for (int i = 0; i < 3; ++i) trip.emplace_back(2 + ik + i, ik + 3 + i, -1.0);
        }
        for (int j = 0; j < 3; ++j) trip.emplace_back(dim - 1, dim - 3 + j, left(j));
        Eigen::SparseMatrix<double> jac(dim, dim);
        jac.setFromTriplets(trip.begin(), trip.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
        lu.compute(jac);
        if (lu.info() != Eigen::Success) throw SolverError("solve_steady: singular multiple-shooting Jacobian");
        const Eigen::VectorXd step = lu.solve(f);
        double damp = 1.0;
        bool accepted = false;
        for (int k = 0; k < 20 && !accepted; ++k, damp *= 0.5) {
            try {
                const Eigen::VectorXd trial = y - damp * step;
                const Eigen::VectorXd ft = residual(trial);
                if (ft.norm() < f.norm() || k == 19) {
                    y = trial;
                    f = ft;
                    accepted = true;
                }
            } catch (const SolverError&) {
            }
        }
        if (!accepted) throw SolverError("solve_steady: sonic Newton line search failed");
    }

    std::vector<ode::Trajectory> pieces;
    pieces.reserve(nodes - 1);
    for (std::size_t k = 0; k + 1 < nodes; ++k) {
        pieces.push_back(ode::integrate(rhs, y.segment<3>(3 * static_cast<Eigen::Index>(k)), 0.0, h, oopts).trajectory);
    }
    auto state_at = [&](double x) -> Eigen::Vector3d {
        const auto k = std::min(static_cast<std::size_t>(std::max(0.0, x / h)), pieces.size() - 1);
        return refined_state(pieces[k], rhs, x - h * static_cast<double>(k), oopts);
    };
    SteadyProfile prof = assemble_profile(spec, regime, length, opt.points, state_at);
    prof.info.method = "centre-stable multiple shooting";
    prof.info.newton_iterations = iter;
    prof.info.boundary_residual = std::max(std::abs(f(0)), std::abs(f(1)));
    prof.info.x_far = length;
    prof.info.eps_seed = -y(dim - 3);
    prof.info.v_mismatch = prof.v_t.front() - prof.u_t.front();
    prof.boundary_compatible = std::abs(prof.info.v_mismatch) <= opt.match_tolerance;
    return prof;
}

}  // namespace

SteadyProfile solve_steady(const ModelSpec& spec, const SteadySolveOptions& opt) {
    if (opt.points < 5) throw ConfigError("steady.points must be >= 5");
    const double delta = spec.delta();
    if (delta > opt.max_delta && !opt.allow_large_delta) {
        throw ConfigError("solve_steady: delta = " + std::to_string(delta) + " exceeds max_delta = " +
                          std::to_string(opt.max_delta) + " (set allow_large_delta to override)");
    }
    const Regime regime = classify_regime(spec, opt.sonic_tolerance);

    if (delta == 0.0) {
        SteadyProfile p = assemble_profile(spec, regime, opt.x_domain, opt.points,
                                           [](double) { return Eigen::Vector3d::Zero().eval(); });
        p.info.method = "constant (delta = 0)";
        return p;
    }

    EigenSystem es = eigensystem(farfield_jacobian(spec), opt.zero_tolerance);
    const double eps_seed = opt.eps_seed > 0.0 ? opt.eps_seed : 1e-4 * std::max(1.0, std::abs(spec.far().u_plus));
    SteadyProfile prof = [&] {
        switch (regime.cls) {
            case RegimeClass::Supersonic: return solve_supersonic(spec, opt, regime, es, eps_seed);
            case RegimeClass::Subsonic: return solve_subsonic(spec, opt, regime, es, eps_seed);
            case RegimeClass::Sonic: break;
        }
        return solve_sonic(spec, opt, regime, es);
    }();
    check_farfield(prof, opt.farfield_tolerance);
    return prof;
}

PrimitiveState sample_profile(const SteadyProfile& p, double x) {
    const std::size_t n = p.size();
    const double mass1 = p.far.rho_plus * p.far.u_plus;
    const double mass2 = p.far.n_plus * p.far.u_plus;
    if (n == 1 || x <= p.x.front()) return {p.rho_t.front(), p.u_t.front(), p.n_t.front(), p.v_t.front()};
    if (x >= p.x.back()) return {p.rho_t.back(), p.u_t.back(), p.n_t.back(), p.v_t.back()};
    const double h = p.x[1] - p.x[0];
    std::size_t i = std::min(static_cast<std::size_t>(x / h), n - 2);
    while (i + 1 < n - 1 && p.x[i + 1] < x) ++i;
    while (i > 0 && p.x[i] > x) --i;
    const double hi = p.x[i + 1] - p.x[i];
    const double t = (x - p.x[i]) / hi;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    const double u = h00 * p.u_t[i] + h10 * hi * p.ux_t[i] + h01 * p.u_t[i + 1] + h11 * hi * p.ux_t[i + 1];
    const double v = h00 * p.v_t[i] + h10 * hi * p.vx_t[i] + h01 * p.v_t[i + 1] + h11 * hi * p.vx_t[i + 1];
    return {mass1 / u, u, mass2 / v, v};
}

namespace {

/// Finite-difference weights for derivatives 0..m at z from nodes x (Fornberg).
std::vector<std::vector<double>> fd_weights(double z, const std::vector<double>& x, int m) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> c(static_cast<std::size_t>(m) + 1, std::vector<double>(n, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - z;
    c[0][0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const int mn = std::min(static_cast<int>(i), m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - z;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) {
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

/// Derivative of the given order on a uniform grid: centred stencils of up to
/// nine points, shifted to one side near the ends.
std::vector<double> derivative(const std::vector<double>& f, double h, int order) {
    const std::size_t n = f.size();
    const std::size_t width = std::min<std::size_t>(9, n);
    const std::size_t half = width / 2;
    std::vector<double> d(n);
    std::vector<double> offsets(width);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t start = i < half ? 0 : std::min(i - half, n - width);
        for (std::size_t k = 0; k < width; ++k) offsets[k] = static_cast<double>(start + k) - static_cast<double>(i);
        const auto w = fd_weights(0.0, offsets, order);
        double acc = 0.0;
        for (std::size_t k = 0; k < width; ++k) acc += w[static_cast<std::size_t>(order)][k] * f[start + k];
        d[i] = acc / std::pow(h, order);
    }
    return d;
}

std::vector<double> d1(const std::vector<double>& f, double h) { return derivative(f, h, 1); }
std::vector<double> d2(const std::vector<double>& f, double h) { return derivative(f, h, 2); }

}  // namespace

double steady_residual(const ModelSpec& spec, const SteadyProfile& p) {
    const std::size_t n = p.size();
    if (n < 5) throw std::invalid_argument("steady_residual: profile needs at least 5 grid points");
    const double h = p.x[1] - p.x[0];
    const auto& fl = spec.fluids();
    std::vector<double> flux1(n), flux2(n);
    for (std::size_t i = 0; i < n; ++i) {
        flux1[i] = p.rho_t[i] * p.u_t[i] * p.u_t[i] + pressure(fl, p.rho_t[i], Phase::One);
        flux2[i] = p.n_t[i] * p.v_t[i] * p.v_t[i] + pressure(fl, p.n_t[i], Phase::Two);
    }
    const auto dflux1 = d1(flux1, h);
    const auto dflux2 = d1(flux2, h);
    const auto uxx = d2(p.u_t, h);
    const auto vx = d1(p.v_t, h);
    std::vector<double> nvx(n);
    for (std::size_t i = 0; i < n; ++i) nvx[i] = p.n_t[i] * vx[i];
    const auto dnvx = d1(nvx, h);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double drag = p.n_t[i] * (p.v_t[i] - p.u_t[i]);
        const double r2 = dflux1[i] - fl.mu * uxx[i] - drag;
        const double r4 = dflux2[i] - dnvx[i] + drag;
        worst = std::max({worst, std::abs(r2), std::abs(r4)});
    }
    return worst;
}

namespace {

double far_limit(const SteadyProfile& p, ProfileQuantity q) {
    switch (q) {
        case ProfileQuantity::Rho: return p.far.rho_plus;
        case ProfileQuantity::U: return p.far.u_plus;
        case ProfileQuantity::N: return p.far.n_plus;
        case ProfileQuantity::V: return p.far.u_plus;
        case ProfileQuantity::Ux:
        case ProfileQuantity::Vx: return 0.0;
    }
    return 0.0;
}

const std::vector<double>& column(const SteadyProfile& p, ProfileQuantity q) {
    switch (q) {
        case ProfileQuantity::Rho: return p.rho_t;
        case ProfileQuantity::U: return p.u_t;
        case ProfileQuantity::N: return p.n_t;
        case ProfileQuantity::V: return p.v_t;
        case ProfileQuantity::Ux: return p.ux_t;
        case ProfileQuantity::Vx: return p.vx_t;
    }
    return p.u_t;
}

}  // namespace

SpatialDecayFit fit_spatial_decay(const SteadyProfile& p, ProfileQuantity quantity, SpatialLaw law,
                                  std::pair<double, double> window) {
    const auto& col = column(p, quantity);
    const double limit = far_limit(p, quantity);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p.x[i] < window.first || p.x[i] > window.second) continue;
        const double dev = std::abs(col[i] - limit);
        if (!(dev > 0.0)) throw std::domain_error("fit_spatial_decay: non-positive deviation in window");
        xs.push_back(law == SpatialLaw::Exponential ? p.x[i] : std::log1p(p.delta * p.x[i]));
        ys.push_back(std::log(dev));
    }
    if (xs.size() < 8) throw std::invalid_argument("fit_spatial_decay: fewer than 8 samples in window");
    if (law == SpatialLaw::Algebraic && !(p.delta > 0.0)) {
        throw std::domain_error("fit_spatial_decay: algebraic law needs delta > 0");
    }
    const LineFit lf = least_squares_line(xs, ys);
    SpatialDecayFit out;
    out.law = law;
    out.rate_or_slope = law == SpatialLaw::Exponential ? -lf.slope : lf.slope;
    out.prefactor = std::exp(lf.intercept);
    out.r_squared = lf.r_squared;
    out.window = window;
    out.samples = xs.size();
    return out;
}

double sonic_curvature_ratio(const SteadyProfile& p, std::pair<double, double> window) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p.x[i] < window.first || p.x[i] > window.second) continue;
        const double dev = p.u_t[i] - p.far.u_plus;
        if (dev == 0.0) throw std::domain_error("sonic_curvature_ratio: zero deviation in window");
        sum += p.ux_t[i] / (dev * dev);
        ++count;
    }
    if (count == 0) throw std::invalid_argument("sonic_curvature_ratio: empty window");
    return sum / static_cast<double>(count);
}

void write_profile_csv(std::ostream& os, const SteadyProfile& p) {
    os << "x,rho_t,u_t,n_t,v_t,ux_t,vx_t\n";
    char buf[512];
    for (std::size_t i = 0; i < p.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", p.x[i], p.rho_t[i], p.u_t[i],
                      p.n_t[i], p.v_t[i], p.ux_t[i], p.vx_t[i]);
        os << buf;
    }
}

void write_profile_csv(const std::string& path, const SteadyProfile& p) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write profile CSV: " + path);
    write_profile_csv(os, p);
    if (!os) throw IoError("error while writing profile CSV: " + path);
}

}  // namespace twophase
