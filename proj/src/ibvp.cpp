#include "twophase/ibvp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "twophase/errors.hpp"

namespace twophase {

Grid1D Grid1D::uniform(double length, int cells) {
    if (!(length > 0.0) || !std::isfinite(length)) throw ConfigError("grid.length must be > 0");
    if (cells < 1) throw ConfigError("grid.cells must be >= 1");
    Grid1D g;
    g.length = length;
    g.cells = cells;
    g.dx = length / cells;
    g.centers.resize(static_cast<std::size_t>(cells));
    for (int i = 0; i < cells; ++i) g.centers[static_cast<std::size_t>(i)] = (i + 0.5) * g.dx;
    return g;
}

void EvolutionState::sync_conserved() {
    m1.resize(size());
    m2.resize(size());
    for (std::size_t i = 0; i < size(); ++i) {
        m1[i] = rho[i] * u[i];
        m2[i] = n[i] * v[i];
    }
}

void EvolutionState::sync_primitive() {
    u.resize(size());
    v.resize(size());
    for (std::size_t i = 0; i < size(); ++i) {
        u[i] = m1[i] / rho[i];
        v[i] = m2[i] / n[i];
    }
}

std::string WeightTag::label() const {
    char buf[64];
    switch (kind) {
        case Kind::None: return "none";
        case Kind::AlgebraicNu: std::snprintf(buf, sizeof buf, "alg%g", value); break;
        case Kind::SigmaNu: std::snprintf(buf, sizeof buf, "sigma%g", value); break;
        case Kind::ExponentialLambda: std::snprintf(buf, sizeof buf, "exp%g", value); break;
    }
    return buf;
}

WeightTag WeightTag::parse(const std::string& text) {
    if (text == "none" || text.empty()) return {};
    static const std::pair<const char*, Kind> prefixes[] = {
        {"alg", Kind::AlgebraicNu}, {"sigma", Kind::SigmaNu}, {"exp", Kind::ExponentialLambda}};
    for (const auto& [prefix, kind] : prefixes) {
        const std::string p = prefix;
        if (text.rfind(p, 0) != 0) continue;
        const std::string rest = text.substr(p.size());
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(rest, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != rest.size()) break;
        if (!(value >= 0.0) || !std::isfinite(value)) {
            throw ConfigError("weight tag '" + text + "': exponent must be finite and >= 0");
        }
        return {kind, value};
    }
    throw ConfigError("malformed weight tag '" + text + "' (expected none, alg<nu>, sigma<nu> or exp<lambda>)");
}

const char* to_string(PerturbationShape s) {
    switch (s) {
        case PerturbationShape::Gaussian: return "gaussian";
        case PerturbationShape::CompactBump: return "bump";
        case PerturbationShape::FromFile: return "file";
        case PerturbationShape::WeightedTail: return "tail";
    }
    return "?";
}

PerturbationShape parse_shape(const std::string& text) {
    if (text == "gaussian") return PerturbationShape::Gaussian;
    if (text == "bump") return PerturbationShape::CompactBump;
    if (text == "file") return PerturbationShape::FromFile;
    if (text == "tail") return PerturbationShape::WeightedTail;
    throw ConfigError("unknown perturbation shape '" + text + "' (expected gaussian, bump, file or tail)");
}

double perturbation_shape(const PerturbationSpec& pert, double x, const SigmaParams& sigma) {
    const double r = (x - pert.center) / pert.width;
    switch (pert.shape) {
        case PerturbationShape::Gaussian: return std::exp(-r * r);
        case PerturbationShape::CompactBump: return std::abs(r) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r * r)) : 0.0;
        case PerturbationShape::FromFile: return 0.0;
        case PerturbationShape::WeightedTail: {
            const double e = 0.5 * (pert.weight_tag.value + 1.0);
            switch (pert.weight_tag.kind) {
                case WeightTag::Kind::AlgebraicNu: return std::pow(1.0 + x, -e);
                case WeightTag::Kind::SigmaNu:
                    if (!(sigma.sigma0 > 0.0)) throw ConfigError("tail perturbation needs sigma0 > 0 (delta > 0)");
                    return std::pow(sigma_profile(sigma.a, sigma.sigma0, x) / sigma.sigma0, e);
                case WeightTag::Kind::ExponentialLambda:
                    return std::exp(-0.5 * pert.weight_tag.value * x) / std::sqrt(1.0 + x);
                case WeightTag::Kind::None: break;
            }
            throw ConfigError("tail perturbation needs a weight tag (alg<nu>, sigma<nu> or exp<lambda>)");
        }
    }
    return 0.0;
}

BoundaryData BoundaryData::far_field(const ModelSpec& spec) {
    const auto& f = spec.far();
    return {spec.u_minus(), {f.rho_plus, f.u_plus, f.n_plus, f.u_plus}};
}

BoundaryData BoundaryData::from_profile(const ModelSpec& spec, const SteadyProfile& profile, const Grid1D& grid) {
    return {spec.u_minus(), sample_profile(profile, grid.length + 0.5 * grid.dx)};
}

Problem::Problem(ModelSpec s, Grid1D g) : spec(s), grid(std::move(g)), boundary(BoundaryData::far_field(spec)) {}

Problem::Problem(ModelSpec s, Grid1D g, BoundaryData b) : spec(s), grid(std::move(g)), boundary(b) {}

EvolutionState sample_state(const SteadyProfile& profile, const Grid1D& grid) {
    if (grid.length > profile.length() * (1.0 + 1e-12)) {
        throw ConfigError("grid.length exceeds the steady profile domain (" + std::to_string(profile.length()) + ")");
    }
    EvolutionState s;
    const std::size_t n = grid.centers.size();
    s.rho.resize(n);
    s.u.resize(n);
    s.n.resize(n);
    s.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const PrimitiveState p = sample_profile(profile, grid.centers[i]);
        s.rho[i] = p.rho;
        s.u[i] = p.u;
        s.n[i] = p.n;
        s.v[i] = p.v;
    }
    s.sync_conserved();
    return s;
}

EvolutionState initialize(const SteadyProfile& profile, const Grid1D& grid, const PerturbationSpec& pert) {
    if (pert.shape == PerturbationShape::FromFile) {
        Snapshot snap = read_snapshot(pert.file);
        if (snap.state.size() != grid.centers.size()) {
            throw ConfigError("perturbation file " + pert.file + " has " + std::to_string(snap.state.size()) +
                              " cells, grid has " + std::to_string(grid.centers.size()));
        }
        for (std::size_t i = 0; i < snap.x.size(); ++i) {
            if (std::abs(snap.x[i] - grid.centers[i]) > 1e-9 * std::max(1.0, grid.length)) {
                throw ConfigError("perturbation file " + pert.file + " does not match the grid centres");
            }
        }
        snap.state.t = 0.0;
        snap.state.sync_conserved();
        return snap.state;
    }
    if (!(pert.width > 0.0)) throw ConfigError("perturbation width must be > 0");
    EvolutionState s = sample_state(profile, grid);
    SigmaParams sigma{1.0, profile.delta};
    if (profile.delta > 0.0) {
        sigma.a = derived_constants(ModelSpec(profile.fluids, profile.far, profile.achieved_u_minus)).a;
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double x = grid.centers[i];
        const double bump = pert.amplitude * perturbation_shape(pert, x, sigma);
        const double taper = -std::expm1(-(x / pert.width) * (x / pert.width));
        if (pert.components & component::rho) s.rho[i] += bump;
        if (pert.components & component::u) s.u[i] += bump * taper;
        if (pert.components & component::n) s.n[i] += bump;
        if (pert.components & component::v) s.v[i] += bump * taper;
        if (!(s.rho[i] > kDensityFloor) || !(s.n[i] > kDensityFloor)) {
            throw ConfigError("perturbation rejected: density below floor at cell " + std::to_string(i));
        }
    }
    s.sync_conserved();
    return s;
}

namespace {

/// Per-cell pressure and squared sound speed.
inline void eos(double A, double g, double d, double& p, double& c2) {
    p = g == 1.0 ? A * d : A * std::pow(d, g);
    c2 = g * p / d;
}

}  // namespace

double stable_dt(const EvolutionState& state, const Grid1D& grid, const ModelSpec& spec, double cfl,
                 bool drag_limit) {
    const auto& f = spec.fluids();
    const double dx = grid.dx;
    double dt = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < state.size(); ++i) {
        double p1, c1s, p2, c2s;
        eos(f.A1, f.gamma, state.rho[i], p1, c1s);
        eos(f.A2, f.alpha, state.n[i], p2, c2s);
        const double adv = std::min(dx / (std::abs(state.u[i]) + std::sqrt(c1s)),
                                    dx / (std::abs(state.v[i]) + std::sqrt(c2s)));
        const double diff = dx * dx / (2.0 * std::max(f.mu / state.rho[i], 1.0));
        dt = std::min({dt, adv, diff});
        if (drag_limit) dt = std::min(dt, 1.0 / (1.0 + state.n[i] / state.rho[i]));
    }
    return cfl * dt;
}

SemiDiscreteRhs semi_discrete_rhs(const EvolutionState& s, const Problem& pb) {
    const auto& f = pb.spec.fluids();
    const std::size_t N = s.size();
    const double dx = pb.grid.dx;
    // extended arrays with one ghost cell on each side
    std::vector<double> rho(N + 2), m1(N + 2), u(N + 2), p1(N + 2), a1(N + 2);
    std::vector<double> n(N + 2), m2(N + 2), v(N + 2), p2(N + 2), a2(N + 2);
    for (std::size_t i = 0; i < N; ++i) {
        rho[i + 1] = s.rho[i];
        m1[i + 1] = s.m1[i];
        u[i + 1] = s.u[i];
        n[i + 1] = s.n[i];
        m2[i + 1] = s.m2[i];
        v[i + 1] = s.v[i];
    }
    const double um = pb.boundary.u_minus;
    rho[0] = s.rho[0];
    n[0] = s.n[0];
    u[0] = v[0] = um;
    m1[0] = rho[0] * um;
    m2[0] = n[0] * um;
    const PrimitiveState& r = pb.boundary.right;
    rho[N + 1] = r.rho;
    u[N + 1] = r.u;
    n[N + 1] = r.n;
    v[N + 1] = r.v;
    m1[N + 1] = r.rho * r.u;
    m2[N + 1] = r.n * r.v;
    for (std::size_t i = 0; i < N + 2; ++i) {
        double c2;
        eos(f.A1, f.gamma, rho[i], p1[i], c2);
        a1[i] = std::abs(u[i]) + std::sqrt(c2);
        eos(f.A2, f.alpha, n[i], p2[i], c2);
        a2[i] = std::abs(v[i]) + std::sqrt(c2);
    }

    SemiDiscreteRhs out;
    out.rho.assign(N, 0.0);
    out.m1.assign(N, 0.0);
    out.n.assign(N, 0.0);
    out.m2.assign(N, 0.0);
    const double inv_dx = 1.0 / dx;
    // faces j = 0..N between extended cells j and j+1
    double prev_f[4] = {0, 0, 0, 0};
    for (std::size_t j = 0; j <= N; ++j) {
        const std::size_t L = j, R = j + 1;
        const double s1 = std::max(a1[L], a1[R]);
        const double s2 = std::max(a2[L], a2[R]);
        double fl[4];
        fl[0] = 0.5 * (m1[L] + m1[R]) - 0.5 * s1 * (rho[R] - rho[L]);
        fl[1] = 0.5 * (m1[L] * u[L] + p1[L] + m1[R] * u[R] + p1[R]) - 0.5 * s1 * (m1[R] - m1[L]);
        fl[2] = 0.5 * (m2[L] + m2[R]) - 0.5 * s2 * (n[R] - n[L]);
        fl[3] = 0.5 * (m2[L] * v[L] + p2[L] + m2[R] * v[R] + p2[R]) - 0.5 * s2 * (m2[R] - m2[L]);
        // viscous momentum fluxes (sign: flux = -mu u_x, -n v_x)
        fl[1] -= f.mu * (u[R] - u[L]) * inv_dx;
        fl[3] -= 0.5 * (n[L] + n[R]) * (v[R] - v[L]) * inv_dx;
        if (j == 0) {
            out.mass_flux_left = {fl[0], fl[2]};
        } else {
            const std::size_t c = j - 1;
            out.rho[c] = -(fl[0] - prev_f[0]) * inv_dx;
            out.m1[c] = -(fl[1] - prev_f[1]) * inv_dx;
            out.n[c] = -(fl[2] - prev_f[2]) * inv_dx;
            out.m2[c] = -(fl[3] - prev_f[3]) * inv_dx;
        }
        if (j == N) out.mass_flux_right = {fl[0], fl[2]};
        std::copy(fl, fl + 4, prev_f);
    }
    for (std::size_t c = 0; c < N; ++c) {
        const double drag = s.n[c] * (s.v[c] - s.u[c]);
        out.m1[c] += drag;
        out.m2[c] -= drag;
    }
    return out;
}

namespace {

void check_state(const EvolutionState& s, double t) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!std::isfinite(s.rho[i]) || !std::isfinite(s.m1[i]) || !std::isfinite(s.n[i]) || !std::isfinite(s.m2[i])) {
            throw NumericalAbort("numerical blow-up: non-finite value in cell " + std::to_string(i) +
                                 " at t=" + std::to_string(t));
        }
        if (!(s.rho[i] > kDensityFloor) || !(s.n[i] > kDensityFloor)) {
            throw NumericalAbort("vacuum: density below floor in cell " + std::to_string(i) + " at t=" +
                                 std::to_string(t));
        }
    }
}

EvolutionState euler_stage(const EvolutionState& s, const SemiDiscreteRhs& d, double dt) {
    EvolutionState out;
    out.t = s.t + dt;
    const std::size_t N = s.size();
    out.rho.resize(N);
    out.m1.resize(N);
    out.n.resize(N);
    out.m2.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        out.rho[i] = s.rho[i] + dt * d.rho[i];
        out.m1[i] = s.m1[i] + dt * d.m1[i];
        out.n[i] = s.n[i] + dt * d.n[i];
        out.m2[i] = s.m2[i] + dt * d.m2[i];
    }
    return out;
}

}  // namespace

StepReport step_detailed(const EvolutionState& s0, const Problem& pb, double dt) {
    if (!(dt > 0.0)) throw ConfigError("step: dt must be > 0");
    const SemiDiscreteRhs d0 = semi_discrete_rhs(s0, pb);
    EvolutionState s1 = euler_stage(s0, d0, dt);
    check_state(s1, s0.t + dt);
    s1.sync_primitive();
    const SemiDiscreteRhs d1 = semi_discrete_rhs(s1, pb);
    EvolutionState s2 = euler_stage(s1, d1, dt);
    const std::size_t N = s0.size();
    for (std::size_t i = 0; i < N; ++i) {
        s2.rho[i] = 0.5 * (s0.rho[i] + s2.rho[i]);
        s2.m1[i] = 0.5 * (s0.m1[i] + s2.m1[i]);
        s2.n[i] = 0.5 * (s0.n[i] + s2.n[i]);
        s2.m2[i] = 0.5 * (s0.m2[i] + s2.m2[i]);
    }
    s2.t = s0.t + dt;
    check_state(s2, s2.t);
    s2.sync_primitive();
    StepReport rep;
    rep.state = std::move(s2);
    for (int k = 0; k < 2; ++k) {
        rep.mass_in_right[k] = -0.5 * dt * (d0.mass_flux_right[k] + d1.mass_flux_right[k]);
        rep.mass_out_left[k] = -0.5 * dt * (d0.mass_flux_left[k] + d1.mass_flux_left[k]);
    }
    return rep;
}

EvolutionState step(const EvolutionState& state, const Problem& problem, double dt) {
    return step_detailed(state, problem, dt).state;
}

EvolveResult evolve(const EvolutionState& initial, const Problem& pb, const EvolveOptions& opt,
                    const std::vector<Observer>& observers) {
    if (!(opt.cfl > 0.0 && opt.cfl < 1.0)) throw ConfigError("evolve.cfl must lie in (0, 1)");
    if (opt.t_end < initial.t) throw ConfigError("evolve.t_end must be >= the initial time");
    if (opt.observer_stride < 0 || opt.observer_interval < 0.0) throw ConfigError("observer cadence must be >= 0");
    EvolveResult res;
    res.state = initial;
    if (opt.t_end == initial.t) return res;

    auto notify = [&](const EvolutionState& s) {
        for (const auto& ob : observers) ob(s);
    };
    notify(res.state);
    bool just_observed = true;

    const auto wall_start = std::chrono::steady_clock::now();
    const double t0 = initial.t;
    const double span = opt.t_end - t0;
    std::size_t next_mark = 1;
    while (res.state.t < opt.t_end) {
        if (res.steps >= opt.max_steps) {
            res.truncated = true;
            break;
        }
        if (opt.wall_budget_seconds > 0.0 && (res.steps % 64) == 0) {
            const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
            if (elapsed > opt.wall_budget_seconds) {
                res.truncated = true;
                break;
            }
        }
        double target = opt.t_end;
        bool mark = false;
        if (opt.observer_interval > 0.0) {
            const double t_mark = t0 + static_cast<double>(next_mark) * opt.observer_interval;
            if (t_mark < target) {
                target = t_mark;
                mark = true;
            }
        }
        double dt = stable_dt(res.state, pb.grid, pb.spec, opt.cfl, opt.drag_limit);
        if (!(dt > 0.0) || !std::isfinite(dt)) throw NumericalAbort("evolve: invalid time step");
        bool landed = false;
        if (res.state.t + dt >= target - 1e-12 * std::max(1.0, span)) {
            dt = target - res.state.t;
            landed = true;
        }
        res.state = step(res.state, pb, dt);
        ++res.steps;
        just_observed = false;
        if (landed) {
            res.state.t = target;
            if (mark) ++next_mark;
        }
        const bool by_stride = opt.observer_stride > 0 && res.steps % static_cast<std::size_t>(opt.observer_stride) == 0;
        if ((landed && mark) || by_stride) {
            notify(res.state);
            just_observed = true;
        }
    }
    if (!just_observed) notify(res.state);
    return res;
}

namespace {

Eigen::VectorXd pack(const EvolutionState& s) {
    const std::size_t N = s.size();
    Eigen::VectorXd x(static_cast<Eigen::Index>(4 * N));
    for (std::size_t i = 0; i < N; ++i) {
        const auto k = static_cast<Eigen::Index>(4 * i);
        x(k) = s.rho[i];
        x(k + 1) = s.m1[i];
        x(k + 2) = s.n[i];
        x(k + 3) = s.m2[i];
    }
    return x;
}

EvolutionState unpack(const Eigen::VectorXd& x, double t) {
    const auto N = static_cast<std::size_t>(x.size() / 4);
    EvolutionState s;
    s.t = t;
    s.rho.resize(N);
    s.m1.resize(N);
    s.n.resize(N);
    s.m2.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        const auto k = static_cast<Eigen::Index>(4 * i);
        s.rho[i] = x(k);
        s.m1[i] = x(k + 1);
        s.n[i] = x(k + 2);
        s.m2[i] = x(k + 3);
    }
    s.sync_primitive();
    return s;
}

Eigen::VectorXd operator_value(const Eigen::VectorXd& x, const Problem& pb) {
    EvolutionState s = unpack(x, 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(s.rho[i] > kDensityFloor) || !(s.n[i] > kDensityFloor)) {
            throw NumericalAbort("discrete_equilibrium: density below floor in cell " + std::to_string(i));
        }
    }
    const SemiDiscreteRhs d = semi_discrete_rhs(s, pb);
    Eigen::VectorXd f(x.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(4 * i);
        f(k) = d.rho[i];
        f(k + 1) = d.m1[i];
        f(k + 2) = d.n[i];
        f(k + 3) = d.m2[i];
    }
    return f;
}

}  // namespace

double discrete_residual(const EvolutionState& state, const Problem& problem) {
    return operator_value(pack(state), problem).lpNorm<Eigen::Infinity>();
}

EvolutionState discrete_equilibrium(const EvolutionState& guess, const Problem& pb, const EquilibriumOptions& opt) {
    Eigen::VectorXd x = pack(guess);
    const Eigen::Index dim = x.size();
    const auto cells = dim / 4;
    Eigen::VectorXd f = operator_value(x, pb);
    int iter = 0;
    while (f.lpNorm<Eigen::Infinity>() > opt.tolerance) {
        if (iter >= opt.max_iter) {
            throw SolverError("discrete_equilibrium: no convergence in " + std::to_string(opt.max_iter) +
                              " iterations (residual " + std::to_string(f.lpNorm<Eigen::Infinity>()) + ")");
        }
        ++iter;
        // cells three apart do not share a stencil, so 12 evaluations fill the Jacobian
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(dim) * 12);
        for (int color = 0; color < 3; ++color) {
            for (int var = 0; var < 4; ++var) {
                Eigen::VectorXd xp = x;
                std::vector<double> h(static_cast<std::size_t>(cells), 0.0);
                for (Eigen::Index c = color; c < cells; c += 3) {
                    const Eigen::Index k = 4 * c + var;
                    h[static_cast<std::size_t>(c)] = 1e-7 * std::max(1.0, std::abs(x(k)));
                    xp(k) += h[static_cast<std::size_t>(c)];
                }
                const Eigen::VectorXd df = operator_value(xp, pb) - f;
                for (Eigen::Index c = color; c < cells; c += 3) {
                    const double hc = h[static_cast<std::size_t>(c)];
                    for (Eigen::Index rc = std::max<Eigen::Index>(0, c - 1); rc <= std::min(cells - 1, c + 1); ++rc) {
                        for (int rv = 0; rv < 4; ++rv) {
                            const double val = df(4 * rc + rv) / hc;
                            if (val != 0.0) trip.emplace_back(4 * rc + rv, 4 * c + var, val);
                        }
                    }
                }
            }
        }
        Eigen::SparseMatrix<double> jac(dim, dim);
        jac.setFromTriplets(trip.begin(), trip.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
        lu.compute(jac);
        if (lu.info() != Eigen::Success) throw SolverError("discrete_equilibrium: singular Jacobian");
        const Eigen::VectorXd stepv = lu.solve(f);
        double damp = 1.0;
        bool accepted = false;
        for (int k = 0; k < 30 && !accepted; ++k, damp *= 0.5) {
            try {
                const Eigen::VectorXd xt = x - damp * stepv;
                const Eigen::VectorXd ft = operator_value(xt, pb);
                if (ft.norm() < f.norm()) {
                    x = xt;
                    f = ft;
                    accepted = true;
                }
            } catch (const NumericalAbort&) {
            }
        }
        if (!accepted) {
            throw SolverError("discrete_equilibrium: line search failed at residual " +
                              std::to_string(f.lpNorm<Eigen::Infinity>()));
        }
    }
    return unpack(x, guess.t);
}

void write_snapshot(const std::string& path, const EvolutionState& s, const Grid1D& grid,
                    const std::string& spec_hash) {
    if (s.size() != grid.centers.size()) throw IoError("write_snapshot: state and grid sizes differ");
    std::ofstream os(path);
    if (!os) throw IoError("cannot write snapshot: " + path);
    os << "x,rho,u,n,v\n";
    char buf[512];
    for (std::size_t i = 0; i < s.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", grid.centers[i], s.rho[i], s.u[i], s.n[i],
                      s.v[i]);
        os << buf;
    }
    if (!os) throw IoError("error while writing snapshot: " + path);
    std::ofstream meta(path + ".meta");
    if (!meta) throw IoError("cannot write snapshot metadata: " + path + ".meta");
    std::snprintf(buf, sizeof buf, "t = %.17g\nspec_hash = %s\nlength = %.17g\ncells = %d\n", s.t, spec_hash.c_str(),
                  grid.length, grid.cells);
    meta << buf;
}

Snapshot read_snapshot(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read snapshot: " + path);
    std::string line;
    if (!std::getline(is, line) || line != "x,rho,u,n,v") throw IoError("snapshot " + path + ": bad header");
    Snapshot snap;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        double vals[5];
        std::istringstream ls(line);
        std::string cell;
        int k = 0;
        while (k < 5 && std::getline(ls, cell, ',')) {
            try {
                vals[k++] = std::stod(cell);
            } catch (const std::exception&) {
                throw IoError("snapshot " + path + ": bad number on line " + std::to_string(lineno));
            }
        }
        if (k != 5) throw IoError("snapshot " + path + ": expected 5 columns on line " + std::to_string(lineno));
        snap.x.push_back(vals[0]);
        snap.state.rho.push_back(vals[1]);
        snap.state.u.push_back(vals[2]);
        snap.state.n.push_back(vals[3]);
        snap.state.v.push_back(vals[4]);
    }
    snap.state.sync_conserved();
    std::ifstream meta(path + ".meta");
    while (meta && std::getline(meta, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(' '));
            s.erase(s.find_last_not_of(' ') + 1);
            return s;
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "t") snap.meta.t = std::stod(val);
        else if (key == "spec_hash") snap.meta.spec_hash = val;
        else if (key == "length") snap.meta.length = std::stod(val);
        else if (key == "cells") snap.meta.cells = std::stoi(val);
    }
    snap.state.t = snap.meta.t;
    return snap;
}

}  // namespace twophase
