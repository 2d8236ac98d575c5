#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "twophase/model.hpp"
#include "twophase/steady.hpp"

namespace twophase {

/// Uniform cell-centred grid on [0, length].
struct Grid1D {
    double length = 0.0;
    int cells = 0;
    double dx = 0.0;
    std::vector<double> centers;

    static Grid1D uniform(double length, int cells);
};

inline constexpr double kDensityFloor = 1e-10;

/// Cell averages at time t. m1 = rho*u and m2 = n*v are the conserved momenta.
struct EvolutionState {
    double t = 0.0;
    std::vector<double> rho, u, n, v;
    std::vector<double> m1, m2;

    std::size_t size() const noexcept { return rho.size(); }
    void sync_conserved();
    void sync_primitive();
};

/// Weight class of a norm or of initial data.
struct WeightTag {
    enum class Kind { None, AlgebraicNu, SigmaNu, ExponentialLambda };
    Kind kind = Kind::None;
    double value = 0.0;

    /// "alg1", "sigma0.5", "exp0.2", or "none".
    std::string label() const;
    /// Inverse of label(); throws ConfigError on malformed input.
    static WeightTag parse(const std::string& text);

    friend bool operator==(const WeightTag&, const WeightTag&) = default;
};

enum class PerturbationShape { Gaussian, CompactBump, FromFile, WeightedTail };

const char* to_string(PerturbationShape s);
PerturbationShape parse_shape(const std::string& text);

namespace component {
inline constexpr unsigned rho = 1;
inline constexpr unsigned u = 2;
inline constexpr unsigned n = 4;
inline constexpr unsigned v = 8;
}  // namespace component

/// Initial perturbation added to the steady profile. The u and v parts are
/// multiplied by 1 - exp(-(x/width)^2) so the boundary velocity is untouched.
/// FromFile reads a full snapshot CSV (absolute values, not differences);
/// amplitude, center and width are then unused. WeightedTail is the slowest
/// decaying envelope whose weight_tag norm is borderline finite:
/// (1+x)^{-(nu+1)/2}, (sigma/sigma0)^{(nu+1)/2} or e^{-lambda x/2}(1+x)^{-1/2}.
struct PerturbationSpec {
    PerturbationShape shape = PerturbationShape::Gaussian;
    double amplitude = 0.0;
    double center = 10.0;
    double width = 2.0;
    unsigned components = component::u;
    std::string file;
    WeightTag weight_tag;
};

/// Shape value at x before tapering (Gaussian, C-infinity bump of radius
/// width, or weighted tail). Throws ConfigError for a tail without a weight.
double perturbation_shape(const PerturbationSpec& pert, double x, const SigmaParams& sigma = {});

/// Ghost data: velocity u_minus on the left, a pinned state on the right.
struct BoundaryData {
    double u_minus = -1.0;
    PrimitiveState right{1.0, -1.0, 1.0, -1.0};

    static BoundaryData far_field(const ModelSpec& spec);
    /// Right ghost taken from the profile at L + dx/2 (equal to the far state
    /// once the profile has decayed).
    static BoundaryData from_profile(const ModelSpec& spec, const SteadyProfile& profile, const Grid1D& grid);
};

struct Problem {
    ModelSpec spec;
    Grid1D grid;
    BoundaryData boundary;

    Problem(ModelSpec spec, Grid1D grid);
    Problem(ModelSpec spec, Grid1D grid, BoundaryData boundary);
};

/// Steady profile at the cell centres plus the perturbation. Throws
/// ConfigError if a density would drop below the floor.
EvolutionState initialize(const SteadyProfile& profile, const Grid1D& grid, const PerturbationSpec& pert);

/// Steady profile sampled at the cell centres.
EvolutionState sample_state(const SteadyProfile& profile, const Grid1D& grid);

/// cfl * min over cells of the advective and diffusive limits. With
/// drag_limit the explicit drag rate 1 + n/rho is bounded as well.
double stable_dt(const EvolutionState& state, const Grid1D& grid, const ModelSpec& spec, double cfl,
                 bool drag_limit = false);

/// Time derivative of the conserved variables (rho, m1, n, m2) per cell.
struct SemiDiscreteRhs {
    std::vector<double> rho, m1, n, m2;
    std::array<double, 2> mass_flux_left{};   // rho*u and n*v through x = 0 (positive to the right)
    std::array<double, 2> mass_flux_right{};  // through x = L
};

SemiDiscreteRhs semi_discrete_rhs(const EvolutionState& state, const Problem& problem);

struct StepReport {
    EvolutionState state;
    std::array<double, 2> mass_in_right{};  // mass entering through x = L during the step, per phase
    std::array<double, 2> mass_out_left{};  // mass leaving through x = 0 during the step
};

/// One SSP-RK2 step. Throws NumericalAbort on vacuum (cell and time named)
/// or non-finite values.
EvolutionState step(const EvolutionState& state, const Problem& problem, double dt);
StepReport step_detailed(const EvolutionState& state, const Problem& problem, double dt);

using Observer = std::function<void(const EvolutionState&)>;

struct EvolveOptions {
    double t_end = 1.0;
    double cfl = 0.4;
    bool drag_limit = false;
    int observer_stride = 0;        // call observers every k accepted steps (0: off)
    double observer_interval = 0.0; // call observers at t0 + k*interval, landing exactly (0: off)
    double wall_budget_seconds = 0.0;  // 0: unlimited
    std::size_t max_steps = 100'000'000;
};

struct EvolveResult {
    EvolutionState state;
    std::size_t steps = 0;
    bool truncated = false;
};

/// Observers are called once on the initial state, then per stride/interval,
/// and on the final state if it was not just observed.
EvolveResult evolve(const EvolutionState& initial, const Problem& problem, const EvolveOptions& options,
                    const std::vector<Observer>& observers = {});

struct EquilibriumOptions {
    double tolerance = 1e-11;
    int max_iter = 30;
};

/// Zero of the semi-discrete operator by Newton's method started from guess.
EvolutionState discrete_equilibrium(const EvolutionState& guess, const Problem& problem,
                                    const EquilibriumOptions& options = {});

/// Max abs entry of the semi-discrete operator.
double discrete_residual(const EvolutionState& state, const Problem& problem);

struct SnapshotMeta {
    double t = 0.0;
    std::string spec_hash;
    double length = 0.0;
    int cells = 0;
};

/// CSV `x,rho,u,n,v` with 17 significant digits and a `<path>.meta` sidecar.
void write_snapshot(const std::string& path, const EvolutionState& state, const Grid1D& grid,
                    const std::string& spec_hash);

struct Snapshot {
    EvolutionState state;
    std::vector<double> x;
    SnapshotMeta meta;
};

/// Reads the CSV and, if present, its sidecar.
Snapshot read_snapshot(const std::string& path);

}  // namespace twophase
