#pragma once

#include <array>
#include <complex>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "twophase/model.hpp"

namespace twophase {

/// Deviation (u~ - u_plus, u~_x, v~ - u_plus) of the steady velocities.
struct ReducedState {
    double u_bar = 0.0;
    double w_bar = 0.0;
    double v_bar = 0.0;

    Eigen::Vector3d vec() const { return {u_bar, w_bar, v_bar}; }
    static ReducedState from(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }
};

struct FarFieldJacobian {
    Eigen::Matrix3d entries;
};

enum class Sign { Neg, Zero, Pos };

char to_char(Sign s);

struct EigenSystem {
    std::array<std::complex<double>, 3> lambdas;   // sorted by real part ascending
    std::array<Eigen::Vector3cd, 3> vectors;       // unit eigenvectors
    std::array<Sign, 3> sign_pattern;
    double zero_tolerance = 1e-8;

    int count(Sign s) const;
    std::string pattern_string() const;  // e.g. "(-,-,+)"
};

/// Nonlinear first-order steady system for (u_bar, w_bar, v_bar); densities
/// are recovered from the mass fluxes. Throws SolverError if a velocity
/// reaches zero (which phase is named).
Eigen::Vector3d steady_rhs(const ModelSpec& spec, const ReducedState& state);

FarFieldJacobian farfield_jacobian(const ModelSpec& spec);

/// Eigenvalues from the characteristic cubic, eigenvectors by nullspace
/// extraction. Throws SolverError if an eigenvector residual exceeds 1e-8.
EigenSystem eigensystem(const FarFieldJacobian& jac, double zero_tolerance = 1e-8);

/// sigma0 / (1 + a sigma0 x): exact solution of sigma_x = -a sigma^2.
double sigma_profile(double a, double sigma0, double x);

/// (a, sigma0) of the closed-form sigma; used by sigma weights and data.
struct SigmaParams {
    double a = 1.0;
    double sigma0 = 0.0;
};

struct SteadySolveOptions {
    double max_delta = 0.1;
    bool allow_large_delta = false;
    double eps_seed = 0.0;          // 0 -> 1e-4 * max(1, |u_plus|)
    double x_far = 0.0;             // 0 -> chosen from the slowest stable rate
    double sigma_seed = 1e-3;       // sonic: far end sits where sigma = sigma_seed
    double x_domain = 100.0;        // minimum length of the returned profile
    double max_sonic_domain = 1e5;
    double segment_length = 2.0;    // sonic multiple-shooting segment length
    double max_shoot_length = 1e4;  // subsonic backward integration budget
    int points = 2048;
    double ode_tolerance = 1e-10;
    double newton_tolerance = 1e-12;
    int max_iter = 50;
    double match_tolerance = 1e-8;
    double farfield_tolerance = 5e-3;
    double sonic_tolerance = kDefaultSonicTolerance;
    double zero_tolerance = 1e-8;
};

/// Diagnostics of a steady solve.
struct SteadySolveInfo {
    std::string method;          // "stable-subspace shooting", ...
    int newton_iterations = 0;
    double boundary_residual = 0.0;
    double x_far = 0.0;          // seed location / far node
    double eps_seed = 0.0;
    double v_mismatch = 0.0;     // v~(0) - u~(0)
};

struct SteadyProfile {
    std::vector<double> x;
    std::vector<double> rho_t, u_t, n_t, v_t;
    std::vector<double> ux_t, vx_t;
    Regime regime;
    double delta = 0.0;
    double achieved_u_minus = 0.0;
    double achieved_v_minus = 0.0;   // equals achieved_u_minus unless the boundary pair is incompatible
    bool boundary_compatible = true;
    FluidConstants fluids;
    FarFieldState far;
    SteadySolveInfo info;

    std::size_t size() const noexcept { return x.size(); }
    double length() const { return x.back(); }
};

struct PrimitiveState {
    double rho, u, n, v;
};

/// Profile value at x by cubic Hermite interpolation of (u~, v~) with their
/// stored derivatives; densities follow from the mass fluxes. Beyond the
/// grid the last value is held.
PrimitiveState sample_profile(const SteadyProfile& profile, double x);

SteadyProfile solve_steady(const ModelSpec& spec, const SteadySolveOptions& options = {});

/// Max abs residual of the two momentum equations of the steady system using
/// nine-point finite differences of the stored primitive arrays (one-sided
/// near the ends, narrower stencils on grids with fewer points).
double steady_residual(const ModelSpec& spec, const SteadyProfile& profile);

enum class ProfileQuantity { Rho, U, N, V, Ux, Vx };
enum class SpatialLaw { Exponential, Algebraic };

struct SpatialDecayFit {
    SpatialLaw law;
    double rate_or_slope = 0.0;
    double prefactor = 0.0;
    double r_squared = 0.0;
    std::pair<double, double> window;
    std::size_t samples = 0;
};

/// Least squares of log|q - q_plus| against x (Exponential; rate = -slope) or
/// against log(1 + delta x) (Algebraic; slope reported as is).
SpatialDecayFit fit_spatial_decay(const SteadyProfile& profile, ProfileQuantity quantity, SpatialLaw law,
                                  std::pair<double, double> window);

/// Mean of u~_x / (u~ - u_plus)^2 over the window; tends to the curvature a
/// along the sonic center manifold.
double sonic_curvature_ratio(const SteadyProfile& profile, std::pair<double, double> window);

/// CSV `x,rho_t,u_t,n_t,v_t,ux_t,vx_t`, 17 significant digits.
void write_profile_csv(std::ostream& os, const SteadyProfile& profile);
void write_profile_csv(const std::string& path, const SteadyProfile& profile);

}  // namespace twophase
