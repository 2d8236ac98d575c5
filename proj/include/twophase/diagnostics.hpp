#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "twophase/ibvp.hpp"
#include "twophase/model.hpp"
#include "twophase/steady.hpp"

namespace twophase {

/// phi = rho - rho~, psi = u - u~, phi_bar = n - n~, psi_bar = v - v~ at the cell centres.
struct PerturbationField {
    std::vector<double> phi, psi, phi_bar, psi_bar;

    std::size_t size() const noexcept { return phi.size(); }
};

/// Against the profile sampled at the grid centres. Throws std::invalid_argument
/// if the state does not live on the grid.
PerturbationField perturbation(const EvolutionState& state, const SteadyProfile& profile, const Grid1D& grid);
/// Against a reference state on the same grid (e.g. the discrete equilibrium).
PerturbationField perturbation(const EvolutionState& state, const EvolutionState& reference);

/// Closed form of the integral of (p(s) - p(ref))/s^2 from ref to density.
double phi_potential(const FluidConstants& fluids, double density, double ref_density, Phase phase);

/// Midpoint quadrature of rho(psi^2/2 + Phi1) + n(psi_bar^2/2 + Phi2).
double energy_total(const EvolutionState& state, const SteadyProfile& profile, const Grid1D& grid,
                    const FluidConstants& fluids);
double energy_total(const EvolutionState& state, const EvolutionState& reference, const Grid1D& grid,
                    const FluidConstants& fluids);

/// Largest lambda for which e^{lambda x} stays finite on the grid: 2 ln(DBL_MAX) / x_last.
double max_exponential_lambda(const Grid1D& grid);

/// Weight value at x; for exponential weights prefer log_weight.
double log_weight(const WeightTag& tag, double x, const std::optional<SigmaParams>& sigma);

struct NormRecord {
    double t = 0.0;
    std::array<double, 4> l2_components{};  // phi, psi, phi_bar, psi_bar
    double l2 = 0.0;
    double h1 = 0.0;
    double linf = 0.0;
    double drag_l2 = 0.0;
    /// Weighted entries keyed "w_<tag>" (L2) and "wh1_<tag>" (H1).
    std::vector<std::pair<std::string, double>> weighted;

    /// Named entry: l2, h1, linf, drag_l2, l2_phi, ..., or a weighted key.
    double value(const std::string& name) const;
};

/// Throws std::invalid_argument for size mismatches and NumericalAbort if an
/// exponential weight overflows (the message names the admissible lambda).
NormRecord norms(const PerturbationField& field, const Grid1D& grid, const std::vector<WeightTag>& weights,
                 const std::optional<SigmaParams>& sigma = std::nullopt, double t = 0.0);

struct NormSeries {
    std::vector<NormRecord> records;

    /// Appends; throws std::invalid_argument unless t is strictly increasing.
    void append(NormRecord record);
    std::vector<double> times() const;
    std::vector<double> column(const std::string& name) const;
    /// Weighted keys of the first record, in order.
    std::vector<std::string> weighted_keys() const;
};

/// Observer that appends the norms of (state - reference) to the series.
Observer norm_observer(NormSeries& series, const EvolutionState& reference, const Grid1D& grid,
                       std::vector<WeightTag> weights, std::optional<SigmaParams> sigma = std::nullopt);

/// CSV `t,l2,h1,linf,drag_l2[,w_<tag>...][,wh1_<tag>...]`, 17 significant digits.
void write_norm_csv(std::ostream& os, const NormSeries& series);
void write_norm_csv(const std::string& path, const NormSeries& series);
NormSeries read_norm_csv(const std::string& path);

enum class FormName { M1, M2, M3, M4, M5, M6 };
const char* to_string(FormName f);
FormName parse_form_name(const std::string& text);

enum class Definiteness { PositiveDefinite, PositiveSemidefinite, Indefinite };
const char* to_string(Definiteness d);

/// nu and sigma are required by M5 and M6; k (in (0,1)) by M6.
struct FormContext {
    std::optional<double> nu;
    std::optional<double> sigma;
    std::optional<double> k;
};

struct QuadraticFormReport {
    FormName name = FormName::M1;
    Eigen::MatrixXd matrix;
    std::vector<double> eigenvalues;  // ascending
    Definiteness verdict = Definiteness::Indefinite;
    FormContext context;
    double zero_tolerance = 1e-10;

    /// JSON text with the matrix, eigenvalues, verdict and context.
    std::string to_text() const;
};

/// Verdict of ascending eigenvalues; |lambda| <= tol * max(1, max|lambda|) counts as zero.
Definiteness classify_definiteness(const std::vector<double>& eigenvalues, double zero_tolerance);

/// Throws ConfigError if the context lacks a parameter the form needs.
QuadraticFormReport assemble_quadratic_form(FormName name, const ModelSpec& spec, const FormContext& context = {},
                                            double zero_tolerance = 1e-10);

struct HatCoordinates {
    double rho_hat = 0.0;
    double n_hat = 0.0;
    double v_hat = 0.0;
};

/// Coordinates in which (phi, phi_bar, psi_bar) M4 (.)^T = l1 rho_hat^2 + l2 n_hat^2.
struct HatTransform {
    Eigen::Matrix3d P;          // columns: unit eigenvectors of l1, l2 and the kernel (-rho/u, -n/u, 1)
    Eigen::Vector2d lambdas;    // l1, l2 > 0
    HatCoordinates apply(const Eigen::Vector3d& triple) const;
};

/// Throws ConfigError if M4 has no eigenvalue below the zero tolerance (non-sonic spec).
HatTransform hat_transform(const ModelSpec& spec, double zero_tolerance = 1e-8);
HatCoordinates hat_transform(const ModelSpec& spec, const Eigen::Vector3d& triple);

enum class TemporalLaw { Algebraic, Exponential };
const char* to_string(TemporalLaw law);

struct TemporalDecayFit {
    TemporalLaw model = TemporalLaw::Algebraic;
    double rate = 0.0;
    double prefactor = 0.0;
    double r_squared = 0.0;
    std::pair<double, double> window;
    std::size_t samples = 0;
};

/// Least squares of log N against log(1+t) or t; rate = -slope. Without a
/// window the final half of the records is used. Throws std::invalid_argument
/// with fewer than 8 records and std::domain_error on non-positive norms.
TemporalDecayFit fit_temporal_decay(const NormSeries& series, const std::string& which, TemporalLaw model,
                                    std::optional<std::pair<double, double>> window = std::nullopt);
TemporalDecayFit fit_temporal_decay(const std::vector<double>& t, const std::vector<double>& values,
                                    TemporalLaw model, std::optional<std::pair<double, double>> window = std::nullopt);

}  // namespace twophase
