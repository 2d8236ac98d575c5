#pragma once

#include <string>

namespace twophase {

/// Pressure laws p1 = A1 rho^gamma, p2 = A2 n^alpha and the phase-1 viscosity.
struct FluidConstants {
    double A1 = 1.0;
    double A2 = 1.0;
    double gamma = 1.0;
    double alpha = 1.0;
    double mu = 1.0;

    /// Throws ConfigError naming the first violated invariant.
    void validate() const;
};

/// Far-field state (rho_plus, u_plus, n_plus, u_plus); both phases share u_plus.
struct FarFieldState {
    double rho_plus = 1.0;
    double n_plus = 1.0;
    double u_plus = -1.0;

    void validate() const;
};

enum class Phase { One = 1, Two = 2 };

/// Complete parameter set of the outflow problem. Immutable once built;
/// delta is always recomputed from the two velocities.
class ModelSpec {
public:
    ModelSpec(FluidConstants fluids, FarFieldState far, double u_minus);

    /// Spec with u_minus = u_plus - delta (outflow stronger than the far field
    /// for delta > 0, which is the sonic branch).
    static ModelSpec with_delta(FluidConstants fluids, FarFieldState far, double delta);

    const FluidConstants& fluids() const noexcept { return fluids_; }
    const FarFieldState& far() const noexcept { return far_; }
    double u_minus() const noexcept { return u_minus_; }
    double delta() const noexcept;

    /// Copy with a different boundary velocity.
    ModelSpec with_u_minus(double u_minus) const { return ModelSpec(fluids_, far_, u_minus); }

    /// Short description used in reports, e.g. "A1=1 A2=1 ... u_minus=-2.05".
    std::string describe() const;

private:
    FluidConstants fluids_;
    FarFieldState far_;
    double u_minus_;
};

enum class RegimeClass { Supersonic, Sonic, Subsonic };

const char* to_string(RegimeClass c);

struct Regime {
    double mach = 0.0;
    RegimeClass cls = RegimeClass::Sonic;
    double sonic_tolerance = 1e-9;
};

struct DerivedConstants {
    double c_plus = 0.0;
    double a = 0.0;
    double b = 0.0;
    double lambda_star = 0.0;
};

/// Result of the sonic pressure-compatibility check; margin = rhs - lhs.
struct SonicCondition {
    bool holds = false;
    double margin = 0.0;
};

inline constexpr double kDefaultSonicTolerance = 1e-9;

double pressure(const FluidConstants& fluids, double density, Phase phase);
double pressure_derivative(const FluidConstants& fluids, double density, Phase phase);

double sound_speed(const FluidConstants& fluids, double rho_plus, double n_plus);
double sound_speed(const ModelSpec& spec);

Regime classify_regime(const ModelSpec& spec, double sonic_tolerance = kDefaultSonicTolerance);

DerivedConstants derived_constants(const ModelSpec& spec);

SonicCondition sonic_pressure_condition(const ModelSpec& spec);

/// Far state with u_plus = -c_plus, i.e. exactly sonic up to rounding.
FarFieldState sonic_far_state(const FluidConstants& fluids, double rho_plus, double n_plus);

}  // namespace twophase
