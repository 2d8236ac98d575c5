#include "twophase/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "twophase/errors.hpp"

namespace twophase {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace

void FluidConstants::validate() const {
    require(std::isfinite(A1) && A1 > 0.0, "A1 must be > 0");
    require(std::isfinite(A2) && A2 > 0.0, "A2 must be > 0");
    require(std::isfinite(gamma) && gamma >= 1.0, "gamma must be >= 1");
    require(std::isfinite(alpha) && alpha >= 1.0, "alpha must be >= 1");
    require(std::isfinite(mu) && mu > 0.0, "mu must be > 0");
}

void FarFieldState::validate() const {
    require(std::isfinite(rho_plus) && rho_plus > 0.0, "rho_plus must be > 0");
    require(std::isfinite(n_plus) && n_plus > 0.0, "n_plus must be > 0");
    require(std::isfinite(u_plus) && u_plus < 0.0, "u_plus must be < 0");
}

ModelSpec::ModelSpec(FluidConstants fluids, FarFieldState far, double u_minus)
    : fluids_(fluids), far_(far), u_minus_(u_minus) {
    fluids_.validate();
    far_.validate();
    require(std::isfinite(u_minus_) && u_minus_ < 0.0,
            "u_minus must be < 0 (outflow boundary condition (u,v)(t,0) = (u_minus,u_minus) with u_minus < 0)");
}

ModelSpec ModelSpec::with_delta(FluidConstants fluids, FarFieldState far, double delta) {
    return ModelSpec(fluids, far, far.u_plus - delta);
}

double ModelSpec::delta() const noexcept { return std::abs(u_minus_ - far_.u_plus); }

std::string ModelSpec::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "A1=" << fluids_.A1 << " A2=" << fluids_.A2 << " gamma=" << fluids_.gamma
       << " alpha=" << fluids_.alpha << " mu=" << fluids_.mu << " rho_plus=" << far_.rho_plus
       << " n_plus=" << far_.n_plus << " u_plus=" << far_.u_plus << " u_minus=" << u_minus_;
    return os.str();
}

const char* to_string(RegimeClass c) {
    switch (c) {
        case RegimeClass::Supersonic: return "Supersonic";
        case RegimeClass::Sonic: return "Sonic";
        case RegimeClass::Subsonic: return "Subsonic";
    }
    return "?";
}

double pressure(const FluidConstants& fluids, double density, Phase phase) {
    if (!(density > 0.0)) throw std::domain_error("pressure: density must be > 0");
    return phase == Phase::One ? fluids.A1 * std::pow(density, fluids.gamma)
                               : fluids.A2 * std::pow(density, fluids.alpha);
}

double pressure_derivative(const FluidConstants& fluids, double density, Phase phase) {
    if (!(density > 0.0)) throw std::domain_error("pressure_derivative: density must be > 0");
    return phase == Phase::One ? fluids.A1 * fluids.gamma * std::pow(density, fluids.gamma - 1.0)
                               : fluids.A2 * fluids.alpha * std::pow(density, fluids.alpha - 1.0);
}

double sound_speed(const FluidConstants& fluids, double rho_plus, double n_plus) {
    const double num = fluids.A1 * fluids.gamma * std::pow(rho_plus, fluids.gamma) +
                       fluids.A2 * fluids.alpha * std::pow(n_plus, fluids.alpha);
    return std::sqrt(num / (rho_plus + n_plus));
}

double sound_speed(const ModelSpec& spec) {
    return sound_speed(spec.fluids(), spec.far().rho_plus, spec.far().n_plus);
}

Regime classify_regime(const ModelSpec& spec, double sonic_tolerance) {
    if (!(sonic_tolerance > 0.0)) throw ConfigError("sonic_tolerance must be > 0");
    Regime r;
    r.sonic_tolerance = sonic_tolerance;
    r.mach = std::abs(spec.far().u_plus) / sound_speed(spec);
    if (std::abs(r.mach - 1.0) <= sonic_tolerance) {
        r.cls = RegimeClass::Sonic;
    } else if (r.mach > 1.0) {
        r.cls = RegimeClass::Supersonic;
    } else {
        r.cls = RegimeClass::Subsonic;
    }
    return r;
}

DerivedConstants derived_constants(const ModelSpec& spec) {
    const auto& f = spec.fluids();
    const double rho = spec.far().rho_plus;
    const double n = spec.far().n_plus;
    const double u = spec.far().u_plus;
    DerivedConstants d;
    d.c_plus = sound_speed(spec);
    d.b = rho * (u * u - pressure_derivative(f, rho, Phase::One)) /
          (std::abs(u) * std::sqrt((f.mu + n) * n));
    // b enters only through b^2 below; the sign convention keeps b >= 0.
    d.b = std::abs(d.b);
    const double b2 = d.b * d.b;
    const double curv = f.A1 * f.gamma * (f.gamma + 1.0) * std::pow(rho, f.gamma) +
                        f.A2 * f.alpha * (f.alpha + 1.0) * std::pow(n, f.alpha);
    d.a = curv / (2.0 * u * u * (1.0 + b2) * (f.mu + n));
    d.lambda_star = 2.0 + std::sqrt(8.0 + 1.0 / (1.0 + b2));
    return d;
}

SonicCondition sonic_pressure_condition(const ModelSpec& spec) {
    const auto& f = spec.fluids();
    const double rho = spec.far().rho_plus;
    const double n = spec.far().n_plus;
    const double u = spec.far().u_plus;
    const double dp1 = pressure_derivative(f, rho, Phase::One);
    const double dp2 = pressure_derivative(f, n, Phase::Two);
    const double lhs = std::abs(dp1 - dp2);
    const double left = (1.0 + rho / n) * std::sqrt((f.gamma - 1.0) * dp1);
    const double right = (1.0 + n / rho) * std::sqrt((f.alpha - 1.0) * dp2);
    const double rhs = std::sqrt(2.0) * std::abs(u) * std::min(left, right);
    return {lhs <= rhs, rhs - lhs};
}

FarFieldState sonic_far_state(const FluidConstants& fluids, double rho_plus, double n_plus) {
    return FarFieldState{rho_plus, n_plus, -sound_speed(fluids, rho_plus, n_plus)};
}

}  // namespace twophase
