#pragma once

#include <cmath>
#include <cstdint>

#include "twophase/model.hpp"

namespace twophase::testgen {

/// splitmix64; small, seedable and identical on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * (static_cast<double>(next() >> 11) * 0x1.0p-53); }

    /// Log-uniform in [lo, hi).
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

private:
    std::uint64_t state_;
};

inline FluidConstants fluids(Rng& r) {
    FluidConstants f;
    f.A1 = r.log_uniform(0.3, 3.0);
    f.A2 = r.log_uniform(0.3, 3.0);
    f.gamma = r.uniform(1.0, 3.0);
    f.alpha = r.uniform(1.0, 3.0);
    f.mu = r.log_uniform(0.3, 3.0);
    return f;
}

/// Far state with Mach number drawn from [mach_lo, mach_hi).
inline FarFieldState far_with_mach(Rng& r, const FluidConstants& f, double mach_lo, double mach_hi) {
    FarFieldState far;
    far.rho_plus = r.log_uniform(0.3, 3.0);
    far.n_plus = r.log_uniform(0.3, 3.0);
    far.u_plus = -r.uniform(mach_lo, mach_hi) * sound_speed(f, far.rho_plus, far.n_plus);
    return far;
}

inline ModelSpec supersonic(Rng& r) {
    const FluidConstants f = fluids(r);
    const FarFieldState far = far_with_mach(r, f, 1.1, 3.0);
    return ModelSpec::with_delta(f, far, 0.05);
}

inline ModelSpec subsonic(Rng& r) {
    const FluidConstants f = fluids(r);
    const FarFieldState far = far_with_mach(r, f, 0.2, 0.9);
    return ModelSpec::with_delta(f, far, 0.05);
}

/// u_plus = -c_plus exactly (up to rounding).
inline ModelSpec sonic(Rng& r) {
    const FluidConstants f = fluids(r);
    const FarFieldState far = sonic_far_state(f, r.log_uniform(0.3, 3.0), r.log_uniform(0.3, 3.0));
    return ModelSpec::with_delta(f, far, 0.05);
}

/// Sonic spec with equal phase sound speeds A1 gamma rho^(gamma-1) = A2 alpha n^(alpha-1), so b = 0.
inline ModelSpec sonic_b_zero(Rng& r) {
    FluidConstants f = fluids(r);
    const double rho = r.log_uniform(0.3, 3.0);
    const double n = r.log_uniform(0.3, 3.0);
    f.A2 = f.A1 * f.gamma * std::pow(rho, f.gamma - 1.0) / (f.alpha * std::pow(n, f.alpha - 1.0));
    return ModelSpec::with_delta(f, sonic_far_state(f, rho, n), 0.05);
}

}  // namespace twophase::testgen
