#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace twophase::ode {

using State = Eigen::Vector3d;
using Rhs = std::function<State(const State&)>;

struct Sample {
    double x;
    State y;
    State dy;
};

/// Accepted integration points with cubic Hermite dense output. Samples are
/// stored in integration order; x may run forward or backward.
class Trajectory {
public:
    Trajectory() = default;
    explicit Trajectory(std::vector<Sample> samples) : samples_(std::move(samples)) {}

    void push(const Sample& s) { samples_.push_back(s); }
    const std::vector<Sample>& samples() const noexcept { return samples_; }
    bool empty() const noexcept { return samples_.empty(); }
    const Sample& front() const { return samples_.front(); }
    const Sample& back() const { return samples_.back(); }

    double x_min() const;
    double x_max() const;

    /// Hermite interpolation of the state and its derivative at x in [x_min, x_max].
    State at(double x) const;
    State derivative_at(double x) const;

    /// Accepted sample whose abscissa is closest to x.
    const Sample& nearest(double x) const;

    /// Shift every abscissa by dx.
    void translate(double dx);

private:
    std::size_t bracket(double x) const;
    std::vector<Sample> samples_;
};

struct Options {
    double tolerance = 1e-10;   // local error per step, mixed absolute/relative
    double abs_scale = 1.0;     // absolute part of the tolerance is tolerance*abs_scale
    double h_initial = 1e-2;
    double h_max = 0.5;
    double h_min = 1e-12;
    std::size_t max_steps = 2'000'000;
    double blowup_norm = std::numeric_limits<double>::infinity();
};

enum class Stop { Reached, Event, BlowUp };

struct Result {
    Trajectory trajectory;
    Stop reason = Stop::Reached;
    std::size_t steps = 0;
};

/// Scalar event function; integration stops at its first sign change.
using Event = std::function<double(const State&)>;

/// Classical RK4 with step-doubling error control (Richardson-extrapolated
/// solution is propagated). Integrates from x0 toward x1 (either direction).
Result integrate(const Rhs& f, const State& y0, double x0, double x1, const Options& opt,
                 const Event* event = nullptr);

/// Replays the abscissae of mesh with the same doubled steps and no error
/// control; the result depends smoothly on y0.
State integrate_on_mesh(const Rhs& f, const State& y0, const Trajectory& mesh);

/// One classical RK4 step of size h (h may be negative).
State rk4_step(const Rhs& f, const State& y, double h);

}  // namespace twophase::ode
