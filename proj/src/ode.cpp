#include "twophase/ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "twophase/errors.hpp"

namespace twophase::ode {

double Trajectory::x_min() const {
    return std::min(samples_.front().x, samples_.back().x);
}

double Trajectory::x_max() const {
    return std::max(samples_.front().x, samples_.back().x);
}

std::size_t Trajectory::bracket(double x) const {
    // index i such that x lies between samples i and i+1
    const bool forward = samples_.back().x >= samples_.front().x;
    auto less = [forward](const Sample& s, double v) { return forward ? s.x < v : s.x > v; };
    auto it = std::lower_bound(samples_.begin(), samples_.end(), x, less);
    std::size_t i = static_cast<std::size_t>(it - samples_.begin());
    if (i == 0) return 0;
    if (i >= samples_.size()) return samples_.size() - 2;
    return i - 1;
}

namespace {

struct Hermite {
    double t, h;
    const Sample* a;
    const Sample* b;
};

Hermite locate(const std::vector<Sample>& s, std::size_t i, double x) {
    const Sample& a = s[i];
    const Sample& b = s[i + 1];
    const double h = b.x - a.x;
    return {h != 0.0 ? (x - a.x) / h : 0.0, h, &a, &b};
}

}  // namespace

State Trajectory::at(double x) const {
    if (samples_.size() == 1) return samples_.front().y;
    const auto hm = locate(samples_, bracket(x), x);
    const double t = hm.t;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * hm.a->y + h10 * hm.h * hm.a->dy + h01 * hm.b->y + h11 * hm.h * hm.b->dy;
}

State Trajectory::derivative_at(double x) const {
    if (samples_.size() == 1) return samples_.front().dy;
    const auto hm = locate(samples_, bracket(x), x);
    const double t = hm.t;
    const double t2 = t * t;
    const double d00 = (6 * t2 - 6 * t) / hm.h;
    const double d10 = 3 * t2 - 4 * t + 1;
    const double d01 = (-6 * t2 + 6 * t) / hm.h;
    const double d11 = 3 * t2 - 2 * t;
    return d00 * hm.a->y + d10 * hm.a->dy + d01 * hm.b->y + d11 * hm.b->dy;
}

const Sample& Trajectory::nearest(double x) const {
    if (samples_.size() == 1) return samples_.front();
    const std::size_t i = bracket(x);
    const Sample& a = samples_[i];
    const Sample& b = samples_[i + 1];
    return std::abs(a.x - x) <= std::abs(b.x - x) ? a : b;
}

void Trajectory::translate(double dx) {
    for (auto& s : samples_) s.x += dx;
}

State rk4_step(const Rhs& f, const State& y, double h) {
    const State k1 = f(y);
    const State k2 = f(y + 0.5 * h * k1);
    const State k3 = f(y + 0.5 * h * k2);
    const State k4 = f(y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

/// Step-doubled, extrapolated step; returns the normalized error estimate.
double doubled_step(const Rhs& f, const State& y, double h, const Options& opt, State& out) {
    const State full = rk4_step(f, y, h);
    const State half = rk4_step(f, rk4_step(f, y, 0.5 * h), 0.5 * h);
    const State diff = (half - full) / 15.0;
    out = half + diff;
    double err = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double sc = opt.tolerance * (opt.abs_scale + std::max(std::abs(y(i)), std::abs(out(i))));
        err = std::max(err, std::abs(diff(i)) / sc);
    }
    return err;
}

}  // namespace

Result integrate(const Rhs& f, const State& y0, double x0, double x1, const Options& opt, const Event* event) {
    Result res;
    const double dir = x1 >= x0 ? 1.0 : -1.0;
    State y = y0;
    double x = x0;
    res.trajectory.push({x, y, f(y)});
    if (x0 == x1) return res;

    double h = std::min(opt.h_initial, std::abs(x1 - x0));
    double g_prev = event ? (*event)(y) : 0.0;

    while (dir * (x1 - x) > 0.0) {
        if (res.steps >= opt.max_steps) throw SolverError("ode: step budget exhausted");
        h = std::min({h, opt.h_max, std::abs(x1 - x)});
        State trial;
        const double err = doubled_step(f, y, dir * h, opt, trial);
        if (!std::isfinite(err) || err > 1.0) {
            const double shrink = std::isfinite(err) ? std::max(0.1, 0.9 * std::pow(err, -0.2)) : 0.25;
            h *= shrink;
            if (h < opt.h_min) throw SolverError("ode: step size underflow");
            continue;
        }
        const double x_new = (std::abs(x1 - x) <= h) ? x1 : x + dir * h;
        ++res.steps;

        if (event) {
            const double g_new = (*event)(trial);
            if (g_prev == 0.0 || (g_prev < 0.0) != (g_new < 0.0)) {
                // secant/bisection on exact sub-steps from the last accepted point
                double lo = 0.0, hi = std::abs(x_new - x);
                double glo = g_prev, ghi = g_new;
                State y_hit = trial;
                double s_hit = hi;
                for (int it = 0; it < 100 && hi - lo > 1e-15 * std::max(1.0, std::abs(x)); ++it) {
                    double s = hi - ghi * (hi - lo) / (ghi - glo);
                    if (!(s > lo && s < hi) || it % 3 == 2) s = 0.5 * (lo + hi);
                    State ys;
                    doubled_step(f, y, dir * s, opt, ys);
                    const double gs = (*event)(ys);
                    y_hit = ys;
                    s_hit = s;
                    if (gs == 0.0) break;
                    if ((gs < 0.0) == (glo < 0.0)) {
                        lo = s;
                        glo = gs;
                    } else {
                        hi = s;
                        ghi = gs;
                    }
                }
                res.trajectory.push({x + dir * s_hit, y_hit, f(y_hit)});
                res.reason = Stop::Event;
                return res;
            }
            g_prev = g_new;
        }

        x = x_new;
        y = trial;
        res.trajectory.push({x, y, f(y)});
        if (y.norm() > opt.blowup_norm) {
            res.reason = Stop::BlowUp;
            return res;
        }
        const double grow = err > 0.0 ? std::min(2.0, 0.9 * std::pow(err, -0.2)) : 2.0;
        h *= grow;
    }
    res.reason = Stop::Reached;
    return res;
}

State integrate_on_mesh(const Rhs& f, const State& y0, const Trajectory& mesh) {
    const auto& pts = mesh.samples();
    if (pts.empty()) throw std::invalid_argument("ode: empty mesh");
    Options unused;
    State y = y0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        State next;
        doubled_step(f, y, pts[i].x - pts[i - 1].x, unused, next);
        y = next;
    }
    return y;
}

}  // namespace twophase::ode
