#pragma once

#include <span>

namespace twophase {

/// Ordinary least squares y = intercept + slope*x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Requires at least two distinct abscissae.
LineFit least_squares_line(std::span<const double> x, std::span<const double> y);

}  // namespace twophase
