#pragma once

#include <array>
#include <complex>

#include <Eigen/Dense>

namespace twophase::linalg {

using cplx = std::complex<double>;

/// Roots of x^3 + c2 x^2 + c1 x + c0 with real coefficients, sorted by real part
/// ascending (ties by imaginary part). Trigonometric form when all roots are
/// real, Cardano otherwise; each root is polished by Newton on the cubic.
std::array<cplx, 3> solve_monic_cubic(double c2, double c1, double c0);

/// Invariants of a 3x3 matrix: trace, sum of principal 2x2 minors, determinant.
struct Invariants3 {
    double trace;
    double second;
    double det;
};

Invariants3 invariants(const Eigen::Matrix3d& m);

/// Unit vector spanning the (numerical) nullspace of a - lambda*I, taken as the
/// largest cross product of two rows. Returns false when the matrix is rank <= 1
/// and a fallback vector was used instead.
bool null_vector(const Eigen::Matrix3cd& shifted, Eigen::Vector3cd& out);

/// Eigen-decomposition of a symmetric matrix; eigenvalues ascending, columns of
/// `vectors` orthonormal.
struct SymmetricEigen2 {
    Eigen::Vector2d values;
    Eigen::Matrix2d vectors;
};
struct SymmetricEigen3 {
    Eigen::Vector3d values;
    Eigen::Matrix3d vectors;
};

SymmetricEigen2 symmetric_eigen(const Eigen::Matrix2d& m);
SymmetricEigen3 symmetric_eigen(const Eigen::Matrix3d& m);

}  // namespace twophase::linalg
