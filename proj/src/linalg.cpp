#include "twophase/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace twophase::linalg {

namespace {

cplx eval_cubic(cplx x, double c2, double c1, double c0) { return ((x + c2) * x + c1) * x + c0; }

cplx polish(cplx x, double c2, double c1, double c0) {
    for (int it = 0; it < 4; ++it) {
        const cplx f = eval_cubic(x, c2, c1, c0);
        const cplx df = (3.0 * x + 2.0 * c2) * x + c1;
        if (std::abs(df) == 0.0) break;
        const cplx next = x - f / df;
        if (!(std::abs(eval_cubic(next, c2, c1, c0)) < std::abs(f))) break;
        x = next;
    }
    return x;
}

bool real_part_less(const cplx& a, const cplx& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

Eigen::Vector3d any_orthogonal(const Eigen::Vector3d& v) {
    const Eigen::Vector3d e = std::abs(v.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    return v.cross(e).normalized();
}

}  // namespace

std::array<cplx, 3> solve_monic_cubic(double c2, double c1, double c0) {
    const double shift = c2 / 3.0;
    const double p = c1 - c2 * c2 / 3.0;
    const double q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    const double disc = q * q / 4.0 + p * p * p / 27.0;

    std::array<cplx, 3> roots;
    if (disc < 0.0) {
        // three distinct real roots; p < 0 here
        const double m = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
        const double theta = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k) {
            roots[k] = cplx(m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0) - shift, 0.0);
        }
    } else {
        const double s = std::sqrt(disc);
        const double big = std::cbrt(-q / 2.0 - std::copysign(s, q));
        const double small = big != 0.0 ? -p / (3.0 * big) : 0.0;
        const double re = -(big + small) / 2.0 - shift;
        const double im = std::sqrt(3.0) / 2.0 * (big - small);
        roots[0] = cplx(big + small - shift, 0.0);
        roots[1] = cplx(re, im);
        roots[2] = cplx(re, -im);
    }
    for (auto& r : roots) {
        const bool was_real = r.imag() == 0.0;
        r = polish(r, c2, c1, c0);
        if (was_real) r = cplx(r.real(), 0.0);
    }
    // keep conjugate pairs exactly conjugate after polishing
    if (disc >= 0.0 && roots[1].imag() != 0.0) roots[2] = std::conj(roots[1]);
    std::sort(roots.begin(), roots.end(), real_part_less);
    return roots;
}

Invariants3 invariants(const Eigen::Matrix3d& m) {
    const double second = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0) +
                          m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
    return {m.trace(), second, m.determinant()};
}

bool null_vector(const Eigen::Matrix3cd& a, Eigen::Vector3cd& out) {
    // Bilinear (unconjugated) cross products of row pairs lie in the right nullspace.
    auto cross = [](const Eigen::Vector3cd& x, const Eigen::Vector3cd& y) {
        return Eigen::Vector3cd(x(1) * y(2) - x(2) * y(1), x(2) * y(0) - x(0) * y(2), x(0) * y(1) - x(1) * y(0));
    };
    const Eigen::Vector3cd r0 = a.row(0).transpose();
    const Eigen::Vector3cd r1 = a.row(1).transpose();
    const Eigen::Vector3cd r2 = a.row(2).transpose();
    std::array<Eigen::Vector3cd, 3> candidates{cross(r0, r1), cross(r0, r2), cross(r1, r2)};
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i) {
        if (candidates[i].norm() > candidates[best].norm()) best = i;
    }
    const double scale = std::max({r0.norm(), r1.norm(), r2.norm(), 1.0});
    if (candidates[best].norm() > 1e-13 * scale * scale) {
        out = candidates[best].normalized();
        return true;
    }
    // rank <= 1: any vector orthogonal (bilinearly) to the dominant row
    std::size_t row = 0;
    for (std::size_t i = 1; i < 3; ++i) {
        if (a.row(i).norm() > a.row(row).norm()) row = i;
    }
    const Eigen::Vector3cd r = a.row(row).transpose();
    Eigen::Vector3cd e = Eigen::Vector3cd::Zero();
    e(std::abs(r(0)) < std::abs(r(1)) ? 0 : 1) = 1.0;
    Eigen::Vector3cd v = cross(r, e);
    out = v.norm() > 0.0 ? Eigen::Vector3cd(v.normalized()) : Eigen::Vector3cd(Eigen::Vector3cd::UnitX());
    return false;
}

SymmetricEigen2 symmetric_eigen(const Eigen::Matrix2d& m) {
    const double a = m(0, 0);
    const double d = m(1, 1);
    const double b = 0.5 * (m(0, 1) + m(1, 0));
    const double mean = 0.5 * (a + d);
    const double half_diff = 0.5 * (a - d);
    const double r = std::hypot(half_diff, b);
    SymmetricEigen2 out;
    out.values << mean - r, mean + r;
    // rotation angle diagonalizing the form
    const double theta = 0.5 * std::atan2(2.0 * b, a - d);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    // column for the larger eigenvalue is (c, s)
    out.vectors.col(1) << c, s;
    out.vectors.col(0) << -s, c;
    return out;
}

SymmetricEigen3 symmetric_eigen(const Eigen::Matrix3d& m_in) {
    const Eigen::Matrix3d m = 0.5 * (m_in + m_in.transpose());
    SymmetricEigen3 out;
    const double off = m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2) + m(1, 2) * m(1, 2);
    const double q = m.trace() / 3.0;
    const double p2 = (m(0, 0) - q) * (m(0, 0) - q) + (m(1, 1) - q) * (m(1, 1) - q) +
                      (m(2, 2) - q) * (m(2, 2) - q) + 2.0 * off;
    if (p2 == 0.0) {
        out.values = Eigen::Vector3d::Constant(q);
        out.vectors = Eigen::Matrix3d::Identity();
        return out;
    }
    const double p = std::sqrt(p2 / 6.0);
    const Eigen::Matrix3d bmat = (m - q * Eigen::Matrix3d::Identity()) / p;
    const double r = std::clamp(bmat.determinant() / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    double e_hi = q + 2.0 * p * std::cos(phi);
    double e_lo = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    double e_mid = 3.0 * q - e_hi - e_lo;

    // Newton polish on the characteristic polynomial
    const Invariants3 inv = invariants(m);
    auto polish_real = [&](double x) {
        for (int it = 0; it < 3; ++it) {
            const double f = ((x - inv.trace) * x + inv.second) * x - inv.det;
            const double df = (3.0 * x - 2.0 * inv.trace) * x + inv.second;
            if (df == 0.0) break;
            const double nx = x - f / df;
            const double nf = ((nx - inv.trace) * nx + inv.second) * nx - inv.det;
            if (!(std::abs(nf) < std::abs(f))) break;
            x = nx;
        }
        return x;
    };
    e_hi = polish_real(e_hi);
    e_lo = polish_real(e_lo);
    e_mid = polish_real(e_mid);
    std::array<double, 3> ev{e_lo, e_mid, e_hi};
    std::sort(ev.begin(), ev.end());

    // Eigenvector of the best-separated eigenvalue first, then a 2x2 problem in
    // its orthogonal complement.
    const double gap_lo = ev[1] - ev[0];
    const double gap_hi = ev[2] - ev[1];
    const int iso = gap_lo >= gap_hi ? 0 : 2;
    Eigen::Matrix3cd shifted = (m - ev[iso] * Eigen::Matrix3d::Identity()).cast<cplx>();
    Eigen::Vector3cd vc;
    null_vector(shifted, vc);
    Eigen::Vector3d v = vc.real();
    if (v.norm() < 0.5) v = vc.imag();
    v.normalize();
    const Eigen::Vector3d u = any_orthogonal(v);
    const Eigen::Vector3d w = v.cross(u).normalized();
    Eigen::Matrix<double, 3, 2> basis;
    basis.col(0) = u;
    basis.col(1) = w;
    const Eigen::Matrix2d reduced = basis.transpose() * m * basis;
    const SymmetricEigen2 sub = symmetric_eigen(reduced);
    const Eigen::Vector3d a0 = (basis * sub.vectors.col(0)).normalized();
    const Eigen::Vector3d a1 = (basis * sub.vectors.col(1)).normalized();
    const double rv = v.dot(m * v);
    if (iso == 0) {
        out.values << rv, sub.values(0), sub.values(1);
        out.vectors.col(0) = v;
        out.vectors.col(1) = a0;
        out.vectors.col(2) = a1;
    } else {
        out.values << sub.values(0), sub.values(1), rv;
        out.vectors.col(0) = a0;
        out.vectors.col(1) = a1;
        out.vectors.col(2) = v;
    }
    return out;
}

}  // namespace twophase::linalg
