#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>

#include "nept/errors.hpp"
#include "nept/ladder.hpp"

namespace nept::core {

using Complex = std::complex<double>;
using Matrix4c = Eigen::Matrix4cd;
using Vec16 = Eigen::Matrix<double, 16, 1>;
using Mat16 = Eigen::Matrix<double, 16, 16>;

// A Hermitian 4x4 matrix has 16 real degrees of freedom.  Generators,
// steady-state solves and time integration all act on this real coordinate
// vector; Hermiticity is then structural rather than numerical.
//
// Coordinate layout:
//   [0..3]   populations rho_gg, rho_ee, rho_r1r1, rho_r2r2
//   [4..15]  (Re, Im) of the upper-triangle coherences rho_ij, i<j, in the
//            order (g,e) (g,r1) (g,r2) (e,r1) (e,r2) (r1,r2)

namespace coords {

inline constexpr int kPop[4] = {0, 1, 2, 3};

constexpr int pair_offset(int i, int j) {
    // (0,1)=0 (0,2)=1 (0,3)=2 (1,2)=3 (1,3)=4 (2,3)=5
    return (i == 0) ? j - 1 : i + j;
}
constexpr int re(int i, int j) { return 4 + 2 * pair_offset(i, j); }
constexpr int im(int i, int j) { return 4 + 2 * pair_offset(i, j) + 1; }

inline constexpr int kRydbergPopulation = kPop[kR1];

}  // namespace coords

inline Vec16 to_real(const Matrix4c& rho) {
    Vec16 r;
    for (int i = 0; i < 4; ++i) r[coords::kPop[i]] = rho(i, i).real();
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            r[coords::re(i, j)] = rho(i, j).real();
            r[coords::im(i, j)] = rho(i, j).imag();
        }
    return r;
}

inline Matrix4c to_matrix(const Vec16& r) {
    Matrix4c rho;
    for (int i = 0; i < 4; ++i) rho(i, i) = Complex(r[coords::kPop[i]], 0.0);
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            const Complex v(r[coords::re(i, j)], r[coords::im(i, j)]);
            rho(i, j) = v;
            rho(j, i) = std::conj(v);
        }
    return rho;
}

/// The atomic state.  Thin value wrapper over the complex matrix with the
/// accessors the rest of the library needs.  Default-constructs to the
/// ground state |g><g| (a valid state, so it can serve as an initial
/// condition directly).
struct DensityMatrix4 {
    Matrix4c rho;

    DensityMatrix4() : rho(Matrix4c::Zero()) { rho(kG, kG) = 1.0; }
    explicit DensityMatrix4(const Matrix4c& m) : rho(m) {}
    explicit DensityMatrix4(const Vec16& r) : rho(to_matrix(r)) {}

    double population(Level l) const { return rho(l, l).real(); }
    double rydberg_population() const { return rho(kR1, kR1).real(); }
    /// Probe coherence rho_eg = <e|rho|g>; its imaginary part carries absorption.
    Complex rho_eg() const { return rho(kE, kG); }

    Complex trace() const { return rho.trace(); }
    Vec16 real_coords() const { return to_real(rho); }

    /// Checks the state invariants.  Returns an empty string when physical,
    /// otherwise a description of the first violated invariant.
    std::string check_physical(double herm_tol = 1e-12, double trace_tol = 1e-10,
                               double diag_tol = 1e-9, double eig_tol = 1e-8) const {
        const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
        if (herm > herm_tol) return "not Hermitian: max |rho - rho^dag| = " + std::to_string(herm);
        const Complex tr = trace();
        if (std::abs(tr.real() - 1.0) > trace_tol || std::abs(tr.imag()) > trace_tol)
            return "trace != 1: " + std::to_string(tr.real()) + " + " +
                   std::to_string(tr.imag()) + "i";
        for (int i = 0; i < 4; ++i) {
            const double p = rho(i, i).real();
            if (p < -diag_tol || p > 1.0 + diag_tol)
                return "diagonal out of [0,1]: rho[" + std::to_string(i) + "] = " + std::to_string(p);
        }
        Eigen::SelfAdjointEigenSolver<Matrix4c> es((rho + rho.adjoint()) / 2.0);
        if (es.eigenvalues().minCoeff() < -eig_tol)
            return "not positive semidefinite: min eigenvalue = " +
                   std::to_string(es.eigenvalues().minCoeff());
        return {};
    }
    bool is_physical() const { return check_physical().empty(); }
};

}  // namespace nept::core
