#pragma once

#include <Eigen/Dense>

#include "nept/constants.hpp"
#include "nept/density_matrix.hpp"
#include "nept/ladder.hpp"

namespace nept::core {

/// Rotating-frame Hamiltonian in angular units (rad/us) for a given
/// instantaneous Rydberg population w.  The collective shift enters as
/// delta_c -> delta_c - V*w; the diagonal carries the cumulative detunings,
/// so the |r1> term moves by -V*w when w grows.
inline Matrix4c hamiltonian(const LadderParams& p, double w) {
    const double dc_eff = p.delta_c - p.V * w;
    Matrix4c h = Matrix4c::Zero();
    h(kE, kE) = p.delta_p;
    h(kR1, kR1) = p.delta_p + dc_eff;
    h(kR2, kR2) = p.delta_p + dc_eff + p.delta_mw;
    h(kG, kE) = h(kE, kG) = -0.5 * p.omega_p;
    h(kE, kR1) = h(kR1, kE) = -0.5 * p.omega_c;
    h(kR1, kR2) = h(kR2, kR1) = -0.5 * p.omega_mw;
    return kTwoPi * h;
}

/// Right-hand side of the master equation for a fixed shift population w:
///   drho/dt = -i [H(w), rho] + sum_k Gamma_k D[c_k] rho
/// with the decay chain r2->r1->e->g and pure dephasing on both Rydberg
/// levels.  Rates are converted to angular units here (Gamma = 2pi*gamma).
inline Matrix4c lindblad_rhs(const LadderParams& p, double w, const Matrix4c& rho) {
    const Matrix4c h = hamiltonian(p, w);
    Matrix4c d = Complex(0.0, -1.0) * (h * rho - rho * h);

    const double ge = kTwoPi * p.gamma_e;
    const double gr1 = kTwoPi * p.gamma_r1;
    const double gr2 = kTwoPi * p.gamma_r2;
    const double gd = kTwoPi * p.gamma_d;

    // Decay |e> -> |g>, jump operator |g><e|.
    d(kG, kG) += ge * rho(kE, kE);
    for (int k = 0; k < 4; ++k) {
        d(kE, k) -= 0.5 * ge * rho(kE, k);
        d(k, kE) -= 0.5 * ge * rho(k, kE);
    }
    // Decay |r1> -> |e>, jump operator |e><r1|.
    d(kE, kE) += gr1 * rho(kR1, kR1);
    for (int k = 0; k < 4; ++k) {
        d(kR1, k) -= 0.5 * gr1 * rho(kR1, k);
        d(k, kR1) -= 0.5 * gr1 * rho(k, kR1);
    }
    // Decay |r2> -> |r1>, jump operator |r1><r2|.
    d(kR1, kR1) += gr2 * rho(kR2, kR2);
    for (int k = 0; k < 4; ++k) {
        d(kR2, k) -= 0.5 * gr2 * rho(kR2, k);
        d(k, kR2) -= 0.5 * gr2 * rho(k, kR2);
    }
    // Pure dephasing, jump operators |r1><r1| and |r2><r2|.  Each projector
    // P contributes P rho P - {P, rho}/2, which damps only the coherences
    // that connect the projected level to the rest.
    if (gd > 0.0) {
        for (int r : {int(kR1), int(kR2)}) {
            for (int k = 0; k < 4; ++k) {
                if (k == r) continue;
                d(r, k) -= 0.5 * gd * rho(r, k);
                d(k, r) -= 0.5 * gd * rho(k, r);
            }
        }
    }
    return d;
}

namespace detail {

/// Hermitian basis matrix dual to real coordinate k.
inline Matrix4c basis_matrix(int k) {
    Matrix4c b = Matrix4c::Zero();
    if (k < 4) {
        b(k, k) = 1.0;
        return b;
    }
    const int off = (k - 4) / 2;
    static constexpr int kPairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    const int i = kPairs[off][0], j = kPairs[off][1];
    if ((k - 4) % 2 == 0) {
        b(i, j) = b(j, i) = 1.0;  // Re part
    } else {
        b(i, j) = Complex(0.0, 1.0);  // Im part
        b(j, i) = Complex(0.0, -1.0);
    }
    return b;
}

}  // namespace detail

/// The time-evolution generator as a 16x16 real matrix acting on the real
/// coordinates of DensityMatrix4: dr/dt = G r.  Linear in the state for
/// fixed w, and trace-preserving by construction (the population rows sum
/// to zero column by column).
inline Mat16 build_generator(const LadderParams& p, double w) {
    Mat16 g;
    for (int k = 0; k < 16; ++k)
        g.col(k) = to_real(lindblad_rhs(p, w, detail::basis_matrix(k)));
    return g;
}

/// d(generator)/dw.  The generator is affine in w (the shift enters the
/// Hamiltonian linearly), so a single difference is exact.
inline Mat16 build_generator_dw(const LadderParams& p) {
    return build_generator(p, 1.0) - build_generator(p, 0.0);
}

/// Cached affine decomposition G(w) = G0 + w*Gv for fixed parameters;
/// evaluating the generator at a new shift population costs one axpy
/// instead of sixteen master-equation applications.
class ShiftAffineGenerator {
  public:
    explicit ShiftAffineGenerator(const LadderParams& p)
        : g0_(build_generator(p, 0.0)), gv_(build_generator_dw(p)) {}

    Mat16 operator()(double w) const { return g0_ + w * gv_; }
    const Mat16& at_zero() const { return g0_; }
    const Mat16& shift_direction() const { return gv_; }

  private:
    Mat16 g0_;
    Mat16 gv_;
};

/// Nonlinear mean-field flow: F(r) = G(w = rho_r1r1(r)) r.
inline Vec16 mean_field_rhs(const LadderParams& p, const Vec16& r) {
    double w = r[coords::kRydbergPopulation];
    if (w < 0.0) w = 0.0;
    if (w > 1.0) w = 1.0;
    return to_real(lindblad_rhs(p, w, to_matrix(r)));
}

}  // namespace nept::core
