#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nept/density_matrix.hpp"
#include "nept/errors.hpp"
#include "nept/ladder.hpp"
#include "nept/rng.hpp"
#include "nept/steady_state.hpp"

namespace nept::optics {

using core::DensityMatrix4;
using core::LadderParams;
using core::SteadyBranch;
using core::SteadySolution;
using core::linear_steady_state;
using core::self_consistent_branches;

/// Single-pass absorbing medium.
struct MediumParams {
    double od0 = 2.0;       // resonant weak-probe optical depth
    double length_mm = 15.0;  // cell length, informational only

    void validate() const {
        if (!(od0 >= 0.0)) throw InvalidParams("od0 must be >= 0");
        if (!(length_mm > 0.0)) throw InvalidParams("cell length must be > 0");
    }
};

/// Resonant power-buildup ring cavity enclosing the cell.
struct CavityParams {
    double t_in = 0.06;       // input-coupler power transmission, (0,1)
    double loss_empty = 0.0;  // round-trip power loss excluding the cell
    double loss_cell = 0.0;   // cell insertion power loss
    bool on_resonance = true;

    void validate() const {
        if (!(t_in > 0.0 && t_in < 1.0))
            throw InvalidParams("t_in must lie in (0, 1)");
        if (!(loss_empty >= 0.0 && loss_empty < 1.0))
            throw InvalidParams("loss_empty must lie in [0, 1)");
        if (!(loss_cell >= 0.0 && loss_cell < 1.0))
            throw InvalidParams("loss_cell must lie in [0, 1)");
    }
};

/// Additive white detection noise with 1/t_int variance scaling.
struct DetectorModel {
    double sigma0 = 8e-4;  // intensity noise std at integration time tau0
    double tau0 = 5.0;     // reference integration time, us
    std::uint64_t seed = 1;
    double cavity_noise_factor = 1.2;  // extra multiplicative noise in cavity mode

    void validate() const {
        if (!(sigma0 >= 0.0)) throw InvalidParams("sigma0 must be >= 0");
        if (!(tau0 > 0.0)) throw InvalidParams("tau0 must be > 0");
        if (!(cavity_noise_factor >= 0.0))
            throw InvalidParams("cavity_noise_factor must be >= 0");
    }
};

/// Absorption coefficient normalized so the weak resonant two-level limit
/// gives a = 1:  a = gamma_e * Im(rho_eg) / omega_p.  Values outside
/// [-1e-6, 1+1e-6] are clamped into that band; *clamped reports whether a
/// violation occurred (transients can momentarily overshoot).
inline double normalized_absorption(const DensityMatrix4& state, double omega_p,
                                    double gamma_e, bool* clamped = nullptr) {
    if (omega_p == 0.0)
        throw ZeroProbe("normalized absorption is undefined at omega_p = 0");
    if (!(omega_p > 0.0)) throw InvalidParams("omega_p must be positive");
    double a = gamma_e * state.rho_eg().imag() / omega_p;
    const bool hit = a < -1e-6 || a > 1.0 + 1e-6;
    if (clamped) *clamped = hit;
    return std::clamp(a, -1e-6, 1.0 + 1e-6);
}

/// Beer-Lambert single-pass transmission.
inline double free_space_transmission(double a, const MediumParams& medium) {
    medium.validate();
    if (!(a >= 0.0 && a <= 1.0))
        throw InvalidParams("absorption a must lie in [0, 1]");
    return std::exp(-medium.od0 * a);
}

namespace detail {

inline double round_trip_amplitude(const CavityParams& cav, double a,
                                   const MediumParams& medium) {
    return std::sqrt((1.0 - cav.t_in) * (1.0 - cav.loss_empty) *
                     (1.0 - cav.loss_cell) * std::exp(-medium.od0 * a));
}

}  // namespace detail

/// Resonant intracavity intensity buildup B = t_in / (1 - r_rt)^2 with the
/// absorbing cell inside the round trip.
inline double cavity_buildup(const CavityParams& cav, double a,
                             const MediumParams& medium) {
    cav.validate();
    medium.validate();
    if (!(a >= 0.0 && a <= 1.0))
        throw InvalidParams("absorption a must lie in [0, 1]");
    if (!cav.on_resonance)
        throw InvalidParams("buildup model requires the cavity on resonance");
    const double r = detail::round_trip_amplitude(cav, a, medium);
    if (r >= 1.0)
        throw Overcoupled("round-trip amplitude " + std::to_string(r) +
                          " >= 1: gain without a gain medium");
    const double one_minus = 1.0 - r;
    return cav.t_in / (one_minus * one_minus);
}

/// Finesse of a loop with round-trip amplitude r.
inline double finesse_from_loss(double r_rt) {
    if (!(r_rt > 0.0 && r_rt < 1.0))
        throw InvalidParams("round-trip amplitude must lie in (0, 1)");
    return kPi * std::sqrt(r_rt) / (1.0 - r_rt);
}

/// Invert F = pi*sqrt(r)/(1-r) for the round-trip amplitude.  Substituting
/// u = sqrt(r) yields F u^2 + pi u - F = 0, solved in closed form.
inline double loss_from_finesse(double finesse) {
    if (!(finesse > 0.0)) throw InvalidParams("finesse must be positive");
    const double u =
        (-kPi + std::sqrt(kPi * kPi + 4.0 * finesse * finesse)) / (2.0 * finesse);
    return u * u;
}

/// Build CavityParams from the two measurable finesses: the empty cavity
/// (no cell) and the loaded cavity (cell in, no atoms excited).  t_in is a
/// free design choice bounded by the empty-cavity round-trip budget.
inline CavityParams calibrate_cavity(double finesse_empty, double finesse_loaded,
                                     double t_in) {
    if (!(finesse_empty > finesse_loaded))
        throw InvalidParams("empty finesse must exceed loaded finesse");
    const double r_empty = loss_from_finesse(finesse_empty);
    const double r_loaded = loss_from_finesse(finesse_loaded);
    if (!(t_in > 0.0 && t_in < 1.0 - r_empty * r_empty))
        throw InvalidParams(
            "t_in must lie in (0, " + std::to_string(1.0 - r_empty * r_empty) +
            ") for empty finesse " + std::to_string(finesse_empty));
    CavityParams cav;
    cav.t_in = t_in;
    cav.loss_empty = 1.0 - (r_empty * r_empty) / (1.0 - t_in);
    cav.loss_cell = 1.0 - (r_loaded * r_loaded) / (r_empty * r_empty);
    cav.on_resonance = true;
    return cav;
}

/// CavityParams describing the same loop without the cell (for empty-cavity
/// figures such as the a = 0 buildup).
inline CavityParams without_cell(CavityParams cav) {
    cav.loss_cell = 0.0;
    return cav;
}

/// Noisy detector sample: intensity plus white Gaussian noise of variance
/// sigma0^2 * (tau0 / t_int), drawn from the counter-based stream at
/// (detector.seed, index).  Bit-reproducible for fixed seed and index.
inline double detect(double intensity, const DetectorModel& det, double t_int,
                     std::uint64_t index) {
    det.validate();
    if (!(t_int > 0.0)) throw InvalidParams("t_int must be positive");
    if (det.sigma0 == 0.0) return intensity;
    const double sigma = det.sigma0 * std::sqrt(det.tau0 / t_int);
    return intensity + sigma * gaussian_sample(det.seed, index);
}

/// Solve the instantaneous circulating intensity s = s_in * B(a(s)) with
/// the atomic coherence frozen at the current state (adiabatic following of
/// the cavity field).  a(s) = clamp(gamma_e * im_rho_eg / sqrt(s), 0, 1)
/// falls with s, so B(a(s)) rises with s and several roots may coexist;
/// the root nearest the previously committed intensity is returned, which
/// is what makes cavity sweeps hysteretic.  Deterministic.
inline double follow_circulating_intensity(double im_rho_eg, double gamma_e,
                                           double s_in, const CavityParams& cav,
                                           const MediumParams& medium,
                                           double s_committed) {
    cav.validate();
    medium.validate();
    if (!(s_in >= 0.0)) throw InvalidParams("s_in must be >= 0");
    if (s_in == 0.0) return 0.0;
    if (im_rho_eg <= 0.0) return s_in * cavity_buildup(cav, 0.0, medium);

    const double coherence = gamma_e * im_rho_eg;
    auto absorption_at = [&](double s) {
        return std::clamp(coherence / std::sqrt(s), 0.0, 1.0);
    };
    auto mismatch = [&](double s) {
        return s_in * cavity_buildup(cav, absorption_at(s), medium) - s;
    };

    const double s_hi = s_in * cavity_buildup(cav, 0.0, medium);
    // f(0+) > 0 and f(s_hi) <= 0, so at least one root exists.  Scan a
    // fixed grid for sign changes, refine each bracket by bisection, and
    // keep the root nearest the committed intensity.
    constexpr int kScan = 96;
    double best = -1.0;
    double prev_s = s_hi * 1e-12;
    double prev_f = mismatch(prev_s);
    for (int i = 1; i <= kScan; ++i) {
        const double s = s_hi * static_cast<double>(i) / kScan;
        const double f = mismatch(s);
        if (prev_f == 0.0 ||
            (prev_f > 0.0 && f <= 0.0) || (prev_f < 0.0 && f >= 0.0)) {
            double lo = prev_s, hi = s, flo = prev_f;
            for (int it = 0; it < 120 && hi - lo > 1e-15 * s_hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = mismatch(mid);
                if ((fm < 0.0) == (flo < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            const double root = 0.5 * (lo + hi);
            if (best < 0.0 ||
                std::abs(root - s_committed) < std::abs(best - s_committed))
                best = root;
        }
        prev_s = s;
        prev_f = f;
    }
    if (best < 0.0)
        throw NoConvergence("no circulating-intensity fixed point found in (0, " +
                            std::to_string(s_hi) + "]");
    return best;
}

/// One joint steady operating point of atoms + cavity.
struct CavityOperatingPoint {
    double omega_p = 0.0;  // circulating probe Rabi frequency, MHz
    double s = 0.0;        // circulating intensity, MHz^2
    double buildup = 0.0;  // B at this point
    SteadyBranch branch;
};

/// All joint fixed points of { s = s_in * B(a(rho(s, w))), w = rho_r1r1 }:
/// a dense scan over the circulating intensity with the full atomic branch
/// solver nested inside, followed by bisection in s.  Branch identity is
/// tracked through the scan by nearest Rydberg population.  Results are
/// ordered by s, then by w.
inline std::vector<CavityOperatingPoint> cavity_self_consistent(
    const LadderParams& params, const CavityParams& cav,
    const MediumParams& medium, double s_in, int scan_points = 256) {
    params.validate();
    cav.validate();
    medium.validate();
    if (!(s_in >= 0.0)) throw InvalidParams("s_in must be >= 0");
    if (scan_points < 8) throw InvalidParams("scan_points must be >= 8");

    std::vector<CavityOperatingPoint> out;
    auto atomic_branches = [&](double s) {
        LadderParams p = params;
        p.omega_p = std::sqrt(s);
        return self_consistent_branches(p);
    };
    auto point_at = [&](double s, const SteadyBranch& b) {
        CavityOperatingPoint pt;
        pt.s = s;
        pt.omega_p = std::sqrt(s);
        const double a = std::clamp(
            normalized_absorption(b.state, pt.omega_p, params.gamma_e), 0.0, 1.0);
        pt.buildup = cavity_buildup(cav, a, medium);
        pt.branch = b;
        return pt;
    };

    if (s_in == 0.0) {
        // No drive: the cavity is empty and the atoms sit in the ground state.
        LadderParams p = params;
        p.omega_p = 0.0;
        CavityOperatingPoint pt;
        pt.s = 0.0;
        pt.omega_p = 0.0;
        pt.buildup = cavity_buildup(cav, 0.0, medium);
        SteadyBranch b;
        const SteadySolution sol = linear_steady_state(p, 0.0);
        b.w = sol.rho.rydberg_population();
        b.state = sol.rho;
        b.residual = sol.residual;
        b.stable = true;
        pt.branch = b;
        out.push_back(std::move(pt));
        return out;
    }

    if (medium.od0 == 0.0) {
        // Absorption cannot load the cavity: s is fixed exactly and the
        // joint problem reduces to the atomic one at the boosted drive.
        const double s = s_in * cavity_buildup(cav, 0.0, medium);
        for (const SteadyBranch& b : atomic_branches(s))
            out.push_back(point_at(s, b));
        return out;
    }

    // Mismatch f(s; branch) = s_in * B(a(branch at s)) - s, evaluated for
    // every atomic branch; roots are found per branch thread.
    auto mismatch = [&](double s, const SteadyBranch& b) {
        const double a = std::clamp(
            normalized_absorption(b.state, std::sqrt(s), params.gamma_e), 0.0, 1.0);
        return s_in * cavity_buildup(cav, a, medium) - s;
    };

    const double s_lo = s_in * cav.t_in * 0.5;
    const double s_hi = s_in * cavity_buildup(cav, 0.0, medium);
    std::vector<double> grid(scan_points + 1);
    for (int i = 0; i <= scan_points; ++i)
        grid[i] = s_lo + (s_hi - s_lo) * static_cast<double>(i) / scan_points;

    std::vector<SteadyBranch> prev = atomic_branches(grid[0]);
    for (int i = 1; i <= scan_points; ++i) {
        const std::vector<SteadyBranch> cur = atomic_branches(grid[i]);
        for (const SteadyBranch& b0 : prev) {
            // Thread the branch to the nearest-w branch at the next node.
            const SteadyBranch* b1 = nullptr;
            for (const SteadyBranch& c : cur)
                if (!b1 || std::abs(c.w - b0.w) < std::abs(b1->w - b0.w)) b1 = &c;
            if (!b1) continue;
            const double f0 = mismatch(grid[i - 1], b0);
            const double f1 = mismatch(grid[i], *b1);
            if (f0 == 0.0 || (f0 > 0.0) == (f1 > 0.0)) {
                if (f0 == 0.0) out.push_back(point_at(grid[i - 1], b0));
                continue;
            }
            // Bisect in s, re-solving the atomic problem at each midpoint
            // and following the branch nearest the bracket's w estimate.
            double lo = grid[i - 1], hi = grid[i], flo = f0;
            double w_track = b0.w;
            SteadyBranch found = b0;
            double s_found = lo;
            for (int it = 0; it < 200 && hi - lo > 1e-14 * s_hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                const std::vector<SteadyBranch> bs = atomic_branches(mid);
                const SteadyBranch* bm = nullptr;
                for (const SteadyBranch& c : bs)
                    if (!bm || std::abs(c.w - w_track) < std::abs(bm->w - w_track))
                        bm = &c;
                const double fm = mismatch(mid, *bm);
                w_track = bm->w;
                found = *bm;
                s_found = mid;
                if (std::abs(fm) <= 1e-10 * std::max(1.0, s_hi)) break;
                if ((fm < 0.0) == (flo < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            if (std::abs(mismatch(s_found, found)) >
                1e-6 * std::max(1.0, s_hi))
                // The bracket collapsed without the mismatch going to zero:
                // the sign change sat on a discontinuity where the atomic
                // branch structure folds between adjacent s values and the
                // threaded branch jumps identity.  No fixed point exists
                // there, so drop the phantom crossing.
                continue;
            out.push_back(point_at(s_found, found));
        }
        prev = cur;
    }

    std::sort(out.begin(), out.end(),
              [](const CavityOperatingPoint& a, const CavityOperatingPoint& b) {
                  if (a.s != b.s) return a.s < b.s;
                  return a.branch.w < b.branch.w;
              });
    out.erase(std::unique(out.begin(), out.end(),
                          [s_hi](const CavityOperatingPoint& a,
                                 const CavityOperatingPoint& b) {
                              return std::abs(a.s - b.s) < 1e-9 * std::max(1.0, s_hi) &&
                                     std::abs(a.branch.w - b.branch.w) < 1e-6;
                          }),
              out.end());
    return out;
}

}  // namespace nept::optics
