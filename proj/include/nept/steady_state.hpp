#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "nept/density_matrix.hpp"
#include "nept/errors.hpp"
#include "nept/ladder.hpp"
#include "nept/liouvillian.hpp"

namespace nept::core {

/// Steady state of the linear master equation dr/dt = G r, obtained by
/// replacing one redundant row of G with the trace constraint.  The LU
/// solution is polished with iterative refinement; if the system is close
/// to singular the kernel is recomputed by SVD, and a kernel dimension
/// other than one raises DegenerateKernel.
struct SteadySolution {
    DensityMatrix4 rho;
    double residual = 0.0;  // max-norm of G r on the returned state
};

namespace detail {

inline Vec16 trace_row() {
    Vec16 t = Vec16::Zero();
    for (int k = 0; k < 4; ++k) t[coords::kPop[k]] = 1.0;
    return t;
}

inline double generator_residual(const Mat16& g, const Vec16& r) {
    return (g * r).cwiseAbs().maxCoeff();
}

inline Vec16 kernel_by_svd(const Mat16& g) {
    Eigen::JacobiSVD<Mat16> svd(g, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double cutoff = sv[0] * 1e-12;
    int kernel_dim = 0;
    for (int k = 0; k < 16; ++k)
        if (sv[k] <= cutoff) ++kernel_dim;
    if (kernel_dim != 1)
        throw DegenerateKernel("steady-state kernel dimension is " +
                               std::to_string(kernel_dim) + ", expected 1");
    Vec16 v = svd.matrixV().col(15);
    const double tr = trace_row().dot(v);
    if (std::abs(tr) < 1e-12)
        throw DegenerateKernel("steady-state kernel vector has zero trace");
    return v / tr;
}

}  // namespace detail

inline SteadySolution linear_steady_state(const Mat16& g) {
    Mat16 a = g;
    a.row(0) = detail::trace_row().transpose();
    Vec16 b = Vec16::Zero();
    b[0] = 1.0;

    Eigen::PartialPivLU<Mat16> lu(a);
    const double rcond = lu.rcond();
    Vec16 r;
    if (rcond > 1e-13) {
        r = lu.solve(b);
        // Iterative refinement against the constrained system; one or two
        // passes normally push the residual to the 1e-12 level.
        for (int pass = 0; pass < 3; ++pass) {
            const Vec16 defect = b - a * r;
            if (defect.cwiseAbs().maxCoeff() <= 1e-12) break;
            r += lu.solve(defect);
        }
    }
    if (rcond <= 1e-13 || !r.allFinite() ||
        detail::generator_residual(g, r) > 1e-10) {
        r = detail::kernel_by_svd(g);
    }

    SteadySolution out;
    out.rho = DensityMatrix4(to_matrix(r));
    out.residual = detail::generator_residual(g, r);
    return out;
}

inline SteadySolution linear_steady_state(const LadderParams& p, double w) {
    return linear_steady_state(build_generator(p, w));
}

/// One self-consistent mean-field branch: the shift population w solves
/// rho_r1r1(steady(w)) = w.
struct SteadyBranch {
    double w = 0.0;
    DensityMatrix4 state;
    bool stable = true;
    double residual = 0.0;
};

/// Linear stability of a self-consistent branch.  The Jacobian of the
/// mean-field flow at the fixed point is G(w*) plus a rank-one coupling of
/// the shift back into the generator; the analysis runs on the 15-dim
/// trace-free subspace, which removes the structural zero mode.  Raises
/// MarginalStability when the leading eigenvalue sits within the margin of
/// the imaginary axis.
inline bool classify_stability(const LadderParams& p, const SteadyBranch& b,
                               double margin = 1e-9) {
    const Mat16 g = build_generator(p, b.w);
    const Mat16 gv = build_generator_dw(p);
    Mat16 jac = g;
    // d/dr [G(w(r)) r] = G + (dG/dw r) e_w^T, and dw/dr selects rho_r1r1.
    jac.col(coords::kRydbergPopulation) += gv * b.state.real_coords();

    // Basis of the trace-free subspace: population differences e_k - e_0
    // (k = 1..3) followed by the coherence axes; the dual coordinates are
    // simply rows 1..15 because the image of the Jacobian is trace-free.
    Eigen::Matrix<double, 16, 15> basis = Eigen::Matrix<double, 16, 15>::Zero();
    for (int k = 1; k < 16; ++k) {
        basis(k, k - 1) = 1.0;
        if (k < 4) basis(0, k - 1) = -1.0;
    }
    const Eigen::Matrix<double, 15, 15> reduced =
        (jac * basis).bottomRows<15>();

    Eigen::EigenSolver<Eigen::Matrix<double, 15, 15>> es(reduced, false);
    const double lead = es.eigenvalues().real().maxCoeff();
    if (std::abs(lead) <= margin)
        throw MarginalStability("leading stability eigenvalue " +
                                std::to_string(lead) +
                                " is within the marginal band");
    return lead < 0.0;
}

namespace detail {

/// g(w) = rho_r1r1(steady(w)) - w for the affine generator family
/// G(w) = G0 + w * Gv.
class BranchMismatch {
  public:
    BranchMismatch(const Mat16& g0, const Mat16& gv) : g0_(g0), gv_(gv) {}

    double operator()(double w) const {
        const Mat16 g = g0_ + w * gv_;
        return linear_steady_state(g).rho.rydberg_population() - w;
    }

  private:
    const Mat16& g0_;
    const Mat16& gv_;
};

}  // namespace detail

/// All self-consistent steady branches at the given parameters, found by a
/// dense scan of the scalar mismatch g(w) on [0, 1] followed by bisection
/// on each sign change.  Branches are returned sorted by w and tagged with
/// their linear stability.
inline std::vector<SteadyBranch> self_consistent_branches(
    const LadderParams& p, double scan_step = 5e-4) {
    p.validate();
    if (!(scan_step > 0.0) || scan_step > 0.5)
        throw InvalidParams("scan_step must lie in (0, 0.5]");

    std::vector<double> roots;
    if (p.V == 0.0) {
        // The generator does not depend on w: a single linear solve gives
        // the unique branch directly.
        roots.push_back(linear_steady_state(p, 0.0).rho.rydberg_population());
    } else {
        const Mat16 g0 = build_generator(p, 0.0);
        const Mat16 gv = build_generator_dw(p);
        const detail::BranchMismatch mismatch(g0, gv);

        const int n = static_cast<int>(std::ceil(1.0 / scan_step));
        double prev_w = 0.0;
        double prev_g = mismatch(0.0);
        if (prev_g == 0.0) roots.push_back(0.0);
        for (int i = 1; i <= n; ++i) {
            const double w = std::min(1.0, i * scan_step);
            const double gw = mismatch(w);
            if (gw == 0.0) {
                roots.push_back(w);
            } else if (prev_g != 0.0 && (prev_g < 0.0) != (gw < 0.0)) {
                // Bisection keeps the bracket; stop on |g| or bracket width.
                double lo = prev_w, hi = w, glo = prev_g;
                for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double gm = mismatch(mid);
                    if (std::abs(gm) <= 1e-10) {
                        lo = hi = mid;
                        break;
                    }
                    if ((gm < 0.0) == (glo < 0.0)) {
                        lo = mid;
                        glo = gm;
                    } else {
                        hi = mid;
                    }
                }
                roots.push_back(0.5 * (lo + hi));
            }
            prev_w = w;
            prev_g = gw;
        }
    }

    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-7; }),
                roots.end());

    std::vector<SteadyBranch> branches;
    branches.reserve(roots.size());
    for (double w : roots) {
        SteadyBranch b;
        const SteadySolution sol = linear_steady_state(p, w);
        b.w = w;
        b.state = sol.rho;
        b.residual = sol.residual;
        b.stable = classify_stability(p, b);
        branches.push_back(std::move(b));
    }
    return branches;
}

}  // namespace nept::core
