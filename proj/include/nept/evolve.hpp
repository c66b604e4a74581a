#pragma once

#include <cmath>
#include <concepts>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "nept/density_matrix.hpp"
#include "nept/errors.hpp"
#include "nept/ladder.hpp"
#include "nept/liouvillian.hpp"

namespace nept::core {

/// Step control for the adaptive integrator.
struct EvolveOptions {
    double rtol = 1e-8;       // relative tolerance per component
    double atol = 1e-10;      // absolute floor of the error scale
    double h_init = 0.0;      // first step size; 0 picks one from the span
    double h_min = 1e-9;      // below this the controller gives up
    double h_max = 0.0;       // cap on the step size; 0 means uncapped
    long max_steps = 2000000; // hard cap on accepted+rejected steps

    /// Optional constant time-derivative of the generator (not owned).
    /// When the generator is affine in t -- a linear parameter ramp -- the
    /// stepper adds the second Magnus term (h^3/12)[dG/dt, G_mid] to each
    /// exponent, promoting the midpoint rule to fourth order and removing
    /// the ramp-dephasing error that otherwise pins the step size to the
    /// fastest coherence rotation period.
    const Mat16* gen_dot = nullptr;
};

namespace detail {

inline Vec16 propagate(const Mat16& gen, double h, const Vec16& r) {
    return (h * gen).exp() * r;
}

/// Midpoint-frozen exponential step with the optional affine-ramp Magnus
/// correction (see EvolveOptions::gen_dot).
inline Vec16 propagate(const Mat16& gen_mid, double h, const Vec16& r,
                       const Mat16* gen_dot) {
    if (gen_dot == nullptr) return (h * gen_mid).exp() * r;
    const Mat16 comm = (*gen_dot) * gen_mid - gen_mid * (*gen_dot);
    return (h * gen_mid + (h * h * h / 12.0) * comm).exp() * r;
}

/// Weighted max-norm of the step-doubling defect.
inline double error_ratio(const Vec16& y_big, const Vec16& y_small,
                          const Vec16& y_from, const EvolveOptions& opt) {
    double worst = 0.0;
    for (int i = 0; i < 16; ++i) {
        const double scale =
            opt.atol + opt.rtol * std::max(std::abs(y_from[i]), std::abs(y_small[i]));
        worst = std::max(worst, std::abs(y_big[i] - y_small[i]) / scale);
    }
    return worst;
}

}  // namespace detail

/// Adaptive exponential-midpoint integration of dr/dt = G(t, r) r from t0
/// to t1.  `gen(t, r)` supplies the generator; `on_accept(t_prev, r_prev,
/// t_new, r_new)` fires on every accepted step and returns false to stop
/// early.  The generator is frozen over each (sub)step and applied through
/// a matrix exponential, so the linear part of the flow is integrated
/// exactly and step sizes are limited only by the drift of t and r inside
/// the step — not by the fastest rate in the system.  Error control is by
/// step doubling (the doubled solution is the one kept).
///
/// Returns the step-size suggestion for a continuation call, so chained
/// windows keep their adaptation.  Raises StepFailure when the tolerance
/// cannot be met at h_min.
template <typename Gen, typename OnAccept>
inline double integrate_adaptive(Gen&& gen, double t0, double t1, Vec16& r,
                                 const EvolveOptions& opt, OnAccept&& on_accept) {
    const double span = t1 - t0;
    if (!(span > 0.0)) return std::max(opt.h_init, opt.h_min);
    if (!(opt.rtol > 0.0) || !(opt.atol > 0.0) || !(opt.h_min > 0.0))
        throw InvalidParams("evolve tolerances and h_min must be positive");

    double h = opt.h_init;
    if (h <= 0.0) {
        // Default trial step: resolve the requested span, but never jump
        // over the generator's own fastest time scale on the very first
        // step — an unresolved first step can land every sub-step probe on
        // the same quasi-steady manifold, where the step-doubling defect is
        // blind to the error.  Growth from here is error-checked each step.
        h = span / 100.0;
        const double rate_norm =
            gen(t0, r).cwiseAbs().colwise().sum().maxCoeff();
        if (rate_norm > 0.0) h = std::min(h, 1.0 / rate_norm);
    }
    if (opt.h_max > 0.0) h = std::min(h, opt.h_max);
    h = std::max(h, opt.h_min);

    double t = t0;
    bool last_rejected = false;
    for (long steps = 0; steps < opt.max_steps; ++steps) {
        if (t >= t1) return h;
        bool final_step = false;
        if (h >= t1 - t) {
            h = t1 - t;
            final_step = true;
        }

        // One full step from (t, r).  The quarter-step propagator of the
        // frozen start generator is squared to obtain the half-step one,
        // so the predictors of the full step and of the first half step
        // share a single matrix exponential.
        const Mat16 g_start = gen(t, r);
        const Mat16 quarter_start = (0.25 * h * g_start).exp();
        const Vec16 probe_h1 = quarter_start * r;
        const Vec16 probe_big = quarter_start * probe_h1;
        const Mat16 g_mid = gen(t + 0.5 * h, probe_big);
        const Vec16 y_big = detail::propagate(g_mid, h, r, opt.gen_dot);

        // Two half steps over the same interval.  The second half step's
        // predictor deliberately re-evaluates the generator at the actual
        // half-step state instead of reusing the start-frozen propagator:
        // when the generator feeds back on the state, this independent
        // evaluation is what keeps the two halves from agreeing with the
        // full step while all three are wrong (the failure mode of every
        // shared-predictor shortcut at large h).
        const Mat16 g_q1 = gen(t + 0.25 * h, probe_h1);
        const Vec16 y_half = detail::propagate(g_q1, 0.5 * h, r, opt.gen_dot);

        const Mat16 g_half = gen(t + 0.5 * h, y_half);
        const Vec16 probe_h2 = detail::propagate(g_half, 0.25 * h, y_half);
        const Mat16 g_q3 = gen(t + 0.75 * h, probe_h2);
        const Vec16 y_small = detail::propagate(g_q3, 0.5 * h, y_half, opt.gen_dot);

        double err = std::numeric_limits<double>::infinity();
        if (y_big.allFinite() && y_small.allFinite())
            err = detail::error_ratio(y_big, y_small, r, opt);

        if (err <= 1.0) {
            const double t_new = final_step ? t1 : t + h;
            const Vec16 r_prev = r;
            r = y_small;
            double grow = err > 0.0 ? 0.9 * std::pow(err, -1.0 / 3.0) : 5.0;
            grow = std::clamp(grow, 0.2, 5.0);
            if (last_rejected) grow = std::min(grow, 1.0);
            last_rejected = false;
            const double t_prev = t;
            t = t_new;
            h = h * grow;
            if (opt.h_max > 0.0) h = std::min(h, opt.h_max);
            h = std::max(h, opt.h_min);
            if (!on_accept(t_prev, r_prev, t, r)) return h;
        } else {
            last_rejected = true;
            const double shrink =
                std::clamp(0.9 * std::pow(err, -1.0 / 3.0), 0.2, 1.0);
            const double h_new = h * shrink;
            if (h_new < opt.h_min)
                throw StepFailure("step controller hit h_min = " +
                                  std::to_string(opt.h_min) + " at t = " +
                                  std::to_string(t) + " us (error ratio " +
                                  std::to_string(err) + ")");
            h = h_new;
        }
    }
    throw StepFailure("step budget of " + std::to_string(opt.max_steps) +
                      " exhausted before reaching t1");
}

struct TrajectoryPoint {
    double t = 0.0;
    DensityMatrix4 rho;
};

/// Integrate the nonlinear mean-field master equation under time-dependent
/// parameters.  `params_at(t)` returns the LadderParams at time t (us); the
/// shift population w always tracks the instantaneous rho_r1r1.  Returns
/// the accepted integration nodes, starting at t = 0.
template <typename ParamsOfTime>
    requires std::invocable<ParamsOfTime&, double>
inline std::vector<TrajectoryPoint> evolve(ParamsOfTime&& params_at,
                                           const DensityMatrix4& rho0,
                                           double t_span,
                                           const EvolveOptions& opt = {}) {
    if (!(t_span >= 0.0)) throw InvalidParams("t_span must be non-negative");
    const std::string violation = rho0.check_physical();
    if (!violation.empty())
        throw InvalidParams("initial state is not physical: " + violation);

    std::vector<TrajectoryPoint> traj;
    traj.push_back({0.0, rho0});
    if (t_span == 0.0) return traj;

    Vec16 r = rho0.real_coords();
    auto gen = [&params_at](double t, const Vec16& state) {
        double w = state[coords::kRydbergPopulation];
        w = std::clamp(w, 0.0, 1.0);
        return build_generator(params_at(t), w);
    };
    integrate_adaptive(gen, 0.0, t_span, r, opt,
                       [&traj](double, const Vec16&, double t_new, const Vec16& r_new) {
                           traj.push_back({t_new, DensityMatrix4(to_matrix(r_new))});
                           return true;
                       });
    return traj;
}

/// Same, with parameters constant in time (the generator family is cached
/// once, so per-step cost is dominated by the matrix exponentials).
inline std::vector<TrajectoryPoint> evolve(const LadderParams& p,
                                           const DensityMatrix4& rho0,
                                           double t_span,
                                           const EvolveOptions& opt = {}) {
    p.validate();
    if (!(t_span >= 0.0)) throw InvalidParams("t_span must be non-negative");
    const std::string violation = rho0.check_physical();
    if (!violation.empty())
        throw InvalidParams("initial state is not physical: " + violation);

    std::vector<TrajectoryPoint> traj;
    traj.push_back({0.0, rho0});
    if (t_span == 0.0) return traj;

    const ShiftAffineGenerator family(p);
    Vec16 r = rho0.real_coords();
    auto gen = [&family](double, const Vec16& state) {
        return family(std::clamp(state[coords::kRydbergPopulation], 0.0, 1.0));
    };
    integrate_adaptive(gen, 0.0, t_span, r, opt,
                       [&traj](double, const Vec16&, double t_new, const Vec16& r_new) {
                           traj.push_back({t_new, DensityMatrix4(to_matrix(r_new))});
                           return true;
                       });
    return traj;
}

/// Relax toward the dynamically selected steady state at fixed parameters.
/// Runs until the mean-field velocity drops below settle_tol (rad/us,
/// max-norm) or max_time is reached; with the exponential stepper the step
/// size grows geometrically once the transient is over, so long horizons
/// cost only a handful of steps.
inline DensityMatrix4 relax(const LadderParams& p, const DensityMatrix4& rho0,
                            double max_time = 2000.0, double settle_tol = 1e-11,
                            const EvolveOptions& opt = {}) {
    p.validate();
    const ShiftAffineGenerator family(p);
    Vec16 r = rho0.real_coords();
    auto gen = [&family](double, const Vec16& state) {
        return family(std::clamp(state[coords::kRydbergPopulation], 0.0, 1.0));
    };
    integrate_adaptive(gen, 0.0, max_time, r, opt,
                       [&p, settle_tol](double, const Vec16&, double, const Vec16& r_new) {
                           return mean_field_rhs(p, r_new).cwiseAbs().maxCoeff() >=
                                  settle_tol;
                       });
    return DensityMatrix4(to_matrix(r));
}

}  // namespace nept::core
