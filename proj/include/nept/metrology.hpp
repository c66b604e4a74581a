#pragma once

// Estimation toolkit for phase-transition field sensing: locating the
// steep edge of a transmission trace, turning its slope and noise into a
// Fisher information and a Cramer-Rao bound, fitting the power-law growth
// of information with interrogation time, modelling the MW-induced shift
// of the critical point, and converting intensity fluctuations into a
// field sensitivity.  Units follow the rest of the library: frequencies
// in MHz (ordinary, not angular), times in microseconds, MW fields in
// mV/cm; sensitivities are reported in nV/cm/sqrt(Hz).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "nept/errors.hpp"
#include "nept/field.hpp"

namespace nept::metrology {

/// Location of the steepest point of a trace.
struct CriticalPoint {
    double x = 0.0;          ///< grid position of the steepest window
    double slope = 0.0;      ///< signed local slope dy/dx there
    std::size_t index = 0;   ///< index of the window centre in the input
    double x_refined = 0.0;  ///< parabola-refined position (x when the
                             ///< peak sits on the boundary of the grid)
};

/// Slope, variance, and the resulting Fisher information per point.
struct FisherResult {
    double fisher = 0.0;    ///< slope^2 / variance
    double slope = 0.0;     ///< the slope that entered
    double variance = 0.0;  ///< the variance that entered
};

/// y = amplitude * x^exponent fitted in log-log space.
struct PowerLawFit {
    double amplitude = 0.0;
    double exponent = 0.0;
    double rms_log_residual = 0.0;  ///< RMS of ln(y) - ln(fit)
};

/// Critical-point shift model: the shift of the transition edge induced
/// by a MW field E is the light shift of the upper Rydberg level,
///   shift(E) = -(delta_mw + sqrt(delta_mw^2 + omega(E)^2)) / 2
///              - eta * omega(E)^2,
/// with omega(E) the MW Rabi frequency and eta a small quadratic
/// correction from the interacting medium.
struct ShiftModel {
    double delta_mw = -200.0;       ///< MW detuning (MHz)
    double eta = 0.0;               ///< quadratic correction (1/MHz)
    double mu0 = kDefaultDipoleEa0; ///< MW transition dipole (e*a0)
};

/// Result of fitting ShiftModel::eta to measured edge shifts.
struct EtaFit {
    double eta = 0.0;           ///< best-fit quadratic correction (1/MHz)
    double ci_halfwidth = 0.0;  ///< 95% confidence half-interval
    double rms_residual = 0.0;  ///< RMS shift residual (MHz)
};

/// Intensity-noise-limited field resolution at a fixed operating point.
struct SensitivityReport {
    double mean_intensity = 0.0;   ///< sample mean of the intensity
    double sigma_intensity = 0.0;  ///< ML Gaussian standard deviation
    double slope = 0.0;            ///< intensity slope vs field (1/(mV/cm))
    double delta_e_mv_cm = 0.0;    ///< single-shot field resolution
    double sensitivity_nv_cm_sqrt_hz = 0.0;  ///< resolution * sqrt(t_int)
    double t_int_us = 0.0;         ///< interrogation time used
    std::size_t n_samples = 0;     ///< number of repeated samples
};

/// Linear calibration around an operating point for field readout.
struct FieldCalibration {
    double e_ref = 0.0;   ///< field at the operating point (mV/cm)
    double i_ref = 0.0;   ///< intensity at the operating point
    double slope = 0.0;   ///< d(intensity)/d(field) (1/(mV/cm))
    double i_halfspan = std::numeric_limits<double>::infinity();
    ///< half-width of the intensity interval where the linear model holds
};

namespace detail {

/// Least-squares slope of y against x over [first, first+count).
inline double window_slope(std::span<const double> x, std::span<const double> y,
                           std::size_t first, std::size_t count) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = first; i < first + count; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(count);
    my /= static_cast<double>(count);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = first; i < first + count; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw DegenerateData("window has no x spread");
    return sxy / sxx;
}

/// |slope| at every admissible window centre; window must be odd.
inline std::vector<double> slope_profile(std::span<const double> x,
                                         std::span<const double> y,
                                         std::size_t window) {
    const std::size_t half = window / 2;
    std::vector<double> s(x.size(), 0.0);
    for (std::size_t c = half; c + half < x.size(); ++c)
        s[c] = window_slope(x, y, c - half, window);
    return s;
}

/// Vertex of the parabola through three equally indexed samples; returns
/// the fractional offset from the centre sample, clamped to [-1, 1].
inline double parabolic_offset(double left, double centre, double right) {
    const double denom = left - 2.0 * centre + right;
    if (denom == 0.0) return 0.0;
    return std::clamp(0.5 * (left - right) / denom, -1.0, 1.0);
}

inline void check_xy(std::span<const double> x, std::span<const double> y,
                     std::size_t min_points, std::size_t window) {
    if (x.size() != y.size())
        throw InvalidParams("x and y must have the same length");
    if (window < 3 || window % 2 == 0)
        throw InvalidParams("slope window must be odd and >= 3");
    if (x.size() < min_points || x.size() < window)
        throw TooFewPoints("trace too short for slope estimation");
}

}  // namespace detail

/// Finds the steepest point of a trace by sliding a least-squares line of
/// `window` points along it and taking the centre with the largest |slope|
/// (ties resolve to the smaller x).  The returned position is refined by
/// parabolic interpolation of the |slope| profile when the peak is
/// interior.  Requires at least 5 points and an odd window >= 3.
inline CriticalPoint max_slope(std::span<const double> x,
                               std::span<const double> y,
                               std::size_t window = 5) {
    detail::check_xy(x, y, 5, window);
    const std::size_t half = window / 2;
    const std::vector<double> s = detail::slope_profile(x, y, window);

    std::size_t best = half;
    for (std::size_t c = half; c + half < x.size(); ++c) {
        if (std::abs(s[c]) > std::abs(s[best])) best = c;
        else if (std::abs(s[c]) == std::abs(s[best]) && x[c] < x[best]) best = c;
    }

    CriticalPoint cp;
    cp.x = x[best];
    cp.slope = s[best];
    cp.index = best;
    cp.x_refined = cp.x;
    if (best > half && best + half + 1 < x.size()) {
        const double off = detail::parabolic_offset(
            std::abs(s[best - 1]), std::abs(s[best]), std::abs(s[best + 1]));
        const double dx = off >= 0.0 ? x[best + 1] - x[best] : x[best] - x[best - 1];
        cp.x_refined = cp.x + off * dx;
    }
    return cp;
}

/// Variance of a flat region after removing a least-squares linear trend
/// (unbiased, n-2 denominator).  Requires at least 20 samples so the
/// estimate is meaningful.
inline double noise_variance(std::span<const double> y) {
    if (y.size() < 20)
        throw RegionTooSmall("noise estimation needs at least 20 samples");
    const double n = static_cast<double>(y.size());
    double mx = 0.5 * (n - 1.0), my = 0.0;
    for (double v : y) my += v;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double dx = static_cast<double>(i) - mx;
        sxx += dx * dx;
        sxy += dx * (y[i] - my);
    }
    const double b = sxy / sxx;
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - my - b * (static_cast<double>(i) - mx);
        ss += r * r;
    }
    return ss / (n - 2.0);
}

/// Fisher information of a single intensity sample about the swept
/// parameter: F = slope^2 / variance.
inline FisherResult fisher(double slope, double variance) {
    if (!(variance > 0.0))
        throw ZeroVariance("Fisher information needs a positive variance");
    FisherResult f;
    f.slope = slope;
    f.variance = variance;
    f.fisher = slope * slope / variance;
    return f;
}

/// Cramer-Rao bound on the parameter standard deviation, 1/sqrt(F).
inline double cramer_rao_bound(double fisher_information) {
    if (!(fisher_information > 0.0))
        throw NonpositiveF("Cramer-Rao bound needs positive information");
    return 1.0 / std::sqrt(fisher_information);
}

/// Fits y = A x^lambda by least squares in log-log space.  All points
/// must be strictly positive; at least 3 are required.
inline PowerLawFit fit_power_law(std::span<const double> x,
                                 std::span<const double> y) {
    if (x.size() != y.size())
        throw InvalidParams("x and y must have the same length");
    if (x.size() < 3) throw TooFewPoints("power-law fit needs >= 3 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw NonpositivePoint("power-law fit needs positive x and y");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(y[i]) - my);
    }
    if (!(sxx > 0.0)) throw DegenerateData("power-law fit needs x spread");
    PowerLawFit fit;
    fit.exponent = sxy / sxx;
    fit.amplitude = std::exp(my - fit.exponent * mx);
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = std::log(y[i]) -
                         (std::log(fit.amplitude) + fit.exponent * std::log(x[i]));
        ss += r * r;
    }
    fit.rms_log_residual = std::sqrt(ss / n);
    return fit;
}

/// Critical-point shift predicted by the model at MW field e_mv_cm.
inline double predict_shift(const ShiftModel& model, double e_mv_cm) {
    const double omega = rabi_from_field(e_mv_cm, model.mu0);
    const double root =
        std::sqrt(model.delta_mw * model.delta_mw + omega * omega);
    return -0.5 * (model.delta_mw + root) - model.eta * omega * omega;
}

/// Shift of the steep edge of trace b relative to trace a, in x units
/// (positive when b's edge sits at larger x).  The primary estimate is
/// the difference of refined critical-point positions.  When either edge
/// is narrower than 5 samples the slope profiles are cross-correlated
/// instead, which stays robust when the edge is barely resolved; that
/// path requires both traces to share one uniform grid spacing.  Throws
/// NoEdge when either trace's steepest |slope| is below min_slope.
inline double shift_between_traces(std::span<const double> x_a,
                                   std::span<const double> y_a,
                                   std::span<const double> x_b,
                                   std::span<const double> y_b,
                                   double min_slope = 0.0,
                                   std::size_t window = 5) {
    const CriticalPoint ca = max_slope(x_a, y_a, window);
    const CriticalPoint cb = max_slope(x_b, y_b, window);
    if (std::abs(ca.slope) < min_slope || std::abs(cb.slope) < min_slope)
        throw NoEdge("no steep edge above the slope floor");

    const std::vector<double> sa = detail::slope_profile(x_a, y_a, window);
    const std::vector<double> sb = detail::slope_profile(x_b, y_b, window);
    const auto edge_width = [](const std::vector<double>& s) {
        double peak = 0.0;
        for (double v : s) peak = std::max(peak, std::abs(v));
        std::size_t wide = 0;
        for (double v : s)
            if (std::abs(v) >= 0.5 * peak) ++wide;
        return wide;
    };
    if (edge_width(sa) >= 5 && edge_width(sb) >= 5)
        return cb.x_refined - ca.x_refined;

    // Cross-correlation fallback for under-resolved edges.
    if (x_a.size() < 2 || x_b.size() != x_a.size())
        throw InvalidParams("correlation fallback needs equal-length traces");
    const double dxa = x_a[1] - x_a[0];
    for (std::size_t i = 1; i < x_a.size(); ++i) {
        if (std::abs((x_a[i] - x_a[i - 1]) - dxa) > 1e-9 * std::abs(dxa) ||
            std::abs((x_b[i] - x_b[i - 1]) - dxa) > 1e-9 * std::abs(dxa))
            throw InvalidParams("correlation fallback needs one uniform grid");
    }
    const long n = static_cast<long>(sa.size());
    const long max_lag = n / 2;
    double best_score = -std::numeric_limits<double>::infinity();
    long best_lag = 0;
    std::vector<double> score(2 * max_lag + 1, 0.0);
    for (long lag = -max_lag; lag <= max_lag; ++lag) {
        double acc = 0.0;
        long count = 0;
        for (long i = 0; i < n; ++i) {
            const long j = i + lag;
            if (j < 0 || j >= n) continue;
            acc += sa[i] * sb[j];
            ++count;
        }
        const double v = count > 0 ? acc / static_cast<double>(count) : 0.0;
        score[lag + max_lag] = v;
        if (v > best_score) {
            best_score = v;
            best_lag = lag;
        }
    }
    double off = 0.0;
    if (best_lag > -max_lag && best_lag < max_lag)
        off = detail::parabolic_offset(score[best_lag + max_lag - 1],
                                       score[best_lag + max_lag],
                                       score[best_lag + max_lag + 1]);
    // The overlap is maximal when sb, slid left by `lag` samples, lines
    // up with sa — i.e. b's edge sits lag*dx to the right of a's.
    return (static_cast<double>(best_lag) + off) * dxa;
}

/// Fits the quadratic correction eta of a ShiftModel to measured edge
/// shifts at known MW fields, holding delta_mw and mu0 fixed.  eta is the
/// single free parameter, so the fit is a closed-form least-squares
/// projection; the confidence interval is the standard 95% one from the
/// residual scatter.
inline EtaFit fit_eta(std::span<const double> e_mv_cm,
                      std::span<const double> shift_mhz, double delta_mw,
                      double mu0 = kDefaultDipoleEa0) {
    if (e_mv_cm.size() != shift_mhz.size())
        throw InvalidParams("fields and shifts must have the same length");
    if (e_mv_cm.size() < 2) throw TooFewPoints("eta fit needs >= 2 points");
    const std::size_t n = e_mv_cm.size();
    double sz2 = 0.0, s4 = 0.0;
    std::vector<double> omega2(n, 0.0), z(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double omega = rabi_from_field(e_mv_cm[i], mu0);
        omega2[i] = omega * omega;
        const double root = std::sqrt(delta_mw * delta_mw + omega2[i]);
        z[i] = -(shift_mhz[i] + 0.5 * (delta_mw + root));
        sz2 += z[i] * omega2[i];
        s4 += omega2[i] * omega2[i];
    }
    if (!(s4 > 0.0))
        throw DegenerateData("eta fit needs at least one nonzero field");
    EtaFit fit;
    fit.eta = sz2 / s4;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = z[i] - fit.eta * omega2[i];
        ss += r * r;
    }
    fit.rms_residual = std::sqrt(ss / static_cast<double>(n));
    const double dof = static_cast<double>(n) - 1.0;
    fit.ci_halfwidth = dof > 0.0 ? 1.96 * std::sqrt((ss / dof) / s4) : 0.0;
    return fit;
}

/// Separation of the two dominant peaks of a trace — the Autler-Townes
/// splitting when the trace is a split line recorded against detuning.
/// Peaks are interior local maxima refined by parabolic interpolation;
/// the valley between the two chosen peaks must drop below both by at
/// least min_prominence times the full y range, otherwise the line is
/// considered unsplit and NoSplitting is thrown.
inline double at_calibration(std::span<const double> x,
                             std::span<const double> y,
                             double min_prominence = 0.01) {
    if (x.size() != y.size())
        throw InvalidParams("x and y must have the same length");
    if (x.size() < 5) throw TooFewPoints("splitting needs >= 5 points");

    std::vector<std::size_t> peaks;
    for (std::size_t i = 1; i + 1 < y.size(); ++i)
        if (y[i] >= y[i - 1] && y[i] > y[i + 1]) peaks.push_back(i);
    if (peaks.size() < 2) throw NoSplitting("fewer than two peaks");

    std::sort(peaks.begin(), peaks.end(),
              [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });
    const std::size_t p1 = std::min(peaks[0], peaks[1]);
    const std::size_t p2 = std::max(peaks[0], peaks[1]);

    double valley = y[p1];
    for (std::size_t i = p1; i <= p2; ++i) valley = std::min(valley, y[i]);
    double lo = y[0], hi = y[0];
    for (double v : y) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double range = hi - lo;
    if (!(range > 0.0) ||
        std::min(y[p1], y[p2]) - valley < min_prominence * range)
        throw NoSplitting("peaks are not separated by a valley");

    const auto refined = [&](std::size_t p) {
        const double off = detail::parabolic_offset(y[p - 1], y[p], y[p + 1]);
        const double dx = off >= 0.0 ? x[p + 1] - x[p] : x[p] - x[p - 1];
        return x[p] + off * dx;
    };
    return std::abs(refined(p2) - refined(p1));
}

/// Maximum-likelihood Gaussian summary of repeated intensity samples at a
/// fixed operating point, converted into a field resolution through the
/// local slope and into a sensitivity through the interrogation time:
///   delta_E = sigma / |slope|,   S = delta_E * sqrt(t_int),
/// with S in nV/cm/sqrt(Hz) for delta_E in mV/cm and t_int in us.
inline SensitivityReport sensitivity_report(std::span<const double> samples,
                                            double slope_per_mv_cm,
                                            double t_int_us) {
    if (samples.size() < 50)
        throw TooFewSamples("sensitivity needs >= 50 repeated samples");
    if (!(t_int_us > 0.0))
        throw InvalidParams("interrogation time must be positive");
    if (slope_per_mv_cm == 0.0)
        throw NoEdge("sensitivity needs a nonzero intensity slope");

    SensitivityReport rep;
    rep.n_samples = samples.size();
    rep.t_int_us = t_int_us;
    rep.slope = slope_per_mv_cm;
    const double n = static_cast<double>(samples.size());
    for (double v : samples) rep.mean_intensity += v;
    rep.mean_intensity /= n;
    double ss = 0.0;
    for (double v : samples) {
        const double d = v - rep.mean_intensity;
        ss += d * d;
    }
    rep.sigma_intensity = std::sqrt(ss / n);
    rep.delta_e_mv_cm = rep.sigma_intensity / std::abs(slope_per_mv_cm);
    // mV/cm -> nV/cm is 1e6; us -> s is 1e-6 under the square root.
    rep.sensitivity_nv_cm_sqrt_hz =
        rep.delta_e_mv_cm * 1e6 * std::sqrt(t_int_us * 1e-6);
    return rep;
}

/// Linear field readout around a calibrated operating point.  Throws
/// OutOfLinearRange when the intensity deviates from the calibration
/// point by more than the calibrated half-span.
inline double estimate_field(double intensity, const FieldCalibration& cal) {
    if (cal.slope == 0.0)
        throw InvalidParams("field calibration needs a nonzero slope");
    const double dev = intensity - cal.i_ref;
    if (std::abs(dev) > cal.i_halfspan)
        throw OutOfLinearRange("intensity outside the calibrated span");
    return cal.e_ref + dev / cal.slope;
}

}  // namespace nept::metrology
