#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nept/constants.hpp"
#include "nept/ladder.hpp"
#include "nept/optics.hpp"
#include "nept/steady_state.hpp"

#include "test_util.hpp"

using namespace nept;
using namespace nept::core;
using namespace nept::optics;

namespace {

/// Independent scalar oracle: invert F = pi*sqrt(r)/(1-r) by bisection.
double round_trip_from_finesse_oracle(double finesse) {
    double lo = 1e-12, hi = 1.0 - 1e-12;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double f = kPi * std::sqrt(mid) / (1.0 - mid);
        (f < finesse ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

LadderParams closed_two_level(double omega_p, double delta_p) {
    LadderParams p;
    p.omega_p = omega_p;
    p.omega_c = 0.0;
    p.omega_mw = 0.0;
    p.delta_p = delta_p;
    p.delta_c = 0.0;
    p.delta_mw = 0.0;
    p.V = 0.0;
    return p;
}

/// Lorentzian absorption of the closed two-level subsystem, derived from
/// the steady coherence rho_eg = (i Omega/2)(rho_gg - rho_ee)/(Gamma/2 + i Delta)
/// and the saturation populations.
double two_level_absorption(double omega, double delta, double gamma) {
    const double g2 = gamma * gamma / 4.0;
    return g2 / (g2 + delta * delta + omega * omega / 2.0);
}

double residual_norm(const CavityParams& cav, const MediumParams& med, double s_in,
                     double gamma_e, const CavityOperatingPoint& pt) {
    const double a = std::clamp(
        normalized_absorption(pt.branch.state, std::sqrt(pt.s), gamma_e), 0.0, 1.0);
    return std::abs(s_in * cavity_buildup(cav, a, med) - pt.s);
}

}  // namespace

TEST_CASE("finesse inversion matches a bisection oracle at the working points") {
    for (double finesse : {5.0, 20.0, 85.0, 300.0}) {
        const double r = loss_from_finesse(finesse);
        CHECK(r == Catch::Approx(round_trip_from_finesse_oracle(finesse)).margin(1e-10));
        CHECK(finesse_from_loss(r) == Catch::Approx(finesse).epsilon(1e-12));
    }
    CHECK(loss_from_finesse(85.0) == Catch::Approx(0.9638).margin(2e-4));
    CHECK(loss_from_finesse(20.0) == Catch::Approx(0.8548).margin(2e-4));

    CHECK_THROWS_AS(loss_from_finesse(0.0), InvalidParams);
    CHECK_THROWS_AS(loss_from_finesse(-3.0), InvalidParams);
    CHECK_THROWS_AS(finesse_from_loss(0.0), InvalidParams);
    CHECK_THROWS_AS(finesse_from_loss(1.0), InvalidParams);
}

TEST_CASE("two-finesse calibration reproduces both measured finesses") {
    const double t_in = 0.06;
    const CavityParams cav = calibrate_cavity(85.0, 20.0, t_in);
    CHECK(cav.loss_empty >= 0.0);
    CHECK(cav.loss_empty < 1.0);
    CHECK(cav.loss_cell >= 0.0);
    CHECK(cav.loss_cell < 1.0);

    // Recover the round-trip amplitude through the public buildup value
    // B = t/(1-r)^2 and check the finesse it implies.
    MediumParams med;
    med.od0 = 2.0;
    const double b_empty = cavity_buildup(without_cell(cav), 0.0, med);
    const double r_empty = 1.0 - std::sqrt(t_in / b_empty);
    CHECK(finesse_from_loss(r_empty) == Catch::Approx(85.0).epsilon(1e-9));

    const double b_loaded = cavity_buildup(cav, 0.0, med);
    const double r_loaded = 1.0 - std::sqrt(t_in / b_loaded);
    CHECK(finesse_from_loss(r_loaded) == Catch::Approx(20.0).epsilon(1e-9));

    // The loaded cavity builds up less than the empty one.
    CHECK(b_loaded < b_empty);

    // Input coupling budget: t_in must stay below the empty round-trip power.
    CHECK_THROWS_AS(calibrate_cavity(85.0, 20.0, 0.072), InvalidParams);
    CHECK_THROWS_AS(calibrate_cavity(85.0, 20.0, 0.0), InvalidParams);
    // Loading the cell cannot raise the finesse.
    CHECK_THROWS_AS(calibrate_cavity(20.0, 85.0, 0.01), InvalidParams);
}

TEST_CASE("absorption of the closed two-level subsystem follows the Lorentzian line") {
    const double gamma = 5.2;
    for (double omega : {0.5, 2.0, 5.2, 12.0}) {
        for (double delta : {-8.0, -2.0, 0.0, 3.0, 10.0}) {
            LadderParams p = closed_two_level(omega, delta);
            p.gamma_e = gamma;
            const SteadySolution sol = linear_steady_state(p, 0.0);
            bool clamped = true;
            const double a = normalized_absorption(sol.rho, omega, gamma, &clamped);
            CHECK_FALSE(clamped);
            CHECK(a == Catch::Approx(two_level_absorption(omega, delta, gamma)).margin(1e-9));
        }
    }

    // Weak resonant probe: the normalization makes a -> 1.
    {
        LadderParams p = closed_two_level(0.01, 0.0);
        const SteadySolution sol = linear_steady_state(p, 0.0);
        CHECK(normalized_absorption(sol.rho, 0.01, p.gamma_e) ==
              Catch::Approx(1.0).margin(1e-3));
    }
    // Strong saturation bleaches the medium.
    {
        LadderParams p = closed_two_level(200.0, 0.0);
        const SteadySolution sol = linear_steady_state(p, 0.0);
        CHECK(normalized_absorption(sol.rho, 200.0, p.gamma_e) < 2e-3);
    }
    // No coherence, no absorption.
    CHECK(normalized_absorption(DensityMatrix4(), 1.0, gamma) == 0.0);
    CHECK_THROWS_AS(normalized_absorption(DensityMatrix4(), 0.0, gamma), ZeroProbe);
}

TEST_CASE("single-pass transmission follows Beer's law in the optical depth") {
    MediumParams med;
    med.od0 = 1.0;
    CHECK(free_space_transmission(0.0, med) == 1.0);
    CHECK(free_space_transmission(1.0, med) == Catch::Approx(std::exp(-1.0)).epsilon(1e-15));

    med.od0 = 2.0;
    double prev = 2.0;
    for (double a = 0.0; a <= 1.0; a += 0.05) {
        const double t = free_space_transmission(a, med);
        CHECK(t > 0.0);
        CHECK(t <= 1.0);
        CHECK(t < prev);
        prev = t;
    }
    CHECK_THROWS_AS(free_space_transmission(-0.1, med), InvalidParams);
    CHECK_THROWS_AS(free_space_transmission(1.1, med), InvalidParams);

    med.od0 = 0.0;
    CHECK(free_space_transmission(0.7, med) == 1.0);

    // Chained with the two-level solver: an opaque resonant medium of
    // depth 2 transmits e^-2.
    {
        LadderParams p = closed_two_level(0.05, 0.0);
        const SteadySolution sol = linear_steady_state(p, 0.0);
        const double a =
            std::clamp(normalized_absorption(sol.rho, 0.05, p.gamma_e), 0.0, 1.0);
        MediumParams dense;
        dense.od0 = 2.0;
        CHECK(free_space_transmission(a, dense) ==
              Catch::Approx(std::exp(-2.0)).margin(1e-3));
    }
}

TEST_CASE("cavity buildup falls with absorption and approaches t_in at total loss") {
    const CavityParams cav = calibrate_cavity(85.0, 20.0, 0.06);
    MediumParams med;
    med.od0 = 2.0;

    double prev = 1e300;
    for (double a = 0.0; a <= 1.0; a += 0.05) {
        const double b = cavity_buildup(cav, a, med);
        // Independent evaluation of the declared formula.
        const double r = std::sqrt((1.0 - cav.t_in) * (1.0 - cav.loss_empty) *
                                   (1.0 - cav.loss_cell) * std::exp(-med.od0 * a));
        CHECK(b == Catch::Approx(cav.t_in / ((1.0 - r) * (1.0 - r))).epsilon(1e-14));
        CHECK(b > 0.0);
        CHECK(b < prev);
        prev = b;
    }

    // When the loop swallows essentially everything, a single pass of the
    // input is all that circulates.
    CavityParams lossy;
    lossy.t_in = 0.3;
    lossy.loss_empty = 1.0 - 1e-12;
    lossy.loss_cell = 0.0;
    CHECK(cavity_buildup(lossy, 0.0, med) == Catch::Approx(0.3).epsilon(1e-5));

    CavityParams held = cav;
    held.on_resonance = false;
    CHECK_THROWS_AS(cavity_buildup(held, 0.0, med), InvalidParams);
    CHECK_THROWS_AS(cavity_buildup(cav, -0.2, med), InvalidParams);
}

TEST_CASE("detector noise variance scales with integration time and is reproducible") {
    DetectorModel det;
    det.sigma0 = 0.02;
    det.tau0 = 5.0;
    det.seed = 77;

    // Quadrupling the integration time quarters the variance.
    const double t_int = 20.0;
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = detect(0.5, det, t_int, static_cast<std::uint64_t>(i)) - 0.5;
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(var == Catch::Approx(1e-4).epsilon(0.05));
    CHECK(std::abs(mean) < 2e-4);

    // Deterministic per (seed, index); distinct indices and seeds decorrelate.
    CHECK(detect(0.5, det, t_int, 42) == detect(0.5, det, t_int, 42));
    CHECK(detect(0.5, det, t_int, 42) != detect(0.5, det, t_int, 43));
    DetectorModel det2 = det;
    det2.seed = 78;
    CHECK(detect(0.5, det, t_int, 42) != detect(0.5, det2, t_int, 42));

    det.sigma0 = 0.0;
    CHECK(detect(0.37, det, 1.0, 5) == 0.37);
}

TEST_CASE("circulating-intensity following lands on fixed points of the buildup loop") {
    const CavityParams cav = calibrate_cavity(85.0, 20.0, 0.06);
    MediumParams med;
    med.od0 = 2.0;
    const double gamma_e = 5.2;

    const double b0 = cavity_buildup(cav, 0.0, med);

    // Transparent atoms: the full empty-cavity buildup circulates.
    CHECK(follow_circulating_intensity(0.0, gamma_e, 4.0, cav, med, 1.0) == 4.0 * b0);
    CHECK(follow_circulating_intensity(-0.01, gamma_e, 4.0, cav, med, 1.0) == 4.0 * b0);
    // No input, no field.
    CHECK(follow_circulating_intensity(0.02, gamma_e, 0.0, cav, med, 1.0) == 0.0);

    for (double s_in : {0.25, 4.0, 30.0}) {
        const double s_hi = s_in * b0;
        for (double im : {1e-4, 0.003, 0.02, 0.04}) {
            const double s = follow_circulating_intensity(im, gamma_e, s_in, cav, med, s_hi);
            REQUIRE(s > 0.0);
            REQUIRE(s <= s_hi * (1.0 + 1e-12));
            const double a = std::clamp(gamma_e * im / std::sqrt(s), 0.0, 1.0);
            const double mismatch = s_in * cavity_buildup(cav, a, med) - s;
            CHECK(std::abs(mismatch) <= 1e-8 * std::max(1.0, s_hi));

            // Anchoring: roots reached from the two extreme commitments are
            // both valid and ordered (equal when the response is single-valued).
            const double s_lo_anchor =
                follow_circulating_intensity(im, gamma_e, s_in, cav, med, 1e-12 * s_hi);
            const double s_hi_anchor =
                follow_circulating_intensity(im, gamma_e, s_in, cav, med, s_hi);
            CHECK(s_lo_anchor <= s_hi_anchor * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("static cavity operating points decouple exactly without optical depth") {
    LadderParams p;
    p.omega_p = 1.0;  // ignored: the circulating field drives the atoms
    p.delta_c = -8.0;
    p.V = -40.0;
    const CavityParams cav = calibrate_cavity(85.0, 20.0, 0.06);
    MediumParams med0;
    med0.od0 = 0.0;

    const double s_in = 4.0;
    const auto pts = cavity_self_consistent(p, cav, med0, s_in);
    REQUIRE(!pts.empty());
    const double s_expect = s_in * cavity_buildup(cav, 0.0, med0);
    for (const auto& pt : pts) {
        CHECK(pt.s == s_expect);
        CHECK(pt.omega_p == std::sqrt(s_expect));
    }

    // Same branch set as the free-space solver at the boosted drive.
    LadderParams boosted = p;
    boosted.omega_p = std::sqrt(s_expect);
    const auto branches = self_consistent_branches(boosted);
    REQUIRE(pts.size() == branches.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(pts[i].branch.w == Catch::Approx(branches[i].w).margin(1e-9));
        CHECK(pts[i].branch.stable == branches[i].stable);
    }
}

TEST_CASE("static cavity operating points satisfy both feedback residuals") {
    LadderParams p;
    p.omega_p = 1.0;
    p.delta_c = -3.0;
    p.delta_mw = -200.0;
    p.V = -25.0;
    const CavityParams cav = calibrate_cavity(85.0, 20.0, 0.06);
    MediumParams med;
    med.od0 = 2.0;

    const double s_in = 9.0;
    const double s_hi = s_in * cavity_buildup(cav, 0.0, med);
    const auto pts = cavity_self_consistent(p, cav, med, s_in);
    REQUIRE(!pts.empty());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& pt = pts[i];
        CHECK(pt.s > 0.0);
        CHECK(pt.s <= s_hi * (1.0 + 1e-12));
        CHECK(pt.omega_p == Catch::Approx(std::sqrt(pt.s)).epsilon(1e-14));
        // Intensity loop residual.
        CHECK(residual_norm(cav, med, s_in, p.gamma_e, pt) <= 1e-8 * std::max(1.0, s_hi));
        // Atomic fixed-point residuals.
        CHECK(pt.branch.residual <= 1e-9);
        CHECK(std::abs(pt.branch.state.rydberg_population() - pt.branch.w) <= 1e-10);
        if (i > 0) CHECK(pts[i - 1].s <= pt.s);
    }

    CHECK_THROWS_AS(cavity_self_consistent(p, cav, med, -1.0), InvalidParams);
    CHECK_THROWS_AS(cavity_self_consistent(p, cav, med, 1.0, 4), InvalidParams);

    // No drive: the ground-state point and nothing else.
    const auto dark = cavity_self_consistent(p, cav, med, 0.0);
    REQUIRE(dark.size() == 1);
    CHECK(dark[0].s == 0.0);
    CHECK(dark[0].omega_p == 0.0);
    CHECK(dark[0].branch.w <= 1e-9);
    CHECK(dark[0].branch.stable);
}
