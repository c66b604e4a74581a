#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nept/field.hpp"
#include "nept/optics.hpp"
#include "nept/steady_state.hpp"
#include "nept/sweep.hpp"

#include "test_util.hpp"

using namespace nept;
using namespace nept::core;
using namespace nept::sweep;

namespace {

/// Adiabatic oracle for interaction-free parameters: steady-state detected
/// transmission at a fixed axis value (V = 0 makes the branch unique).
double steady_transmission(LadderParams p, const optics::MediumParams& med) {
    const SteadySolution sol = linear_steady_state(p, 0.0);
    if (p.omega_p == 0.0) return 1.0;
    const double a = std::clamp(
        optics::normalized_absorption(sol.rho, p.omega_p, p.gamma_e), 0.0, 1.0);
    return optics::free_space_transmission(a, med);
}

LadderParams eit_params() {
    LadderParams p;
    p.omega_p = 2.0;
    p.omega_c = 10.0;
    p.omega_mw = 0.0;
    p.delta_p = 0.0;
    p.delta_c = 0.0;
    p.delta_mw = -200.0;
    p.V = 0.0;
    return p;
}

OpticsChain quiet_free_space() {
    OpticsChain chain;
    chain.mode = OpticsMode::kFreeSpace;
    chain.detector.sigma0 = 0.0;
    return chain;
}

}  // namespace

TEST_CASE("sweep spec validation and point count") {
    SweepSpec spec;
    spec.start = 4.6;
    spec.stop = 5.2;
    spec.rate = 0.002;
    spec.t_int = 5.0;
    spec.axis = SweepAxis::kMwAmplitude;
    spec.validate();
    CHECK(spec.points() == 60);
    CHECK(spec.stepped());
    spec.ramp = RampShape::kContinuous;
    CHECK_FALSE(spec.stepped());

    SweepSpec det;
    det.axis = SweepAxis::kCouplingDetuning;
    CHECK_FALSE(det.stepped());
    det.ramp = RampShape::kStepped;
    CHECK(det.stepped());

    SweepSpec bad;
    bad.start = bad.stop = 1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidParams);
    bad = SweepSpec{};
    bad.rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidParams);
    bad = SweepSpec{};
    bad.t_int = -1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidParams);
    bad = SweepSpec{};
    bad.start = 0.0;
    bad.stop = 0.5;
    bad.rate = 100.0;  // one window would cover the whole span
    CHECK_THROWS_AS(bad.validate(), InvalidParams);
    bad = SweepSpec{};
    bad.axis = SweepAxis::kMwAmplitude;
    bad.start = -1.0;
    bad.stop = 1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidParams);
}

TEST_CASE("a probe-free sweep records a flat unit trace") {
    LadderParams p = eit_params();
    p.omega_p = 0.0;
    OpticsChain chain = quiet_free_space();
    SweepSpec spec;
    spec.start = -5.0;
    spec.stop = 5.0;
    spec.rate = 1.0;
    spec.t_int = 1.0;

    const Trace tr = sweep_detuning(p, chain, spec);
    REQUIRE(tr.x.size() == 10);
    REQUIRE(tr.y.size() == 10);
    CHECK(tr.axis_name == "delta_c");
    CHECK(tr.axis_unit == "MHz");
    for (std::size_t i = 0; i < tr.y.size(); ++i) {
        CHECK(tr.y[i] == Catch::Approx(1.0).margin(1e-12));
        if (i > 0) CHECK(tr.x[i] > tr.x[i - 1]);
    }
}

TEST_CASE("slow detuning sweeps match the adiabatic steady-state oracle") {
    const LadderParams p = eit_params();
    const OpticsChain chain = quiet_free_space();
    SweepSpec spec;
    spec.start = -20.0;
    spec.stop = 20.0;
    spec.rate = 0.005;
    spec.t_int = 5.0;

    for (SweepDirection dir : {SweepDirection::kUp, SweepDirection::kDown}) {
        spec.direction = dir;
        const Trace tr = sweep_detuning(p, chain, spec);
        REQUIRE(static_cast<int>(tr.x.size()) == spec.points());
        double span = 0.0;
        for (std::size_t i = 0; i < tr.x.size(); ++i) {
            LadderParams at = p;
            at.delta_c = tr.x[i];
            const double oracle = steady_transmission(at, chain.medium);
            CHECK(tr.y[i] == Catch::Approx(oracle).margin(1e-3));
            span = std::max(span, std::abs(tr.y[i] - tr.y[0]));
            if (i > 0) {
                if (dir == SweepDirection::kUp)
                    CHECK(tr.x[i] > tr.x[i - 1]);
                else
                    CHECK(tr.x[i] < tr.x[i - 1]);
            }
        }
        CHECK(span > 0.05);  // the EIT structure is actually resolved
    }
}

TEST_CASE("stepped MW-amplitude sweeps dwell on grid values and track the oracle") {
    LadderParams p = eit_params();
    p.delta_mw = 0.0;  // resonant MW splits the upper level
    OpticsChain chain = quiet_free_space();
    SweepSpec spec;
    spec.axis = SweepAxis::kMwAmplitude;
    spec.start = 0.0;
    spec.stop = 1.5;
    spec.rate = 0.0005;  // slow enough that each dwell settles within the window
    spec.t_int = 5.0;

    const Trace tr = sweep_mw_amplitude(p, chain, spec);
    REQUIRE(static_cast<int>(tr.x.size()) == spec.points());
    CHECK(tr.axis_name == "e_mw");
    CHECK(tr.axis_unit == "mV/cm");
    CHECK(tr.x[0] == 0.0);  // stepped ramps dwell at the start value first
    double swing = 0.0;
    for (std::size_t i = 0; i < tr.x.size(); ++i) {
        if (i > 0) CHECK(tr.x[i] - tr.x[i - 1] == Catch::Approx(0.0025).margin(1e-12));
        LadderParams at = p;
        at.omega_mw = metrology::rabi_from_field(tr.x[i]);
        CHECK(tr.y[i] == Catch::Approx(steady_transmission(at, chain.medium)).margin(1e-3));
        swing = std::max(swing, std::abs(tr.y[i] - tr.y[0]));
    }
    CHECK(swing > 0.01);  // the MW drive visibly reshapes the line
}

TEST_CASE("microwave sweeps with no route to the Rydberg pair stay flat") {
    // A vanishing dipole moment gives omega_mw ~ 0 at every field value.
    {
        LadderParams p = eit_params();
        p.delta_mw = 0.0;
        OpticsChain chain = quiet_free_space();
        SweepSpec spec;
        spec.axis = SweepAxis::kMwAmplitude;
        spec.start = 0.0;
        spec.stop = 1.5;
        spec.rate = 0.01;
        spec.t_int = 2.0;
        const Trace tr = sweep_mw_amplitude(p, chain, spec, /*mu0=*/1e-12);
        const auto [lo, hi] = std::minmax_element(tr.y.begin(), tr.y.end());
        CHECK(*hi - *lo <= 1e-9);
        LadderParams at = p;
        at.omega_mw = 0.0;
        CHECK(tr.y.front() ==
              Catch::Approx(steady_transmission(at, chain.medium)).margin(1e-6));
    }
    // With the coupling laser off the MW transition is unreachable, so the
    // detected intensity cannot depend on the swept field at all.
    {
        LadderParams p = eit_params();
        p.omega_c = 0.0;
        OpticsChain chain = quiet_free_space();
        SweepSpec spec;
        spec.axis = SweepAxis::kMwAmplitude;
        spec.start = 0.0;
        spec.stop = 4.0;
        spec.rate = 0.05;
        spec.t_int = 2.0;
        const Trace tr = sweep_mw_amplitude(p, chain, spec);
        const auto [lo, hi] = std::minmax_element(tr.y.begin(), tr.y.end());
        CHECK(*hi - *lo <= 1e-9);
    }
}

TEST_CASE("hysteresis pair without interactions retraces itself") {
    const LadderParams p = eit_params();
    const OpticsChain chain = quiet_free_space();
    SweepSpec spec;
    spec.start = -10.0;
    spec.stop = 10.0;
    spec.rate = 0.01;
    spec.t_int = 5.0;

    const HysteresisPair pair = hysteresis_pair(p, chain, spec);
    const std::size_t n = pair.up.x.size();
    REQUIRE(pair.down.x.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = n - 1 - i;
        CHECK(pair.up.x[i] == Catch::Approx(pair.down.x[j]).margin(1e-9));
        CHECK(pair.up.y[i] == Catch::Approx(pair.down.y[j]).margin(5e-3));
    }
    CHECK(pair.up.spec.direction == SweepDirection::kUp);
    CHECK(pair.down.spec.direction == SweepDirection::kDown);
}

TEST_CASE("repeated sweeps are bit-identical and cavity noise carries the excess factor") {
    LadderParams p = eit_params();
    p.omega_p = 3.0;
    p.delta_c = 0.0;
    OpticsChain free_chain;
    free_chain.mode = OpticsMode::kFreeSpace;
    free_chain.detector.sigma0 = 8e-4;
    OpticsChain cav_chain = free_chain;
    cav_chain.mode = OpticsMode::kCavity;
    cav_chain.cavity = optics::calibrate_cavity(85.0, 20.0, 0.06);

    SweepSpec spec;
    spec.start = -4.0;
    spec.stop = 4.0;
    spec.rate = 0.4;
    spec.t_int = 2.0;
    spec.seed = 99;

    const Trace free_noisy = sweep_detuning(p, free_chain, spec);
    const Trace free_again = sweep_detuning(p, free_chain, spec);
    REQUIRE(free_noisy.y.size() == free_again.y.size());
    for (std::size_t i = 0; i < free_noisy.y.size(); ++i) {
        CHECK(free_noisy.x[i] == free_again.x[i]);
        CHECK(free_noisy.y[i] == free_again.y[i]);
    }

    const Trace cav_noisy = sweep_detuning(p, cav_chain, spec);
    CHECK(std::all_of(cav_noisy.y.begin(), cav_noisy.y.end(),
                      [](double v) { return v > -0.05 && v < 1.1; }));

    // Noise-free references isolate the per-point noise draws, which share
    // the unit normal stream between modes: the cavity draw is exactly the
    // detector scale factor times the free-space draw.
    OpticsChain free_clean = free_chain;
    free_clean.detector.sigma0 = 0.0;
    OpticsChain cav_clean = cav_chain;
    cav_clean.detector.sigma0 = 0.0;
    const Trace free_base = sweep_detuning(p, free_clean, spec);
    const Trace cav_base = sweep_detuning(p, cav_clean, spec);
    for (std::size_t i = 0; i < cav_noisy.y.size(); ++i) {
        const double n_free = free_noisy.y[i] - free_base.y[i];
        const double n_cav = cav_noisy.y[i] - cav_base.y[i];
        REQUIRE(n_free != 0.0);
        CHECK(n_cav / n_free == Catch::Approx(1.2).epsilon(1e-9));
    }
}

TEST_CASE("grid execution preserves order, isolates seeds, and collects cell errors") {
    const LadderParams p = eit_params();
    OpticsChain chain = quiet_free_space();
    chain.detector.sigma0 = 8e-4;
    SweepSpec spec;
    spec.start = -3.0;
    spec.stop = 3.0;
    spec.rate = 0.5;
    spec.t_int = 2.0;
    spec.seed = 7;

    CHECK(run_grid(p, chain, spec, {}).empty());

    std::vector<GridOverride> overrides = {
        {},                                   // base config
        {},                                   // identical copy, its own seed
        {{"physics.delta_p", 1.5}},           // off-resonant probe
        {{"physics.nonsense", 1.0}},          // invalid key: this cell fails
        {{"sweep.rate", 1.0}},                // shorter trace
    };

    const auto serial = run_grid(p, chain, spec, overrides, 1);
    REQUIRE(serial.size() == overrides.size());
    CHECK(serial[0].ok());
    CHECK(serial[1].ok());
    CHECK(serial[2].ok());
    CHECK_FALSE(serial[3].ok());
    CHECK(serial[3].error.find("physics.nonsense") != std::string::npos);
    CHECK(serial[4].ok());

    // Same x-grid but independent noise streams for the identical cells.
    REQUIRE(serial[0].trace.x.size() == serial[1].trace.x.size());
    bool any_diff = false;
    for (std::size_t i = 0; i < serial[0].trace.y.size(); ++i) {
        CHECK(serial[0].trace.x[i] == serial[1].trace.x[i]);
        any_diff |= serial[0].trace.y[i] != serial[1].trace.y[i];
    }
    CHECK(any_diff);
    CHECK(serial[2].trace.params.delta_p == 1.5);
    CHECK(serial[4].trace.x.size() < serial[0].trace.x.size());

    // Worker count cannot change a single bit of any cell.
    const auto parallel = run_grid(p, chain, spec, overrides, 3);
    REQUIRE(parallel.size() == serial.size());
    for (std::size_t c = 0; c < serial.size(); ++c) {
        CHECK(parallel[c].error == serial[c].error);
        REQUIRE(parallel[c].trace.y.size() == serial[c].trace.y.size());
        for (std::size_t i = 0; i < serial[c].trace.y.size(); ++i) {
            CHECK(parallel[c].trace.x[i] == serial[c].trace.x[i]);
            CHECK(parallel[c].trace.y[i] == serial[c].trace.y[i]);
        }
    }
}

TEST_CASE("cavity sweeps run the feedback loop and stay reproducible") {
    LadderParams p = eit_params();
    p.omega_p = 3.0;  // matched input: s_in = 9
    p.V = -20.0;
    OpticsChain chain;
    chain.mode = OpticsMode::kCavity;
    chain.cavity = optics::calibrate_cavity(85.0, 20.0, 0.06);
    chain.detector.sigma0 = 0.0;

    SweepSpec spec;
    spec.start = -8.0;
    spec.stop = 0.0;
    spec.rate = 0.2;
    spec.t_int = 2.0;

    const Trace a = sweep_detuning(p, chain, spec);
    const Trace b = sweep_detuning(p, chain, spec);
    REQUIRE(a.y.size() == b.y.size());
    for (std::size_t i = 0; i < a.y.size(); ++i) {
        CHECK(a.y[i] == b.y[i]);
        CHECK(a.y[i] > 0.0);
        CHECK(a.y[i] <= 1.0 + 1e-9);
    }
    CHECK(a.mode == OpticsMode::kCavity);
}
