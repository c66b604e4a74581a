#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "nept/density_matrix.hpp"
#include "nept/errors.hpp"
#include "nept/evolve.hpp"
#include "nept/field.hpp"
#include "nept/liouvillian.hpp"
#include "nept/optics.hpp"
#include "nept/rng.hpp"

namespace nept::sweep {

using core::DensityMatrix4;
using core::EvolveOptions;
using core::LadderParams;
using core::Mat16;
using core::Vec16;

enum class SweepAxis { kCouplingDetuning, kMwAmplitude };
enum class SweepDirection { kUp, kDown };
enum class OpticsMode { kFreeSpace, kCavity };

/// Ramp shape within the sweep.  kAuto resolves to continuous for the
/// detuning axis (a swept laser) and stepped for the MW-amplitude axis
/// (a synthesizer dwelling at each level).
enum class RampShape { kAuto, kContinuous, kStepped };

struct SweepSpec {
    SweepAxis axis = SweepAxis::kCouplingDetuning;
    double start = -30.0;  // axis units: MHz (detuning) or mV/cm (MW field)
    double stop = 10.0;
    double rate = 2.0;     // axis units per microsecond
    double t_int = 5.0;    // integration time per recorded point, microseconds
    SweepDirection direction = SweepDirection::kUp;
    RampShape ramp = RampShape::kAuto;
    std::uint64_t seed = 1;

    /// Number of recorded points: ceil(span / (rate * t_int)), at least 2.
    int points() const {
        const double ratio = std::abs(stop - start) / (rate * t_int);
        return static_cast<int>(std::ceil(ratio - 1e-9));
    }

    bool stepped() const {
        if (ramp == RampShape::kStepped) return true;
        if (ramp == RampShape::kContinuous) return false;
        return axis == SweepAxis::kMwAmplitude;
    }

    void validate() const {
        auto bad = [](const std::string& what) { throw InvalidParams("SweepSpec: " + what); };
        if (!std::isfinite(start) || !std::isfinite(stop)) bad("start/stop must be finite");
        if (!(start != stop)) bad("start and stop must differ");
        if (!(rate > 0.0)) bad("rate must be > 0");
        if (!(t_int > 0.0)) bad("t_int must be > 0");
        if (axis == SweepAxis::kMwAmplitude && (start < 0.0 || stop < 0.0))
            bad("MW field amplitudes must be >= 0");
        const int n = points();
        if (n < 2) bad("sweep must record at least 2 points (lower the rate or t_int)");
        if (n > 1000000) bad("sweep would record more than 1e6 points");
    }
};

/// A recorded sweep: sample positions, detected intensities, and the full
/// reproduction metadata (spec, optics mode, parameter snapshot).  The
/// wall-clock stamp is left empty by the generators so that identical
/// configurations produce byte-identical persisted traces; run manifests
/// carry timestamps instead.
struct Trace {
    std::string axis_name;  // "delta_c" or "e_mw"
    std::string axis_unit;  // "MHz" or "mV/cm"
    std::vector<double> x;
    std::vector<double> y;
    SweepSpec spec;
    OpticsMode mode = OpticsMode::kFreeSpace;
    LadderParams params;
    std::string wall_clock_utc;  // optional; preserved by persistence when set
};

/// Everything downstream of the atoms: propagation mode, medium, cavity,
/// and detector.  In cavity mode the probe drive seen by the atoms is the
/// circulating field of the input power matched to params.omega_p^2.
struct OpticsChain {
    OpticsMode mode = OpticsMode::kFreeSpace;
    optics::MediumParams medium{};
    optics::CavityParams cavity{};
    optics::DetectorModel detector{};

    void validate() const {
        medium.validate();
        cavity.validate();
        detector.validate();
    }
};

/// Integrator tolerances used by the sweep entry points unless the caller
/// overrides them.  Sweeps report window-averaged intensities, so per-step
/// tolerances well below the detection noise floor are sufficient; the
/// tighter evolve() defaults buy nothing observable here and cost ~1.5x.
inline EvolveOptions default_sweep_options() {
    EvolveOptions opt;
    opt.rtol = 1e-7;
    opt.atol = 1e-9;
    return opt;
}

namespace detail {

/// Im(rho_eg) from packed real coordinates; the stored pair is rho_ge, and
/// the absorptive quadrature is its negated imaginary part.
inline double im_rho_eg(const Vec16& r) { return -r[core::coords::im(0, 1)]; }

/// Time-domain sweep driver.  Holds the jointly affine generator family
/// G(x, w, omega_p) plus the optics state (committed circulating intensity
/// in cavity mode) and integrates window-by-window, recording one
/// time-averaged detected intensity per integration window.
class SweepRunner {
  public:
    SweepRunner(const LadderParams& base, const OpticsChain& chain,
                const SweepSpec& spec, double mu0, const EvolveOptions& opt)
        : chain_(chain), spec_(spec), mu0_(mu0), opt_(opt), base_(base) {
        base.validate();
        chain.validate();
        spec.validate();
        if (!(mu0 > 0.0)) throw InvalidParams("dipole moment must be > 0");

        cavity_ = chain.mode == OpticsMode::kCavity;
        n_ = spec.points();
        stepped_ = spec.stepped();
        const double lo = std::min(spec.start, spec.stop);
        const double hi = std::max(spec.start, spec.stop);
        up_ = spec.direction == SweepDirection::kUp;
        x_begin_ = up_ ? lo : hi;
        x_lo_ = lo;
        x_hi_ = hi;
        dir_ = up_ ? 1.0 : -1.0;
        step_ = spec.rate * spec.t_int;

        LadderParams p0 = base;
        if (cavity_) p0.omega_p = 0.0;
        apply_axis(p0, 0.0);
        LadderParams p1 = p0;
        apply_axis(p1, 1.0);
        g_base_ = core::build_generator(p0, 0.0);
        g_ax_ = core::build_generator(p1, 0.0) - g_base_;
        g_shift_ = core::build_generator_dw(p0);
        ramp_dot_ = (dir_ * spec.rate) * g_ax_;
        if (cavity_) {
            LadderParams pp = p0;
            pp.omega_p = 1.0;
            g_probe_ = core::build_generator(pp, 0.0) - g_base_;
            s_in_ = base.omega_p * base.omega_p;
            b0_ = optics::cavity_buildup(chain.cavity, 0.0, chain.medium);
        }

        det_ = chain.detector;
        det_.seed = spec.seed;
        if (cavity_) det_.sigma0 *= det_.cavity_noise_factor;

        r_ = DensityMatrix4().real_coords();
        s_committed_ = cavity_ ? s_in_ * b0_ : 0.0;
    }

    void set_initial_state(const DensityMatrix4& rho0, std::optional<double> committed) {
        r_ = rho0.real_coords();
        if (committed) s_committed_ = *committed;
    }

    Trace run() {
        relax_at_start();

        Trace trace;
        trace.axis_name = spec_.axis == SweepAxis::kCouplingDetuning ? "delta_c" : "e_mw";
        trace.axis_unit = spec_.axis == SweepAxis::kCouplingDetuning ? "MHz" : "mV/cm";
        trace.spec = spec_;
        trace.mode = chain_.mode;
        trace.params = base_;
        trace.x.reserve(n_);
        trace.y.reserve(n_);

        double h = opt_.h_init;
        for (int i = 0; i < n_; ++i) {
            const double t0 = static_cast<double>(i) * spec_.t_int;
            const double t1 = static_cast<double>(i + 1) * spec_.t_int;
            double acc = 0.0;
            double y_prev = detected(r_);
            double t_prev = t0;
            EvolveOptions opt = opt_;
            opt.h_init = h;
            // A continuous ramp makes the generator affine in t with the
            // constant derivative below; stepped windows are ramp-free.
            opt.gen_dot = stepped_ ? nullptr : &ramp_dot_;
            auto gen = [this](double t, const Vec16& state) { return generator(t, state); };
            h = core::integrate_adaptive(
                gen, t0, t1, r_, opt,
                [&](double, const Vec16&, double t_new, const Vec16& r_new) {
                    commit(r_new);
                    const double y = detected(r_new);
                    acc += 0.5 * (y_prev + y) * (t_new - t_prev);
                    y_prev = y;
                    t_prev = t_new;
                    return true;
                });
            const double mean = acc / spec_.t_int;
            trace.x.push_back(stepped_ ? axis_at(t0) : axis_at(0.5 * (t0 + t1)));
            trace.y.push_back(optics::detect(mean, det_, spec_.t_int, static_cast<std::uint64_t>(i)));
        }
        return trace;
    }

    DensityMatrix4 state() const { return DensityMatrix4(core::to_matrix(r_)); }
    double committed_intensity() const { return s_committed_; }

    /// Relaxes the current state at the ramp's starting axis value until the
    /// mean-field velocity settles (matching the standalone relax helper).
    void relax_at_start(double max_time = 2000.0, double settle_tol = 1e-11) {
        auto gen = [this](double, const Vec16& state) { return generator(0.0, state); };
        EvolveOptions opt = opt_;
        opt.gen_dot = nullptr;  // the axis value is frozen while settling
        core::integrate_adaptive(
            gen, 0.0, max_time, r_, opt,
            [&](double, const Vec16&, double, const Vec16& r_new) {
                commit(r_new);
                const Vec16 velocity = generator(0.0, r_new) * r_new;
                return velocity.cwiseAbs().maxCoeff() >= settle_tol;
            });
    }

  private:
    void apply_axis(LadderParams& p, double x) const {
        if (spec_.axis == SweepAxis::kCouplingDetuning)
            p.delta_c = x;
        else
            p.omega_mw = metrology::rabi_from_field(x, mu0_);
    }

    /// Axis value at sweep time t (t = 0 is the start of the first window,
    /// after the initial relaxation).  Stepped ramps dwell for a full window;
    /// continuous ramps move linearly and saturate at the far end when the
    /// point count was rounded up.
    double axis_at(double t) const {
        double x;
        if (stepped_) {
            const double i = std::floor(t / spec_.t_int + 1e-12);
            x = x_begin_ + dir_ * step_ * i;
        } else {
            x = x_begin_ + dir_ * spec_.rate * t;
        }
        return std::clamp(x, x_lo_, x_hi_);
    }

    Mat16 generator(double t, const Vec16& state) const {
        const double x = axis_at(t);
        const double w = std::clamp(state[core::coords::kRydbergPopulation], 0.0, 1.0);
        Mat16 g = g_base_ + x * g_ax_ + w * g_shift_;
        if (cavity_) {
            const double s = optics::follow_circulating_intensity(
                im_rho_eg(state), base_.gamma_e, s_in_, chain_.cavity, chain_.medium,
                s_committed_);
            g += std::sqrt(s) * g_probe_;
        }
        return g;
    }

    /// Updates the committed circulating intensity after an accepted step
    /// (cavity hysteresis memory lives here; trial steps never commit).
    void commit(const Vec16& state) {
        if (!cavity_) return;
        s_committed_ = optics::follow_circulating_intensity(
            im_rho_eg(state), base_.gamma_e, s_in_, chain_.cavity, chain_.medium,
            s_committed_);
    }

    /// Noise-free detected intensity for the current state: free-space
    /// transmission, or cavity buildup normalized to the empty cavity.
    double detected(const Vec16& state) const {
        if (cavity_) {
            if (s_in_ == 0.0) return 0.0;
            return s_committed_ / (s_in_ * b0_);
        }
        if (base_.omega_p == 0.0) return 1.0;
        const double a = optics::normalized_absorption(DensityMatrix4(core::to_matrix(state)),
                                                       base_.omega_p, base_.gamma_e);
        return optics::free_space_transmission(std::clamp(a, 0.0, 1.0), chain_.medium);
    }

    OpticsChain chain_;
    SweepSpec spec_;
    double mu0_;
    EvolveOptions opt_;
    LadderParams base_;
    optics::DetectorModel det_;

    bool cavity_ = false;
    bool stepped_ = false;
    bool up_ = true;
    int n_ = 0;
    double x_begin_ = 0.0, x_lo_ = 0.0, x_hi_ = 0.0, dir_ = 1.0, step_ = 0.0;
    Mat16 g_base_, g_ax_, g_shift_, g_probe_, ramp_dot_;
    double s_in_ = 0.0, b0_ = 0.0;

    Vec16 r_;
    double s_committed_ = 0.0;
};

}  // namespace detail

/// Ramps the coupling detuning linearly at spec.rate from start to stop,
/// recording one time-averaged detected intensity per t_int window.  The
/// initial state is the relaxed steady state at the starting detuning;
/// hysteresis emerges from the time-domain dynamics alone.
inline Trace sweep_detuning(const LadderParams& params, const OpticsChain& optics,
                            const SweepSpec& spec, const EvolveOptions& opt = default_sweep_options()) {
    if (spec.axis != SweepAxis::kCouplingDetuning)
        throw InvalidParams("sweep_detuning requires axis = coupling_detuning");
    detail::SweepRunner runner(params, optics, spec, kDefaultDipoleEa0, opt);
    return runner.run();
}

/// Ramps the MW field amplitude (mV/cm); the MW Rabi frequency at each
/// point follows from the dipole moment mu0.  x is recorded in mV/cm.
inline Trace sweep_mw_amplitude(const LadderParams& params, const OpticsChain& optics,
                                const SweepSpec& spec, double mu0 = kDefaultDipoleEa0,
                                const EvolveOptions& opt = default_sweep_options()) {
    if (spec.axis != SweepAxis::kMwAmplitude)
        throw InvalidParams("sweep_mw_amplitude requires axis = mw_amplitude");
    detail::SweepRunner runner(params, optics, spec, mu0, opt);
    return runner.run();
}

struct HysteresisPair {
    Trace up;
    Trace down;
};

/// Runs an up sweep from a fresh relaxed state, then a down sweep starting
/// from the relaxed end-state of the up sweep (the down leg's noise stream
/// is derived from the seed so the two traces stay independent).
inline HysteresisPair hysteresis_pair(const LadderParams& params, const OpticsChain& optics,
                                      const SweepSpec& spec, double mu0 = kDefaultDipoleEa0,
                                      const EvolveOptions& opt = default_sweep_options()) {
    SweepSpec spec_up = spec;
    spec_up.direction = SweepDirection::kUp;
    detail::SweepRunner up(params, optics, spec_up, mu0, opt);
    HysteresisPair pair;
    pair.up = up.run();

    SweepSpec spec_down = spec;
    spec_down.direction = SweepDirection::kDown;
    spec_down.seed = derive_seed(spec.seed, 1);
    detail::SweepRunner down(params, optics, spec_down, mu0, opt);
    down.set_initial_state(up.state(), up.committed_intensity());
    pair.down = down.run();
    return pair;
}

/// One parameter assignment inside a grid cell, addressed by a dotted key
/// (e.g. "physics.delta_c", "physics.e_mw_mv_cm", "sweep.start",
/// "optics.sigma0").
struct GridAssignment {
    std::string key;
    double value = 0.0;
};

using GridOverride = std::vector<GridAssignment>;

struct GridCellOutcome {
    Trace trace;
    std::string error;  // empty on success
    bool ok() const { return error.empty(); }
};

namespace detail {

inline void apply_assignment(LadderParams& p, OpticsChain& chain, SweepSpec& spec,
                             const GridAssignment& a, double mu0) {
    const std::string& k = a.key;
    const double v = a.value;
    if (k == "physics.omega_p") p.omega_p = v;
    else if (k == "physics.omega_c") p.omega_c = v;
    else if (k == "physics.omega_mw") p.omega_mw = v;
    else if (k == "physics.e_mw_mv_cm") p.omega_mw = metrology::rabi_from_field(v, mu0);
    else if (k == "physics.delta_p") p.delta_p = v;
    else if (k == "physics.delta_c") p.delta_c = v;
    else if (k == "physics.delta_mw") p.delta_mw = v;
    else if (k == "physics.gamma_e") p.gamma_e = v;
    else if (k == "physics.gamma_r1") p.gamma_r1 = v;
    else if (k == "physics.gamma_r2") p.gamma_r2 = v;
    else if (k == "physics.gamma_d") p.gamma_d = v;
    else if (k == "physics.V") p.V = v;
    else if (k == "sweep.start") spec.start = v;
    else if (k == "sweep.stop") spec.stop = v;
    else if (k == "sweep.rate") spec.rate = v;
    else if (k == "sweep.t_int") spec.t_int = v;
    else if (k == "optics.od0") chain.medium.od0 = v;
    else if (k == "optics.t_in") chain.cavity.t_in = v;
    else if (k == "optics.loss_empty") chain.cavity.loss_empty = v;
    else if (k == "optics.loss_cell") chain.cavity.loss_cell = v;
    else if (k == "optics.sigma0") chain.detector.sigma0 = v;
    else if (k == "optics.tau0") chain.detector.tau0 = v;
    else if (k == "optics.cavity_noise_factor") chain.detector.cavity_noise_factor = v;
    else throw SchemaError("unknown grid override key: " + k, k, 0);
}

}  // namespace detail

/// Runs one sweep per override set.  Cell i uses seed derive_seed(spec.seed, i)
/// and is fully isolated, so the output is independent of the execution
/// schedule: results are returned in input order and are bit-identical for
/// any worker count.  Per-cell failures are captured in the outcome rather
/// than aborting the batch.
inline std::vector<GridCellOutcome> run_grid(const LadderParams& params,
                                             const OpticsChain& optics,
                                             const SweepSpec& spec,
                                             const std::vector<GridOverride>& overrides,
                                             int threads = 1,
                                             double mu0 = kDefaultDipoleEa0,
                                             const EvolveOptions& opt = default_sweep_options()) {
    const std::size_t cells = overrides.size();
    std::vector<GridCellOutcome> out(cells);
    if (cells == 0) return out;
    if (threads < 1) throw InvalidParams("thread count must be >= 1");

    auto run_cell = [&](std::size_t i) {
        try {
            LadderParams p = params;
            OpticsChain chain = optics;
            SweepSpec cell_spec = spec;
            for (const GridAssignment& a : overrides[i]) {
                detail::apply_assignment(p, chain, cell_spec, a, mu0);
            }
            cell_spec.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(i));
            detail::SweepRunner runner(p, chain, cell_spec, mu0, opt);
            out[i].trace = runner.run();
        } catch (const std::exception& e) {
            out[i].error = e.what();
        }
    };

    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(threads), cells);
    if (workers <= 1) {
        for (std::size_t i = 0; i < cells; ++i) run_cell(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t wi = 0; wi < workers; ++wi) {
        pool.emplace_back([&]() {
            for (std::size_t i = next.fetch_add(1); i < cells; i = next.fetch_add(1)) {
                run_cell(i);
            }
        });
    }
    for (std::thread& t : pool) t.join();
    return out;
}

}  // namespace nept::sweep
