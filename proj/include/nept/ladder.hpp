#pragma once

#include <cmath>
#include <string>

#include "nept/errors.hpp"

namespace nept::core {

/// Level indices of the four-level ladder |g> -> |e> -> |r1> -> |r2>.
enum Level : int { kG = 0, kE = 1, kR1 = 2, kR2 = 3 };

/// Drive and dissipation parameters of the ladder.  All frequencies and
/// rates are ordinary frequencies in MHz (Omega/2pi convention); detunings
/// are signed.  V is the collective interaction shift coefficient in MHz
/// per unit Rydberg population: the coupling detuning seen by the atoms is
/// delta_c - V * rho_r1r1.
struct LadderParams {
    double omega_p = 19.0;   ///< probe Rabi frequency |g>-|e>
    double omega_c = 20.0;   ///< coupling Rabi frequency |e>-|r1>
    double omega_mw = 0.0;   ///< microwave Rabi frequency |r1>-|r2>
    double delta_p = 0.0;    ///< probe detuning
    double delta_c = 0.0;    ///< coupling detuning
    double delta_mw = -200.0;///< microwave detuning
    double gamma_e = 5.2;    ///< decay rate of |e>
    double gamma_r1 = 0.1;   ///< effective decay rate |r1> -> |e>
    double gamma_r2 = 0.1;   ///< effective decay rate |r2> -> |r1>
    double gamma_d = 0.5;    ///< extra dephasing on both Rydberg coherences
    double V = 0.0;          ///< collective shift coefficient (sign configurable)

    void validate() const {
        auto bad = [](const std::string& what) { throw InvalidParams("LadderParams: " + what); };
        if (!(omega_p >= 0.0)) bad("omega_p must be >= 0");
        if (!(omega_c >= 0.0)) bad("omega_c must be >= 0");
        if (!(omega_mw >= 0.0)) bad("omega_mw must be >= 0");
        if (!(gamma_e > 0.0)) bad("gamma_e must be > 0");
        if (!(gamma_r1 >= 0.0)) bad("gamma_r1 must be >= 0");
        if (!(gamma_r2 >= 0.0)) bad("gamma_r2 must be >= 0");
        if (!(gamma_d >= 0.0)) bad("gamma_d must be >= 0");
        if (!std::isfinite(delta_p) || !std::isfinite(delta_c) || !std::isfinite(delta_mw))
            bad("detunings must be finite");
        if (!std::isfinite(V)) bad("V must be finite");
    }
};

}  // namespace nept::core
