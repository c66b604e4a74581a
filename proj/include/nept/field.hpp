#pragma once

#include "nept/constants.hpp"
#include "nept/errors.hpp"

namespace nept::metrology {

/// Rabi frequency (ordinary frequency, MHz) of the MW transition driven by
/// a field E (mV/cm) on a dipole of mu0 (units of e*a0):  f = mu0*E/h.
inline double rabi_from_field(double e_mv_per_cm, double mu0 = kDefaultDipoleEa0) {
    if (!(e_mv_per_cm >= 0.0)) throw InvalidParams("field must be >= 0");
    if (!(mu0 > 0.0)) throw InvalidParams("dipole moment must be > 0");
    return mu0 * e_mv_per_cm * kRabiMHzPerEa0PermVcm;
}

/// Inverse of rabi_from_field; exact round trip.
inline double field_from_rabi(double omega_mhz, double mu0 = kDefaultDipoleEa0) {
    if (!(omega_mhz >= 0.0)) throw InvalidParams("Rabi frequency must be >= 0");
    if (!(mu0 > 0.0)) throw InvalidParams("dipole moment must be > 0");
    return omega_mhz / (mu0 * kRabiMHzPerEa0PermVcm);
}

}  // namespace nept::metrology
