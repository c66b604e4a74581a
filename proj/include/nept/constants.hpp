#pragma once

namespace nept {

// All user-facing frequencies and rates are ordinary frequencies in MHz
// (the f = omega/2pi convention); time is in microseconds.  The 2pi enters
// only when assembling generators and converting times.
inline constexpr double kPi = 3.1415926535897932384626433832795;
inline constexpr double kTwoPi = 2.0 * kPi;

// CODATA 2018 exact values.
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kPlanck = 6.62607015e-34;             // J s
inline constexpr double kBohrRadius = 5.29177210903e-11;      // m

/// Rabi frequency (ordinary, MHz) produced by a field of 1 mV/cm on a
/// transition with dipole moment 1 e*a0:  f = mu*E/h.
/// 1 mV/cm = 0.1 V/m; the 1e-6 converts Hz to MHz.
inline constexpr double kRabiMHzPerEa0PermVcm =
    kElementaryCharge * kBohrRadius * 0.1 / kPlanck * 1e-6;

/// Default |r1> -> |r2> transition dipole moment, in units of e*a0.
inline constexpr double kDefaultDipoleEa0 = 2938.0;

}  // namespace nept
