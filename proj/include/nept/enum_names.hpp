#pragma once

// Canonical string names of the sweep and optics enums, shared by every
// persisted format (trace headers, JSON configs, CLI flags).

#include <string>

#include "nept/errors.hpp"
#include "nept/sweep.hpp"

namespace nept::io {

inline std::string to_string(sweep::SweepAxis axis) {
    return axis == sweep::SweepAxis::kCouplingDetuning ? "coupling_detuning"
                                                       : "mw_amplitude";
}

inline std::string to_string(sweep::SweepDirection dir) {
    return dir == sweep::SweepDirection::kUp ? "up" : "down";
}

inline std::string to_string(sweep::RampShape ramp) {
    switch (ramp) {
        case sweep::RampShape::kContinuous: return "continuous";
        case sweep::RampShape::kStepped: return "stepped";
        default: return "auto";
    }
}

inline std::string to_string(sweep::OpticsMode mode) {
    return mode == sweep::OpticsMode::kFreeSpace ? "free_space" : "cavity";
}

inline sweep::SweepAxis axis_from_string(const std::string& s) {
    if (s == "coupling_detuning") return sweep::SweepAxis::kCouplingDetuning;
    if (s == "mw_amplitude") return sweep::SweepAxis::kMwAmplitude;
    throw InvalidParams("unknown sweep axis: " + s);
}

inline sweep::SweepDirection direction_from_string(const std::string& s) {
    if (s == "up") return sweep::SweepDirection::kUp;
    if (s == "down") return sweep::SweepDirection::kDown;
    throw InvalidParams("unknown sweep direction: " + s);
}

inline sweep::RampShape ramp_from_string(const std::string& s) {
    if (s == "auto") return sweep::RampShape::kAuto;
    if (s == "continuous") return sweep::RampShape::kContinuous;
    if (s == "stepped") return sweep::RampShape::kStepped;
    throw InvalidParams("unknown ramp shape: " + s);
}

inline sweep::OpticsMode optics_mode_from_string(const std::string& s) {
    if (s == "free_space") return sweep::OpticsMode::kFreeSpace;
    if (s == "cavity") return sweep::OpticsMode::kCavity;
    throw InvalidParams("unknown optics mode: " + s);
}

}  // namespace nept::io
