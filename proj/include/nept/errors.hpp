#pragma once

#include <stdexcept>
#include <string>

namespace nept {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidParams : Error {
    using Error::Error;
};

// physics-core
struct DegenerateKernel : Error {
    using Error::Error;
};
struct MarginalStability : Error {
    using Error::Error;
};
struct StepFailure : Error {
    using Error::Error;
};

// optics-chain
struct ZeroProbe : Error {
    using Error::Error;
};
struct Overcoupled : Error {
    using Error::Error;
};
struct NoConvergence : Error {
    using Error::Error;
};

// metrology
struct TooFewPoints : Error {
    using Error::Error;
};
struct RegionTooSmall : Error {
    using Error::Error;
};
struct ZeroVariance : Error {
    using Error::Error;
};
struct NonpositiveF : Error {
    using Error::Error;
};
struct NonpositivePoint : Error {
    using Error::Error;
};
struct DegenerateData : Error {
    using Error::Error;
};
struct NoSplitting : Error {
    using Error::Error;
};
struct NoEdge : Error {
    using Error::Error;
};
struct TooFewSamples : Error {
    using Error::Error;
};
struct OutOfLinearRange : Error {
    using Error::Error;
};

// cli-io
struct SchemaError : Error {
    SchemaError(const std::string& msg, std::string key_path, int src_line = 0)
        : Error(msg), path(std::move(key_path)), line(src_line) {}
    std::string path;  ///< dotted key path, e.g. "physics.omega_q"
    int line;          ///< 1-based source line when known, 0 otherwise
};

struct FormatError : Error {
    FormatError(const std::string& msg, int src_line = 0) : Error(msg), line(src_line) {}
    int line;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace nept
