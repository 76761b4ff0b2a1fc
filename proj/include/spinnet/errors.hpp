// errors.hpp — exception types shared across the library

#pragma once

#include <stdexcept>
#include <string>

namespace spinnet {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad network parameters (N < 2, wrong control vector length, ...)
struct InvalidSpecError : Error { using Error::Error; };

// Ring-only perturbation requested for a chain, or index out of range
struct TopologyMismatchError : Error { using Error::Error; };
struct IndexRangeError : Error { using Error::Error; };

// Low-discrepancy sampling produced no physical process within the candidate cap
struct SamplingExhaustedError : Error { using Error::Error; };

// Best achievable minimum overlap fell below the ambiguity threshold
struct BranchAmbiguityError : Error { using Error::Error; };

// Power-law fit with slope 1 (parallel to the identity line, no intersection)
struct DegenerateSlopeError : Error { using Error::Error; };

// Fewer valid grid points than the fit requires
struct InsufficientDataError : Error { using Error::Error; };

// Degenerate statistical input (constant sample)
struct ZeroVarianceError : Error { using Error::Error; };

// Malformed experiment configuration
struct ConfigError : Error { using Error::Error; };

} // namespace spinnet
