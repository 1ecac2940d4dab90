#pragma once

#include <stdexcept>
#include <string>

namespace pframe {

/// Base class for every error thrown by the toolkit.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct NonpositiveMass : Error {
    using Error::Error;
};

struct EmptySupport : Error {
    using Error::Error;
};

// Mass sums further than 1e-6 (relative) from 1 are rejected instead of
// silently rescaled; see make_measure.
struct NotNormalized : Error {
    using Error::Error;
};

struct NoConvergence : Error {
    NoConvergence(const std::string& what, double residual)
        : Error(what), residual(residual) {}
    double residual = 0.0;
};

struct SingularMatrix : Error {
    SingularMatrix(const std::string& what, double lambda_min)
        : Error(what), lambda_min(lambda_min) {}
    double lambda_min = 0.0;
};

struct NotAFrame : Error {
    NotAFrame(const std::string& what, double lambda_min)
        : Error(what), lambda_min(lambda_min) {}
    double lambda_min = 0.0;
};

struct LengthMismatch : Error {
    using Error::Error;
};

struct MarginalMismatch : Error {
    using Error::Error;
};

struct NotADualWitness : Error {
    NotADualWitness(const std::string& what, double residual)
        : Error(what), residual(residual) {}
    double residual = 0.0;
};

struct NumericalInstability : Error {
    using Error::Error;
};

struct AutoRequiresZeroLambdas : Error {
    using Error::Error;
};

struct DigestMismatch : Error {
    using Error::Error;
};

struct PremiseNotSatisfied : Error {
    using Error::Error;
};

struct UnknownTheorem : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace pframe
