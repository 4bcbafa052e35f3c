#pragma once

#include <stdexcept>
#include <string>

namespace crnnn {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Ill-formed network / complex / reaction data.
struct StructureError : Error {
    using Error::Error;
};

// Conflicting rate constants for the same reaction under a union.
struct AmbiguityError : Error {
    using Error::Error;
};

// Shape mismatches between vectors, matrices, and networks.
struct DimensionError : Error {
    using Error::Error;
};

// Solver or integrator failure with diagnostics in what().
struct NumericError : Error {
    using Error::Error;
};

// Bad input files (IDX, network text, JSON).
struct ParseError : Error {
    using Error::Error;
};

}  // namespace crnnn
