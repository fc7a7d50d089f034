#pragma once

#include <stdexcept>
#include <string>

namespace deepmatch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes or dimensions of two operands disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A documented precondition of an operation does not hold (empty arm,
/// out-of-range argument, unsupported function class, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A computation produced non-finite values or a solver failed.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Malformed input file (CSV, IDX, config).
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace deepmatch
