#pragma once

#include <stdexcept>
#include <string>

namespace capa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range input (empty data, non-finite values, bad
/// configuration, index out of range).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// The robust scale estimate is zero, so the data cannot be standardized.
class DegenerateScale : public Error {
public:
    using Error::Error;
};

/// A segment whose fitted variance (plus guard) is not positive, making its
/// cost minus infinity.
class DegenerateSegment : public Error {
public:
    using Error::Error;
};

} // namespace capa
