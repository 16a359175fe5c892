#pragma once

#include <stdexcept>
#include <string>

namespace klsh {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller-supplied input violates a precondition (bad config, malformed file,
/// mismatched dimensions). The CLI maps these to exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A numeric procedure could not produce a valid result (degenerate
/// spectrum, eigensolver failure). The CLI maps these to exit code 2.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace klsh
