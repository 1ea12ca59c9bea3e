// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace dacq {

// Base for everything thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Failure to open, read or write a file.
struct IoError : Error {
    using Error::Error;
};

// Malformed or inconsistent file contents (bad magic, truncated payload,
// invariant-violating fields). The CLI maps these to the data-error exit code.
struct FormatError : Error {
    using Error::Error;
};

// Dimension or length disagreement between buffers that must match.
struct ShapeError : Error {
    using Error::Error;
};

// Input values outside the documented domain (non-finite weights, p outside
// (0,1), gamma outside [0,1], ...).
struct ValueError : Error {
    using Error::Error;
};

// Invalid flag values or flag combinations; exits with the config error code
// rather than the data one.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace dacq
