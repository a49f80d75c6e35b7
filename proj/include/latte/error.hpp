#pragma once

#include <stdexcept>
#include <string>

namespace latte {

/// Base error for anything that goes wrong at run time (I/O failures,
/// non-finite losses, ...). CLI maps this to exit code 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Violations of input contracts: bad shapes, malformed files, invalid
/// configuration. CLI maps this to exit code 1.
struct ValidationError : Error {
    using Error::Error;
};

}  // namespace latte
