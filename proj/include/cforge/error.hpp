#pragma once

#include <stdexcept>

namespace cforge {

// File, format, or contract violation. The CLI maps these to exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite or out-of-domain numeric state. The CLI maps these to exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace cforge
