// errors.hpp — Exception types shared across the library

#pragma once

#include <stdexcept>

namespace spinbath {

// A request that is structurally valid but exceeds a hard size cap
// (e.g. explicit system amplitudes beyond the 2^M memory limit).
class unsupported_size : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A fit or estimate that cannot be formed from the samples provided.
class insufficient_data : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace spinbath
