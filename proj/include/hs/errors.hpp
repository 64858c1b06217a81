#pragma once
#include <stdexcept>
#include <string>

namespace hs {

/// Bad input: malformed spec, invalid parameters, unsupported combination. CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An iterative method gave up. CLI exit code 3.
struct NonConvergence : std::runtime_error {
    double achieved;
    NonConvergence(const std::string& what, double achieved_residual)
        : std::runtime_error(what), achieved(achieved_residual) {}
};

} // namespace hs
