#pragma once

#include <stdexcept>
#include <string>

namespace rcm {

/// Invalid or inconsistent experiment/model configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical run that cannot continue (CFL refusal, non-finite values).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace rcm
