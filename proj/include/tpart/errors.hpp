#pragma once

#include <stdexcept>
#include <string>

namespace tpart {

/// Invalid or unsupported combination of run parameters.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values or other breakdown during a run.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tpart
