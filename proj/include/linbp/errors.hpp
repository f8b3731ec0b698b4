#pragma once
// Exception types shared across the library.

#include <stdexcept>
#include <string>

namespace linbp {

// Invalid configuration file, bad key, violated config invariant.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure that is not a programming error: singular system,
// zero-information statistics, missing fixed point.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Message iteration left the stable region. Carries the iteration index at
// which divergence was detected (0 = rejected before the first update).
class DivergenceError : public NumericalError {
public:
    DivergenceError(int iteration, const std::string& what)
        : NumericalError(what), iteration_(iteration) {}
    int iteration() const { return iteration_; }

private:
    int iteration_;
};

}  // namespace linbp
