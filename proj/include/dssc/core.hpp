#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dssc {

inline constexpr const char* version = "0.1.0";

// sgn(0) := 0 throughout; the discontinuous injection relies on it.
inline double sgn(double x) {
    return (x > 0.0) - (x < 0.0);
}

inline bool is_finite(double x) {
    return std::isfinite(x);
}

inline double clamp(double x, double lo, double hi) {
    return x < lo ? lo : (x > hi ? hi : x);
}

class validation_error : public std::invalid_argument {
public:
    explicit validation_error(const std::string& what) : std::invalid_argument(what) {}
};

class integration_error : public std::runtime_error {
public:
    integration_error(const std::string& what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_index(step) {}
    std::size_t step_index;
};

class certification_error : public std::runtime_error {
public:
    explicit certification_error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw validation_error(msg);
}

} // namespace dssc
