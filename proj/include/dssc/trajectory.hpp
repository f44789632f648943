#pragma once

#include <cmath>
#include <vector>

#include "dssc/core.hpp"

namespace dssc {

// Desired trajectory as offset + sum of sinusoids, with derivatives supplied
// analytically (never finite-differenced). Third derivative is carried because
// the design-time disturbance bounds need the rate of the feedforward term.
struct SinusoidTerm {
    double amplitude = 0.0;
    double omega = 0.0;   // rad/s
    double phase = 0.0;   // rad
};

struct TrajectorySample {
    double y = 0.0;
    double dy = 0.0;
    double ddy = 0.0;
    double dddy = 0.0;
};

class Trajectory {
public:
    Trajectory() = default;
    explicit Trajectory(double offset, std::vector<SinusoidTerm> terms = {})
        : offset_(offset), terms_(std::move(terms)) {}

    static Trajectory constant(double value) { return Trajectory(value); }

    static Trajectory sinusoid(double amplitude, double omega, double phase = 0.0, double offset = 0.0) {
        return Trajectory(offset, {SinusoidTerm{amplitude, omega, phase}});
    }

    TrajectorySample operator()(double t) const {
        TrajectorySample s;
        s.y = offset_;
        for (const auto& term : terms_) {
            const double a = term.amplitude;
            const double w = term.omega;
            const double arg = w * t + term.phase;
            s.y += a * std::sin(arg);
            s.dy += a * w * std::cos(arg);
            s.ddy += -a * w * w * std::sin(arg);
            s.dddy += -a * w * w * w * std::cos(arg);
        }
        return s;
    }

    // Amplitude-sum bounds, used by the gain designer for trajectory-dependent
    // disturbance constants.
    double sup_y() const {
        double s = std::abs(offset_);
        for (const auto& term : terms_) s += std::abs(term.amplitude);
        return s;
    }
    double sup_derivative(int order) const {
        double s = 0.0;
        for (const auto& term : terms_) s += std::abs(term.amplitude) * std::pow(std::abs(term.omega), order);
        return s;
    }

    double offset() const { return offset_; }
    const std::vector<SinusoidTerm>& terms() const { return terms_; }

private:
    double offset_ = 0.0;
    std::vector<SinusoidTerm> terms_;
};

} // namespace dssc
