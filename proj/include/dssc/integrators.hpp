#pragma once

#include <Eigen/Core>
#include <functional>

#include "dssc/core.hpp"

namespace dssc {

// Classic fixed-step RK4 over a flat state vector. Discontinuous inputs must
// be sampled-and-held by the caller before the step; the derivative callback
// is expected to be smooth in (t, x) within one step.
class Rk4 {
public:
    using Derivative = std::function<void(double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx)>;

    explicit Rk4(Eigen::Index dim)
        : k1_(dim), k2_(dim), k3_(dim), k4_(dim), tmp_(dim) {}

    void step(const Derivative& f, double t, double dt, Eigen::VectorXd& x) {
        f(t, x, k1_);
        tmp_ = x + 0.5 * dt * k1_;
        f(t + 0.5 * dt, tmp_, k2_);
        tmp_ = x + 0.5 * dt * k2_;
        f(t + 0.5 * dt, tmp_, k3_);
        tmp_ = x + dt * k3_;
        f(t + dt, tmp_, k4_);
        x += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }

private:
    Eigen::VectorXd k1_, k2_, k3_, k4_, tmp_;
};

// Scalar RK4 step for the standalone filter/predictor operations, where the
// right-hand side is autonomous apart from inputs held constant over the step.
inline double rk4_scalar_step(const std::function<double(double)>& f, double dt, double x) {
    const double k1 = f(x);
    const double k2 = f(x + 0.5 * dt * k1);
    const double k3 = f(x + 0.5 * dt * k2);
    const double k4 = f(x + dt * k3);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

} // namespace dssc
