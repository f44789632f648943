#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <functional>
#include <random>

#include "dssc/core.hpp"
#include "dssc/trajectory.hpp"

namespace dssc {

// Scalar bound envelope of (y, y_dot, t), used for declared disturbance bounds.
using BoundFn = std::function<double(double y, double y_dot, double t)>;

inline BoundFn zero_bound() {
    return [](double, double, double) { return 0.0; };
}

// Relative-degree-one uncertain plant
//   eta_dot = A_eta*eta + B_eta*y_dot
//   y_ddot  = -a_p*y_dot - C_eta'eta + k_p*(u_p + d)
// with known bounds on k_p, a_p and on the disturbance partition d = d1+d2+d3.
struct PlantParams {
    double k_p = 1.0;
    double a_p = 1.0;
    Eigen::MatrixXd A_eta;   // (n-2) x (n-2), Hurwitz
    Eigen::VectorXd B_eta;   // canonical last-unit-vector
    Eigen::VectorXd C_eta;

    double k_p_lower = 1.0;
    double k_p_upper = 1.0;
    double a_p_bound = 1.0;

    double k_d1 = 0.0, k_d2 = 0.0, k_d3 = 0.0, k_d4 = 0.0, k_d5 = 0.0;

    // Declared bound envelopes; alpha_d feeds the modulation function, the
    // others only enter design-time constants.
    BoundFn alpha_d = zero_bound();
    BoundFn alpha_d1 = zero_bound();
    BoundFn alpha_d2 = zero_bound();
    BoundFn alpha_d3 = zero_bound();

    Eigen::Index zero_dynamics_order() const { return A_eta.rows(); }

    void validate() const {
        require(k_p_lower > 0.0, "plant: k_p_lower must be > 0");
        require(k_p_lower <= k_p && k_p <= k_p_upper, "plant: k_p outside [k_p_lower, k_p_upper]");
        require(std::abs(a_p) <= a_p_bound + 1e-12, "plant: |a_p| exceeds a_p_bound");
        require(k_d1 >= 0 && k_d2 >= 0 && k_d3 >= 0 && k_d4 >= 0 && k_d5 >= 0,
                "plant: disturbance constants must be >= 0");
        const Eigen::Index m = A_eta.rows();
        require(A_eta.cols() == m, "plant: A_eta must be square");
        require(B_eta.size() == m && C_eta.size() == m, "plant: B_eta/C_eta size mismatch");
        if (m > 0) {
            Eigen::EigenSolver<Eigen::MatrixXd> es(A_eta, false);
            require(es.info() == Eigen::Success, "plant: eigen decomposition of A_eta failed");
            require(es.eigenvalues().real().maxCoeff() < 0.0, "plant: A_eta is not Hurwitz");
            for (Eigen::Index i = 0; i + 1 < m; ++i)
                require(B_eta(i) == 0.0, "plant: B_eta must be the canonical last-unit-vector");
            require(B_eta(m - 1) == 1.0, "plant: B_eta must be the canonical last-unit-vector");
        }
    }
};

struct PlantState {
    Eigen::VectorXd eta;
    double y = 0.0;
    double y_dot = 0.0;

    bool finite() const {
        return is_finite(y) && is_finite(y_dot) && eta.allFinite();
    }
};

struct PlantDerivative {
    Eigen::VectorXd eta_dot;
    double y_dot = 0.0;
    double y_ddot = 0.0;
};

// Matched input disturbance split into the three assumption classes. Bound
// constants are declared by the caller and spot-checked, not derived.
struct DisturbanceSpec {
    BoundFn d1 = zero_bound();
    BoundFn d2 = zero_bound();
    BoundFn d3 = zero_bound();
    Eigen::Vector3d wind = Eigen::Vector3d::Zero();  // UAV scenarios only

    double evaluate(double y, double y_dot, double t) const {
        return d1(y, y_dot, t) + d2(y, y_dot, t) + d3(y, y_dot, t);
    }
};

inline PlantDerivative plant_derivative(const PlantParams& p, const PlantState& s,
                                        double u_p, const DisturbanceSpec& dist, double t) {
    if (!s.finite() || !is_finite(u_p))
        throw integration_error("plant: non-finite state or input", 0);
    PlantDerivative d;
    d.eta_dot = p.A_eta * s.eta + p.B_eta * s.y_dot;
    d.y_dot = s.y_dot;
    const double c_eta_term = p.C_eta.size() > 0 ? p.C_eta.dot(s.eta) : 0.0;
    d.y_ddot = -p.a_p * s.y_dot - c_eta_term + p.k_p * (u_p + dist.evaluate(s.y, s.y_dot, t));
    return d;
}

inline double compute_sigma(double e, double e_dot, double l0) {
    require(l0 > 0.0, "sigma: l0 must be > 0");
    return e_dot + l0 * e;
}

struct TrackingSignals {
    double y_m = 0.0, y_m_dot = 0.0, y_m_ddot = 0.0;
    double e = 0.0;
    double sigma = 0.0;
    double sigma_y = 0.0;
    double sigma_m = 0.0;
    double sigma_m_dot = 0.0;
};

inline TrackingSignals error_dynamics_update(const PlantState& s, const TrajectorySample& m, double l0) {
    require(l0 > 0.0, "signals: l0 must be > 0");
    TrackingSignals sig;
    sig.y_m = m.y;
    sig.y_m_dot = m.dy;
    sig.y_m_ddot = m.ddy;
    sig.e = s.y - m.y;
    sig.sigma_y = s.y_dot + l0 * s.y;
    sig.sigma_m = m.dy + l0 * m.y;
    sig.sigma = sig.sigma_y - sig.sigma_m;
    sig.sigma_m_dot = m.ddy + l0 * m.dy;
    return sig;
}

// Nominal control: proportional + derivative-like + integral + feedforward
// terms, each bounded per declared constants. The linear form is
//   u_n = -c_e*e - c_sigma*sigma - c_m1*y_m_dot - c_m2*y_m_ddot.
enum class NominalMode {
    none,          // u_n = 0
    linear,        // constant coefficients
    example71,     // model-based coefficients, sigma coefficient tracks tau_m
    cancellation,  // perfect-knowledge: k_p_n*u_n = -(l0 - a_p_n)*y_dot + sigma_m_dot
    custom,        // user callables
};

struct NominalControlSpec {
    NominalMode mode = NominalMode::none;

    double c_e = 0.0, c_sigma = 0.0, c_m1 = 0.0, c_m2 = 0.0;

    // Nominal plant knowledge for the model-based modes.
    double a_p_n = 1.0, k_p_n = 1.0, l0 = 0.2;

    // Declared bounds per the design assumptions.
    double c_e1 = 0.0, c_e2 = 0.0;
    double c_sigma_bound = 0.0;
    double c_isigma = 0.0, c_ie = 0.0;
    double c_m = 0.0;

    std::function<double(double e)> u_p_fn;
    std::function<double(double sigma)> u_d_fn;
    std::function<double(double e, double sigma)> u_i_integrand;  // integrated by the engine
    std::function<double(double t)> u_m_fn;

    bool has_integral_term() const { return static_cast<bool>(u_i_integrand); }

    void configure_example71() {
        mode = NominalMode::example71;
        c_e = (a_p_n - l0) * l0 / k_p_n;
        c_m1 = -a_p_n;
        c_m2 = -1.0;
    }
};

// tau_m feeds the example71 time-varying sigma coefficient; u_i_state is the
// engine-integrated value of the integral term (0 when absent).
inline double nominal_control(const NominalControlSpec& n, const TrackingSignals& sig,
                              double t, double y_dot, double tau_m = 1.0, double u_i_state = 0.0) {
    switch (n.mode) {
        case NominalMode::none:
            return 0.0;
        case NominalMode::linear:
            return -n.c_e * sig.e - n.c_sigma * sig.sigma - n.c_m1 * sig.y_m_dot - n.c_m2 * sig.y_m_ddot;
        case NominalMode::example71: {
            const double c_sigma_t = (n.l0 - n.a_p_n + 1.0 / tau_m) / n.k_p_n;
            return -n.c_e * sig.e - c_sigma_t * sig.sigma - n.c_m1 * sig.y_m_dot - n.c_m2 * sig.y_m_ddot;
        }
        case NominalMode::cancellation:
            return (-(n.l0 - n.a_p_n) * y_dot + sig.sigma_m_dot) / n.k_p_n;
        case NominalMode::custom: {
            double u = u_i_state;
            if (n.u_p_fn) u += n.u_p_fn(sig.e);
            if (n.u_d_fn) u += n.u_d_fn(sig.sigma);
            if (n.u_m_fn) u += n.u_m_fn(t);
            return u;
        }
    }
    return 0.0;
}

// Random spot check of the declared disturbance bounds, run by the property
// suite: draws (y, y_dot, t), derives e and sigma from the trajectory at t,
// and verifies the declared envelope of each component.
struct DisturbanceCheckReport {
    bool d1_ok = true, d2_ok = true, d3_ok = true;
    double worst_d1_excess = 0.0;
};

inline DisturbanceCheckReport spot_check_disturbance(const DisturbanceSpec& dist, const PlantParams& p,
                                                     double l0, const Trajectory& traj,
                                                     std::size_t samples = 1000, std::uint64_t seed = 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-10.0, 10.0), time(0.0, 100.0);
    DisturbanceCheckReport rep;
    for (std::size_t i = 0; i < samples; ++i) {
        const double y = amp(rng), y_dot = amp(rng), t = time(rng);
        const auto m = traj(t);
        const double e = y - m.y;
        const double e_dot = y_dot - m.dy;
        const double sigma = compute_sigma(e, e_dot, l0);
        const double bound1 = (p.k_d1 * std::abs(y) + p.k_d2 * std::abs(y_dot) + p.k_d3) * std::abs(sigma);
        const double v1 = std::abs(dist.d1(y, y_dot, t));
        if (v1 > bound1 + 1e-12) {
            rep.d1_ok = false;
            rep.worst_d1_excess = std::max(rep.worst_d1_excess, v1 - bound1);
        }
    }
    return rep;
}

} // namespace dssc
