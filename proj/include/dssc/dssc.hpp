#pragma once

#include <optional>

#include "dssc/core.hpp"
#include "dssc/gain_design.hpp"
#include "dssc/integrators.hpp"
#include "dssc/plant.hpp"

namespace dssc {

enum class DynamicFunctionSelector {
    table1_vgsta,     // gain-design driven, synthesizes the variable-gain STA
    example71_sqrt,   // k_o and tau_m proportional to (|sigma|^(1/2) + delta)
    sta_delta_case1,  // log-regularized sqrt injection
    sta_delta_case2,  // rational-regularized sqrt injection
    constant,
};

// The vgsta/sta selectors fix the product k_o*tau_av; this picks which factor
// is held constant.
enum class ProductSplit { fixed_ko, fixed_tau_av };

struct DsscParams {
    double l0 = 0.2;
    double delta = 0.1;
    double phi_a = 1.0;
    double phi_b = 1.0;
    double epsilon = 0.5;
    double delta_rho = 0.1;

    DynamicFunctionSelector selector = DynamicFunctionSelector::constant;
    double kappa_o = 0.0, kappa_m = 0.0;   // example71_sqrt
    double kappa1 = 0.0, kappa2 = 0.0;     // sta_delta_case1/2
    double fixed_tau_av = 0.01;
    double fixed_k_o = 1.0;
    double fixed_tau_m = 1.0;              // constant selector only
    ProductSplit split = ProductSplit::fixed_ko;

    double tau_min = 1e-4;
    double tau_max = 1e3;

    double constant_rho = 0.0;             // > 0 switches the modulation to a constant

    // Norm observer; zero gain (the n = 2 case) keeps eta_bar at 0.
    double lambda_eta = 1.0;
    double observer_gain = 0.0;

    std::optional<GainSet> gains;          // required for table1_vgsta

    void validate() const {
        require(l0 > 0.0, "dssc: l0 must be > 0");
        require(delta > 0.0, "dssc: delta must be > 0");
        require(phi_a >= 0.0 && phi_b >= 0.0, "dssc: phi_a, phi_b must be >= 0");
        require(epsilon > 0.0, "dssc: epsilon must be > 0");
        require(delta_rho > 0.0, "dssc: delta_rho must be > 0");
        require(tau_min > 0.0 && tau_min < tau_max, "dssc: need 0 < tau_min < tau_max");
        require(lambda_eta > 0.0, "dssc: lambda_eta must be > 0");
        require(observer_gain >= 0.0, "dssc: observer gain must be >= 0");
        switch (selector) {
            case DynamicFunctionSelector::table1_vgsta: {
                // Design-inequality checks live in the certification path so a
                // bad gain set reports as a certification failure, not a
                // malformed configuration.
                require(gains.has_value(), "dssc: table1_vgsta selector needs a designed gain set");
                const GainSet& g = *gains;
                require(g.phi_b > 0.0 && g.kappa_c > 0.0, "dssc: gain set must be positive");
                break;
            }
            case DynamicFunctionSelector::example71_sqrt:
                require(kappa_o > 0.0 && kappa_m > 0.0, "dssc: example71_sqrt needs kappa_o, kappa_m > 0");
                require(fixed_tau_av > 0.0, "dssc: example71_sqrt needs a constant tau_av > 0");
                break;
            case DynamicFunctionSelector::sta_delta_case1:
            case DynamicFunctionSelector::sta_delta_case2:
                require(kappa1 > 0.0 && kappa2 > 0.0, "dssc: sta selectors need kappa1, kappa2 > 0");
                if (split == ProductSplit::fixed_ko)
                    require(fixed_k_o > 0.0, "dssc: fixed k_o must be > 0");
                else
                    require(fixed_tau_av > 0.0, "dssc: fixed tau_av must be > 0");
                break;
            case DynamicFunctionSelector::constant:
                require(fixed_k_o > 0.0 && fixed_tau_av > 0.0 && fixed_tau_m > 0.0,
                        "dssc: constant selector needs k_o, tau_av, tau_m > 0");
                break;
        }
    }

    static DsscParams from_gains(const GainSet& g, double delta_rho_margin) {
        DsscParams p;
        p.selector = DynamicFunctionSelector::table1_vgsta;
        p.gains = g;
        p.l0 = g.l0;
        p.delta = g.delta;
        p.phi_a = g.phi_a;
        p.phi_b = g.phi_b;
        p.epsilon = g.epsilon;
        p.delta_rho = delta_rho_margin;
        return p;
    }
};

struct DsscState {
    double u0_av = 0.0;
    double sigma_hat = 0.0;
    double eta_bar = 0.0;
    double last_u0 = 0.0;
};

struct DynamicFunctions {
    double k_o = 0.0;
    double tau_av = 0.0;
    double tau_m = 0.0;
    double phi1_hat = 0.0;
    double phi1_hat_prime = 0.0;
    bool clamped_av = false;
    bool clamped_m = false;
};

inline double phi1_hat_eq35(double sigma, double phi_a, double phi_b, double delta) {
    return phi_a * sigma / (std::sqrt(std::abs(sigma)) + delta) + phi_b * sigma;
}

inline double phi1_hat_prime_eq35(double sigma, double phi_a, double phi_b, double delta) {
    const double s = std::sqrt(std::abs(sigma));
    return phi_a * (s + 2.0 * delta) / (2.0 * (s + delta) * (s + delta)) + phi_b;
}

inline DynamicFunctions dynamic_functions(double sigma, double e, double t, const DsscParams& p) {
    (void)t;  // gains carry no explicit time dependence
    require(is_finite(sigma) && is_finite(e), "dynamic functions: non-finite input");
    DynamicFunctions f;
    f.phi1_hat = phi1_hat_eq35(sigma, p.phi_a, p.phi_b, p.delta);
    f.phi1_hat_prime = phi1_hat_prime_eq35(sigma, p.phi_a, p.phi_b, p.delta);
    const double s = std::sqrt(std::abs(sigma));

    double k_o = 0.0, tau_av = 0.0, tau_m = 0.0;
    auto split_product = [&](double product) {
        if (p.split == ProductSplit::fixed_ko) {
            k_o = p.fixed_k_o;
            tau_av = product / k_o;
        } else {
            tau_av = p.fixed_tau_av;
            k_o = std::max(product / tau_av, 1e-9);
        }
    };

    switch (p.selector) {
        case DynamicFunctionSelector::table1_vgsta: {
            const auto vg = variable_gains(sigma, e, *p.gains);
            const double denom1 = vg.dk1_dsigma * f.phi1_hat + vg.kappa1 * f.phi1_hat_prime;
            split_product(1.0 / denom1);
            const double shape = p.phi_a / (s + p.delta) + p.phi_b;
            const double denom2 = shape * (vg.dk1_de * (-p.l0 * e + sigma) + vg.kappa2 * f.phi1_hat_prime);
            tau_m = denom1 / denom2;
            break;
        }
        case DynamicFunctionSelector::example71_sqrt:
            k_o = p.kappa_o * (s + p.delta);
            tau_av = p.fixed_tau_av;
            tau_m = p.kappa_m * (s + p.delta);
            break;
        case DynamicFunctionSelector::sta_delta_case1: {
            split_product((2.0 / p.kappa1) * (s + p.delta));
            // tau_m = (k1/k2) * s^2 / (s - delta*log1p(s/delta)); the limit at
            // sigma -> 0 is 2*delta*k1/k2, reached here through the series.
            const double x = s / p.delta;
            if (x < 1e-4) {
                tau_m = (p.kappa1 / p.kappa2) * 2.0 * p.delta * (1.0 + 2.0 * x / 3.0);
            } else {
                tau_m = (p.kappa1 / p.kappa2) * s * s / (s - p.delta * std::log1p(x));
            }
            break;
        }
        case DynamicFunctionSelector::sta_delta_case2:
            split_product((2.0 / p.kappa1) * (s + p.delta));
            tau_m = (p.kappa1 / p.kappa2) * (s + p.delta);
            break;
        case DynamicFunctionSelector::constant:
            k_o = p.fixed_k_o;
            tau_av = p.fixed_tau_av;
            tau_m = p.fixed_tau_m;
            break;
    }

    f.clamped_av = tau_av < p.tau_min || tau_av > p.tau_max || !is_finite(tau_av);
    f.clamped_m = tau_m < p.tau_min || tau_m > p.tau_max || !is_finite(tau_m);
    f.tau_av = is_finite(tau_av) ? clamp(tau_av, p.tau_min, p.tau_max) : p.tau_max;
    f.tau_m = is_finite(tau_m) ? clamp(tau_m, p.tau_min, p.tau_max) : p.tau_max;
    f.k_o = is_finite(k_o) ? std::max(k_o, 1e-9) : 1e-9;
    return f;
}

inline double averaging_filter_step(double u0_av, double u0, double tau_av, double dt,
                                    bool* stiff = nullptr) {
    require(tau_av > 0.0 && dt > 0.0, "averaging filter: tau_av and dt must be > 0");
    if (stiff) *stiff = dt > tau_av / 2.0;
    return rk4_scalar_step([&](double x) { return (-x + u0) / tau_av; }, dt, u0_av);
}

inline double predictor_step(double sigma_hat, double u0_av, double u0, double tau_m,
                             double k_o, double dt, bool* stiff = nullptr) {
    require(tau_m > 0.0 && k_o > 0.0, "predictor: tau_m and k_o must be > 0");
    if (stiff) *stiff = dt > tau_m / 2.0;
    return rk4_scalar_step([&](double x) { return -x / tau_m + k_o * (-u0_av + u0); }, dt, sigma_hat);
}

inline double injection_u0(double sigma_tilde, double rho) {
    require(rho > 0.0, "injection: rho must be > 0");
    return rho * sgn(sigma_tilde);
}

// rho = (k_o + k_p_upper)|u0_av|/k_o + D_tilde/k_o + delta_rho/k_o, where
// D_tilde bounds everything the sliding variable rate can contain besides
// the injection itself.
inline double modulation_function(const DsscParams& p, const PlantParams& bounds,
                                  const TrackingSignals& sig, double y_dot, double u_n,
                                  double u0_av, double eta_bar, double k_o, double tau_m,
                                  double t) {
    if (p.constant_rho > 0.0) return p.constant_rho;
    const double alpha_d = bounds.alpha_d(sig.e + sig.y_m, y_dot, t);
    const double d_tilde = bounds.k_p_upper * std::abs(u_n) +
                           (bounds.a_p_bound + p.l0) * std::abs(y_dot) +
                           bounds.k_p_upper * alpha_d +
                           std::abs(sig.sigma_m_dot) +
                           std::abs(sig.sigma) / tau_m +
                           eta_bar;
    return (k_o + bounds.k_p_upper) * std::abs(u0_av) / k_o + d_tilde / k_o + p.delta_rho / k_o;
}

inline double norm_observer_step(double eta_bar, double y_dot, double lambda_eta,
                                 double gain, double dt) {
    require(lambda_eta > 0.0, "norm observer: lambda_eta must be > 0");
    require(gain >= 0.0, "norm observer: gain must be >= 0");
    const double next =
        rk4_scalar_step([&](double x) { return -lambda_eta * x + gain * std::abs(y_dot); }, dt, eta_bar);
    return std::max(next, 0.0);
}

struct DsscDiagnostics {
    double u = 0.0;
    double u0 = 0.0;
    double u0_av = 0.0;
    double sigma_hat = 0.0;
    double sigma_tilde = 0.0;
    double rho = 0.0;
    double tau_av = 0.0;
    double tau_m = 0.0;
    double k_o = 0.0;
    bool clamp_av = false;
    bool clamp_m = false;
    bool stiff_av = false;
    bool stiff_m = false;
};

// One discrete control step: dynamic functions and rho are sampled at the
// step start, the injection is held over the step, and the filter and
// predictor advance by dt. The returned control is -u0_av at the step start.
inline DsscDiagnostics dssc_control_step(DsscState& st, const DsscParams& p,
                                         const PlantParams& bounds, const TrackingSignals& sig,
                                         double y_dot, double u_n, double t, double dt) {
    const auto f = dynamic_functions(sig.sigma, sig.e, t, p);
    DsscDiagnostics d;
    d.rho = modulation_function(p, bounds, sig, y_dot, u_n, st.u0_av, st.eta_bar, f.k_o, f.tau_m, t);
    d.sigma_tilde = sig.sigma - st.sigma_hat;
    d.u0 = injection_u0(d.sigma_tilde, d.rho);
    d.u = -st.u0_av;

    const double u0_av_prev = st.u0_av;
    st.u0_av = averaging_filter_step(st.u0_av, d.u0, f.tau_av, dt, &d.stiff_av);
    st.sigma_hat = predictor_step(st.sigma_hat, u0_av_prev, d.u0, f.tau_m, f.k_o, dt, &d.stiff_m);
    st.eta_bar = norm_observer_step(st.eta_bar, y_dot, p.lambda_eta, p.observer_gain, dt);
    st.last_u0 = d.u0;

    d.u0_av = st.u0_av;
    d.sigma_hat = st.sigma_hat;
    d.tau_av = f.tau_av;
    d.tau_m = f.tau_m;
    d.k_o = f.k_o;
    d.clamp_av = f.clamped_av;
    d.clamp_m = f.clamped_m;
    return d;
}

} // namespace dssc
