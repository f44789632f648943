#pragma once

#include <optional>

#include "dssc/core.hpp"
#include "dssc/dssc.hpp"
#include "dssc/gain_design.hpp"
#include "dssc/integrators.hpp"
#include "dssc/trace.hpp"

namespace dssc {

// Controllers the DSSC synthesizes during sliding, implemented directly for
// cross-validation: PI, the standard super-twisting algorithm, its two
// delta-regularizations, and the variable-gain approximation.
enum class StaVariant { standard, delta_case1, delta_case2, vgsta_approx, pi };

struct StaParams {
    double kappa1 = 1.0;
    double kappa2 = 1.0;
    double delta = 0.0;
    StaVariant variant = StaVariant::standard;

    double phi_a = 1.0, phi_b = 0.0;   // vgsta_approx shape
    std::optional<GainSet> gains;      // vgsta_approx variable gains

    double g1 = 0.0, g2 = 0.0;         // pi

    void validate() const {
        if (variant == StaVariant::pi) {
            require(g1 > 0.0 && g2 > 0.0, "sta: pi variant needs g1, g2 > 0");
            return;
        }
        require(kappa1 > 0.0 && kappa2 > 0.0, "sta: kappa1, kappa2 must be > 0");
        if (variant != StaVariant::standard)
            require(delta > 0.0, "sta: delta approximations need delta > 0");
        if (variant == StaVariant::vgsta_approx)
            require(gains.has_value(), "sta: vgsta_approx needs a gain set");
    }
};

struct StaState {
    double integral = 0.0;
    double t_start = 0.0;
};

struct PhiPair {
    double phi1 = 0.0;
    double phi2 = 0.0;
};

inline PhiPair phi_functions(double sigma, StaVariant variant, double delta,
                             double phi_a = 1.0, double phi_b = 0.0) {
    PhiPair p;
    if (sigma == 0.0) return p;
    const double s = std::sqrt(std::abs(sigma));
    switch (variant) {
        case StaVariant::standard:
            p.phi1 = s * sgn(sigma);
            p.phi2 = 0.5 * sgn(sigma);
            break;
        case StaVariant::delta_case1:
        case StaVariant::delta_case2: {
            require(delta > 0.0, "phi: delta must be > 0 for the approximations");
            // bracket = 1 - (delta/s)ln((s+delta)/delta) -> s/(2 delta) as s -> 0.
            const double x = s / delta;
            double bracket;
            if (x < 1e-4) {
                bracket = 0.5 * x * (1.0 - 2.0 * x / 3.0);
            } else {
                bracket = (s - delta * std::log1p(x)) / s;
            }
            p.phi1 = bracket * s * sgn(sigma);
            if (variant == StaVariant::delta_case1) {
                const double phi1_prime = 1.0 / (2.0 * (s + delta));
                p.phi2 = p.phi1 * phi1_prime;
            } else {
                p.phi2 = sigma / (2.0 * (s + delta) * (s + delta));
            }
            break;
        }
        case StaVariant::vgsta_approx:
            p.phi1 = phi1_hat_eq35(sigma, phi_a, phi_b, delta);
            p.phi2 = p.phi1 * phi1_hat_prime_eq35(sigma, phi_a, phi_b, delta);
            break;
        case StaVariant::pi:
            p.phi1 = sigma;
            p.phi2 = sigma;
            break;
    }
    return p;
}

// One discrete step with sigma (and e, for the variable-gain variant) held
// over dt. The integral advances first; the returned control reflects the
// end-of-step integral.
inline double sta_control_step(StaState& st, double sigma, const StaParams& p, double dt,
                               double e = 0.0) {
    if (p.variant == StaVariant::pi) {
        st.integral += dt * p.g2 * sigma;
        return -p.g1 * sigma - st.integral;
    }
    const auto phi = phi_functions(sigma, p.variant, p.delta, p.phi_a, p.phi_b);
    double k1 = p.kappa1, k2 = p.kappa2;
    if (p.variant == StaVariant::vgsta_approx) {
        const auto vg = variable_gains(sigma, e, *p.gains);
        k1 = vg.kappa1;
        k2 = vg.kappa2;
    }
    st.integral += dt * k2 * phi.phi2;
    return -k1 * phi.phi1 - st.integral;
}

struct EquivalenceReport {
    double sup_sigma_diff = 0.0;
    double rms_sigma_diff = 0.0;
    double sup_u_diff = 0.0;     // against u_sta + C_s
    double rms_u_diff = 0.0;
    double c_s_estimate = 0.0;
    double t_s = 0.0;
};

// Compares a DSSC trace against a direct controller trace over the
// post-sliding window. The integration constant C_s is estimated at the
// sliding onset from the DSSC control and the controller's proportional term.
inline EquivalenceReport synthesized_equivalence_report(const SimTrace& dssc_trace,
                                                        const SimTrace& sta_trace,
                                                        const StaParams& sta, double t_s,
                                                        double t_end) {
    require(dssc_trace.rows() == sta_trace.rows() &&
                std::abs(dssc_trace.dt() - sta_trace.dt()) < 1e-15,
            "equivalence: traces must share the time grid");
    const auto& sig_d = dssc_trace.column("sigma");
    const auto& sig_s = sta_trace.column("sigma");
    const auto& u_d = dssc_trace.column("u");
    const auto& u_s = sta_trace.column("u");

    EquivalenceReport rep;
    rep.t_s = t_s;
    const std::size_t i0 = dssc_trace.index_at(t_s);
    const std::size_t i1 = std::min(dssc_trace.index_at(t_end) + 1, dssc_trace.rows());
    require(i1 > i0 + 1, "equivalence: empty post-sliding window");

    if (sta.variant == StaVariant::pi) {
        rep.c_s_estimate = u_d[i0] + sta.g1 * sig_d[i0];
    } else {
        const auto phi = phi_functions(sig_d[i0], sta.variant, sta.delta, sta.phi_a, sta.phi_b);
        double k1 = sta.kappa1;
        if (sta.variant == StaVariant::vgsta_approx && sta.gains) {
            const auto& e_d = dssc_trace.column("e");
            k1 = variable_gains(sig_d[i0], e_d[i0], *sta.gains).kappa1;
        }
        rep.c_s_estimate = u_d[i0] + k1 * phi.phi1;
    }

    double acc_s = 0.0, acc_u = 0.0;
    for (std::size_t i = i0; i < i1; ++i) {
        const double ds = std::abs(sig_d[i] - sig_s[i]);
        const double du = std::abs(u_d[i] - (u_s[i] + rep.c_s_estimate));
        rep.sup_sigma_diff = std::max(rep.sup_sigma_diff, ds);
        rep.sup_u_diff = std::max(rep.sup_u_diff, du);
        acc_s += ds * ds;
        acc_u += du * du;
    }
    const double n = static_cast<double>(i1 - i0);
    rep.rms_sigma_diff = std::sqrt(acc_s / n);
    rep.rms_u_diff = std::sqrt(acc_u / n);
    return rep;
}

} // namespace dssc
