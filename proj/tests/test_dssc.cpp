#include <catch2/catch_amalgamated.hpp>

#include "dssc/dssc.hpp"

using Catch::Approx;
using namespace dssc;

namespace {

DsscParams constant_params(double k_o = 5.0, double tau_av = 0.01, double tau_m = 0.5) {
    DsscParams p;
    p.selector = DynamicFunctionSelector::constant;
    p.fixed_k_o = k_o;
    p.fixed_tau_av = tau_av;
    p.fixed_tau_m = tau_m;
    return p;
}

GainSet worked_gain_set() {
    PlantParams plant;
    plant.k_p = 1.0;
    plant.a_p = 1.0;
    plant.k_p_lower = 0.8;
    plant.k_p_upper = 1.25;
    plant.a_p_bound = 1.0;
    FreeDesignParams free;
    free.l0 = 1.0;
    free.phi_a = 0.2;
    free.epsilon = 0.5;
    free.delta = 0.1;
    free.eps1 = 1.0;
    free.eps2 = 0.1;
    free.eps3 = 0.1;
    return design_gains(plant, {}, free);
}

} // namespace

TEST_CASE("sign convention maps zero to zero") {
    REQUIRE(sgn(3.2) == 1.0);
    REQUIRE(sgn(-0.4) == -1.0);
    REQUIRE(sgn(0.0) == 0.0);
}

TEST_CASE("discontinuous injection scales the sign of the predictor error") {
    REQUIRE(injection_u0(0.3, 2.0) == Approx(2.0));
    REQUIRE(injection_u0(-0.3, 2.0) == Approx(-2.0));
    REQUIRE(injection_u0(0.0, 2.0) == Approx(0.0));
    REQUIRE_THROWS_AS(injection_u0(0.1, 0.0), validation_error);
}

TEST_CASE("averaging filter advances one exact fourth-order step") {
    // dt/tau = 0.1 toward a held input of 2 from rest
    const double next = averaging_filter_step(0.0, 2.0, 0.01, 1e-3);
    REQUIRE(next == Approx(0.19032499999999986).margin(1e-15));
}

TEST_CASE("averaging filter converges to the held input") {
    double x = 0.0;
    for (int i = 0; i < 30; ++i) x = averaging_filter_step(x, 1.0, 0.01, 1e-3);
    REQUIRE(x == Approx(0.9502127963341954).margin(1e-12));
    // continuous limit 1 - exp(-3)
    REQUIRE(x == Approx(0.950212931632136).margin(1e-6));
}

TEST_CASE("averaging filter reports stiffness when dt crosses half the time constant") {
    bool stiff = false;
    averaging_filter_step(0.0, 1.0, 0.01, 6e-3, &stiff);
    REQUIRE(stiff);
    averaging_filter_step(0.0, 1.0, 0.01, 4e-3, &stiff);
    REQUIRE_FALSE(stiff);
}

TEST_CASE("predictor decays at the measurement time constant without forcing") {
    double x = 1.0;
    for (int i = 0; i < 1000; ++i) x = predictor_step(x, 0.0, 0.0, 1.0, 1.0, 1e-3);
    REQUIRE(x == Approx(0.36787944117141214).margin(1e-12));
}

TEST_CASE("predictor integrates the injection mismatch") {
    const double one = predictor_step(0.0, 0.0, 2.0, 0.5, 5.0, 1e-3);
    REQUIRE(one == Approx(0.009990006663333495).margin(1e-15));
    double x = 0.0;
    for (int i = 0; i < 500; ++i) x = predictor_step(x, 0.0, 5.0, 1.0, 1.0, 1e-3);
    REQUIRE(x == Approx(1.967346701436953).margin(1e-12));
}

TEST_CASE("norm observer tracks a filtered speed bound and stays nonnegative") {
    double x = 0.0;
    for (int i = 0; i < 1000; ++i) x = norm_observer_step(x, 4.0, 2.0, 3.0, 1e-3);
    REQUIRE(x == Approx(5.187988300580067).margin(1e-12));
    REQUIRE(norm_observer_step(-0.5, 0.0, 1.0, 0.0, 1e-3) >= 0.0);
}

TEST_CASE("regularized injection shape and slope match their closed forms") {
    REQUIRE(phi1_hat_eq35(1.0, 1.0, 0.0, 0.1) == Approx(0.9090909090909091).margin(1e-15));
    REQUIRE(phi1_hat_prime_eq35(1.0, 1.0, 0.0, 0.1) ==
            Approx(0.4958677685950412).margin(1e-15));
    // odd in sigma, linear term passes through
    REQUIRE(phi1_hat_eq35(-1.0, 1.0, 0.0, 0.1) == Approx(-0.9090909090909091).margin(1e-15));
    REQUIRE(phi1_hat_eq35(0.5, 0.0, 2.1, 0.1) == Approx(1.05).margin(1e-15));
    REQUIRE(phi1_hat_eq35(0.0, 1.0, 2.0, 0.1) == 0.0);
}

TEST_CASE("modulation function assembles the declared disturbance budget") {
    DsscParams p = constant_params();
    p.l0 = 1.0;
    p.delta_rho = 0.1;
    PlantParams bounds;
    bounds.k_p = 1.0;
    bounds.k_p_lower = 0.5;
    bounds.k_p_upper = 2.0;
    bounds.a_p_bound = 1.0;
    bounds.alpha_d = [](double, double, double) { return 0.5; };
    TrackingSignals sig;
    sig.e = 0.3;
    sig.sigma = 0.4;
    sig.sigma_m_dot = 0.25;
    const double rho = modulation_function(p, bounds, sig, -0.6, 0.7, -0.2, 0.05, 5.0, 0.5, 0.0);
    REQUIRE(rho == Approx(1.24).margin(1e-12));
}

TEST_CASE("constant modulation override bypasses the budget") {
    DsscParams p = constant_params();
    p.constant_rho = 4.0;
    PlantParams bounds;
    TrackingSignals sig;
    sig.sigma = 100.0;
    REQUIRE(modulation_function(p, bounds, sig, 50.0, 50.0, 50.0, 50.0, 5.0, 0.5, 0.0) ==
            Approx(4.0));
}

TEST_CASE("sqrt-scheduled selector scales both gains with the sliding variable") {
    DsscParams p;
    p.selector = DynamicFunctionSelector::example71_sqrt;
    p.kappa_o = 110.651;
    p.kappa_m = 4.0166;
    p.fixed_tau_av = 0.03;
    p.delta = 1.0;
    p.validate();
    const auto f0 = dynamic_functions(0.0, 0.0, 0.0, p);
    REQUIRE(f0.k_o == Approx(110.651).margin(1e-12));
    REQUIRE(f0.tau_m == Approx(4.0166).margin(1e-12));
    REQUIRE(f0.tau_av == Approx(0.03));
    const auto f4 = dynamic_functions(4.0, 0.0, 0.0, p);
    REQUIRE(f4.k_o == Approx(331.953).margin(1e-9));
    REQUIRE(f4.tau_m == Approx(12.049800000000001).margin(1e-9));
}

TEST_CASE("sqrt-injection selectors fix the filter product and split it as configured") {
    DsscParams p;
    p.selector = DynamicFunctionSelector::sta_delta_case2;
    p.kappa1 = 1.5;
    p.kappa2 = 0.8;
    p.delta = 0.1;
    p.split = ProductSplit::fixed_tau_av;
    p.fixed_tau_av = 0.02;
    p.validate();
    const auto f = dynamic_functions(0.25, 0.0, 0.0, p);
    // k_o * tau_av = (2/kappa1)(sqrt|sigma| + delta)
    REQUIRE(f.tau_av == Approx(0.02));
    REQUIRE(f.k_o * f.tau_av == Approx(0.8).margin(1e-12));
    REQUIRE(f.tau_m == Approx(1.125).margin(1e-12));

    p.split = ProductSplit::fixed_ko;
    p.fixed_k_o = 10.0;
    const auto g = dynamic_functions(0.25, 0.0, 0.0, p);
    REQUIRE(g.k_o == Approx(10.0));
    REQUIRE(g.tau_av == Approx(0.08).margin(1e-12));
}

TEST_CASE("log-regularized selector is continuous across its series branch") {
    DsscParams p;
    p.selector = DynamicFunctionSelector::sta_delta_case1;
    p.kappa1 = 1.5;
    p.kappa2 = 0.8;
    p.delta = 0.1;
    p.split = ProductSplit::fixed_ko;
    p.fixed_k_o = 1.0;
    p.validate();
    REQUIRE(dynamic_functions(0.25, 0.0, 0.0, p).tau_m ==
            Approx(1.461081223505435).margin(1e-12));
    REQUIRE(dynamic_functions(1e-12, 0.0, 0.0, p).tau_m == Approx(0.3750025).margin(1e-9));
    // values just below and above the series switch stay close
    const double s_lo = 0.99e-4 * p.delta, s_hi = 1.01e-4 * p.delta;
    const double lo = dynamic_functions(s_lo * s_lo, 0.0, 0.0, p).tau_m;
    const double hi = dynamic_functions(s_hi * s_hi, 0.0, 0.0, p).tau_m;
    REQUIRE(lo == Approx(hi).epsilon(1e-5));
}

TEST_CASE("designed selector reproduces the variable-gain schedule") {
    const GainSet g = worked_gain_set();
    DsscParams p = DsscParams::from_gains(g, 0.1);
    p.split = ProductSplit::fixed_tau_av;
    p.fixed_tau_av = 0.01;
    p.validate();
    const auto f = dynamic_functions(0.5, 0.2, 0.0, p);
    REQUIRE(f.phi1_hat == Approx(1.1738993430992954).margin(1e-12));
    REQUIRE(f.phi1_hat_prime == Approx(2.2392503903197323).margin(1e-12));
    REQUIRE(f.k_o * f.tau_av == Approx(0.005050967691751888).margin(1e-15));
    REQUIRE(f.tau_m == Approx(0.42051487390953346).margin(1e-12));
}

TEST_CASE("time constants clamp at their configured range and report it") {
    DsscParams p = constant_params(1.0, 0.01, 5000.0);
    const auto f = dynamic_functions(0.0, 0.0, 0.0, p);
    REQUIRE(f.tau_m == Approx(p.tau_max));
    REQUIRE(f.clamped_m);
    REQUIRE_FALSE(f.clamped_av);

    DsscParams q = constant_params(1.0, 1e-6, 0.5);
    const auto h = dynamic_functions(0.0, 0.0, 0.0, q);
    REQUIRE(h.tau_av == Approx(q.tau_min));
    REQUIRE(h.clamped_av);
}

TEST_CASE("parameter validation rejects incomplete selector setups") {
    DsscParams p;
    p.selector = DynamicFunctionSelector::table1_vgsta;
    REQUIRE_THROWS_AS(p.validate(), validation_error);

    DsscParams q;
    q.selector = DynamicFunctionSelector::example71_sqrt;
    q.kappa_o = 0.0;
    q.kappa_m = 1.0;
    REQUIRE_THROWS_AS(q.validate(), validation_error);

    DsscParams r = constant_params();
    r.delta_rho = 0.0;
    REQUIRE_THROWS_AS(r.validate(), validation_error);
}

TEST_CASE("designed parameters inherit the gain set's shape") {
    const GainSet g = worked_gain_set();
    const DsscParams p = DsscParams::from_gains(g, 0.25);
    REQUIRE(p.selector == DynamicFunctionSelector::table1_vgsta);
    REQUIRE(p.l0 == Approx(g.l0));
    REQUIRE(p.phi_a == Approx(g.phi_a));
    REQUIRE(p.phi_b == Approx(g.phi_b));
    REQUIRE(p.delta == Approx(g.delta));
    REQUIRE(p.epsilon == Approx(g.epsilon));
    REQUIRE(p.delta_rho == Approx(0.25));
    REQUIRE(p.gains.has_value());
}

TEST_CASE("one control step freezes the injection and advances all three states") {
    DsscParams p = constant_params();
    p.constant_rho = 2.0;
    p.l0 = 0.2;
    PlantParams bounds;
    TrackingSignals sig;
    sig.sigma = 1.0;
    DsscState st;
    const auto d = dssc_control_step(st, p, bounds, sig, 0.0, 0.0, 0.0, 1e-3);
    REQUIRE(d.sigma_tilde == Approx(1.0));
    REQUIRE(d.u0 == Approx(2.0));
    REQUIRE(d.u == Approx(0.0));                     // control is -u0_av at the step start
    REQUIRE(st.u0_av == Approx(0.19032499999999986).margin(1e-15));
    REQUIRE(st.sigma_hat == Approx(0.009990006663333495).margin(1e-15));
    REQUIRE(st.eta_bar == 0.0);
    REQUIRE(d.rho == Approx(2.0));
    REQUIRE(st.last_u0 == Approx(2.0));
}

TEST_CASE("repeated control steps drive the predictor error toward zero") {
    DsscParams p = constant_params(5.0, 0.01, 0.5);
    p.delta_rho = 0.1;
    p.l0 = 0.2;
    PlantParams bounds;
    TrackingSignals sig;
    sig.sigma = 0.0;     // plant pinned; only the internal loop moves
    DsscState st;
    st.sigma_hat = -1.0; // predictor error starts at 1
    double t = 0.0;
    const double dt = 1e-3;
    while (t < 10.0 && std::abs(sig.sigma - st.sigma_hat) > 1e-3) {
        dssc_control_step(st, p, bounds, sig, 0.0, 0.0, t, dt);
        t += dt;
    }
    REQUIRE(std::abs(sig.sigma - st.sigma_hat) <= 1e-3);
    REQUIRE(t < 10.0);
}
