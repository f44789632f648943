#include <catch2/catch_amalgamated.hpp>

#include "dssc/plant.hpp"
#include "dssc/trajectory.hpp"

using Catch::Approx;
using namespace dssc;

namespace {

PlantParams unit_plant() {
    PlantParams p;
    p.k_p = 1.0;
    p.a_p = 1.0;
    p.k_p_lower = 1.0;
    p.k_p_upper = 1.0;
    p.a_p_bound = 1.0;
    return p;
}

PlantParams fourth_order_plant() {
    PlantParams p;
    p.A_eta.resize(2, 2);
    p.A_eta << -1.0, 0.5, 0.0, -2.0;
    p.B_eta.resize(2);
    p.B_eta << 0.0, 1.0;
    p.C_eta.resize(2);
    p.C_eta << 0.3, 0.4;
    p.a_p = 0.5;
    p.a_p_bound = 0.5;
    return p;
}

} // namespace

TEST_CASE("sigma combines the error and its rate with the slope l0") {
    REQUIRE(compute_sigma(2.0, -1.0, 0.2) == Approx(-0.6).margin(1e-15));
    REQUIRE(compute_sigma(0.0, 0.3, 1.0) == Approx(0.3).margin(1e-15));
    REQUIRE_THROWS_AS(compute_sigma(1.0, 0.0, 0.0), validation_error);
}

TEST_CASE("plant derivative reproduces the damped double integrator") {
    const PlantParams p = unit_plant();
    PlantState s;
    s.y = 0.0;
    s.y_dot = 1.0;
    const auto d = plant_derivative(p, s, 0.0, {}, 0.0);
    REQUIRE(d.y_dot == Approx(1.0));
    REQUIRE(d.y_ddot == Approx(-1.0));
}

TEST_CASE("matched feedforward cancels the damping exactly") {
    PlantParams p = unit_plant();
    p.a_p = 2.0;
    p.a_p_bound = 2.0;
    p.k_p = 0.5;
    p.k_p_lower = 0.5;
    p.k_p_upper = 0.5;
    PlantState s;
    s.y_dot = 1.0;
    const double u_p = p.a_p * s.y_dot / p.k_p;
    const auto d = plant_derivative(p, s, u_p, {}, 0.0);
    REQUIRE(d.y_ddot == Approx(0.0).margin(1e-15));
}

TEST_CASE("zero dynamics feed back through C_eta and are driven by y_dot") {
    PlantParams p = fourth_order_plant();
    p.validate();
    PlantState s;
    s.eta.resize(2);
    s.eta << 1.0, -1.0;
    s.y_dot = 3.0;
    const auto d = plant_derivative(p, s, 2.0, {}, 0.0);
    REQUIRE(d.eta_dot[0] == Approx(-1.5).margin(1e-15));
    REQUIRE(d.eta_dot[1] == Approx(5.0).margin(1e-15));
    // y_ddot = -0.5*3 - (0.3 - 0.4) + 1*2
    REQUIRE(d.y_ddot == Approx(0.6).margin(1e-14));
}

TEST_CASE("plant validation rejects ill-posed parameter sets") {
    SECTION("unstable zero dynamics") {
        PlantParams p = unit_plant();
        p.A_eta = Eigen::MatrixXd::Constant(1, 1, 1.0);
        p.B_eta = Eigen::VectorXd::Constant(1, 1.0);
        p.C_eta = Eigen::VectorXd::Constant(1, 1.0);
        REQUIRE_THROWS_AS(p.validate(), validation_error);
    }
    SECTION("input vector must be the canonical last unit vector") {
        PlantParams p = fourth_order_plant();
        p.B_eta << 1.0, 0.0;
        REQUIRE_THROWS_AS(p.validate(), validation_error);
    }
    SECTION("gain outside its declared interval") {
        PlantParams p = unit_plant();
        p.k_p = 2.0;
        REQUIRE_THROWS_AS(p.validate(), validation_error);
    }
    SECTION("damping above its declared bound") {
        PlantParams p = unit_plant();
        p.a_p = 1.5;
        REQUIRE_THROWS_AS(p.validate(), validation_error);
    }
    SECTION("negative disturbance constants") {
        PlantParams p = unit_plant();
        p.k_d3 = -0.1;
        REQUIRE_THROWS_AS(p.validate(), validation_error);
    }
}

TEST_CASE("trajectory samples carry analytic derivatives") {
    const Trajectory traj = Trajectory::sinusoid(2.0, 0.5);
    const auto s = traj(1.0);
    REQUIRE(s.y == Approx(0.958851077208406).margin(1e-14));
    REQUIRE(s.dy == Approx(0.8775825618903728).margin(1e-14));
    REQUIRE(s.ddy == Approx(-0.2397127693021015).margin(1e-14));
    REQUIRE(s.dddy == Approx(-0.2193956404725932).margin(1e-14));
}

TEST_CASE("trajectory derivatives agree with central differences") {
    Trajectory traj(0.5, {{1.5, 0.8, 0.3}, {-0.4, 2.0, 0.0}});
    const double h = 1e-5;
    for (double t : {0.0, 0.7, 3.1, 12.0}) {
        const auto lo = traj(t - h);
        const auto hi = traj(t + h);
        const auto mid = traj(t);
        REQUIRE(mid.dy == Approx((hi.y - lo.y) / (2.0 * h)).margin(1e-6));
        REQUIRE(mid.ddy == Approx((hi.dy - lo.dy) / (2.0 * h)).margin(1e-6));
        REQUIRE(mid.dddy == Approx((hi.ddy - lo.ddy) / (2.0 * h)).margin(1e-6));
    }
}

TEST_CASE("trajectory amplitude bounds dominate the signal") {
    Trajectory traj(5.0, {{3.0, 2.0 * M_PI / 60.0, 0.0}});
    REQUIRE(traj.sup_y() == Approx(8.0));
    REQUIRE(traj.sup_derivative(1) == Approx(3.0 * 2.0 * M_PI / 60.0).margin(1e-14));
    for (double t = 0.0; t < 120.0; t += 0.37) {
        const auto s = traj(t);
        REQUIRE(std::abs(s.y) <= traj.sup_y() + 1e-12);
        REQUIRE(std::abs(s.dy) <= traj.sup_derivative(1) + 1e-12);
    }
}

TEST_CASE("tracking signals satisfy sigma = e_dot + l0 e") {
    const Trajectory traj = Trajectory::sinusoid(2.0, 0.5);
    const double l0 = 0.7;
    PlantState s;
    s.y = 1.3;
    s.y_dot = -0.4;
    for (double t : {0.0, 0.9, 4.2}) {
        const auto m = traj(t);
        const auto sig = error_dynamics_update(s, m, l0);
        const double e_dot = s.y_dot - m.dy;
        REQUIRE(sig.e == Approx(s.y - m.y).margin(1e-14));
        REQUIRE(sig.sigma == Approx(e_dot + l0 * sig.e).margin(1e-12));
        REQUIRE(sig.sigma_m_dot == Approx(m.ddy + l0 * m.dy).margin(1e-14));
    }
}

TEST_CASE("nominal control evaluates its declared linear form") {
    NominalControlSpec n;
    n.mode = NominalMode::linear;
    n.c_e = 2.0;
    n.c_sigma = 3.0;
    n.c_m1 = 0.5;
    n.c_m2 = 0.5;
    TrackingSignals sig;
    sig.e = 0.3;
    sig.sigma = -0.2;
    sig.y_m_dot = 1.0;
    sig.y_m_ddot = -2.0;
    REQUIRE(nominal_control(n, sig, 0.0, 0.0) == Approx(0.5).margin(1e-14));
}

TEST_CASE("perfect-knowledge feedforward inverts the nominal model") {
    NominalControlSpec n;
    n.mode = NominalMode::cancellation;
    n.l0 = 1.0;
    n.a_p_n = 2.0;
    n.k_p_n = 2.0;
    TrackingSignals sig;
    sig.sigma_m_dot = 0.5;
    REQUIRE(nominal_control(n, sig, 0.0, 3.0) == Approx(1.75).margin(1e-14));
}

TEST_CASE("model-based nominal control tracks the measurement time constant") {
    NominalControlSpec n;
    n.a_p_n = 1.0;
    n.k_p_n = 1.0;
    n.l0 = 0.2;
    n.configure_example71();
    REQUIRE(n.c_e == Approx(0.16).margin(1e-14));
    REQUIRE(n.c_m1 == Approx(-1.0));
    REQUIRE(n.c_m2 == Approx(-1.0));
    TrackingSignals sig;
    sig.sigma = 1.0;
    // with tau_m = 4.0166 the sigma coefficient is (l0 - a_p_n + 1/tau_m)/k_p_n
    const double u1 = nominal_control(n, sig, 0.0, 0.0, 4.0166);
    REQUIRE(u1 == Approx(0.5510332121694966).margin(1e-12));
    const double u2 = nominal_control(n, sig, 0.0, 0.0, 1.0);
    REQUIRE(u2 == Approx(-(0.2 - 1.0 + 1.0)).margin(1e-12));
}

TEST_CASE("disturbance components sum and evaluate at the plant state") {
    DisturbanceSpec d;
    d.d1 = [](double, double, double) { return 0.1; };
    d.d3 = [](double, double, double t) { return t >= 2.0 ? 0.8 : 0.0; };
    REQUIRE(d.evaluate(0.0, 0.0, 1.0) == Approx(0.1));
    REQUIRE(d.evaluate(0.0, 0.0, 2.5) == Approx(0.9));
}

TEST_CASE("disturbance spot check accepts envelopes that hold and flags ones that do not") {
    const Trajectory traj = Trajectory::sinusoid(1.0, 0.3);
    const double l0 = 0.5;
    const double c = 0.5;
    DisturbanceSpec spec;
    spec.d1 = [c, l0, traj](double y, double y_dot, double t) {
        const auto m = traj(t);
        return c * ((y_dot - m.dy) + l0 * (y - m.y));
    };
    PlantParams ok = unit_plant();
    ok.k_d3 = 0.5;
    const auto rep_ok = spot_check_disturbance(spec, ok, l0, traj);
    REQUIRE(rep_ok.d1_ok);

    PlantParams tight = unit_plant();
    tight.k_d3 = 0.4;
    const auto rep_bad = spot_check_disturbance(spec, tight, l0, traj);
    REQUIRE_FALSE(rep_bad.d1_ok);
    REQUIRE(rep_bad.worst_d1_excess > 0.0);
}
