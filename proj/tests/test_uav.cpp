#include <catch2/catch_amalgamated.hpp>

#include <limits>

#include "dssc/uav.hpp"

using Catch::Approx;
using namespace dssc;

TEST_CASE("hat map reproduces the cross product") {
    const Eigen::Vector3d w(0.3, -1.2, 2.0);
    const Eigen::Vector3d v(-0.5, 0.8, 0.1);
    REQUIRE((hat(w) * v - w.cross(v)).norm() < 1e-15);
    REQUIRE((hat(w) + hat(w).transpose()).norm() == 0.0);
}

TEST_CASE("gram-schmidt repair restores a proper rotation") {
    Eigen::Matrix3d r = rotation_from_euler({0.3, -0.4, 0.7});
    r(0, 1) += 0.01;
    r(2, 2) -= 0.005;
    const Eigen::Matrix3d q = orthonormalize(r);
    REQUIRE((q.transpose() * q - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    REQUIRE(q.determinant() == Approx(1.0).margin(1e-12));
}

TEST_CASE("euler angles round-trip through the rotation matrix") {
    const EulerZyx e{0.3, -0.4, 0.7};
    const EulerZyx back = euler_from_rotation(rotation_from_euler(e));
    REQUIRE(back.roll == Approx(0.3).margin(1e-12));
    REQUIRE(back.pitch == Approx(-0.4).margin(1e-12));
    REQUIRE(back.yaw == Approx(0.7).margin(1e-12));
}

TEST_CASE("yaw rate extraction inverts the euler-rate kinematics") {
    const double roll = 0.3, pitch = -0.4;
    const double roll_rate = 0.5, pitch_rate = -0.2, yaw_rate_true = 0.7;
    const Eigen::Matrix3d r = rotation_from_euler({roll, pitch, 0.9});
    const double sr = std::sin(roll), cr = std::cos(roll);
    const double st = std::sin(pitch), ct = std::cos(pitch);
    const Eigen::Vector3d omega(roll_rate - yaw_rate_true * st,
                                pitch_rate * cr + yaw_rate_true * ct * sr,
                                -pitch_rate * sr + yaw_rate_true * ct * cr);
    REQUIRE(yaw_rate(r, omega) == Approx(yaw_rate_true).margin(1e-12));
}

TEST_CASE("vehicle constants include the rotor contributions") {
    const UavParams p;
    p.validate();
    REQUIRE(p.total_mass() == Approx(10.9).margin(1e-12));
    const Eigen::Vector3d j = p.inertia_diag();
    REQUIRE(j.x() == Approx(0.44).margin(1e-12));
    REQUIRE(j.y() == Approx(0.44).margin(1e-12));
    REQUIRE(j.z() == Approx(0.74002).margin(1e-12));
    REQUIRE(p.hover_thrust() == Approx(106.929).margin(1e-9));
    REQUIRE(p.rotor_positions()[0].x() == Approx(0.40305086527633205).margin(1e-15));
}

TEST_CASE("vehicle validation rejects unsupported layouts") {
    UavParams p;
    p.n_rotors = 3;
    REQUIRE_THROWS_AS(p.validate(), validation_error);
    UavParams q;
    q.spin_sign = {1, -1, 2, -1};
    REQUIRE_THROWS_AS(q.validate(), validation_error);
    UavParams r;
    r.k_thrust = 0.0;
    REQUIRE_THROWS_AS(r.validate(), validation_error);
}

TEST_CASE("mixer inversion reproduces the commanded wrench") {
    const UavParams p;
    const Eigen::Vector3d m_cmd(1.0, 2.0, -0.5);
    const RotorCommand cmd = control_allocation(100.0, m_cmd, p);
    REQUIRE_FALSE(cmd.clamped);
    REQUIRE(cmd.f[0] == Approx(24.599029139310048).margin(1e-9));
    REQUIRE(cmd.f[1] == Approx(22.919894435474).margin(1e-9));
    REQUIRE(cmd.f[2] == Approx(25.83956735191802).margin(1e-9));
    REQUIRE(cmd.f[3] == Approx(26.641509073297932).margin(1e-9));
    REQUIRE(cmd.f.sum() == Approx(100.0).margin(1e-9));

    const double a = p.arm_length / std::sqrt(2.0);
    REQUIRE(a * (cmd.f[0] - cmd.f[1] - cmd.f[2] + cmd.f[3]) == Approx(1.0).margin(1e-9));
    REQUIRE(a * (-cmd.f[0] - cmd.f[1] + cmd.f[2] + cmd.f[3]) == Approx(2.0).margin(1e-9));
    REQUIRE(p.c_torque * (-cmd.f[0] + cmd.f[1] - cmd.f[2] + cmd.f[3]) ==
            Approx(-0.5).margin(1e-9));
}

TEST_CASE("mixer clamps negative thrusts and flags the saturation") {
    const UavParams p;
    const RotorCommand cmd = control_allocation(40.0, {30.0, 0.0, 0.0}, p);
    REQUIRE(cmd.clamped);
    REQUIRE(cmd.f.minCoeff() == 0.0);
    REQUIRE(cmd.f[0] > 0.0);
    REQUIRE(cmd.f[1] == 0.0);
}

TEST_CASE("spin rates carry the alternating rotor directions") {
    const UavParams p;
    const double f_i = p.hover_thrust() / 4.0;
    const RotorCommand cmd = control_allocation(p.hover_thrust(), Eigen::Vector3d::Zero(), p);
    REQUIRE(cmd.f[0] == Approx(f_i).margin(1e-9));
    REQUIRE(cmd.theta_dot[0] == Approx(105.53879618415212).margin(1e-9));
    REQUIRE(cmd.theta_dot[1] == Approx(-105.53879618415212).margin(1e-9));
    REQUIRE(cmd.theta_dot[2] == Approx(105.53879618415212).margin(1e-9));
    REQUIRE(cmd.theta_dot[3] == Approx(-105.53879618415212).margin(1e-9));
}

TEST_CASE("hover thrust balances gravity exactly") {
    const UavParams p;
    const UavRigidState s;
    const RotorCommand cmd = control_allocation(p.hover_thrust(), Eigen::Vector3d::Zero(), p);
    const UavDerivative d = uav_derivative(p, s, cmd.f, cmd.theta_dot, 0.0, Eigen::Vector3d::Zero());
    REQUIRE(d.p_dot.norm() == 0.0);
    REQUIRE(d.v_dot.norm() < 1e-12);
    REQUIRE(d.omega_dot.norm() < 1e-12);
    REQUIRE(d.R_dot.norm() == 0.0);
}

TEST_CASE("drag model combines rotor-level and quadratic body terms") {
    const UavParams p;
    UavRigidState s;
    s.v = Eigen::Vector3d(1.0, 0.0, 0.0);
    Eigen::Vector4d theta_dot(100.0, -100.0, 100.0, -100.0);
    const AeroForces f = aero_forces(p, s, theta_dot, Eigen::Vector3d::Zero());
    REQUIRE(f.force_world.x() == Approx(-0.0332).margin(1e-12));
    REQUIRE(f.force_world.y() == Approx(0.0).margin(1e-15));
    REQUIRE(f.force_world.z() == Approx(0.0).margin(1e-15));
    REQUIRE(f.torque_body.norm() < 1e-15);

    const AeroForces calm = aero_forces(p, s, theta_dot, s.v);
    REQUIRE(calm.force_world.norm() == 0.0);
    REQUIRE(calm.torque_body.norm() == 0.0);
}

TEST_CASE("spinning rotors react on the body through their net rate") {
    const UavParams p;
    const Eigen::Vector3d omega(0.1, -0.2, 0.3);
    const Eigen::Vector4d theta_dot(40.0, -20.0, 50.0, 30.0); // sums to 100
    const Eigen::Vector3d tau = rotor_reaction_torque(p, omega, theta_dot, 5.0);
    REQUIRE(tau.x() == Approx(-1e-4).margin(1e-18));
    REQUIRE(tau.y() == Approx(-5e-5).margin(1e-18));
    REQUIRE(tau.z() == Approx(2.5e-5).margin(1e-18));
}

TEST_CASE("rigid-body derivative rejects non-finite rotor inputs") {
    const UavParams p;
    const UavRigidState s;
    Eigen::Vector4d f = Eigen::Vector4d::Zero();
    f[2] = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(
        uav_derivative(p, s, f, Eigen::Vector4d::Zero(), 0.0, Eigen::Vector3d::Zero()),
        integration_error);
}

TEST_CASE("inner loops hold hover thrust at rest") {
    const UavParams p;
    const InnerGains g;
    g.validate();
    const InnerOutput out = inner_control(p, g, {}, {}, {});
    REQUIRE(out.f_total == Approx(106.929).margin(1e-9));
    REQUIRE(out.moment.norm() < 1e-12);
    REQUIRE(out.roll_d == 0.0);
    REQUIRE(out.pitch_d == 0.0);
    REQUIRE_FALSE(out.tilt_clamped);
    REQUIRE_FALSE(out.k_h_clamped);
}

TEST_CASE("vertical loop raises thrust against descent") {
    const UavParams p;
    const InnerGains g;
    UavRigidState s;
    s.v.z() = -0.5;
    const InnerOutput out = inner_control(p, g, s, {}, {});
    REQUIRE(out.f_total == Approx(112.379).margin(1e-9));
}

TEST_CASE("horizontal command tilts the thrust vector along heading") {
    const UavParams p;
    const InnerGains g;
    VelocityCommand cmd;
    cmd.u_x = 1.0;
    const InnerOutput fwd = inner_control(p, g, {}, {}, cmd);
    REQUIRE(fwd.pitch_d == Approx(0.10193679918450561).margin(1e-12));
    REQUIRE(fwd.roll_d == Approx(0.0).margin(1e-12));

    UavRigidState turned;
    turned.R = rotation_from_euler({0.0, 0.0, 1.5707963267948966});
    const InnerOutput side = inner_control(p, g, turned, {}, cmd);
    REQUIRE(side.roll_d == Approx(0.10193679918450561).margin(1e-12));
    REQUIRE(side.pitch_d == Approx(0.0).margin(1e-12));
}

TEST_CASE("tilt command saturates at the configured limit") {
    const UavParams p;
    const InnerGains g;
    VelocityCommand cmd;
    cmd.u_x = 10.0;
    const InnerOutput out = inner_control(p, g, {}, {}, cmd);
    REQUIRE(out.tilt_clamped);
    REQUIRE(out.pitch_d == Approx(g.tilt_max));
}

TEST_CASE("thrust projection floor engages at extreme bank") {
    const UavParams p;
    const InnerGains g;
    UavRigidState s;
    s.R = rotation_from_euler({1.5, 0.0, 0.0});
    const InnerOutput out = inner_control(p, g, s, {}, {});
    REQUIRE(out.k_h_clamped);
    REQUIRE(out.f_total == Approx(106.929 / 0.1).margin(1e-6));
}

TEST_CASE("attitude loop blends stiffness, damping, and gyroscopic relief") {
    const UavParams p;
    const InnerGains g;
    UavRigidState s;
    s.R = rotation_from_euler({0.1, 0.0, 0.0});
    s.omega = Eigen::Vector3d(0.2, -0.1, 0.05);
    const InnerOutput out = inner_control(p, g, s, {}, {});
    REQUIRE(out.moment.x() == Approx(-3.9615001).margin(1e-9));
    REQUIRE(out.moment.y() == Approx(0.6569998).margin(1e-9));
    REQUIRE(out.moment.z() == Approx(-0.037001).margin(1e-12));
}

TEST_CASE("inner gain validation enforces the loop structure") {
    InnerGains g;
    g.kd_z = 0.0;
    REQUIRE_THROWS_AS(g.validate(), validation_error);
    InnerGains h;
    h.tilt_max = 1.5;
    REQUIRE_THROWS_AS(h.validate(), validation_error);
    InnerGains k;
    k.kp_x = -0.1;
    REQUIRE_THROWS_AS(k.validate(), validation_error);
}

TEST_CASE("closed velocity loop maps to the abstract plant with one zero dynamic") {
    const PlantParams with_integral = normal_form_view(1.0, 0.3);
    REQUIRE(with_integral.zero_dynamics_order() == 1);
    REQUIRE(with_integral.A_eta(0, 0) == Approx(-0.3).margin(1e-15));
    REQUIRE(with_integral.B_eta(0) == 1.0);
    REQUIRE(with_integral.C_eta(0) == Approx(0.09).margin(1e-15));
    REQUIRE(with_integral.a_p == Approx(0.7).margin(1e-15));
    REQUIRE(with_integral.k_p_lower == Approx(1.0));
    REQUIRE(with_integral.k_p_upper == Approx(1.0));

    const PlantParams pure = normal_form_view(2.0, 0.0);
    REQUIRE(pure.zero_dynamics_order() == 0);
    REQUIRE(pure.a_p == Approx(2.0));

    REQUIRE_THROWS_AS(normal_form_view(0.0, 0.1), validation_error);
    REQUIRE_THROWS_AS(normal_form_view(1.0, -0.1), validation_error);
}
