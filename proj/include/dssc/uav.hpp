#pragma once

#include <Eigen/Dense>
#include <array>

#include "dssc/core.hpp"
#include "dssc/plant.hpp"

namespace dssc {

inline Eigen::Matrix3d hat(const Eigen::Vector3d& w) {
    Eigen::Matrix3d m;
    m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
    return m;
}

// Re-orthonormalizes a rotation matrix by Gram-Schmidt on its columns.
inline Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& R) {
    Eigen::Vector3d c0 = R.col(0).normalized();
    Eigen::Vector3d c1 = (R.col(1) - c0 * c0.dot(R.col(1))).normalized();
    Eigen::Vector3d c2 = c0.cross(c1);
    Eigen::Matrix3d out;
    out.col(0) = c0;
    out.col(1) = c1;
    out.col(2) = c2;
    return out;
}

struct EulerZyx {
    double roll = 0.0, pitch = 0.0, yaw = 0.0;
};

inline EulerZyx euler_from_rotation(const Eigen::Matrix3d& R) {
    EulerZyx e;
    e.roll = std::atan2(R(2, 1), R(2, 2));
    e.pitch = -std::asin(clamp(R(2, 0), -1.0, 1.0));
    e.yaw = std::atan2(R(1, 0), R(0, 0));
    return e;
}

inline Eigen::Matrix3d rotation_from_euler(const EulerZyx& e) {
    return (Eigen::AngleAxisd(e.yaw, Eigen::Vector3d::UnitZ()) *
            Eigen::AngleAxisd(e.pitch, Eigen::Vector3d::UnitY()) *
            Eigen::AngleAxisd(e.roll, Eigen::Vector3d::UnitX()))
        .toRotationMatrix();
}

// Yaw rate of the ZYX Euler angles for a given body angular velocity.
inline double yaw_rate(const Eigen::Matrix3d& R, const Eigen::Vector3d& omega) {
    const EulerZyx e = euler_from_rotation(R);
    const double c_th = std::cos(e.pitch);
    if (std::abs(c_th) < 1e-6) return omega.z();
    return (std::sin(e.roll) * omega.y() + std::cos(e.roll) * omega.z()) / c_th;
}

// Quadrotor with spinning-rotor inertia, rotor reaction torque, and
// velocity-dependent drag on each rotor and on the body.
struct UavParams {
    double base_mass = 10.5;
    double rotor_mass = 0.1;
    int n_rotors = 4;
    Eigen::Vector3d body_inertia{0.4, 0.4, 0.74};
    Eigen::Vector3d rotor_inertia{0.01, 0.01, 0.5e-5};
    double k_thrust = 0.0024;
    double c_torque = 0.57;
    Eigen::Vector3d body_drag{0.03, 0.03, 0.015}; // K_Fd diagonal
    double rotor_drag = 8e-6;                     // K_Fdi, isotropic
    double rotor_radius = 0.1;
    double arm_length = 0.57;
    std::array<int, 4> spin_sign{1, -1, 1, -1};
    double gravity = 9.81;

    double total_mass() const { return base_mass + n_rotors * rotor_mass; }

    Eigen::Vector3d inertia_diag() const {
        return {n_rotors * rotor_inertia.x() + body_inertia.x(),
                n_rotors * rotor_inertia.y() + body_inertia.y(),
                n_rotors * rotor_inertia.z() + body_inertia.z()};
    }

    // Arms along the diagonals, rotors in the center-of-mass plane.
    std::array<Eigen::Vector3d, 4> rotor_positions() const {
        const double a = arm_length / std::sqrt(2.0);
        return {Eigen::Vector3d(a, a, 0.0), Eigen::Vector3d(a, -a, 0.0),
                Eigen::Vector3d(-a, -a, 0.0), Eigen::Vector3d(-a, a, 0.0)};
    }

    double hover_thrust() const { return total_mass() * gravity; }

    void validate() const {
        require(base_mass > 0.0 && rotor_mass >= 0.0, "uav: masses must be positive");
        require(n_rotors == 4, "uav: only the four-rotor layout is supported");
        require(k_thrust > 0.0, "uav: k_thrust must be > 0");
        require(c_torque >= 0.0 && rotor_drag >= 0.0, "uav: drag coefficients must be >= 0");
        require((body_inertia.array() > 0.0).all(), "uav: body inertia must be positive");
        require((rotor_inertia.array() >= 0.0).all(), "uav: rotor inertia must be >= 0");
        require(arm_length > 0.0, "uav: arm length must be > 0");
        require(gravity > 0.0, "uav: gravity must be > 0");
        for (int s : spin_sign) require(s == 1 || s == -1, "uav: spin signs must be +/-1");
    }
};

struct UavRigidState {
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
    Eigen::Vector3d v = Eigen::Vector3d::Zero();
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d omega = Eigen::Vector3d::Zero();
};

struct RotorCommand {
    Eigen::Vector4d f = Eigen::Vector4d::Zero();         // individual thrusts
    Eigen::Vector4d theta_dot = Eigen::Vector4d::Zero(); // signed spin rates
    bool clamped = false;                                // some thrust hit zero
};

// Inverts the standard X-configuration mixer for total thrust and body
// moments. Negative solutions are clamped to zero and flagged.
inline RotorCommand control_allocation(double f_total, const Eigen::Vector3d& M,
                                       const UavParams& p) {
    const double a = p.arm_length / std::sqrt(2.0);
    const double mx = M.x() / (4.0 * a);
    const double my = M.y() / (4.0 * a);
    const double mz = M.z() / (4.0 * p.c_torque);
    const double f4 = f_total / 4.0;

    RotorCommand cmd;
    cmd.f[0] = f4 + mx - my - mz;
    cmd.f[1] = f4 - mx - my + mz;
    cmd.f[2] = f4 - mx + my - mz;
    cmd.f[3] = f4 + mx + my + mz;
    for (int i = 0; i < 4; ++i) {
        if (cmd.f[i] < 0.0) {
            cmd.f[i] = 0.0;
            cmd.clamped = true;
        }
        cmd.theta_dot[i] = p.spin_sign[static_cast<std::size_t>(i)] *
                           std::sqrt(cmd.f[i] / p.k_thrust);
    }
    return cmd;
}

struct AeroForces {
    Eigen::Vector3d force_world = Eigen::Vector3d::Zero();
    Eigen::Vector3d torque_body = Eigen::Vector3d::Zero();
};

// Rotor-level and body-level drag. Rotor drag acts at each hub on its
// air-relative velocity; body drag is quadratic in the frame of the body.
inline AeroForces aero_forces(const UavParams& p, const UavRigidState& s,
                              const Eigen::Vector4d& theta_dot, const Eigen::Vector3d& wind) {
    AeroForces out;
    const auto pos = p.rotor_positions();
    for (int i = 0; i < 4; ++i) {
        const Eigen::Vector3d hub_v = s.v + s.R * s.omega.cross(pos[static_cast<std::size_t>(i)]);
        const Eigen::Vector3d v_ri = hub_v - wind;
        const Eigen::Vector3d f_di = -p.rotor_drag * std::abs(theta_dot[i]) * v_ri;
        out.force_world += f_di;
        out.torque_body += pos[static_cast<std::size_t>(i)].cross(s.R.transpose() * f_di);
    }
    const Eigen::Vector3d v_r = s.v - wind;
    const Eigen::Vector3d v_r_body = s.R.transpose() * v_r;
    out.force_world += -s.R * p.body_drag.asDiagonal() * v_r_body * v_r.norm();
    return out;
}

// Gyroscopic and acceleration reaction of the spinning rotors on the body.
inline Eigen::Vector3d rotor_reaction_torque(const UavParams& p, const Eigen::Vector3d& omega,
                                             const Eigen::Vector4d& theta_dot,
                                             double theta_ddot_sum) {
    const double iz = p.rotor_inertia.z();
    const double spin_sum = theta_dot.sum();
    return {iz * omega.y() * spin_sum, -iz * omega.x() * spin_sum, iz * theta_ddot_sum};
}

struct UavDerivative {
    Eigen::Vector3d p_dot, v_dot, omega_dot;
    Eigen::Matrix3d R_dot;
};

inline UavDerivative uav_derivative(const UavParams& p, const UavRigidState& s,
                                    const Eigen::Vector4d& f_rotor,
                                    const Eigen::Vector4d& theta_dot, double theta_ddot_sum,
                                    const Eigen::Vector3d& wind) {
    const double m = p.total_mass();
    const auto pos = p.rotor_positions();

    double f_total = 0.0;
    Eigen::Vector3d m_body = Eigen::Vector3d::Zero();
    for (int i = 0; i < 4; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        f_total += f_rotor[i];
        m_body += pos[iu].cross(Eigen::Vector3d(0.0, 0.0, f_rotor[i]));
        m_body.z() += -p.spin_sign[iu] * p.c_torque * f_rotor[i];
    }

    const AeroForces aero = aero_forces(p, s, theta_dot, wind);
    const Eigen::Vector3d tau_rot = rotor_reaction_torque(p, s.omega, theta_dot, theta_ddot_sum);

    UavDerivative d;
    d.p_dot = s.v;
    d.v_dot = (Eigen::Vector3d(0.0, 0.0, -m * p.gravity) +
               s.R * Eigen::Vector3d(0.0, 0.0, f_total) + aero.force_world) /
              m;
    const Eigen::Vector3d j = p.inertia_diag();
    const Eigen::Vector3d j_omega = j.asDiagonal() * s.omega;
    const Eigen::Vector3d torque = -s.omega.cross(j_omega) + m_body + aero.torque_body + tau_rot;
    d.omega_dot = torque.array() / j.array();
    d.R_dot = s.R * hat(s.omega);

    if (!d.v_dot.allFinite() || !d.omega_dot.allFinite())
        throw integration_error("uav derivative is not finite", 0);
    return d;
}

// Gains of the cascaded inner loops: velocity tracking in x, y, z, attitude
// stabilization in roll and pitch, and yaw-rate tracking. The kp gains act
// on the integral of the velocity error, kd on the error itself, so each
// closed velocity loop reduces to 1/(s+1) at the default kd = 1, kp = 0.
struct InnerGains {
    double kp_x = 0.0, kd_x = 1.0;
    double kp_y = 0.0, kd_y = 1.0;
    double kp_z = 0.0, kd_z = 1.0;
    double kp_psi = 0.0, kd_psi = 1.0;
    double kp_phi = 60.0, kd_phi = 15.0;
    double kp_theta = 60.0, kd_theta = 15.0;
    double tilt_max = 0.5;
    double k_h_min = 0.1;

    void validate() const {
        require(kd_x > 0.0 && kd_y > 0.0 && kd_z > 0.0 && kd_psi > 0.0,
                "inner gains: velocity-loop kd must be > 0");
        require(kp_phi > 0.0 && kd_phi > 0.0 && kp_theta > 0.0 && kd_theta > 0.0,
                "inner gains: attitude gains must be > 0");
        require(kp_x >= 0.0 && kp_y >= 0.0 && kp_z >= 0.0 && kp_psi >= 0.0,
                "inner gains: integral gains must be >= 0");
        require(tilt_max > 0.0 && tilt_max < 1.2, "inner gains: tilt limit out of range");
        require(k_h_min > 0.0 && k_h_min <= 1.0, "inner gains: k_h floor out of range");
    }
};

struct InnerIntegrals {
    Eigen::Vector3d vel = Eigen::Vector3d::Zero(); // integral of v - u per axis
    double yaw = 0.0;                              // integral of omega_z - u_psi
};

struct VelocityCommand {
    double u_x = 0.0, u_y = 0.0, u_z = 0.0, u_psi = 0.0;
};

struct InnerOutput {
    double f_total = 0.0;
    Eigen::Vector3d moment = Eigen::Vector3d::Zero();
    double roll_d = 0.0, pitch_d = 0.0;
    bool tilt_clamped = false;
    bool k_h_clamped = false;
};

// Cascaded inner control: thrust from the vertical velocity loop, desired
// tilt from the horizontal velocity loops, attitude PD with gyroscopic
// feedforward, yaw-rate PI.
inline InnerOutput inner_control(const UavParams& p, const InnerGains& g, const UavRigidState& s,
                                 const InnerIntegrals& integ, const VelocityCommand& cmd) {
    InnerOutput out;
    const EulerZyx e = euler_from_rotation(s.R);
    const double m = p.total_mass();

    const double u_acc_z = -g.kd_z * (s.v.z() - cmd.u_z) - g.kp_z * integ.vel.z();
    double k_h = std::cos(e.roll) * std::cos(e.pitch);
    if (k_h < g.k_h_min) {
        k_h = g.k_h_min;
        out.k_h_clamped = true;
    }
    out.f_total = (u_acc_z + p.gravity) * m / k_h;
    if (out.f_total < 0.0) out.f_total = 0.0;

    const double a_xd = -g.kd_x * (s.v.x() - cmd.u_x) - g.kp_x * integ.vel.x();
    const double a_yd = -g.kd_y * (s.v.y() - cmd.u_y) - g.kp_y * integ.vel.y();
    const double f_inv = m / std::max(out.f_total, 0.1 * p.hover_thrust());
    const double c_psi = std::cos(e.yaw), s_psi = std::sin(e.yaw);
    double pitch_d = f_inv * (a_xd * c_psi + a_yd * s_psi);
    double roll_d = f_inv * (a_xd * s_psi - a_yd * c_psi);
    if (std::abs(pitch_d) > g.tilt_max) {
        pitch_d = clamp(pitch_d, -g.tilt_max, g.tilt_max);
        out.tilt_clamped = true;
    }
    if (std::abs(roll_d) > g.tilt_max) {
        roll_d = clamp(roll_d, -g.tilt_max, g.tilt_max);
        out.tilt_clamped = true;
    }
    out.roll_d = roll_d;
    out.pitch_d = pitch_d;

    const Eigen::Vector3d j = p.inertia_diag();
    out.moment.x() = j.x() * (g.kp_phi * (roll_d - e.roll) - g.kd_phi * s.omega.x()) -
                     (j.y() - j.z()) * s.omega.y() * s.omega.z();
    out.moment.y() = j.y() * (g.kp_theta * (pitch_d - e.pitch) - g.kd_theta * s.omega.y()) -
                     (j.z() - j.x()) * s.omega.z() * s.omega.x();
    out.moment.z() = j.z() * (-g.kd_psi * (s.omega.z() - cmd.u_psi) - g.kp_psi * integ.yaw) -
                     (j.x() - j.y()) * s.omega.x() * s.omega.y();
    return out;
}

// Abstract-plant view of a velocity loop closed with gain k_p on the error
// and k_i on its integral. With k_i > 0 the integrator contributes one zero
// dynamic; with k_i = 0 the loop is first order and has none.
inline PlantParams normal_form_view(double k_p, double k_i) {
    require(k_p > 0.0, "normal form: k_p must be > 0 (integral-only loops are not supported)");
    require(k_i >= 0.0, "normal form: k_i must be >= 0");
    PlantParams plant;
    plant.k_p = k_p;
    plant.k_p_lower = k_p;
    plant.k_p_upper = k_p;
    if (k_i > 0.0) {
        plant.A_eta = Eigen::MatrixXd::Constant(1, 1, -k_i / k_p);
        plant.B_eta = Eigen::VectorXd::Constant(1, 1.0);
        plant.C_eta = Eigen::VectorXd::Constant(1, k_i * k_i / (k_p * k_p));
        plant.a_p = (k_p * k_p - k_i) / k_p;
    } else {
        plant.A_eta.resize(0, 0);
        plant.B_eta.resize(0);
        plant.C_eta.resize(0);
        plant.a_p = k_p;
    }
    plant.a_p_bound = std::abs(plant.a_p);
    plant.validate();
    return plant;
}

} // namespace dssc
