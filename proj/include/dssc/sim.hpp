#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dssc/core.hpp"
#include "dssc/dssc.hpp"
#include "dssc/integrators.hpp"
#include "dssc/plant.hpp"
#include "dssc/sta.hpp"
#include "dssc/trace.hpp"
#include "dssc/trajectory.hpp"
#include "dssc/uav.hpp"

namespace dssc {

enum class PlantSelector { abstract_plant, uav_full };
enum class ControllerSelector { dssc, sta, vgsta_approx, pi, none };

struct CommandProfile {
    enum class Kind { constant, step, sine } kind = Kind::constant;
    double value = 0.0;
    double start = 0.0;
    double amplitude = 0.0;
    double omega = 0.0;

    double operator()(double t) const {
        switch (kind) {
            case Kind::constant: return value;
            case Kind::step: return t >= start ? value : 0.0;
            case Kind::sine: return amplitude * std::sin(omega * t);
        }
        return 0.0;
    }
};

struct ChannelConfig {
    std::string name = "y";
    ControllerSelector controller = ControllerSelector::dssc;
    double l0 = 0.2;             // sliding-variable slope for non-dssc controllers
    DsscParams dssc;
    StaParams sta;
    NominalControlSpec nominal;
    Trajectory trajectory = Trajectory::constant(0.0);
    DisturbanceSpec disturbance;
    PlantParams plant;           // abstract plants only
    double y0 = 0.0;
    double y_dot0 = 0.0;
    Eigen::VectorXd eta0;        // zero when empty
    double sigma_hat0 = 0.0;
    CommandProfile command;      // controller == none
};

struct UnmodelledSpec {
    int order = 0;   // 0 disables the parasitic filter
    double mu = 0.0;
};

struct ScenarioConfig {
    PlantSelector plant = PlantSelector::abstract_plant;
    std::vector<ChannelConfig> channels;
    UavParams uav;
    InnerGains inner;
    Eigen::Vector3d uav_p0 = Eigen::Vector3d::Zero();
    double uav_yaw0 = 0.0;
    Eigen::Vector3d wind = Eigen::Vector3d::Zero();
    double wind_start = 0.0;
    UnmodelledSpec unmodelled;
    double dt = 1e-3;
    double t_end = 10.0;
    std::uint64_t seed = 0;
    double eps_s = 0.0;          // 0 selects the automatic threshold
    std::size_t sliding_window = 50;
    std::string config_hash;
    std::string label;

    void validate() const {
        require(dt > 0.0 && std::isfinite(dt), "scenario: dt must be positive");
        require(t_end > dt, "scenario: t_end must exceed dt");
        require(!channels.empty(), "scenario: at least one channel is required");
        require(unmodelled.order >= 0 && unmodelled.order <= 2,
                "scenario: unmodelled order must be 0, 1, or 2");
        if (unmodelled.order > 0) {
            require(unmodelled.mu > 0.0, "scenario: unmodelled dynamics need mu > 0");
            require(plant == PlantSelector::abstract_plant,
                    "scenario: parasitic filters apply to abstract plants only");
        }
        if (plant == PlantSelector::uav_full) {
            require(channels.size() == 4, "scenario: the full vehicle needs channels x, y, z, psi");
            const char* names[4] = {"x", "y", "z", "psi"};
            for (std::size_t i = 0; i < 4; ++i)
                require(channels[i].name == names[i],
                        "scenario: full-vehicle channels must be named x, y, z, psi in order");
            uav.validate();
            inner.validate();
        }
        for (const auto& ch : channels) {
            require(!ch.name.empty(), "scenario: channel names must be nonempty");
            if (plant == PlantSelector::abstract_plant) ch.plant.validate();
            switch (ch.controller) {
                case ControllerSelector::dssc: ch.dssc.validate(); break;
                case ControllerSelector::sta:
                case ControllerSelector::vgsta_approx:
                case ControllerSelector::pi: ch.sta.validate(); break;
                case ControllerSelector::none: break;
            }
            if (ch.nominal.mode == NominalMode::example71)
                require(ch.controller == ControllerSelector::dssc,
                        "scenario: the time-varying nominal model needs the smoothing controller");
        }
    }
};

namespace detail {

struct ChannelLayout {
    std::size_t eta = 0;
    std::size_t m = 0;       // zero-dynamics dimension
    std::size_t y = 0;
    std::size_t y_dot = 0;
    std::size_t ctrl = 0;
    std::size_t n_ctrl = 0;  // dssc: u0_av, sigma_hat, eta_bar; sta family: integral
    std::size_t u_i = 0;
    bool has_u_i = false;
    std::size_t filt = 0;
    std::size_t n_filt = 0;
};

struct FrozenStep {
    double u0 = 0.0;
    double rho = 0.0;
};

inline std::size_t controller_states(ControllerSelector c) {
    switch (c) {
        case ControllerSelector::dssc: return 3;
        case ControllerSelector::sta:
        case ControllerSelector::vgsta_approx:
        case ControllerSelector::pi: return 1;
        case ControllerSelector::none: return 0;
    }
    return 0;
}

inline StaParams effective_sta(const ChannelConfig& ch) {
    StaParams p = ch.sta;
    if (ch.controller == ControllerSelector::vgsta_approx) p.variant = StaVariant::vgsta_approx;
    if (ch.controller == ControllerSelector::pi) p.variant = StaVariant::pi;
    return p;
}

} // namespace detail

// Closed-loop fixed-step integration. The switching signal u0 and the
// modulation rho are sampled once per step; every other signal, the dynamic
// functions included, is evaluated continuously at the integrator stages.
inline SimTrace integrate(const ScenarioConfig& cfg) {
    cfg.validate();
    const std::size_t steps = static_cast<std::size_t>(std::llround(cfg.t_end / cfg.dt));
    require(steps >= 1, "scenario: no steps to take");
    const double dt = cfg.dt;
    const std::size_t n_ch = cfg.channels.size();
    const bool uav = cfg.plant == PlantSelector::uav_full;
    const bool multi = n_ch > 1;

    std::vector<detail::ChannelLayout> lay(n_ch);
    std::vector<StaParams> sta_p(n_ch);
    std::size_t dim = uav ? 22u : 0u; // p, v, R, omega, velocity integrals, yaw integral
    for (std::size_t c = 0; c < n_ch; ++c) {
        const auto& ch = cfg.channels[c];
        auto& l = lay[c];
        sta_p[c] = detail::effective_sta(ch);
        if (!uav) {
            l.m = static_cast<std::size_t>(ch.plant.zero_dynamics_order());
            l.eta = dim;
            dim += l.m;
            l.y = dim++;
            l.y_dot = dim++;
        }
        l.ctrl = dim;
        l.n_ctrl = detail::controller_states(ch.controller);
        dim += l.n_ctrl;
        l.has_u_i = ch.nominal.has_integral_term();
        if (l.has_u_i) l.u_i = dim++;
        if (!uav && cfg.unmodelled.order > 0) {
            l.filt = dim;
            l.n_filt = static_cast<std::size_t>(cfg.unmodelled.order);
            dim += l.n_filt;
        }
    }

    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    if (uav) {
        x.segment<3>(0) = cfg.uav_p0;
        const Eigen::Matrix3d r0 =
            rotation_from_euler({0.0, 0.0, cfg.uav_yaw0});
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) x[6 + 3 * i + j] = r0(i, j);
    }
    for (std::size_t c = 0; c < n_ch; ++c) {
        const auto& ch = cfg.channels[c];
        const auto& l = lay[c];
        if (!uav) {
            if (l.m > 0 && ch.eta0.size() > 0) {
                require(static_cast<std::size_t>(ch.eta0.size()) == l.m,
                        "scenario: eta0 size mismatch");
                x.segment(static_cast<Eigen::Index>(l.eta), static_cast<Eigen::Index>(l.m)) =
                    ch.eta0;
            }
            x[static_cast<Eigen::Index>(l.y)] = ch.y0;
            x[static_cast<Eigen::Index>(l.y_dot)] = ch.y_dot0;
        }
        if (ch.controller == ControllerSelector::dssc)
            x[static_cast<Eigen::Index>(l.ctrl) + 1] = ch.sigma_hat0;
    }

    SimTrace trace;
    trace.set_grid(dt, steps + 1);
    trace.config_hash = cfg.config_hash;

    auto suffix = [&](std::size_t c) { return multi ? "_" + cfg.channels[c].name : std::string(); };

    // Per-step frozen actuation.
    std::vector<detail::FrozenStep> frozen(n_ch);
    VelocityCommand vel_cmd;
    RotorCommand rotor;
    Eigen::Vector4d prev_theta_dot = Eigen::Vector4d::Zero();
    double theta_ddot_sum = 0.0;
    Eigen::Vector3d wind_now = Eigen::Vector3d::Zero();
    double psi_ref = cfg.uav_yaw0;

    struct ChannelStage {
        TrackingSignals sig;
        double y = 0.0, y_dot = 0.0, u = 0.0, u_n = 0.0, u_cmd = 0.0;
        DynamicFunctions df;
    };
    std::vector<ChannelStage> stage(n_ch);

    auto unwrap = [](double angle, double ref) {
        double a = angle;
        while (a - ref > M_PI) a -= 2.0 * M_PI;
        while (a - ref < -M_PI) a += 2.0 * M_PI;
        return a;
    };

    // Reads channel outputs and controller values from a state vector at
    // stage time t; fills `stage` and returns signals needed by callers.
    auto eval_channels = [&](double t, const Eigen::VectorXd& xs) {
        UavRigidState rs;
        if (uav) {
            rs.p = xs.segment<3>(0);
            rs.v = xs.segment<3>(3);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) rs.R(i, j) = xs[6 + 3 * i + j];
            rs.omega = xs.segment<3>(15);
        }
        for (std::size_t c = 0; c < n_ch; ++c) {
            const auto& ch = cfg.channels[c];
            const auto& l = lay[c];
            auto& st = stage[c];
            if (uav) {
                if (c < 3) {
                    st.y = rs.p[static_cast<Eigen::Index>(c)];
                    st.y_dot = rs.v[static_cast<Eigen::Index>(c)];
                } else {
                    st.y = unwrap(euler_from_rotation(rs.R).yaw, psi_ref);
                    st.y_dot = yaw_rate(rs.R, rs.omega);
                }
            } else {
                st.y = xs[static_cast<Eigen::Index>(l.y)];
                st.y_dot = xs[static_cast<Eigen::Index>(l.y_dot)];
            }
            PlantState ps;
            ps.y = st.y;
            ps.y_dot = st.y_dot;
            const double l0 =
                ch.controller == ControllerSelector::dssc ? ch.dssc.l0 : ch.l0;
            st.sig = error_dynamics_update(ps, ch.trajectory(t), l0);
            double tau_m_now = 1.0;
            switch (ch.controller) {
                case ControllerSelector::dssc: {
                    st.df = dynamic_functions(st.sig.sigma, st.sig.e, t, ch.dssc);
                    tau_m_now = st.df.tau_m;
                    st.u = -xs[static_cast<Eigen::Index>(l.ctrl)];
                    break;
                }
                case ControllerSelector::sta:
                case ControllerSelector::vgsta_approx:
                case ControllerSelector::pi: {
                    const auto& sp = sta_p[c];
                    const double integral = xs[static_cast<Eigen::Index>(l.ctrl)];
                    if (sp.variant == StaVariant::pi) {
                        st.u = -sp.g1 * st.sig.sigma - integral;
                    } else {
                        const auto phi = phi_functions(st.sig.sigma, sp.variant, sp.delta,
                                                       sp.phi_a, sp.phi_b);
                        double k1 = sp.kappa1;
                        if (sp.variant == StaVariant::vgsta_approx)
                            k1 = variable_gains(st.sig.sigma, st.sig.e, *sp.gains).kappa1;
                        st.u = -k1 * phi.phi1 - integral;
                    }
                    break;
                }
                case ControllerSelector::none: st.u = ch.command(t); break;
            }
            const double u_i_state = l.has_u_i ? xs[static_cast<Eigen::Index>(l.u_i)] : 0.0;
            st.u_n = nominal_control(ch.nominal, st.sig, t, st.y_dot, tau_m_now, u_i_state);
            st.u_cmd = st.u + st.u_n;
        }
    };

    auto derivative = [&](double t, const Eigen::VectorXd& xs, Eigen::VectorXd& dx) {
        dx.setZero();
        eval_channels(t, xs);
        UavRigidState rs;
        if (uav) {
            rs.p = xs.segment<3>(0);
            rs.v = xs.segment<3>(3);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) rs.R(i, j) = xs[6 + 3 * i + j];
            rs.omega = xs.segment<3>(15);
            const UavDerivative ud =
                uav_derivative(cfg.uav, rs, rotor.f, rotor.theta_dot, theta_ddot_sum, wind_now);
            dx.segment<3>(0) = ud.p_dot;
            dx.segment<3>(3) = ud.v_dot;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) dx[6 + 3 * i + j] = ud.R_dot(i, j);
            dx.segment<3>(15) = ud.omega_dot;
            dx[18] = rs.v.x() - vel_cmd.u_x;
            dx[19] = rs.v.y() - vel_cmd.u_y;
            dx[20] = rs.v.z() - vel_cmd.u_z;
            dx[21] = rs.omega.z() - vel_cmd.u_psi;
        }
        for (std::size_t c = 0; c < n_ch; ++c) {
            const auto& ch = cfg.channels[c];
            const auto& l = lay[c];
            const auto& st = stage[c];
            if (!uav) {
                double u_p = st.u_cmd;
                if (l.n_filt > 0) {
                    const double mu = cfg.unmodelled.mu;
                    const double x1 = xs[static_cast<Eigen::Index>(l.filt)];
                    dx[static_cast<Eigen::Index>(l.filt)] = (st.u_cmd - x1) / mu;
                    u_p = x1;
                    if (l.n_filt == 2) {
                        const double x2 = xs[static_cast<Eigen::Index>(l.filt) + 1];
                        dx[static_cast<Eigen::Index>(l.filt) + 1] = (x1 - x2) / mu;
                        u_p = x2;
                    }
                }
                PlantState ps;
                if (l.m > 0)
                    ps.eta = xs.segment(static_cast<Eigen::Index>(l.eta),
                                        static_cast<Eigen::Index>(l.m));
                ps.y = st.y;
                ps.y_dot = st.y_dot;
                const PlantDerivative pd =
                    plant_derivative(ch.plant, ps, u_p, ch.disturbance, t);
                if (l.m > 0)
                    dx.segment(static_cast<Eigen::Index>(l.eta),
                               static_cast<Eigen::Index>(l.m)) = pd.eta_dot;
                dx[static_cast<Eigen::Index>(l.y)] = pd.y_dot;
                dx[static_cast<Eigen::Index>(l.y_dot)] = pd.y_ddot;
            }
            switch (ch.controller) {
                case ControllerSelector::dssc: {
                    const double u0_av = xs[static_cast<Eigen::Index>(l.ctrl)];
                    const double sigma_hat = xs[static_cast<Eigen::Index>(l.ctrl) + 1];
                    const double eta_bar = xs[static_cast<Eigen::Index>(l.ctrl) + 2];
                    const double u0 = frozen[c].u0;
                    dx[static_cast<Eigen::Index>(l.ctrl)] = (-u0_av + u0) / st.df.tau_av;
                    dx[static_cast<Eigen::Index>(l.ctrl) + 1] =
                        -sigma_hat / st.df.tau_m + st.df.k_o * (-u0_av + u0);
                    dx[static_cast<Eigen::Index>(l.ctrl) + 2] =
                        -ch.dssc.lambda_eta * eta_bar +
                        ch.dssc.observer_gain * std::abs(st.y_dot);
                    break;
                }
                case ControllerSelector::sta:
                case ControllerSelector::vgsta_approx: {
                    const auto& sp = sta_p[c];
                    const auto phi =
                        phi_functions(st.sig.sigma, sp.variant, sp.delta, sp.phi_a, sp.phi_b);
                    double k2 = sp.kappa2;
                    if (sp.variant == StaVariant::vgsta_approx)
                        k2 = variable_gains(st.sig.sigma, st.sig.e, *sp.gains).kappa2;
                    dx[static_cast<Eigen::Index>(l.ctrl)] = k2 * phi.phi2;
                    break;
                }
                case ControllerSelector::pi:
                    dx[static_cast<Eigen::Index>(l.ctrl)] = sta_p[c].g2 * st.sig.sigma;
                    break;
                case ControllerSelector::none: break;
            }
            if (l.has_u_i && ch.nominal.u_i_integrand)
                dx[static_cast<Eigen::Index>(l.u_i)] =
                    ch.nominal.u_i_integrand(st.sig.e, st.sig.sigma);
        }
    };

    Rk4 rk4(static_cast<Eigen::Index>(dim));
    bool warned_stiff_av = false;
    if (cfg.unmodelled.order > 0 && dt > cfg.unmodelled.mu / 2.0)
        trace.log_event(0.0, "", "stiffness", "dt exceeds mu/2 for the parasitic filter");
    std::vector<bool> warned_clamp(n_ch, false);
    bool warned_alloc = false, warned_tilt = false, warned_kh = false;

    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        wind_now = (t >= cfg.wind_start - 0.5 * dt && cfg.wind.squaredNorm() > 0.0)
                       ? cfg.wind
                       : Eigen::Vector3d::Zero();

        eval_channels(t, x);

        // Freeze the switching terms at the step start.
        for (std::size_t c = 0; c < n_ch; ++c) {
            const auto& ch = cfg.channels[c];
            const auto& l = lay[c];
            if (ch.controller != ControllerSelector::dssc) continue;
            const auto& st = stage[c];
            const double u0_av = x[static_cast<Eigen::Index>(l.ctrl)];
            const double sigma_hat = x[static_cast<Eigen::Index>(l.ctrl) + 1];
            const double eta_bar = x[static_cast<Eigen::Index>(l.ctrl) + 2];
            const double sigma_tilde = st.sig.sigma - sigma_hat;
            frozen[c].rho = modulation_function(ch.dssc, ch.plant, st.sig, st.y_dot, st.u_n,
                                                u0_av, eta_bar, st.df.k_o, st.df.tau_m, t);
            frozen[c].u0 = injection_u0(sigma_tilde, frozen[c].rho);
            if (!warned_stiff_av && dt > st.df.tau_av / 2.0) {
                trace.log_event(t, ch.name, "stiffness", "dt exceeds tau_av/2");
                warned_stiff_av = true;
            }
            if (!warned_clamp[c] && (st.df.clamped_av || st.df.clamped_m)) {
                trace.log_event(t, ch.name, "clamp", "time constant hit its bounds");
                warned_clamp[c] = true;
            }
        }

        // Freeze the vehicle actuation at the step start.
        if (uav) {
            UavRigidState rs;
            rs.p = x.segment<3>(0);
            rs.v = x.segment<3>(3);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) rs.R(i, j) = x[6 + 3 * i + j];
            rs.omega = x.segment<3>(15);
            psi_ref = stage[3].y;
            vel_cmd.u_x = stage[0].u_cmd;
            vel_cmd.u_y = stage[1].u_cmd;
            vel_cmd.u_z = stage[2].u_cmd;
            vel_cmd.u_psi = stage[3].u_cmd;
            InnerIntegrals integ;
            integ.vel = x.segment<3>(18);
            integ.yaw = x[21];
            const InnerOutput inner = inner_control(cfg.uav, cfg.inner, rs, integ, vel_cmd);
            rotor = control_allocation(inner.f_total, inner.moment, cfg.uav);
            theta_ddot_sum = k == 0 ? 0.0 : (rotor.theta_dot - prev_theta_dot).sum() / dt;
            prev_theta_dot = rotor.theta_dot;
            if (rotor.clamped && !warned_alloc) {
                trace.log_event(t, "", "allocation", "rotor thrust clamped at zero");
                warned_alloc = true;
            }
            if (inner.tilt_clamped && !warned_tilt) {
                trace.log_event(t, "", "tilt", "tilt command clamped");
                warned_tilt = true;
            }
            if (inner.k_h_clamped && !warned_kh) {
                trace.log_event(t, "", "inner", "thrust tilt-compensation floor active");
                warned_kh = true;
            }
            trace.column("f_total")[k] = inner.f_total;
            for (int i = 0; i < 4; ++i)
                trace.column("f_" + std::to_string(i + 1))[k] = rotor.f[i];
            trace.column("det_R")[k] = rs.R.determinant();
            const EulerZyx eul = euler_from_rotation(rs.R);
            trace.column("roll")[k] = eul.roll;
            trace.column("pitch")[k] = eul.pitch;
        }

        for (std::size_t c = 0; c < n_ch; ++c) {
            const auto& ch = cfg.channels[c];
            const auto& l = lay[c];
            const auto& st = stage[c];
            const std::string s = suffix(c);
            trace.column("y" + s)[k] = st.y;
            trace.column("y_dot" + s)[k] = st.y_dot;
            trace.column("y_m" + s)[k] = st.sig.y_m;
            trace.column("e" + s)[k] = st.sig.e;
            trace.column("sigma" + s)[k] = st.sig.sigma;
            trace.column("u" + s)[k] = st.u;
            trace.column("u_n" + s)[k] = st.u_n;
            if (!uav) {
                double u_p = st.u_cmd;
                if (l.n_filt > 0)
                    u_p = x[static_cast<Eigen::Index>(l.filt) + static_cast<Eigen::Index>(
                                                                    l.n_filt - 1)];
                trace.column("u_p" + s)[k] = u_p;
                trace.column("d" + s)[k] = ch.disturbance.evaluate(st.y, st.y_dot, t);
                if (l.m > 0)
                    trace.column("eta_norm" + s)[k] =
                        x.segment(static_cast<Eigen::Index>(l.eta),
                                  static_cast<Eigen::Index>(l.m))
                            .norm();
            }
            if (ch.controller == ControllerSelector::dssc) {
                const double u0_av = x[static_cast<Eigen::Index>(l.ctrl)];
                const double sigma_hat = x[static_cast<Eigen::Index>(l.ctrl) + 1];
                trace.column("u0_av" + s)[k] = u0_av;
                trace.column("sigma_hat" + s)[k] = sigma_hat;
                trace.column("sigma_tilde" + s)[k] = st.sig.sigma - sigma_hat;
                trace.column("u0" + s)[k] = frozen[c].u0;
                trace.column("rho" + s)[k] = frozen[c].rho;
                trace.column("tau_av" + s)[k] = st.df.tau_av;
                trace.column("tau_m" + s)[k] = st.df.tau_m;
                trace.column("k_o" + s)[k] = st.df.k_o;
                trace.column("clamp" + s)[k] = (st.df.clamped_av || st.df.clamped_m) ? 1.0 : 0.0;
                trace.column("eta_bar" + s)[k] = x[static_cast<Eigen::Index>(l.ctrl) + 2];
            } else if (ch.controller != ControllerSelector::none) {
                trace.column("integral" + s)[k] = x[static_cast<Eigen::Index>(l.ctrl)];
            }
        }

        if (k == steps) break;
        try {
            rk4.step(derivative, t, dt, x);
        } catch (const integration_error&) {
            // A stage evaluation saw a non-finite state before the committed
            // state itself overflowed; report it as divergence at this step.
            throw integration_error("state diverged", k + 1);
        }
        if (!x.allFinite())
            throw integration_error("state diverged", k + 1);
        if (uav) {
            Eigen::Matrix3d r;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) r(i, j) = x[6 + 3 * i + j];
            if (std::abs(r.determinant() - 1.0) > 1e-8) {
                r = orthonormalize(r);
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) x[6 + 3 * i + j] = r(i, j);
            }
        }
    }
    return trace;
}

struct SlidingReport {
    std::optional<double> t_s;
    double eps_s = 0.0;
    double t_s_bound = 0.0;   // reaching-time bound when delta_rho is given
    bool within_bound = false;
};

// First time |sigma - sigma_hat| stays below eps_s for a full confirmation
// window. With eps_s = 0 the threshold scales with the per-step switching
// increment, 10 * dt * sup(k_o * rho).
inline SlidingReport detect_sliding(const SimTrace& trace, const std::string& suffix = "",
                                    double eps_s = 0.0, std::size_t window = 50,
                                    double delta_rho = 0.0) {
    require(trace.has_column("sigma_tilde" + suffix),
            "detect_sliding: trace has no predictor error column" +
                (suffix.empty() ? "" : " for suffix " + suffix));
    const auto& st = trace.column("sigma_tilde" + suffix);
    SlidingReport rep;
    rep.eps_s = eps_s;
    if (rep.eps_s <= 0.0) {
        require(trace.has_column("k_o" + suffix) && trace.has_column("rho" + suffix),
                "detect_sliding: automatic threshold needs k_o and rho columns");
        const auto& ko = trace.column("k_o" + suffix);
        const auto& rho = trace.column("rho" + suffix);
        double sup = 0.0;
        for (std::size_t i = 0; i < trace.rows(); ++i) sup = std::max(sup, ko[i] * rho[i]);
        rep.eps_s = 10.0 * trace.dt() * sup;
    }
    require(window >= 1, "detect_sliding: window must be >= 1");
    if (trace.rows() >= window) {
        std::size_t run = 0;
        for (std::size_t i = 0; i < trace.rows(); ++i) {
            run = std::abs(st[i]) < rep.eps_s ? run + 1 : 0;
            if (run == window) {
                rep.t_s = trace.time()[i - (window - 1)];
                break;
            }
        }
    }
    if (delta_rho > 0.0) {
        rep.t_s_bound = std::abs(st[0]) / delta_rho;
        rep.within_bound = rep.t_s.has_value() && *rep.t_s <= rep.t_s_bound + 1e-12;
    }
    return rep;
}

struct MetricsOptions {
    std::optional<std::pair<double, double>> window; // defaults to the full run
    double residual_fraction = 0.2;
    double eps_s = 0.0;
    std::size_t sliding_window = 50;
};

inline Metrics compute_metrics(const SimTrace& trace, const ScenarioConfig& cfg,
                               const MetricsOptions& opt = {}) {
    Metrics m;
    m.dt = trace.dt();
    m.t_end = trace.time().back();
    m.config_hash = trace.config_hash;
    const bool multi = cfg.channels.size() > 1;
    for (const auto& ch : cfg.channels) {
        const std::string s = multi ? "_" + ch.name : "";
        ChannelMetrics cm;
        const auto& e = trace.column("e" + s);
        const auto& u = trace.column("u" + s);
        std::size_t lo = 0, hi = trace.rows();
        if (opt.window) {
            lo = trace.index_at(opt.window->first);
            hi = std::min(trace.index_at(opt.window->second) + 1, trace.rows());
        }
        cm.rms_e = window_rms(e, lo, hi);
        cm.sup_e = window_sup_abs(e, lo, hi);
        const auto res_lo = static_cast<std::size_t>(
            std::floor(static_cast<double>(trace.rows()) * (1.0 - opt.residual_fraction)));
        cm.residual = window_sup_abs(e, std::min(res_lo, trace.rows() - 1), trace.rows());
        const double span = trace.dt() * static_cast<double>(hi - 1 - lo);
        cm.chattering_index = span > 0.0 ? total_variation(u, lo, hi) / span : 0.0;
        if (ch.controller == ControllerSelector::dssc) {
            const auto rep = detect_sliding(trace, s, opt.eps_s, opt.sliding_window,
                                            ch.dssc.delta_rho);
            cm.t_s = rep.t_s;
            const auto& cl = trace.column("clamp" + s);
            for (std::size_t i = 0; i < trace.rows(); ++i)
                if (cl[i] != 0.0) ++cm.clamp_count;
        }
        m.channels[ch.name] = cm;
    }
    return m;
}

} // namespace dssc
