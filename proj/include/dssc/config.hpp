#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dssc/compare.hpp"
#include "dssc/gain_design.hpp"
#include "dssc/sim.hpp"

namespace dssc {

using json = nlohmann::json;

inline std::string fnv1a_hash(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string config_hash(const json& j) { return fnv1a_hash(j.dump()); }

namespace cfgdetail {

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
    throw validation_error("config: " + path + ": " + what);
}

inline void check_keys(const json& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (item.key() == a) {
                ok = true;
                break;
            }
        if (!ok) fail(path, "unknown key '" + item.key() + "'");
    }
}

inline double num(const json& j, const std::string& path, const std::string& key, double def) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_number()) fail(path + "." + key, "expected a number");
    return j.at(key).get<double>();
}

inline double num_req(const json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key)) fail(path, "missing required key '" + key + "'");
    if (!j.at(key).is_number()) fail(path + "." + key, "expected a number");
    return j.at(key).get<double>();
}

inline bool flag(const json& j, const std::string& path, const std::string& key, bool def) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_boolean()) fail(path + "." + key, "expected a boolean");
    return j.at(key).get<bool>();
}

inline std::string str(const json& j, const std::string& path, const std::string& key,
                       const std::string& def) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_string()) fail(path + "." + key, "expected a string");
    return j.at(key).get<std::string>();
}

inline Eigen::Vector3d vec3(const json& j, const std::string& path, const std::string& key,
                            const Eigen::Vector3d& def) {
    if (!j.contains(key)) return def;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3) fail(path + "." + key, "expected an array of 3 numbers");
    return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

inline Trajectory parse_trajectory(const json& j, const std::string& path) {
    check_keys(j, path, {"offset", "terms"});
    std::vector<SinusoidTerm> terms;
    if (j.contains("terms")) {
        if (!j.at("terms").is_array()) fail(path + ".terms", "expected an array");
        std::size_t i = 0;
        for (const auto& tj : j.at("terms")) {
            const std::string tp = path + ".terms[" + std::to_string(i++) + "]";
            check_keys(tj, tp, {"amplitude", "omega", "phase"});
            SinusoidTerm t;
            t.amplitude = num_req(tj, tp, "amplitude");
            t.omega = num_req(tj, tp, "omega");
            t.phase = num(tj, tp, "phase", 0.0);
            terms.push_back(t);
        }
    }
    return Trajectory(num(j, path, "offset", 0.0), terms);
}

inline PlantParams parse_plant(const json& j, const std::string& path) {
    check_keys(j, path,
               {"k_p", "a_p", "k_p_bounds", "a_p_bound", "zero_dynamics", "k_d", "loop_gains"});
    if (j.contains("loop_gains")) {
        const auto& lg = j.at("loop_gains");
        const std::string lp = path + ".loop_gains";
        check_keys(lg, lp, {"k_p", "k_i"});
        return normal_form_view(num_req(lg, lp, "k_p"), num(lg, lp, "k_i", 0.0));
    }
    PlantParams p;
    p.k_p = num(j, path, "k_p", 1.0);
    p.a_p = num(j, path, "a_p", 1.0);
    p.k_p_lower = p.k_p;
    p.k_p_upper = p.k_p;
    if (j.contains("k_p_bounds")) {
        const auto& b = j.at("k_p_bounds");
        if (!b.is_array() || b.size() != 2) fail(path + ".k_p_bounds", "expected [lower, upper]");
        p.k_p_lower = b[0].get<double>();
        p.k_p_upper = b[1].get<double>();
    }
    p.a_p_bound = num(j, path, "a_p_bound", std::abs(p.a_p));
    if (j.contains("zero_dynamics")) {
        const auto& z = j.at("zero_dynamics");
        const std::string zp = path + ".zero_dynamics";
        check_keys(z, zp, {"A", "C"});
        if (!z.contains("A") || !z.at("A").is_array()) fail(zp, "expected matrix A");
        const auto& A = z.at("A");
        const auto m = static_cast<Eigen::Index>(A.size());
        p.A_eta.resize(m, m);
        for (Eigen::Index r = 0; r < m; ++r) {
            const auto& row = A[static_cast<std::size_t>(r)];
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m)
                fail(zp + ".A", "expected a square matrix");
            for (Eigen::Index ccol = 0; ccol < m; ++ccol)
                p.A_eta(r, ccol) = row[static_cast<std::size_t>(ccol)].get<double>();
        }
        p.B_eta = Eigen::VectorXd::Zero(m);
        p.B_eta[m - 1] = 1.0;
        if (!z.contains("C") || !z.at("C").is_array() ||
            static_cast<Eigen::Index>(z.at("C").size()) != m)
            fail(zp + ".C", "expected a vector matching A");
        p.C_eta.resize(m);
        for (Eigen::Index r = 0; r < m; ++r)
            p.C_eta[r] = z.at("C")[static_cast<std::size_t>(r)].get<double>();
    }
    if (j.contains("k_d")) {
        const auto& kd = j.at("k_d");
        if (!kd.is_array() || kd.size() != 5) fail(path + ".k_d", "expected [k_d1..k_d5]");
        p.k_d1 = kd[0].get<double>();
        p.k_d2 = kd[1].get<double>();
        p.k_d3 = kd[2].get<double>();
        p.k_d4 = kd[3].get<double>();
        p.k_d5 = kd[4].get<double>();
    }
    return p;
}

// Builds the matched-disturbance closures and widens the plant's disturbance
// bounds so the modulation and the certification see what the run injects.
inline DisturbanceSpec parse_disturbances(const json& arr, const std::string& path, double l0,
                                          const Trajectory& traj, PlantParams& plant) {
    DisturbanceSpec spec;
    if (!arr.is_array()) fail(path, "expected an array");
    double alpha_extra = 0.0;
    std::size_t i = 0;
    std::vector<BoundFn> d1s, d2s, d3s;
    for (const auto& dj : arr) {
        const std::string dp = path + "[" + std::to_string(i++) + "]";
        check_keys(dj, dp,
                   {"component", "profile", "value", "start", "amplitude", "omega", "phase",
                    "no_bound_update"});
        const std::string comp = str(dj, dp, "component", "d3");
        const std::string profile = str(dj, dp, "profile", "step");
        const bool update = !flag(dj, dp, "no_bound_update", false);
        BoundFn f;
        if (profile == "step") {
            const double v = num_req(dj, dp, "value");
            const double start = num(dj, dp, "start", 0.0);
            f = [v, start](double, double, double t) { return t >= start ? v : 0.0; };
        } else if (profile == "constant") {
            const double v = num_req(dj, dp, "value");
            f = [v](double, double, double) { return v; };
        } else if (profile == "sine") {
            const double a = num_req(dj, dp, "amplitude");
            const double w = num_req(dj, dp, "omega");
            const double ph = num(dj, dp, "phase", 0.0);
            const double start = num(dj, dp, "start", 0.0);
            f = [a, w, ph, start](double, double, double t) {
                return t >= start ? a * std::sin(w * (t - start) + ph) : 0.0;
            };
            if (update) alpha_extra += std::abs(a * w);
        } else if (profile == "sigma_proportional") {
            const double c = num_req(dj, dp, "value");
            if (comp != "d1") fail(dp, "sigma_proportional applies to component d1");
            f = [c, l0, traj](double y, double y_dot, double t) {
                const auto m = traj(t);
                return c * ((y_dot - m.dy) + l0 * (y - m.y));
            };
            if (update) plant.k_d3 += std::abs(c);
        } else {
            fail(dp + ".profile", "unknown profile '" + profile + "'");
        }
        if (comp == "d1")
            d1s.push_back(f);
        else if (comp == "d2")
            d2s.push_back(f);
        else if (comp == "d3")
            d3s.push_back(f);
        else
            fail(dp + ".component", "expected d1, d2, or d3");
    }
    auto sum = [](std::vector<BoundFn> fs) -> BoundFn {
        if (fs.empty()) return zero_bound();
        return [fs](double y, double y_dot, double t) {
            double acc = 0.0;
            for (const auto& f : fs) acc += f(y, y_dot, t);
            return acc;
        };
    };
    spec.d1 = sum(d1s);
    spec.d2 = sum(d2s);
    spec.d3 = sum(d3s);
    if (alpha_extra > 0.0) {
        BoundFn prev = plant.alpha_d;
        plant.alpha_d = [prev, alpha_extra](double y, double y_dot, double t) {
            return prev(y, y_dot, t) + alpha_extra;
        };
        BoundFn prev3 = plant.alpha_d3;
        plant.alpha_d3 = [prev3, alpha_extra](double y, double y_dot, double t) {
            return prev3(y, y_dot, t) + alpha_extra;
        };
    }
    return spec;
}

inline NominalControlSpec parse_nominal(const json& j, const std::string& path, double l0) {
    check_keys(j, path,
               {"mode", "a_p_n", "k_p_n", "c_e", "c_sigma", "c_m1", "c_m2", "bounds"});
    NominalControlSpec n;
    const std::string mode = str(j, path, "mode", "none");
    if (mode == "none")
        n.mode = NominalMode::none;
    else if (mode == "linear")
        n.mode = NominalMode::linear;
    else if (mode == "example71")
        n.mode = NominalMode::example71;
    else if (mode == "cancellation")
        n.mode = NominalMode::cancellation;
    else
        fail(path + ".mode", "unknown nominal mode '" + mode + "'");
    n.a_p_n = num(j, path, "a_p_n", 1.0);
    n.k_p_n = num(j, path, "k_p_n", 1.0);
    n.l0 = l0;
    if (n.mode == NominalMode::example71) {
        n.configure_example71();
    } else {
        n.c_e = num(j, path, "c_e", 0.0);
        n.c_sigma = num(j, path, "c_sigma", 0.0);
        n.c_m1 = num(j, path, "c_m1", 0.0);
        n.c_m2 = num(j, path, "c_m2", 0.0);
    }
    if (j.contains("bounds")) {
        const auto& b = j.at("bounds");
        const std::string bp = path + ".bounds";
        check_keys(b, bp, {"c_e1", "c_e2", "c_sigma", "c_isigma", "c_ie", "c_m"});
        n.c_e1 = num(b, bp, "c_e1", 0.0);
        n.c_e2 = num(b, bp, "c_e2", 0.0);
        n.c_sigma_bound = num(b, bp, "c_sigma", 0.0);
        n.c_isigma = num(b, bp, "c_isigma", 0.0);
        n.c_ie = num(b, bp, "c_ie", 0.0);
        n.c_m = num(b, bp, "c_m", 0.0);
    }
    return n;
}

inline StaParams parse_sta(const json& j, const std::string& path) {
    check_keys(j, path, {"variant", "kappa1", "kappa2", "delta", "g1", "g2", "phi_a", "phi_b"});
    StaParams p;
    const std::string v = str(j, path, "variant", "standard");
    if (v == "standard")
        p.variant = StaVariant::standard;
    else if (v == "delta_case1")
        p.variant = StaVariant::delta_case1;
    else if (v == "delta_case2")
        p.variant = StaVariant::delta_case2;
    else
        fail(path + ".variant", "unknown variant '" + v + "'");
    p.kappa1 = num(j, path, "kappa1", 1.0);
    p.kappa2 = num(j, path, "kappa2", 1.0);
    p.delta = num(j, path, "delta", 0.0);
    p.g1 = num(j, path, "g1", 0.0);
    p.g2 = num(j, path, "g2", 0.0);
    p.phi_a = num(j, path, "phi_a", 1.0);
    p.phi_b = num(j, path, "phi_b", 0.0);
    return p;
}

struct DsscParse {
    DsscParams params;
    std::optional<Certificate> certificate;
};

inline DsscParse parse_dssc(const json& j, const std::string& path, const PlantParams& plant,
                            const NominalControlSpec& nominal, const Trajectory& traj) {
    check_keys(j, path,
               {"selector", "l0", "delta", "phi_a", "phi_b", "epsilon", "delta_rho", "kappa_o",
                "kappa_m", "kappa1", "kappa2", "split", "fixed_tau_av", "fixed_k_o",
                "fixed_tau_m", "tau_min", "tau_max", "constant_rho", "observer", "design"});
    DsscParse out;
    DsscParams& p = out.params;
    const std::string sel = str(j, path, "selector", "constant");
    if (sel == "table1_vgsta")
        p.selector = DynamicFunctionSelector::table1_vgsta;
    else if (sel == "example71_sqrt")
        p.selector = DynamicFunctionSelector::example71_sqrt;
    else if (sel == "sta_delta_case1")
        p.selector = DynamicFunctionSelector::sta_delta_case1;
    else if (sel == "sta_delta_case2")
        p.selector = DynamicFunctionSelector::sta_delta_case2;
    else if (sel == "constant")
        p.selector = DynamicFunctionSelector::constant;
    else
        fail(path + ".selector", "unknown selector '" + sel + "'");

    if (j.contains("design")) {
        const auto& dj = j.at("design");
        const std::string dp = path + ".design";
        check_keys(dj, dp, {"free", "override"});
        FreeDesignParams free;
        if (dj.contains("free")) {
            const auto& fj = dj.at("free");
            const std::string fp = dp + ".free";
            check_keys(fj, fp, {"l0", "phi_a", "epsilon", "delta", "eps1", "eps2", "eps3"});
            free.l0 = num(fj, fp, "l0", free.l0);
            free.phi_a = num(fj, fp, "phi_a", free.phi_a);
            free.epsilon = num(fj, fp, "epsilon", free.epsilon);
            free.delta = num(fj, fp, "delta", free.delta);
            free.eps1 = num(fj, fp, "eps1", free.eps1);
            free.eps2 = num(fj, fp, "eps2", free.eps2);
            free.eps3 = num(fj, fp, "eps3", free.eps3);
        }
        GainSet g = design_gains(plant, nominal, free, TrajectoryBounds::from(traj));
        if (dj.contains("override")) {
            const auto& oj = dj.at("override");
            const std::string op = dp + ".override";
            check_keys(oj, op, {"phi_b", "kappa_a", "kappa_b", "kappa_c", "kappa_d"});
            g.phi_b = num(oj, op, "phi_b", g.phi_b);
            g.kappa_a = num(oj, op, "kappa_a", g.kappa_a);
            g.kappa_b = num(oj, op, "kappa_b", g.kappa_b);
            g.kappa_c = num(oj, op, "kappa_c", g.kappa_c);
            g.kappa_d = num(oj, op, "kappa_d", g.kappa_d);
        }
        out.certificate = certify(g, plant);
        p = DsscParams::from_gains(g, num(j, path, "delta_rho", 0.1));
        p.selector = DynamicFunctionSelector::table1_vgsta;
    }

    p.l0 = num(j, path, "l0", p.l0);
    p.delta = num(j, path, "delta", p.delta);
    p.phi_a = num(j, path, "phi_a", p.phi_a);
    p.phi_b = num(j, path, "phi_b", p.phi_b);
    p.epsilon = num(j, path, "epsilon", p.epsilon);
    p.delta_rho = num(j, path, "delta_rho", p.delta_rho);
    p.kappa_o = num(j, path, "kappa_o", p.kappa_o);
    p.kappa_m = num(j, path, "kappa_m", p.kappa_m);
    p.kappa1 = num(j, path, "kappa1", p.kappa1);
    p.kappa2 = num(j, path, "kappa2", p.kappa2);
    const std::string split = str(j, path, "split", "");
    if (split == "fixed_ko")
        p.split = ProductSplit::fixed_ko;
    else if (split == "fixed_tau_av")
        p.split = ProductSplit::fixed_tau_av;
    else if (!split.empty())
        fail(path + ".split", "unknown split '" + split + "'");
    p.fixed_tau_av = num(j, path, "fixed_tau_av", p.fixed_tau_av);
    p.fixed_k_o = num(j, path, "fixed_k_o", p.fixed_k_o);
    p.fixed_tau_m = num(j, path, "fixed_tau_m", p.fixed_tau_m);
    p.tau_min = num(j, path, "tau_min", p.tau_min);
    p.tau_max = num(j, path, "tau_max", p.tau_max);
    p.constant_rho = num(j, path, "constant_rho", p.constant_rho);
    if (j.contains("observer")) {
        const auto& oj = j.at("observer");
        const std::string op = path + ".observer";
        check_keys(oj, op, {"lambda", "gain"});
        p.lambda_eta = num(oj, op, "lambda", p.lambda_eta);
        p.observer_gain = num(oj, op, "gain", p.observer_gain);
    }
    return out;
}

inline CommandProfile parse_command(const json& j, const std::string& path) {
    check_keys(j, path, {"type", "value", "start", "amplitude", "omega"});
    CommandProfile c;
    const std::string kind = str(j, path, "type", "constant");
    if (kind == "constant")
        c.kind = CommandProfile::Kind::constant;
    else if (kind == "step")
        c.kind = CommandProfile::Kind::step;
    else if (kind == "sine")
        c.kind = CommandProfile::Kind::sine;
    else
        fail(path + ".type", "unknown command type '" + kind + "'");
    c.value = num(j, path, "value", 0.0);
    c.start = num(j, path, "start", 0.0);
    c.amplitude = num(j, path, "amplitude", 0.0);
    c.omega = num(j, path, "omega", 0.0);
    return c;
}

inline UavParams parse_uav(const json& j, const std::string& path) {
    check_keys(j, path,
               {"base_mass", "rotor_mass", "body_inertia", "rotor_inertia", "k_thrust",
                "c_torque", "body_drag", "rotor_drag", "arm_length", "gravity"});
    UavParams p;
    p.base_mass = num(j, path, "base_mass", p.base_mass);
    p.rotor_mass = num(j, path, "rotor_mass", p.rotor_mass);
    p.body_inertia = vec3(j, path, "body_inertia", p.body_inertia);
    p.rotor_inertia = vec3(j, path, "rotor_inertia", p.rotor_inertia);
    p.k_thrust = num(j, path, "k_thrust", p.k_thrust);
    p.c_torque = num(j, path, "c_torque", p.c_torque);
    p.body_drag = vec3(j, path, "body_drag", p.body_drag);
    p.rotor_drag = num(j, path, "rotor_drag", p.rotor_drag);
    p.arm_length = num(j, path, "arm_length", p.arm_length);
    p.gravity = num(j, path, "gravity", p.gravity);
    return p;
}

inline InnerGains parse_inner(const json& j, const std::string& path) {
    check_keys(j, path,
               {"kp_x", "kd_x", "kp_y", "kd_y", "kp_z", "kd_z", "kp_psi", "kd_psi", "kp_phi",
                "kd_phi", "kp_theta", "kd_theta", "tilt_max", "k_h_min"});
    InnerGains g;
    g.kp_x = num(j, path, "kp_x", g.kp_x);
    g.kd_x = num(j, path, "kd_x", g.kd_x);
    g.kp_y = num(j, path, "kp_y", g.kp_y);
    g.kd_y = num(j, path, "kd_y", g.kd_y);
    g.kp_z = num(j, path, "kp_z", g.kp_z);
    g.kd_z = num(j, path, "kd_z", g.kd_z);
    g.kp_psi = num(j, path, "kp_psi", g.kp_psi);
    g.kd_psi = num(j, path, "kd_psi", g.kd_psi);
    g.kp_phi = num(j, path, "kp_phi", g.kp_phi);
    g.kd_phi = num(j, path, "kd_phi", g.kd_phi);
    g.kp_theta = num(j, path, "kp_theta", g.kp_theta);
    g.kd_theta = num(j, path, "kd_theta", g.kd_theta);
    g.tilt_max = num(j, path, "tilt_max", g.tilt_max);
    g.k_h_min = num(j, path, "k_h_min", g.k_h_min);
    return g;
}

} // namespace cfgdetail

struct LoadedScenario {
    ScenarioConfig scenario;
    std::vector<std::pair<std::string, Certificate>> certificates; // channel name -> result
    json raw;
    std::string hash;
};

inline LoadedScenario load_scenario(const json& j) {
    using namespace cfgdetail;
    check_keys(j, "$",
               {"label", "plant", "dt", "t_end", "seed", "unmodelled", "wind", "uav", "inner",
                "uav_initial", "eps_s", "sliding_window", "channels"});
    LoadedScenario out;
    out.raw = j;
    out.hash = config_hash(j);
    ScenarioConfig& cfg = out.scenario;
    cfg.config_hash = out.hash;
    cfg.label = str(j, "$", "label", "");

    const std::string plant_sel = str(j, "$", "plant", "abstract");
    bool default_unit_plant = false;
    if (plant_sel == "abstract")
        cfg.plant = PlantSelector::abstract_plant;
    else if (plant_sel == "uav_full")
        cfg.plant = PlantSelector::uav_full;
    else if (plant_sel == "uav_first_order") {
        cfg.plant = PlantSelector::abstract_plant;
        default_unit_plant = true;
    } else if (plant_sel == "uav_normal_form") {
        cfg.plant = PlantSelector::abstract_plant;
    } else {
        fail("$.plant", "unknown plant '" + plant_sel + "'");
    }

    cfg.dt = num(j, "$", "dt", cfg.dt);
    cfg.t_end = num(j, "$", "t_end", cfg.t_end);
    cfg.eps_s = num(j, "$", "eps_s", cfg.eps_s);
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("sliding_window"))
        cfg.sliding_window = j.at("sliding_window").get<std::size_t>();
    if (j.contains("unmodelled")) {
        const auto& uj = j.at("unmodelled");
        check_keys(uj, "$.unmodelled", {"order", "mu"});
        cfg.unmodelled.order = static_cast<int>(num(uj, "$.unmodelled", "order", 0.0));
        cfg.unmodelled.mu = num(uj, "$.unmodelled", "mu", 0.0);
    }
    if (j.contains("wind")) {
        const auto& wj = j.at("wind");
        check_keys(wj, "$.wind", {"vector", "start"});
        cfg.wind = vec3(wj, "$.wind", "vector", Eigen::Vector3d::Zero());
        cfg.wind_start = num(wj, "$.wind", "start", 0.0);
    }
    if (j.contains("uav")) cfg.uav = parse_uav(j.at("uav"), "$.uav");
    if (j.contains("inner")) cfg.inner = parse_inner(j.at("inner"), "$.inner");
    if (j.contains("uav_initial")) {
        const auto& ij = j.at("uav_initial");
        check_keys(ij, "$.uav_initial", {"position", "yaw"});
        cfg.uav_p0 = vec3(ij, "$.uav_initial", "position", Eigen::Vector3d::Zero());
        cfg.uav_yaw0 = num(ij, "$.uav_initial", "yaw", 0.0);
    }

    if (!j.contains("channels") || !j.at("channels").is_array() || j.at("channels").empty())
        fail("$.channels", "expected a nonempty array");
    std::size_t ci = 0;
    for (const auto& chj : j.at("channels")) {
        const std::string cp = "$.channels[" + std::to_string(ci++) + "]";
        check_keys(chj, cp,
                   {"name", "controller", "l0", "plant", "initial", "trajectory", "disturbance",
                    "dssc", "sta", "nominal", "command"});
        ChannelConfig ch;
        ch.name = str(chj, cp, "name", "y");
        const std::string ctrl = str(chj, cp, "controller", "dssc");
        if (ctrl == "dssc")
            ch.controller = ControllerSelector::dssc;
        else if (ctrl == "sta")
            ch.controller = ControllerSelector::sta;
        else if (ctrl == "vgsta_approx")
            ch.controller = ControllerSelector::vgsta_approx;
        else if (ctrl == "pi")
            ch.controller = ControllerSelector::pi;
        else if (ctrl == "none")
            ch.controller = ControllerSelector::none;
        else
            fail(cp + ".controller", "unknown controller '" + ctrl + "'");

        if (chj.contains("plant")) {
            ch.plant = parse_plant(chj.at("plant"), cp + ".plant");
        } else if (default_unit_plant) {
            ch.plant.k_p = 1.0;
            ch.plant.a_p = 1.0;
            ch.plant.k_p_lower = 1.0;
            ch.plant.k_p_upper = 1.0;
            ch.plant.a_p_bound = 1.0;
        }
        ch.l0 = num(chj, cp, "l0", ch.l0);
        if (chj.contains("trajectory"))
            ch.trajectory = parse_trajectory(chj.at("trajectory"), cp + ".trajectory");
        if (chj.contains("nominal"))
            ch.nominal = parse_nominal(chj.at("nominal"), cp + ".nominal", ch.l0);
        if (chj.contains("disturbance"))
            ch.disturbance = parse_disturbances(chj.at("disturbance"), cp + ".disturbance",
                                                ch.l0, ch.trajectory, ch.plant);
        if (chj.contains("dssc")) {
            auto parsed = parse_dssc(chj.at("dssc"), cp + ".dssc", ch.plant, ch.nominal,
                                     ch.trajectory);
            ch.dssc = parsed.params;
            if (parsed.certificate) out.certificates.emplace_back(ch.name, *parsed.certificate);
        }
        if (ch.controller == ControllerSelector::dssc) {
            ch.l0 = ch.dssc.l0;
            ch.nominal.l0 = ch.l0;
        }
        if (chj.contains("sta")) ch.sta = parse_sta(chj.at("sta"), cp + ".sta");
        if (chj.contains("command")) ch.command = parse_command(chj.at("command"), cp + ".command");
        if (chj.contains("initial")) {
            const auto& ij = chj.at("initial");
            const std::string ip = cp + ".initial";
            check_keys(ij, ip, {"y", "y_dot", "eta", "sigma_hat"});
            ch.y0 = num(ij, ip, "y", 0.0);
            ch.y_dot0 = num(ij, ip, "y_dot", 0.0);
            ch.sigma_hat0 = num(ij, ip, "sigma_hat", 0.0);
            if (ij.contains("eta")) {
                const auto& ea = ij.at("eta");
                if (!ea.is_array()) fail(ip + ".eta", "expected an array");
                ch.eta0.resize(static_cast<Eigen::Index>(ea.size()));
                for (Eigen::Index r = 0; r < ch.eta0.size(); ++r)
                    ch.eta0[r] = ea[static_cast<std::size_t>(r)].get<double>();
            }
        }
        cfg.channels.push_back(std::move(ch));
    }
    cfg.validate();
    return out;
}

inline LoadedScenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw validation_error("config: " + path + ": " + e.what());
    }
    return load_scenario(j);
}

inline json metrics_to_json(const Metrics& m, const std::vector<TraceEvent>& events = {}) {
    json j;
    j["config_hash"] = m.config_hash;
    j["dt"] = m.dt;
    j["t_end"] = m.t_end;
    json chans = json::object();
    for (const auto& [name, cm] : m.channels) {
        json c;
        if (cm.t_s)
            c["t_s"] = *cm.t_s;
        else
            c["t_s"] = nullptr;
        c["rms_e"] = cm.rms_e;
        c["sup_e"] = cm.sup_e;
        c["residual"] = cm.residual;
        c["chattering_index"] = cm.chattering_index;
        c["clamp_count"] = cm.clamp_count;
        chans[name] = c;
    }
    j["channels"] = chans;
    json evs = json::array();
    for (const auto& e : events)
        evs.push_back({{"t", e.t}, {"channel", e.channel}, {"kind", e.kind},
                       {"message", e.message}});
    j["events"] = evs;
    return j;
}

inline json certificate_to_json(const Certificate& c) {
    json j;
    j["pass"] = c.pass;
    j["failed_inequalities"] = c.failed_inequalities;
    j["q_min_eigenvalue"] = c.q_report.min_eigenvalue;
    j["q_pass"] = c.q_report.pass;
    json sg;
    sg["unconstrained"] = c.small_gain.unconstrained;
    sg["required"] = c.small_gain.required;
    sg["margin"] = c.small_gain.margin;
    sg["pass"] = c.small_gain.pass;
    j["small_gain"] = sg;
    return j;
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    require(out.good(), "cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Preset registry. Every acceptance scenario starts from one of these.

inline json preset_config(const std::string& name);

inline std::vector<std::string> preset_names() {
    return {"reaching_basic",       "regulation_certified", "residual_scaling_base",
            "residual_scaling_wide", "equivalence_dssc",     "equivalence_sta",
            "parasitic_dssc",        "parasitic_sta",        "example71_simplified",
            "example71_full_uav",    "uav_step_response",    "smooth_convergence"};
}

namespace cfgdetail {

inline json unit_plant() {
    return {{"k_p", 1.0}, {"a_p", 1.0}, {"k_p_bounds", {1.0, 1.0}}, {"a_p_bound", 1.0}};
}

inline json certified_design_channel() {
    json ch;
    ch["name"] = "y";
    ch["controller"] = "dssc";
    ch["plant"] = {{"k_p", 1.0},
                   {"a_p", 1.0},
                   {"k_p_bounds", {0.8, 1.25}},
                   {"a_p_bound", 1.0}};
    ch["initial"] = {{"y", 1.0}, {"y_dot", 0.0}};
    ch["dssc"] = {{"selector", "table1_vgsta"},
                  {"delta_rho", 0.1},
                  {"split", "fixed_tau_av"},
                  {"fixed_tau_av", 0.01},
                  {"design",
                   {{"free",
                     {{"l0", 1.0},
                      {"phi_a", 0.2},
                      {"epsilon", 0.5},
                      {"delta", 0.1},
                      {"eps1", 1.0},
                      {"eps2", 0.1},
                      {"eps3", 0.1}}}}}};
    return ch;
}

inline json example71_channel(const std::string& name, double kappa_o, double tau_av, double rho,
                              double y0, json trajectory) {
    json ch;
    ch["name"] = name;
    ch["controller"] = "dssc";
    ch["initial"] = {{"y", y0}, {"y_dot", 0.0}};
    ch["trajectory"] = std::move(trajectory);
    ch["nominal"] = {{"mode", "example71"}, {"a_p_n", 1.0}, {"k_p_n", 1.0}};
    ch["dssc"] = {{"selector", "example71_sqrt"}, {"l0", 0.2},     {"delta", 1.0},
                  {"kappa_o", kappa_o},           {"kappa_m", 4.0166}, {"fixed_tau_av", tau_av},
                  {"constant_rho", rho},          {"delta_rho", 0.1}};
    return ch;
}

inline json example71_trajectories(const std::string& name) {
    const double w40 = 2.0 * M_PI / 40.0;
    const double w60 = 2.0 * M_PI / 60.0;
    if (name == "x") return {{"terms", {{{"amplitude", 20.0}, {"omega", w40}}}}};
    if (name == "y")
        return {{"terms", {{{"amplitude", 20.0}, {"omega", w40}, {"phase", M_PI / 2.0}}}}};
    if (name == "z") return {{"offset", 5.0}, {"terms", {{{"amplitude", 3.0}, {"omega", w60}}}}};
    return {{"offset", M_PI / 4.0}, {"terms", {{{"amplitude", -M_PI / 4.0}, {"omega", w40}}}}};
}

inline json example71_channels() {
    json chans = json::array();
    chans.push_back(example71_channel("x", 110.651, 0.03, 1.5, 10.0,
                                      example71_trajectories("x")));
    chans.push_back(example71_channel("y", 110.651, 0.03, 1.5, 10.0,
                                      example71_trajectories("y")));
    chans.push_back(example71_channel("z", 55.3255, 0.06, 0.5, 10.0,
                                      example71_trajectories("z")));
    chans.push_back(example71_channel("psi", 55.3255, 0.06, 0.15, M_PI / 4.0,
                                      example71_trajectories("psi")));
    return chans;
}

inline json equivalence_common(bool dssc_side, double kappa1, double kappa2, double delta,
                               double tau_av) {
    json cfg;
    cfg["plant"] = "abstract";
    cfg["dt"] = 1e-3;
    cfg["t_end"] = 10.0;
    json ch;
    ch["name"] = "y";
    ch["l0"] = 1.0;
    ch["plant"] = unit_plant();
    ch["initial"] = {{"y", 0.0}, {"y_dot", 1.0}};
    ch["nominal"] = {{"mode", "cancellation"}, {"a_p_n", 1.0}, {"k_p_n", 1.0}};
    if (dssc_side) {
        ch["controller"] = "dssc";
        ch["dssc"] = {{"selector", "sta_delta_case2"},
                      {"l0", 1.0},
                      {"kappa1", kappa1},
                      {"kappa2", kappa2},
                      {"delta", delta},
                      {"split", "fixed_tau_av"},
                      {"fixed_tau_av", tau_av},
                      {"delta_rho", 0.1}};
    } else {
        ch["controller"] = "sta";
        ch["sta"] = {{"variant", "standard"}, {"kappa1", kappa1}, {"kappa2", kappa2}};
    }
    cfg["channels"] = json::array({ch});
    return cfg;
}

inline json parasitic_common(bool dssc_side, double mu) {
    json cfg;
    cfg["plant"] = "abstract";
    cfg["dt"] = 1e-3;
    cfg["t_end"] = 40.0;
    cfg["unmodelled"] = {{"order", 1}, {"mu", mu}};
    json ch;
    ch["name"] = "y";
    ch["l0"] = 2.0;
    ch["plant"] = {{"k_p", 2.0}, {"a_p", 2.0}, {"k_p_bounds", {2.0, 2.0}}, {"a_p_bound", 2.0}};
    ch["initial"] = {{"y", 0.5}, {"y_dot", 0.0}};
    ch["nominal"] = {{"mode", "cancellation"}, {"a_p_n", 2.0}, {"k_p_n", 2.0}};
    if (dssc_side) {
        ch["controller"] = "dssc";
        ch["dssc"] = {{"selector", "sta_delta_case2"},
                      {"l0", 2.0},
                      {"kappa1", 0.075},
                      {"kappa2", 0.035},
                      {"delta", 0.1},
                      {"split", "fixed_ko"},
                      {"fixed_k_o", 10.0},
                      {"constant_rho", 4.0},
                      {"delta_rho", 0.1}};
    } else {
        ch["controller"] = "sta";
        ch["sta"] = {{"variant", "standard"}, {"kappa1", 0.075}, {"kappa2", 0.035}};
    }
    cfg["channels"] = json::array({ch});
    return cfg;
}

} // namespace cfgdetail

inline json preset_config(const std::string& name) {
    using namespace cfgdetail;
    json cfg;
    cfg["label"] = name;
    if (name == "reaching_basic") {
        cfg["plant"] = "abstract";
        cfg["dt"] = 1e-3;
        cfg["t_end"] = 12.0;
        json ch;
        ch["name"] = "y";
        ch["controller"] = "dssc";
        ch["plant"] = unit_plant();
        ch["initial"] = {{"y", 0.5}, {"y_dot", 0.0}, {"sigma_hat", -0.9}};
        ch["dssc"] = {{"selector", "constant"}, {"l0", 0.2},          {"fixed_k_o", 5.0},
                      {"fixed_tau_av", 0.01},   {"fixed_tau_m", 0.5}, {"delta_rho", 0.1}};
        cfg["channels"] = json::array({ch});
    } else if (name == "regulation_certified") {
        cfg["plant"] = "abstract";
        cfg["dt"] = 1e-3;
        cfg["t_end"] = 60.0;
        json ch = certified_design_channel();
        ch["disturbance"] = json::array(
            {{{"component", "d3"}, {"profile", "step"}, {"value", 0.8}, {"start", 20.0}}});
        cfg["channels"] = json::array({ch});
    } else if (name == "residual_scaling_base" || name == "residual_scaling_wide") {
        cfg["plant"] = "abstract";
        cfg["dt"] = 1e-3;
        cfg["t_end"] = 40.0;
        json ch = certified_design_channel();
        ch["disturbance"] = json::array({{{"component", "d3"},
                                          {"profile", "sine"},
                                          {"amplitude", 2.0},
                                          {"omega", 5.0}}});
        if (name == "residual_scaling_wide")
            ch["dssc"]["design"]["override"] = {{"phi_b", 4.2}};
        cfg["channels"] = json::array({ch});
    } else if (name == "equivalence_dssc") {
        cfg = equivalence_common(true, 1.5, 0.8, 0.1, 0.02);
        cfg["label"] = name;
    } else if (name == "equivalence_sta") {
        cfg = equivalence_common(false, 1.5, 0.8, 0.0, 0.0);
        cfg["label"] = name;
    } else if (name == "parasitic_dssc") {
        cfg = parasitic_common(true, 0.05);
        cfg["label"] = name;
    } else if (name == "parasitic_sta") {
        cfg = parasitic_common(false, 0.05);
        cfg["label"] = name;
    } else if (name == "example71_simplified") {
        cfg["plant"] = "uav_first_order";
        cfg["dt"] = 1e-3;
        cfg["t_end"] = 60.0;
        json chans = example71_channels();
        const double dvals[4] = {-0.8, 0.8, 0.2, 0.1};
        for (std::size_t i = 0; i < 4; ++i)
            chans[i]["disturbance"] = json::array({{{"component", "d3"},
                                                    {"profile", "step"},
                                                    {"value", dvals[i]},
                                                    {"start", 20.0}}});
        cfg["channels"] = chans;
    } else if (name == "example71_full_uav") {
        cfg["plant"] = "uav_full";
        cfg["dt"] = 1e-3;
        cfg["t_end"] = 60.0;
        cfg["wind"] = {{"vector", {8.0, -8.0, 8.0}}, {"start", 20.0}};
        cfg["uav_initial"] = {{"position", {10.0, 10.0, 10.0}}, {"yaw", M_PI / 4.0}};
        cfg["channels"] = example71_channels();
    } else if (name == "uav_step_response") {
        cfg["plant"] = "uav_full";
        cfg["dt"] = 1e-3;
        cfg["t_end"] = 10.0;
        json chans = json::array();
        const char* names[4] = {"x", "y", "z", "psi"};
        for (const char* n : names) {
            json ch;
            ch["name"] = n;
            ch["controller"] = "none";
            if (std::string(n) == "x")
                ch["command"] = {{"type", "step"}, {"value", 1.0}, {"start", 1.0}};
            chans.push_back(ch);
        }
        cfg["channels"] = chans;
    } else if (name == "smooth_convergence") {
        cfg["plant"] = "abstract";
        cfg["dt"] = 1e-3;
        cfg["t_end"] = 5.0;
        json ch;
        ch["name"] = "y";
        ch["controller"] = "none";
        ch["plant"] = unit_plant();
        ch["command"] = {{"type", "sine"}, {"amplitude", 1.0}, {"omega", 1.0}};
        ch["disturbance"] = json::array({{{"component", "d3"},
                                          {"profile", "sine"},
                                          {"amplitude", 0.3},
                                          {"omega", 0.7}}});
        cfg["channels"] = json::array({ch});
    } else {
        throw validation_error("unknown preset '" + name + "'");
    }
    return cfg;
}

} // namespace dssc
