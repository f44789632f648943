// Command-line front end: single runs, parallel batches, gain certification,
// and side-by-side trace comparison.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "dssc/config.hpp"

namespace fs = std::filesystem;
using dssc::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIntegration = 2;
constexpr int kExitCertification = 3;

std::string iso_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct RunOptions {
    std::string config;
    std::string out = "out";
    double dt = 0.0;
    double t_end = 0.0;
    bool allow_uncertified = false;
};

json make_manifest(const std::string& subcommand, const RunOptions& opt,
                   const dssc::LoadedScenario& loaded, const std::string& started) {
    json m;
    m["subcommand"] = subcommand;
    m["config_path"] = opt.config;
    m["config_hash"] = loaded.hash;
    m["out_dir"] = opt.out;
    m["started_utc"] = started;
    m["finished_utc"] = iso_now();
    m["library_version"] = dssc::version;
    m["dt"] = loaded.scenario.dt;
    m["t_end"] = loaded.scenario.t_end;
    json ov = json::object();
    if (opt.dt > 0.0) ov["dt"] = opt.dt;
    if (opt.t_end > 0.0) ov["t_end"] = opt.t_end;
    m["overrides"] = ov;
    return m;
}

void apply_overrides(dssc::ScenarioConfig& cfg, const RunOptions& opt) {
    if (opt.dt > 0.0) cfg.dt = opt.dt;
    if (opt.t_end > 0.0) cfg.t_end = opt.t_end;
}

int report_certificates(const dssc::LoadedScenario& loaded, bool allow_uncertified,
                        std::ostream& os) {
    bool any_fail = false;
    for (const auto& [name, cert] : loaded.certificates) {
        if (cert.pass) {
            os << "channel " << name << ": certified";
            if (cert.small_gain.unconstrained)
                os << " (no zero dynamics: small-gain margin unconstrained)";
            else
                os << " (small-gain margin " << cert.small_gain.margin << ")";
            os << "\n";
        } else {
            any_fail = true;
            os << "channel " << name << ": certification FAILED\n";
            for (const auto& v : cert.failed_inequalities)
                os << "  violated: " << v << "\n";
        }
    }
    if (any_fail && !allow_uncertified) return kExitCertification;
    return kExitOk;
}

int run_one(const RunOptions& opt, std::ostream& os) {
    const std::string started = iso_now();
    dssc::LoadedScenario loaded = dssc::load_scenario_file(opt.config);
    const int cert_rc = report_certificates(loaded, opt.allow_uncertified, os);
    if (cert_rc != kExitOk) {
        os << "refusing to run with uncertified gains (use --allow-uncertified to override)\n";
        return cert_rc;
    }
    apply_overrides(loaded.scenario, opt);

    dssc::SimTrace trace = dssc::integrate(loaded.scenario);
    dssc::Metrics metrics = dssc::compute_metrics(trace, loaded.scenario);

    fs::create_directories(opt.out);
    trace.write_csv(opt.out + "/trace.csv");
    json mj = dssc::metrics_to_json(metrics, trace.events());
    if (!loaded.certificates.empty()) {
        json cj = json::object();
        for (const auto& [name, cert] : loaded.certificates)
            cj[name] = dssc::certificate_to_json(cert);
        mj["certificates"] = cj;
    }
    mj["label"] = loaded.scenario.label;
    dssc::write_json_file(opt.out + "/metrics.json", mj);
    dssc::write_json_file(opt.out + "/manifest.json",
                          make_manifest("run", opt, loaded, started));

    os << "run " << (loaded.scenario.label.empty() ? opt.config : loaded.scenario.label)
       << ": " << trace.rows() << " rows, hash " << loaded.hash << "\n";
    for (const auto& [name, cm] : metrics.channels) {
        os << "  " << name << ": rms_e " << cm.rms_e << ", residual " << cm.residual
           << ", chattering " << cm.chattering_index;
        if (cm.t_s) os << ", t_s " << *cm.t_s;
        if (cm.clamp_count > 0) os << ", clamps " << cm.clamp_count;
        os << "\n";
    }
    for (const auto& e : trace.events())
        os << "  event t=" << e.t << " [" << e.kind << "] "
           << (e.channel.empty() ? "" : e.channel + ": ") << e.message << "\n";
    return kExitOk;
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const dssc::validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const dssc::integration_error& e) {
        std::cerr << "integration error: " << e.what() << "\n";
        return kExitIntegration;
    } catch (const dssc::certification_error& e) {
        std::cerr << "certification error: " << e.what() << "\n";
        return kExitCertification;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sliding-mode smoothing controller simulator"};
    app.require_subcommand(1);

    RunOptions run_opt;
    auto* run = app.add_subcommand("run", "Integrate one scenario and write trace + metrics");
    run->add_option("--config", run_opt.config, "Scenario JSON file")->required();
    run->add_option("--out", run_opt.out, "Output directory");
    run->add_option("--dt", run_opt.dt, "Override the integration step");
    run->add_option("--t-end", run_opt.t_end, "Override the run length");
    run->add_flag("--allow-uncertified", run_opt.allow_uncertified,
                  "Run even when gain certification fails");

    std::vector<std::string> batch_configs;
    std::string batch_out = "out";
    unsigned batch_workers = std::thread::hardware_concurrency();
    bool batch_allow = false;
    double batch_dt = 0.0, batch_t_end = 0.0;
    auto* batch = app.add_subcommand("batch", "Run several scenarios in a worker pool");
    batch->add_option("--config", batch_configs, "Scenario JSON files")->required();
    batch->add_option("--out", batch_out, "Root output directory");
    batch->add_option("--workers", batch_workers, "Worker threads");
    batch->add_option("--dt", batch_dt, "Override the integration step for every run");
    batch->add_option("--t-end", batch_t_end, "Override the run length for every run");
    batch->add_flag("--allow-uncertified", batch_allow, "Run even when certification fails");

    RunOptions cert_opt;
    auto* certify = app.add_subcommand("certify", "Design and certify gains without running");
    certify->add_option("--config", cert_opt.config, "Scenario JSON file")->required();
    certify->add_option("--out", cert_opt.out, "Output directory");

    std::vector<std::string> cmp_configs;
    std::string cmp_out = "out";
    double cmp_dt = 0.0, cmp_t_end = 0.0;
    bool cmp_allow = false;
    auto* compare = app.add_subcommand("compare", "Run two scenarios and report divergence");
    compare->add_option("--config", cmp_configs, "Exactly two scenario JSON files")
        ->required()
        ->expected(2);
    compare->add_option("--out", cmp_out, "Output directory");
    compare->add_option("--dt", cmp_dt, "Override the integration step for both runs");
    compare->add_option("--t-end", cmp_t_end, "Override the run length for both runs");
    compare->add_flag("--allow-uncertified", cmp_allow, "Run even when certification fails");

    std::string presets_write, presets_show;
    auto* presets = app.add_subcommand("presets", "List or materialize the built-in scenarios");
    presets->add_option("--write", presets_write, "Directory to write preset JSON files into");
    presets->add_option("--show", presets_show, "Print one preset");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed())
        return guarded([&] { return run_one(run_opt, std::cout); });

    if (batch->parsed()) {
        return guarded([&] {
            struct Slot {
                int rc = kExitOk;
                std::string output;
            };
            std::vector<Slot> slots(batch_configs.size());
            std::atomic<std::size_t> next{0};
            const unsigned workers =
                std::max(1u, std::min<unsigned>(batch_workers,
                                                static_cast<unsigned>(batch_configs.size())));
            auto worker = [&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= batch_configs.size()) return;
                    RunOptions o;
                    o.config = batch_configs[i];
                    o.out = batch_out + "/" + fs::path(batch_configs[i]).stem().string();
                    o.dt = batch_dt;
                    o.t_end = batch_t_end;
                    o.allow_uncertified = batch_allow;
                    std::ostringstream os;
                    slots[i].rc = guarded([&] { return run_one(o, os); });
                    slots[i].output = os.str();
                }
            };
            std::vector<std::thread> pool;
            for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
            int rc = kExitOk;
            for (std::size_t i = 0; i < slots.size(); ++i) {
                std::cout << slots[i].output;
                if (slots[i].rc != kExitOk)
                    std::cout << batch_configs[i] << ": exit " << slots[i].rc << "\n";
                rc = std::max(rc, slots[i].rc);
            }
            return rc;
        });
    }

    if (certify->parsed()) {
        return guarded([&] {
            dssc::LoadedScenario loaded = dssc::load_scenario_file(cert_opt.config);
            if (loaded.certificates.empty()) {
                std::cout << "no designed gain sets in this scenario\n";
                return kExitOk;
            }
            json cj = json::object();
            for (const auto& [name, cert] : loaded.certificates)
                cj[name] = dssc::certificate_to_json(cert);
            fs::create_directories(cert_opt.out);
            dssc::write_json_file(cert_opt.out + "/certificate.json", cj);
            return report_certificates(loaded, false, std::cout);
        });
    }

    if (compare->parsed()) {
        return guarded([&] {
            RunOptions a, b;
            a.config = cmp_configs[0];
            b.config = cmp_configs[1];
            a.allow_uncertified = b.allow_uncertified = cmp_allow;
            dssc::LoadedScenario la = dssc::load_scenario_file(a.config);
            dssc::LoadedScenario lb = dssc::load_scenario_file(b.config);
            for (const auto* l : {&la, &lb}) {
                const int rc = report_certificates(*l, cmp_allow, std::cout);
                if (rc != kExitOk) return rc;
            }
            a.dt = b.dt = cmp_dt;
            a.t_end = b.t_end = cmp_t_end;
            apply_overrides(la.scenario, a);
            apply_overrides(lb.scenario, b);
            dssc::SimTrace ta = dssc::integrate(la.scenario);
            dssc::SimTrace tb = dssc::integrate(lb.scenario);
            const dssc::CompareReport rep = dssc::compare_traces(ta, tb);
            json j;
            j["a"] = {{"config", a.config}, {"hash", la.hash}};
            j["b"] = {{"config", b.config}, {"hash", lb.hash}};
            json cols = json::array();
            for (const auto& c : rep.columns) {
                cols.push_back({{"column", c.column},
                                {"sup", c.sup},
                                {"rms", c.rms},
                                {"t_at_sup", c.t_at_sup}});
                std::cout << c.column << ": sup " << c.sup << " at t=" << c.t_at_sup
                          << ", rms " << c.rms << "\n";
            }
            j["columns"] = cols;
            fs::create_directories(cmp_out);
            dssc::write_json_file(cmp_out + "/compare.json", j);
            return kExitOk;
        });
    }

    if (presets->parsed()) {
        return guarded([&] {
            if (!presets_show.empty()) {
                std::cout << dssc::preset_config(presets_show).dump(2) << "\n";
                return kExitOk;
            }
            if (!presets_write.empty()) {
                fs::create_directories(presets_write);
                for (const auto& n : dssc::preset_names())
                    dssc::write_json_file(presets_write + "/" + n + ".json",
                                          dssc::preset_config(n));
                std::cout << "wrote " << dssc::preset_names().size() << " presets to "
                          << presets_write << "\n";
                return kExitOk;
            }
            for (const auto& n : dssc::preset_names()) std::cout << n << "\n";
            return kExitOk;
        });
    }
    return kExitOk;
}
