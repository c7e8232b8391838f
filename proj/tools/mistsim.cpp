// mistsim — command-line front end: spectra, DASI runs, MIST metrics,
// time-domain simulation, parameter sweeps, and ladder-cache management.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>

#include "mist/config.hpp"
#include "mist/dynamics.hpp"
#include "mist/metrics.hpp"
#include "mist/sweep.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mist;

namespace {

constexpr const char* kVersion = "0.1.0";

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };
LogLevel g_log_level = LogLevel::info;

void log(LogLevel lvl, const std::string& msg) {
    if (lvl > g_log_level) return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::fprintf(stderr, "[%s] %s\n", names[static_cast<int>(lvl)], msg.c_str());
}

struct Manifest {
    json stages = json::array();
    std::vector<fs::path> outputs;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    std::chrono::steady_clock::time_point stage_start = std::chrono::steady_clock::now();

    void stage_done(const std::string& name) {
        const auto now = std::chrono::steady_clock::now();
        stages.push_back({{"name", name},
                          {"seconds", std::chrono::duration<double>(now - stage_start).count()}});
        stage_start = now;
    }

    void write(const fs::path& out_dir, const config::Config& cfg, const std::string& command) {
        json m;
        m["tool"] = "mistsim";
        m["version"] = kVersion;
        m["command"] = command;
        m["config_hash"] = config::config_hash(cfg);
        m["wall_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        m["stages"] = stages;
        json files = json::array();
        for (const auto& p : outputs) {
            files.push_back({{"path", p.filename().string()},
                             {"bytes", fs::file_size(p)},
                             {"fnv1a64", io::file_hash_hex(p)}});
        }
        m["outputs"] = files;
        io::write_json(out_dir / "run-manifest.json", m);
    }
};

circuits::QubitEigens qubit_of(const config::Config& cfg) {
    if (cfg.is_fluxonium()) {
        return circuits::fluxonium_eigens(std::get<circuits::FluxoniumSpec>(cfg.circuit));
    }
    return circuits::transmon_eigens(std::get<circuits::TransmonSpec>(cfg.circuit));
}

dasi::DressedLadder ladder_of(const config::Config& cfg, const circuits::SystemModel& model,
                              const fs::path& cache_dir, bool use_cache, Manifest& manifest) {
    const std::string key = config::dasi_cache_key(cfg, cfg.circuit, cfg.omega_r_ghz, cfg.g_ghz);
    if (use_cache && !cache_dir.empty()) {
        if (auto hit = dasi::cache_try_load(cache_dir, key)) {
            log(LogLevel::info, "dasi: cache hit " + key);
            manifest.stage_done("dasi_cache_load");
            return std::move(*hit);
        }
    }
    dasi::DasiOptions opt;
    opt.adaptive = cfg.dasi_adaptive;
    log(LogLevel::info, "dasi: sweeping g to " + std::to_string(cfg.g_ghz) + " GHz, dim " +
                            std::to_string(model.dim()));
    dasi::DressedLadder lad = dasi::dasi_sweep(model, circuits::kTwoPi * cfg.dasi_delta_g_ghz, opt);
    if (lad.overlap_floor < 0.9) {
        log(LogLevel::warn,
            "dasi: weakest assignment overlap " + std::to_string(lad.overlap_floor));
    }
    if (use_cache && !cache_dir.empty()) dasi::cache_store(cache_dir, key, lad);
    manifest.stage_done("dasi_sweep");
    return lad;
}

int run_spectrum(const config::Config& cfg, const fs::path& out, Manifest& manifest) {
    const circuits::QubitEigens q = qubit_of(cfg);
    manifest.stage_done("qubit_eigens");
    io::CsvTable t;
    t.header = {"k", "energy_ghz", "omega_0k_ghz", "abs_n_0k"};
    t.columns.resize(4);
    for (int k = 0; k < q.energies.size(); ++k) {
        t.columns[0].push_back(k);
        t.columns[1].push_back(q.energies(k) / circuits::kTwoPi);
        t.columns[2].push_back((q.energies(k) - q.energies(0)) / circuits::kTwoPi);
        t.columns[3].push_back(std::abs(q.n_op(0, k)));
    }
    io::write_csv(out / "spectrum.csv", t);
    manifest.outputs.push_back(out / "spectrum.csv");

    io::CsvTable m;
    m.header = {"k", "l", "abs_n_kl"};
    m.columns.resize(3);
    for (int k = 0; k < q.energies.size(); ++k) {
        for (int l = 0; l < q.energies.size(); ++l) {
            m.columns[0].push_back(k);
            m.columns[1].push_back(l);
            m.columns[2].push_back(std::abs(q.n_op(k, l)));
        }
    }
    io::write_csv(out / "matrix_elements.csv", m);
    manifest.outputs.push_back(out / "matrix_elements.csv");
    manifest.stage_done("write");
    return 0;
}

int run_dasi(const config::Config& cfg, const fs::path& out, const fs::path& cache_dir,
             bool use_cache, Manifest& manifest) {
    const circuits::QubitEigens q = qubit_of(cfg);
    const circuits::SystemModel model = circuits::build_system(
        q, cfg.omega_r_ghz, cfg.g_ghz, cfg.coupling, cfg.dim_q, cfg.dim_r);
    manifest.stage_done("build_system");
    const dasi::DressedLadder lad = ladder_of(cfg, model, cache_dir, use_cache, manifest);
    dasi::save_ladder(out / "ladder.mladder", lad,
                      config::dasi_cache_key(cfg, cfg.circuit, cfg.omega_r_ghz, cfg.g_ghz));
    manifest.outputs.push_back(out / "ladder.mladder");

    io::CsvTable t;
    t.header = {"k", "n", "eigenindex", "energy_ghz"};
    t.columns.resize(4);
    for (int k = 0; k < lad.dim_q; ++k) {
        for (int n = 0; n < lad.dim_r; ++n) {
            t.columns[0].push_back(k);
            t.columns[1].push_back(n);
            t.columns[2].push_back(lad.index_of(k, n));
            t.columns[3].push_back(lad.energy(k, n) / circuits::kTwoPi);
        }
    }
    io::write_csv(out / "labels.csv", t);
    manifest.outputs.push_back(out / "labels.csv");
    manifest.stage_done("write");
    return 0;
}

int run_metrics(const config::Config& cfg, const fs::path& out, const fs::path& cache_dir,
                bool use_cache, Manifest& manifest) {
    const circuits::QubitEigens q = qubit_of(cfg);
    const circuits::SystemModel model = circuits::build_system(
        q, cfg.omega_r_ghz, cfg.g_ghz, cfg.coupling, cfg.dim_q, cfg.dim_r);
    const dasi::DressedLadder lad = ladder_of(cfg, model, cache_dir, use_cache, manifest);

    io::CsvTable chi_t;
    chi_t.header = {"k", "chi_ghz", "n_crit", "l_crit", "perturbative_mel_error"};
    chi_t.columns.resize(5);
    for (int k : cfg.sweep.branches) {
        chi_t.columns[0].push_back(k);
        chi_t.columns[1].push_back(metrics::dispersive_shift(lad, k, model.omega_r) /
                                   circuits::kTwoPi);
        try {
            auto [nc, lc] = metrics::n_crit(q, k, model.g, model.omega_r);
            chi_t.columns[2].push_back(nc);
            chi_t.columns[3].push_back(lc);
        } catch (const UndefinedMetric&) {
            chi_t.columns[2].push_back(std::nan(""));
            chi_t.columns[3].push_back(-1);
        }
        chi_t.columns[4].push_back(
            metrics::perturbative_mel_error(q, k, model.g, model.omega_r, M_PI / 2));
    }
    io::write_csv(out / "branch_metrics.csv", chi_t);
    manifest.outputs.push_back(out / "branch_metrics.csv");

    if (!cfg.sweep.alpha_sq_grid.empty()) {
        io::CsvTable mel_t;
        mel_t.header = {"k", "alpha_sq", "mel_error"};
        mel_t.columns.resize(3);
        for (int k : cfg.sweep.branches) {
            for (double a2 : cfg.sweep.alpha_sq_grid) {
                mel_t.columns[0].push_back(k);
                mel_t.columns[1].push_back(a2);
                mel_t.columns[2].push_back(
                    metrics::mel_error(lad, k, std::complex<double>(0.0, std::sqrt(a2))));
            }
        }
        io::write_csv(out / "mel_error.csv", mel_t);
        manifest.outputs.push_back(out / "mel_error.csv");
    }
    manifest.stage_done("metrics");
    return 0;
}

int run_evolve(const config::Config& cfg, const fs::path& out, const fs::path& cache_dir,
               bool use_cache, Manifest& manifest) {
    const circuits::QubitEigens q = qubit_of(cfg);
    const circuits::SystemModel model = circuits::build_system(
        q, cfg.omega_r_ghz, cfg.g_ghz, cfg.coupling, cfg.dim_q, cfg.dim_r);
    const dasi::DressedLadder lad = ladder_of(cfg, model, cache_dir, use_cache, manifest);

    const int k0 = cfg.sweep.branches.empty() ? 0 : cfg.sweep.branches.front();
    const double wd = cfg.omega_drive_ghz ? circuits::kTwoPi * *cfg.omega_drive_ghz
                                          : dynamics::dressed_resonator_freq(lad, k0);
    std::set<int> tracked(cfg.sweep.branches.begin(), cfg.sweep.branches.end());
    tracked.insert(k0);

    dynamics::TimeSeries ts;
    dynamics::EvolveOptions opt = cfg.evolve_options();
    if (cfg.kappa_ghz > 0.0 || cfg.n_traj > 1) {
        opt.mc_threads = cfg.threads;
        ts = dynamics::evolve_lindblad_mc(model, lad, cfg.drive_spec(wd), {k0, 0},
                                          circuits::kTwoPi * cfg.kappa_ghz, cfg.n_traj, cfg.seed,
                                          tracked, opt);
    } else {
        ts = dynamics::evolve_coherent(model, lad, cfg.drive_spec(wd), {k0, 0}, tracked, opt);
    }
    manifest.stage_done("evolve");

    io::write_csv(out / "timeseries.csv", ts.to_csv());
    manifest.outputs.push_back(out / "timeseries.csv");
    json meta = ts.diagnostics;
    meta["norm_drift"] = ts.norm_drift;
    meta["initial_k"] = ts.initial_k;
    meta["omega_drive_ghz"] = wd / circuits::kTwoPi;
    meta["seed"] = cfg.seed;
    io::write_json(out / "timeseries.meta.json", meta);
    manifest.outputs.push_back(out / "timeseries.meta.json");
    manifest.stage_done("write");
    return 0;
}

int run_sweep_cmd(const config::Config& cfg, const fs::path& out, const fs::path& cache_dir,
                  bool use_cache, bool gnuplot, Manifest& manifest) {
    const sweep::SweepResult res = sweep::run_sweep(cfg, cache_dir, use_cache);
    manifest.stage_done("sweep");
    for (const auto& c : res.columns) {
        if (!c.ok) {
            log(LogLevel::warn,
                "column x = " + std::to_string(c.x) + " failed: " + c.error);
        } else if (c.weak_overlap) {
            log(LogLevel::warn, "column x = " + std::to_string(c.x) +
                                    " had weak DASI overlap " + std::to_string(c.overlap_floor));
        } else {
            log(LogLevel::info, "column x = " + std::to_string(c.x) + " done");
        }
    }
    const auto files = sweep::write_outputs(res, cfg, out, gnuplot);
    manifest.outputs.insert(manifest.outputs.end(), files.begin(), files.end());
    manifest.stage_done("write");
    return res.partial ? 2 : 0;
}

int run_cache(const std::string& action, const fs::path& cache_dir) {
    if (cache_dir.empty()) {
        log(LogLevel::error, "cache: no --cache directory given");
        return 1;
    }
    if (action == "list") {
        if (fs::exists(cache_dir)) {
            for (const auto& e : fs::directory_iterator(cache_dir)) {
                if (e.path().extension() == ".mladder") {
                    std::printf("%s  %ju bytes\n", e.path().filename().string().c_str(),
                                static_cast<uintmax_t>(fs::file_size(e.path())));
                }
            }
        }
        return 0;
    }
    if (action == "clear") {
        if (fs::exists(cache_dir)) {
            for (const auto& e : fs::directory_iterator(cache_dir)) {
                if (e.path().extension() == ".mladder") fs::remove(e.path());
            }
        }
        return 0;
    }
    log(LogLevel::error, "cache: unknown action '" + action + "' (use list|clear)");
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mistsim — measurement-induced state transition diagnostics for dispersive readout"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", cache_dir, log_level = "info";
    int threads = 0;
    std::uint64_t seed = 0;
    bool no_cache = false, gnuplot = false, have_seed = false;

    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads (0 = auto)");
    app.add_option_function<std::uint64_t>(
           "--seed", [&](std::uint64_t s) { seed = s; have_seed = true; },
           "override the config seed");
    app.add_option("--log-level", log_level, "error|warn|info|debug");
    app.add_option("--cache", cache_dir, "DASI ladder cache directory");
    app.add_flag("--no-cache", no_cache, "bypass the ladder cache");
    app.add_flag("--gnuplot", gnuplot, "also write gnuplot-compatible matrix files");

    auto* sc_spectrum = app.add_subcommand("spectrum", "qubit energies and matrix elements");
    auto* sc_dasi = app.add_subcommand("dasi", "run DASI and persist the dressed ladder");
    auto* sc_metrics = app.add_subcommand("metrics", "dispersive shifts, n_crit, mel_error");
    auto* sc_evolve = app.add_subcommand("evolve", "time-domain simulation");
    auto* sc_sweep = app.add_subcommand("sweep", "parameter sweep with heat-map outputs");
    auto* sc_cache = app.add_subcommand("cache", "ladder cache management");
    std::string cache_action = "list";
    sc_cache->add_option("action", cache_action, "list|clear");

    CLI11_PARSE(app, argc, argv);

    if (log_level == "error") g_log_level = LogLevel::error;
    else if (log_level == "warn") g_log_level = LogLevel::warn;
    else if (log_level == "debug") g_log_level = LogLevel::debug;
    else g_log_level = LogLevel::info;

    try {
        if (sc_cache->parsed()) return run_cache(cache_action, cache_dir);

        if (config_path.empty()) {
            log(LogLevel::error, "--config is required");
            return 1;
        }
        config::Config cfg = config::load(config_path);
        if (threads > 0) cfg.threads = threads;
        if (have_seed) cfg.seed = seed;
        qops::set_blas_threads(cfg.threads);

        fs::create_directories(out_dir);
        Manifest manifest;
        int rc = 1;
        std::string cmd;
        if (sc_spectrum->parsed()) {
            cmd = "spectrum";
            rc = run_spectrum(cfg, out_dir, manifest);
        } else if (sc_dasi->parsed()) {
            cmd = "dasi";
            rc = run_dasi(cfg, out_dir, cache_dir, !no_cache, manifest);
        } else if (sc_metrics->parsed()) {
            cmd = "metrics";
            rc = run_metrics(cfg, out_dir, cache_dir, !no_cache, manifest);
        } else if (sc_evolve->parsed()) {
            cmd = "evolve";
            rc = run_evolve(cfg, out_dir, cache_dir, !no_cache, manifest);
        } else if (sc_sweep->parsed()) {
            cmd = "sweep";
            rc = run_sweep_cmd(cfg, out_dir, cache_dir, !no_cache, gnuplot, manifest);
        }
        manifest.write(out_dir, cfg, cmd);
        return rc;
    } catch (const ParameterError& e) {
        log(LogLevel::error, e.what());
        return 1;
    } catch (const std::exception& e) {
        log(LogLevel::error, std::string("fatal: ") + e.what());
        return 1;
    }
}
