#include "mist/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "mist/dynamics.hpp"
#include "mist/metrics.hpp"

namespace mist::sweep {

using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

circuits::QubitEigens qubit_at(const config::CircuitSpec& spec) {
    if (std::holds_alternative<circuits::FluxoniumSpec>(spec)) {
        return circuits::fluxonium_eigens(std::get<circuits::FluxoniumSpec>(spec));
    }
    return circuits::transmon_eigens(std::get<circuits::TransmonSpec>(spec));
}

bool wants(const config::Config& cfg, config::MetricKind m) {
    return std::find(cfg.sweep.metrics.begin(), cfg.sweep.metrics.end(), m) !=
           cfg.sweep.metrics.end();
}

// Everything one column produces before merging.
struct ColumnResult {
    ColumnDiagnostics diag;
    std::map<int, double> chi;                      // branch -> rad/ns
    std::map<int, std::pair<double, int>> ncrit;    // branch -> (n_crit, l_crit)
    std::map<int, std::vector<double>> mel;         // branch -> value per alpha_sq
    std::map<int, std::vector<std::pair<double, double>>> purity;  // (photon, 1-P)
    double anti_ncross = kNaN, anti_gap = kNaN;
    bool anti_found = false;
};

}  // namespace

std::vector<double> grid_values(const config::Config& cfg) {
    std::vector<double> xs(cfg.sweep.count);
    for (int i = 0; i < cfg.sweep.count; ++i) {
        xs[i] = cfg.sweep.min + (cfg.sweep.max - cfg.sweep.min) * i / (cfg.sweep.count - 1);
    }
    return xs;
}

config::CircuitSpec circuit_at(const config::Config& cfg, double x) {
    config::CircuitSpec spec = cfg.circuit;
    switch (cfg.sweep.parameter) {
        case config::SweptParameter::phi_ext: {
            if (!cfg.is_fluxonium()) throw ParameterError("sweep: phi_ext requires a fluxonium");
            auto& s = std::get<circuits::FluxoniumSpec>(spec);
            s.phi_ext_phi0 = x;
            break;
        }
        case config::SweptParameter::omega_r:
            break;  // circuit unchanged
        case config::SweptParameter::detuning: {
            if (cfg.is_fluxonium()) throw ParameterError("sweep: detuning requires a transmon");
            auto& s = std::get<circuits::TransmonSpec>(spec);
            s.e_j_ghz = circuits::transmon_ej_for_freq(s, cfg.omega_r_ghz + x);
            break;
        }
    }
    return spec;
}

double omega_r_at(const config::Config& cfg, double x) {
    return cfg.sweep.parameter == config::SweptParameter::omega_r ? x : cfg.omega_r_ghz;
}

namespace {

ColumnResult run_column(const config::Config& cfg, double x,
                        const std::filesystem::path& cache_dir, bool use_cache) {
    ColumnResult res;
    res.diag.x = x;

    const config::CircuitSpec spec = circuit_at(cfg, x);
    const double omega_r_ghz = omega_r_at(cfg, x);
    const circuits::QubitEigens qubit = qubit_at(spec);
    const double g = circuits::kTwoPi * cfg.g_ghz;
    const double omega_r = circuits::kTwoPi * omega_r_ghz;

    if (wants(cfg, config::MetricKind::n_crit)) {
        for (int k : cfg.sweep.branches) {
            try {
                res.ncrit[k] = metrics::n_crit(qubit, k, g, omega_r);
            } catch (const UndefinedMetric&) {
                res.ncrit[k] = {kNaN, -1};
            }
        }
    }

    const bool needs_ladder = wants(cfg, config::MetricKind::chi) ||
                              wants(cfg, config::MetricKind::mel_error) ||
                              wants(cfg, config::MetricKind::purity_error) ||
                              wants(cfg, config::MetricKind::anticrossing);
    if (!needs_ladder) return res;

    const circuits::SystemModel model =
        circuits::build_system(qubit, omega_r_ghz, cfg.g_ghz, cfg.coupling, cfg.dim_q, cfg.dim_r);

    dasi::DressedLadder ladder;
    const std::string key = config::dasi_cache_key(cfg, spec, omega_r_ghz, cfg.g_ghz);
    bool cached = false;
    if (use_cache && !cache_dir.empty()) {
        if (auto hit = dasi::cache_try_load(cache_dir, key)) {
            ladder = std::move(*hit);
            cached = true;
        }
    }
    if (!cached) {
        dasi::DasiOptions opt;
        opt.adaptive = cfg.dasi_adaptive;
        ladder = dasi::dasi_sweep(model, circuits::kTwoPi * cfg.dasi_delta_g_ghz, opt);
        if (use_cache && !cache_dir.empty()) dasi::cache_store(cache_dir, key, ladder);
    }
    res.diag.overlap_floor = ladder.overlap_floor;
    res.diag.weak_overlap = ladder.overlap_floor < 0.9;

    if (wants(cfg, config::MetricKind::chi)) {
        for (int k : cfg.sweep.branches) res.chi[k] = metrics::dispersive_shift(ladder, k, omega_r);
    }
    if (wants(cfg, config::MetricKind::mel_error)) {
        for (int k : cfg.sweep.branches) {
            auto& col = res.mel[k];
            col.reserve(cfg.sweep.alpha_sq_grid.size());
            for (double a2 : cfg.sweep.alpha_sq_grid) {
                // α = |α| e^{iπ/2}
                col.push_back(metrics::mel_error(ladder, k,
                                                 std::complex<double>(0.0, std::sqrt(a2))));
            }
        }
    }
    if (wants(cfg, config::MetricKind::anticrossing)) {
        auto ac = dasi::find_anticrossing(ladder, cfg.sweep.branch_a, cfg.sweep.branch_b,
                                          cfg.sweep.n_lo, cfg.sweep.n_hi);
        if (ac) {
            res.anti_found = true;
            res.anti_ncross = ac->n_cross;
            res.anti_gap = ac->gap;
        }
    }
    if (wants(cfg, config::MetricKind::purity_error)) {
        for (int k : cfg.sweep.branches) {
            // ω_drive = ω_r^{(k)} for the branch's initial state
            const double wd = cfg.omega_drive_ghz
                                  ? circuits::kTwoPi * *cfg.omega_drive_ghz
                                  : dynamics::dressed_resonator_freq(ladder, k);
            dynamics::TimeSeries ts =
                dynamics::evolve_coherent(model, ladder, cfg.drive_spec(wd), {k, 0}, {k},
                                          cfg.evolve_options());
            auto& col = res.purity[k];
            col.reserve(ts.times.size());
            for (std::size_t i = 0; i < ts.times.size(); ++i) {
                col.emplace_back(ts.photon[i], ts.purity_error[i]);
            }
        }
    }
    return res;
}

// Linear interpolation of (photon, value) samples onto a fixed photon grid;
// NaN outside the sampled range. Only used for rendering-oriented matrices;
// raw samples are stored alongside.
std::vector<double> resample(const std::vector<std::pair<double, double>>& samples,
                             const std::vector<double>& grid) {
    std::vector<double> out(grid.size(), kNaN);
    if (samples.size() < 2) return out;
    // photon ring-up may be locally non-monotone; interpolate on the monotone envelope
    std::vector<std::pair<double, double>> env;
    env.reserve(samples.size());
    for (const auto& s : samples) {
        if (env.empty() || s.first > env.back().first) env.push_back(s);
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double p = grid[i];
        if (p < env.front().first || p > env.back().first) continue;
        auto it = std::lower_bound(env.begin(), env.end(), p,
                                   [](const auto& a, double v) { return a.first < v; });
        if (it == env.begin()) {
            out[i] = it->second;
            continue;
        }
        const auto hi = *it;
        const auto lo = *(it - 1);
        const double w = (p - lo.first) / (hi.first - lo.first);
        out[i] = lo.second + w * (hi.second - lo.second);
    }
    return out;
}

}  // namespace

SweepResult run_sweep(const config::Config& cfg, const std::filesystem::path& cache_dir,
                      bool use_cache) {
    const std::vector<double> xs = grid_values(cfg);
    const int n_cols = static_cast<int>(xs.size());
    std::vector<ColumnResult> cols(n_cols);

    int n_threads = cfg.threads > 0 ? cfg.threads
                                    : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::clamp(n_threads, 1, n_cols);

    std::atomic<int> next{0};
    auto worker = [&]() {
        if (n_threads > 1) qops::set_blas_threads(1);
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= n_cols) break;
            try {
                cols[i] = run_column(cfg, xs[i], cache_dir, use_cache);
            } catch (const std::exception& e) {
                cols[i].diag.x = xs[i];
                cols[i].diag.ok = false;
                cols[i].diag.error = e.what();
            }
        }
    };
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        qops::set_blas_threads(0);
    }

    SweepResult result;
    result.columns.reserve(n_cols);
    json col_meta = json::array();
    for (const auto& c : cols) {
        result.columns.push_back(c.diag);
        result.partial |= !c.diag.ok;
        col_meta.push_back({{"x", c.diag.x},
                            {"ok", c.diag.ok},
                            {"error", c.diag.error},
                            {"overlap_floor", c.diag.overlap_floor},
                            {"weak_overlap", c.diag.weak_overlap}});
    }
    const json base_meta = {{"config_hash", config::config_hash(cfg)},
                            {"parameter", config::to_string(cfg.sweep.parameter)},
                            {"columns", col_meta}};

    auto add_scalar_map = [&](const std::string& name, int branch,
                              const std::function<double(const ColumnResult&)>& get) {
        Heatmap hm;
        hm.metric = name;
        hm.branch = branch;
        hm.x = xs;
        hm.y = {0.0};
        hm.z.resize(1, n_cols);
        for (int i = 0; i < n_cols; ++i) hm.z(0, i) = cols[i].diag.ok ? get(cols[i]) : kNaN;
        hm.metadata = base_meta;
        result.heatmaps.push_back(std::move(hm));
    };

    for (int k : cfg.sweep.branches) {
        if (wants(cfg, config::MetricKind::chi)) {
            add_scalar_map("chi", k, [k](const ColumnResult& c) {
                auto it = c.chi.find(k);
                return it == c.chi.end() ? kNaN : it->second;
            });
        }
        if (wants(cfg, config::MetricKind::n_crit)) {
            add_scalar_map("n_crit", k, [k](const ColumnResult& c) {
                auto it = c.ncrit.find(k);
                return it == c.ncrit.end() ? kNaN : it->second.first;
            });
            add_scalar_map("l_crit", k, [k](const ColumnResult& c) {
                auto it = c.ncrit.find(k);
                return it == c.ncrit.end() || it->second.second < 0
                           ? kNaN
                           : static_cast<double>(it->second.second);
            });
        }
        if (wants(cfg, config::MetricKind::mel_error)) {
            Heatmap hm;
            hm.metric = "mel_error";
            hm.branch = k;
            hm.x = xs;
            hm.y = cfg.sweep.alpha_sq_grid;
            hm.z.resize(hm.y.size(), n_cols);
            hm.z.setConstant(kNaN);
            for (int i = 0; i < n_cols; ++i) {
                auto it = cols[i].mel.find(k);
                if (!cols[i].diag.ok || it == cols[i].mel.end()) continue;
                for (std::size_t r = 0; r < it->second.size(); ++r) {
                    hm.z(r, i) = it->second[r];
                }
            }
            hm.metadata = base_meta;
            hm.metadata["y_axis"] = "alpha_sq";
            result.heatmaps.push_back(std::move(hm));
        }
        if (wants(cfg, config::MetricKind::purity_error)) {
            // raw samples as a long table plus a resampled rendering matrix
            Table raw;
            raw.name = "purity_error_raw_k" + std::to_string(k);
            raw.csv.header = {"x", "photon", "purity_error"};
            raw.csv.columns.resize(3);
            std::vector<double> ygrid;
            for (double p = 0.0; p <= cfg.photon_ceiling + 1e-9; p += cfg.photon_ceiling / 80.0) {
                ygrid.push_back(p);
            }
            Heatmap hm;
            hm.metric = "purity_error";
            hm.branch = k;
            hm.x = xs;
            hm.y = ygrid;
            hm.z.resize(ygrid.size(), n_cols);
            hm.z.setConstant(kNaN);
            for (int i = 0; i < n_cols; ++i) {
                auto it = cols[i].purity.find(k);
                if (!cols[i].diag.ok || it == cols[i].purity.end()) continue;
                for (const auto& [photon, val] : it->second) {
                    raw.csv.columns[0].push_back(xs[i]);
                    raw.csv.columns[1].push_back(photon);
                    raw.csv.columns[2].push_back(val);
                }
                const std::vector<double> r = resample(it->second, ygrid);
                for (std::size_t row = 0; row < ygrid.size(); ++row) hm.z(row, i) = r[row];
            }
            hm.metadata = base_meta;
            hm.metadata["y_axis"] = "photon_expectation";
            hm.metadata["note"] =
                "drive frequency is the branch's dressed resonator frequency; ring-up only, "
                "no readout ring-down";
            raw.metadata = hm.metadata;
            result.heatmaps.push_back(std::move(hm));
            result.tables.push_back(std::move(raw));
        }
    }
    if (wants(cfg, config::MetricKind::anticrossing)) {
        Table t;
        t.name = "anticrossing";
        t.csv.header = {"x", "n_cross", "gap_2geff_rad_ns"};
        t.csv.columns.resize(3);
        for (int i = 0; i < n_cols; ++i) {
            t.csv.columns[0].push_back(xs[i]);
            t.csv.columns[1].push_back(cols[i].anti_found ? cols[i].anti_ncross : -1.0);
            t.csv.columns[2].push_back(cols[i].anti_found ? cols[i].anti_gap : kNaN);
        }
        t.metadata = base_meta;
        result.tables.push_back(std::move(t));
    }
    if (wants(cfg, config::MetricKind::resonance_diagram)) {
        const auto marks = resonance_diagram(cfg, cfg.sweep.resonance_m_max,
                                             cfg.sweep.parity_filter);
        Table t;
        t.name = "resonance_diagram";
        t.csv.header = {"x", "k", "k_prime", "m", "allowed"};
        t.csv.columns.resize(5);
        for (const auto& r : marks) {
            t.csv.columns[0].push_back(r.x);
            t.csv.columns[1].push_back(r.k);
            t.csv.columns[2].push_back(r.k_prime);
            t.csv.columns[3].push_back(r.m);
            t.csv.columns[4].push_back(r.allowed ? 1.0 : 0.0);
        }
        t.metadata = base_meta;
        result.tables.push_back(std::move(t));
    }
    return result;
}

std::vector<Resonance> resonance_diagram(const config::Config& cfg, int m_max,
                                         bool parity_filter) {
    if (m_max < 1) throw ParameterError("resonance_diagram: m_max must be >= 1");
    const std::vector<double> xs = grid_values(cfg);

    // ω_kk' − m ω_r at parameter value x (GHz units; zeros are shared)
    auto gap_fn = [&](double x, int k, int kp, int m) {
        const circuits::QubitEigens q = qubit_at(circuit_at(cfg, x));
        return (q.energies(kp) - q.energies(k)) / circuits::kTwoPi - m * omega_r_at(cfg, x);
    };

    const circuits::QubitEigens q0 = qubit_at(circuit_at(cfg, xs.front()));
    const int n_levels = qops::interior_qubit_levels(static_cast<int>(q0.energies.size()));
    const double xtol = 1e-4 * (xs[1] - xs[0]);

    std::vector<Resonance> out;
    for (int k : cfg.sweep.branches) {
        for (int kp = 0; kp < n_levels; ++kp) {
            if (kp == k) continue;
            for (int m = 1; m <= m_max; ++m) {
                bool allowed;
                if (!q0.parity.empty() && kp < static_cast<int>(q0.parity.size())) {
                    allowed = q0.parity[k] * q0.parity[kp] == ((m % 2 == 0) ? 1 : -1);
                } else {
                    allowed = ((k - kp) % 2 == 0) == (m % 2 == 0);
                }
                if (parity_filter && !allowed) continue;
                double f_prev = gap_fn(xs[0], k, kp, m);
                for (std::size_t i = 1; i < xs.size(); ++i) {
                    const double f_cur = gap_fn(xs[i], k, kp, m);
                    if (f_prev == 0.0 || f_prev * f_cur < 0.0) {
                        double lo = xs[i - 1], hi = xs[i], flo = f_prev;
                        while (hi - lo > xtol) {
                            const double mid = 0.5 * (lo + hi);
                            const double fm = gap_fn(mid, k, kp, m);
                            if (flo * fm <= 0.0) {
                                hi = mid;
                            } else {
                                lo = mid;
                                flo = fm;
                            }
                        }
                        out.push_back({0.5 * (lo + hi), k, kp, m, allowed});
                    }
                    f_prev = f_cur;
                }
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const Resonance& a, const Resonance& b) {
        return a.x < b.x;
    });
    return out;
}

Table anticrossing_trend(const config::Config& cfg, const std::filesystem::path& cache_dir,
                         bool use_cache) {
    config::Config c = cfg;
    c.sweep.metrics = {config::MetricKind::anticrossing};
    const SweepResult r = run_sweep(c, cache_dir, use_cache);
    for (const auto& t : r.tables) {
        if (t.name == "anticrossing") {
            Table out = t;
            // monotonicity report: is the gap non-decreasing in n_cross?
            std::vector<std::pair<double, double>> pts;
            for (std::size_t i = 0; i < out.csv.columns[1].size(); ++i) {
                if (out.csv.columns[1][i] >= 0.0) {
                    pts.emplace_back(out.csv.columns[1][i], out.csv.columns[2][i]);
                }
            }
            std::sort(pts.begin(), pts.end());
            bool monotone = true;
            for (std::size_t i = 1; i < pts.size(); ++i) {
                if (pts[i].second < pts[i - 1].second) monotone = false;
            }
            out.metadata["gap_monotone_in_n_cross"] = monotone;
            return out;
        }
    }
    throw Error("anticrossing_trend: sweep produced no anticrossing table");
}

Table ncrit_panels(const config::Config& cfg) {
    config::Config c = cfg;
    c.sweep.metrics = {config::MetricKind::n_crit};
    const SweepResult r = run_sweep(c, "", false);
    Table t;
    t.name = "ncrit_panels";
    t.csv.header = {"x", "k", "n_crit", "l_crit"};
    t.csv.columns.resize(4);
    const std::vector<double> xs = grid_values(cfg);
    for (int k : cfg.sweep.branches) {
        const Heatmap* nc = nullptr;
        const Heatmap* lc = nullptr;
        for (const auto& hm : r.heatmaps) {
            if (hm.branch != k) continue;
            if (hm.metric == "n_crit") nc = &hm;
            if (hm.metric == "l_crit") lc = &hm;
        }
        if (!nc || !lc) continue;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            t.csv.columns[0].push_back(xs[i]);
            t.csv.columns[1].push_back(k);
            t.csv.columns[2].push_back(nc->z(0, i));
            t.csv.columns[3].push_back(lc->z(0, i));
        }
    }
    t.metadata = {{"config_hash", config::config_hash(cfg)}};
    return t;
}

std::vector<std::filesystem::path> write_outputs(const SweepResult& result,
                                                 const config::Config& cfg,
                                                 const std::filesystem::path& out_dir,
                                                 bool gnuplot_matrices) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;

    io::write_json(out_dir / "config.json", config::to_json(cfg));
    written.push_back(out_dir / "config.json");

    for (const auto& hm : result.heatmaps) {
        const std::string stem = hm.metric + "_k" + std::to_string(hm.branch);
        io::CsvTable t;
        t.header = {"x", "y", "value"};
        t.columns.resize(3);
        for (std::size_t c = 0; c < hm.x.size(); ++c) {
            for (std::size_t r = 0; r < hm.y.size(); ++r) {
                t.columns[0].push_back(hm.x[c]);
                t.columns[1].push_back(hm.y[r]);
                t.columns[2].push_back(hm.z(r, c));
            }
        }
        const auto csv_path = out_dir / (stem + ".csv");
        io::write_csv(csv_path, t);
        written.push_back(csv_path);
        json meta = hm.metadata;
        meta["metric"] = hm.metric;
        meta["branch"] = hm.branch;
        const auto meta_path = out_dir / (stem + ".meta.json");
        io::write_json(meta_path, meta);
        written.push_back(meta_path);
        if (gnuplot_matrices) {
            std::string m;
            for (std::size_t r = 0; r < hm.y.size(); ++r) {
                for (std::size_t c = 0; c < hm.x.size(); ++c) {
                    m += (c ? " " : "") + std::to_string(hm.z(r, c));
                }
                m += "\n";
            }
            const auto mat_path = out_dir / (stem + ".matrix");
            io::write_text(mat_path, m);
            written.push_back(mat_path);
        }
    }
    for (const auto& t : result.tables) {
        const auto csv_path = out_dir / (t.name + ".csv");
        io::write_csv(csv_path, t.csv);
        written.push_back(csv_path);
        const auto meta_path = out_dir / (t.name + ".meta.json");
        io::write_json(meta_path, t.metadata);
        written.push_back(meta_path);
    }
    return written;
}

}  // namespace mist::sweep
