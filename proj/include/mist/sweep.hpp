// sweep.hpp — Parameter sweeps producing metric heat maps and diagnostic
// tables: metric grids vs external flux or resonator frequency (or transmon
// detuning), resonance-condition diagrams with parity filtering, anticrossing
// trends, and critical-photon-number panels.

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mist/config.hpp"
#include "mist/dasi.hpp"
#include "mist/io.hpp"

namespace mist::sweep {

struct Heatmap {
    std::string metric;
    int branch = 0;
    std::vector<double> x;  // swept parameter values
    std::vector<double> y;  // photon measure (|α|² or resampled <a†a>)
    RealMatrix z;           // y.size() rows × x.size() cols; NaN = not evaluated
    nlohmann::json metadata;
};

struct Table {
    std::string name;
    io::CsvTable csv;
    nlohmann::json metadata;
};

struct ColumnDiagnostics {
    double x = 0.0;
    bool ok = true;
    std::string error;
    double overlap_floor = 1.0;
    bool weak_overlap = false;  // overlap_floor < 0.9 somewhere on the sweep
};

struct SweepResult {
    std::vector<Heatmap> heatmaps;
    std::vector<Table> tables;
    std::vector<ColumnDiagnostics> columns;
    bool partial = false;  // some columns carry sentinels
};

// One crossing of ω_kk' with a multiple of ω_r.
struct Resonance {
    double x;  // swept parameter value at the crossing
    int k;
    int k_prime;
    int m;       // ω_kk' = m ω_r
    bool allowed;  // passes the combined-parity selection rule
};

// Grid values of the swept parameter.
std::vector<double> grid_values(const config::Config& cfg);

// Circuit spec with the swept parameter applied at value x (for detuning
// sweeps this solves E_J so that ω_01 = ω_r + x).
config::CircuitSpec circuit_at(const config::Config& cfg, double x);
double omega_r_at(const config::Config& cfg, double x);  // GHz

// Full sweep over the configured grid. Per-column failures become NaN
// sentinel columns with the reason recorded; they never abort the sweep.
SweepResult run_sweep(const config::Config& cfg, const std::filesystem::path& cache_dir,
                      bool use_cache = true);

// All crossings of ω_kk'(x) with m·ω_r(x) for k in branches, located by
// sign-change bracketing + bisection to 1e-4 of the grid spacing. With
// parity_filter, keeps only crossings obeying parity_k·parity_k' = (−1)^m
// (parity tags when the circuit has them, (−1)^{k−k'} otherwise).
std::vector<Resonance> resonance_diagram(const config::Config& cfg, int m_max,
                                         bool parity_filter);

// Per grid point: anticrossing of the configured branch pair. Columns without
// an anticrossing are reported with n_cross = -1 and NaN gap.
Table anticrossing_trend(const config::Config& cfg, const std::filesystem::path& cache_dir,
                         bool use_cache = true);

// Per grid point and branch: n_crit,k and the minimizing level index.
Table ncrit_panels(const config::Config& cfg);

// Writes heatmaps (long-format CSV + JSON sidecar, optional gnuplot matrix)
// and tables into out_dir; returns the list of files written.
std::vector<std::filesystem::path> write_outputs(const SweepResult& result,
                                                 const config::Config& cfg,
                                                 const std::filesystem::path& out_dir,
                                                 bool gnuplot_matrices = false);

}  // namespace mist::sweep
