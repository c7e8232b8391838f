// config.hpp — Versioned JSON run configuration. Every physical quantity
// carries an explicit unit suffix in its key name (g_ghz, t_raise_ns, ...);
// frequencies are ordinary frequencies (ω/2π) in GHz.

#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mist/circuits.hpp"
#include "mist/dynamics.hpp"

namespace mist::config {

using CircuitSpec = std::variant<circuits::FluxoniumSpec, circuits::TransmonSpec>;

enum class SweptParameter { phi_ext, omega_r, detuning };
enum class MetricKind { chi, n_crit, mel_error, purity_error, resonance_diagram, anticrossing };

struct SweepSection {
    SweptParameter parameter = SweptParameter::phi_ext;
    double min = 0.0;
    double max = 0.5;
    int count = 41;
    std::vector<MetricKind> metrics;
    std::vector<int> branches = {0};
    std::vector<double> alpha_sq_grid;
    // anticrossing scan
    std::pair<int, int> branch_a = {0, 0};
    std::pair<int, int> branch_b = {4, -2};
    int n_lo = 2;
    int n_hi = 50;
    // resonance diagram
    int resonance_m_max = 3;
    bool parity_filter = false;
};

struct Config {
    int schema_version = 1;
    CircuitSpec circuit;
    double omega_r_ghz = 7.0;
    double g_ghz = 0.15;
    circuits::CouplingKind coupling = circuits::CouplingKind::capacitive;
    int dim_q = 20;
    int dim_r = 120;

    double dasi_delta_g_ghz = 0.0015;
    bool dasi_adaptive = false;

    // drive / evolution (GHz and ns; omega_drive defaults to the dressed
    // resonator frequency of the initial branch when absent)
    double eps_ghz = 0.025;
    double t_raise_ns = 20.0;
    double t_final_ns = 400.0;
    double sample_dt_ns = 0.0;  // 0 -> chosen so a run has >= 400 samples
    double photon_ceiling = 80.0;
    std::optional<double> omega_drive_ghz;
    double rtol = 1e-9;
    double atol = 1e-11;
    double guard_threshold = 1e-6;

    double kappa_ghz = 0.0;
    int n_traj = 1;

    SweepSection sweep;

    std::uint64_t seed = 1;
    int threads = 0;  // 0 -> hardware concurrency

    bool is_fluxonium() const { return std::holds_alternative<circuits::FluxoniumSpec>(circuit); }

    // Drive spec in internal units; sample_dt resolved against t_final.
    dynamics::DriveSpec drive_spec(double omega_drive_rad_ns) const;
    dynamics::EvolveOptions evolve_options() const;
};

Config parse(const nlohmann::json& j);
Config load(const std::string& path);
nlohmann::json to_json(const Config& c);

// Canonical content hash of the full configuration.
std::string config_hash(const Config& c);

// Hash of everything a DASI sweep depends on, with the swept parameter and
// target coupling resolved; used as the ladder cache key.
std::string dasi_cache_key(const Config& c, const CircuitSpec& circuit, double omega_r_ghz,
                           double g_ghz);

std::string to_string(SweptParameter p);
std::string to_string(MetricKind m);

}  // namespace mist::config
