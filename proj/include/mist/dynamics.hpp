// dynamics.hpp — Time evolution under H_idle(g) + V_drive(t): coherent
// Schrödinger integration with a ramped drive, observable recording, and
// Monte-Carlo trajectory unraveling with collapse operator sqrt(κ) a.
//
// The state is propagated in the eigenbasis of H_idle(g) (the DASI ladder)
// with the diagonal phases e^{-iE t} factored out, which is an exact change of
// variables of the lab-frame equation — no rotating-wave approximation is
// involved; counter-rotating drive terms are retained in full.

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mist/circuits.hpp"
#include "mist/dasi.hpp"
#include "mist/io.hpp"

namespace mist::dynamics {

struct DriveSpec {
    double eps = 0.0;          // steady drive strength, rad/ns
    double t_raise = 20.0;     // ns
    double omega_drive = 0.0;  // rad/ns
    double t_final = 400.0;    // ns
    double sample_dt = 0.25;   // ns
};

struct EvolveOptions {
    double rtol = 1e-9;
    double atol = 1e-11;
    double max_dt = 0.02;    // ns; also the "internal step" the accuracy contract halves
    double initial_dt = 1e-3;
    // Population allowed in the guard band before the run is declared
    // untrustworthy and aborted.
    double guard_threshold = 1e-6;
    // Coherent runs stop once <a†a> exceeds this (whichever of photon ceiling
    // and t_final comes first). Monte-Carlo runs go to t_final.
    double photon_ceiling = 80.0;
    // Entries of the dressed-basis operators below this relative threshold are
    // dropped; 0 keeps dense operators.
    double sparse_threshold = 1e-13;
    int mc_threads = 0;  // 0 = hardware concurrency
    // Sample indices at which per-trajectory reduced density matrices are kept
    // (Monte-Carlo only), for statistical post-processing.
    std::vector<int> store_rho_q_samples;
};

struct TimeSeries {
    std::vector<double> times;         // ns
    std::vector<double> photon;        // <a†a>
    std::vector<double> purity_error;  // 1 − Tr ρ_q² for the run's initial branch
    std::vector<double> n_q;           // qubit occupation
    std::vector<double> guard_mass;    // population in the truncation guard band
    std::map<int, std::vector<double>> p_dressed;  // per tracked branch k
    std::map<int, std::vector<double>> p_bare;
    double norm_drift = 0.0;  // max |  ||ψ|| − 1 |, coherent runs
    int initial_k = 0;
    nlohmann::json diagnostics;
    // [trajectory][position within store_rho_q_samples]
    std::vector<std::vector<Matrix>> traj_rho_q;

    io::CsvTable to_csv() const;
};

// ω_r^{(k)} = E_{k,1} − E_{k,0}; equals ω_r + χ_k.
double dressed_resonator_freq(const dasi::DressedLadder& ladder, int k);

TimeSeries evolve_coherent(const circuits::SystemModel& model, const dasi::DressedLadder& ladder,
                           const DriveSpec& drive, std::pair<int, int> initial,
                           const std::set<int>& tracked_branches,
                           const EvolveOptions& options = {});

// Trajectory-averaged observables with collapse operator sqrt(κ) a. With
// kappa = 0 and n_traj = 1 this reproduces evolve_coherent within integrator
// tolerance. Per-trajectory RNG streams derive deterministically from
// (seed, trajectory index); the reduction is performed in trajectory order
// with compensated accumulation.
TimeSeries evolve_lindblad_mc(const circuits::SystemModel& model,
                              const dasi::DressedLadder& ladder, const DriveSpec& drive,
                              std::pair<int, int> initial, double kappa, int n_traj,
                              std::uint64_t seed, const std::set<int>& tracked_branches,
                              const EvolveOptions& options = {});

}  // namespace mist::dynamics
