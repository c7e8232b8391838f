// dasi.hpp — Discrete adiabatic state identification: label dressed eigenstates
// |k,n>̄ by sweeping the coupling g in small increments and matching eigenvectors
// by overlap, with phase fixing; locate avoided-level-like crossings; estimate
// the algorithm's own breakdown step.

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "mist/circuits.hpp"
#include "mist/qops.hpp"

namespace mist::dasi {

struct DasiOptions {
    // Hard floor: an assignment whose overlap falls below this raises
    // AmbiguousLabelingError (|tan(θ' − θ)| < 1 criterion).
    double accept_floor = 0.70710678118654752440;
    // Adaptive mode: when a step's weakest overlap drops below the trigger,
    // retry with locally halved steps, down to delta_g / 2^max_refine.
    bool adaptive = false;
    double adaptive_trigger = 0.9;
    int max_refine = 6;
    // Labels whose energies are recorded at every accepted step.
    std::vector<std::pair<int, int>> track;
};

struct DressedLadder {
    double g = 0.0;  // rad/ns
    int dim_q = 0;
    int dim_r = 0;
    std::vector<int> label_to_index;  // flat label k*dim_r + n  ->  eigenindex
    std::vector<int> index_to_label;
    Vector energies;                  // by eigenindex, ascending, rad/ns
    Matrix vectors;                   // phase-fixed eigenvectors by eigenindex
    std::vector<double> delta_g_schedule;  // accepted step sizes, rad/ns
    double overlap_floor = 1.0;            // smallest max-overlap seen on the sweep

    // Per-step records (aligned with g_history): tracked label energies.
    std::vector<double> g_history;
    std::vector<std::pair<int, int>> tracked_labels;
    RealMatrix tracked_energies;  // tracked_labels.size() x g_history.size()

    int dim() const { return dim_q * dim_r; }
    int flat(int k, int n) const { return k * dim_r + n; }
    int index_of(int k, int n) const;
    double energy(int k, int n) const { return energies(index_of(k, n)); }
    CVector state(int k, int n) const { return vectors.col(index_of(k, n)); }
};

struct Anticrossing {
    int n_cross;           // integer argmin of the inter-branch gap
    double gap;            // |ΔE| at n_cross, rad/ns (= 2 g_eff)
    double n_cross_refined;  // parabolic vertex over the integer neighborhood
    double gap_refined;      // parabolic minimum value, rad/ns
    std::pair<int, int> branch_a;  // (k, photon offset)
    std::pair<int, int> branch_b;
};

// Sweep from g = 0 to g_target in steps of delta_g, labeling eigenstates at
// each step by maximal overlap with the previous step (greedy assignment with
// optimal repair of conflicts) and fixing phases so Re<old|new> > 0.
// h_at(g) must return the idle Hamiltonian at coupling g (rad/ns).
DressedLadder dasi_sweep(const std::function<Matrix(double)>& h_at, int dim_q, int dim_r,
                         double g_target, double delta_g, const DasiOptions& options = {});

DressedLadder dasi_sweep(const circuits::SystemModel& model, double delta_g,
                         const DasiOptions& options = {});

// Critical DASI step for an anticrossing of gap 2 g_eff traversed with steps
// placed symmetrically around it. diabatic_slope is the slope of each diabatic
// branch relative to the crossing midpoint (half the closing rate of the
// diabatic energy difference), in rad/ns per rad/ns of g.
double dasi_step_threshold(double gap_2geff, double diabatic_slope);

// E_{k,n} ≈ E_{k,0} + n (E_{k,1} − E_{k,0}) for n = 0..n_max.
std::vector<double> dispersive_ladder_energies(const DressedLadder& ladder, int k, int n_max);

// Minimal |E_{k1,n+off1} − E_{k2,n+off2}| over n ∈ [n_lo, n_hi]. Returns
// nullopt when the difference is monotone with no interior minimum.
std::optional<Anticrossing> find_anticrossing(const DressedLadder& ladder,
                                              std::pair<int, int> branch_a,
                                              std::pair<int, int> branch_b,
                                              int n_lo, int n_hi);

// Persistence: JSON metadata plus flat little-endian arrays, single file.
void save_ladder(const std::filesystem::path& path, const DressedLadder& ladder,
                 const std::string& config_hash = "");
DressedLadder load_ladder(const std::filesystem::path& path);

// Content-addressed ladder cache. The key is the caller's canonical
// description of everything the sweep depends on.
std::filesystem::path cache_path(const std::filesystem::path& dir, const std::string& key_hash);
std::optional<DressedLadder> cache_try_load(const std::filesystem::path& dir,
                                            const std::string& key_hash);
void cache_store(const std::filesystem::path& dir, const std::string& key_hash,
                 const DressedLadder& ladder);

}  // namespace mist::dasi
