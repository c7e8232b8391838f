// metrics.hpp — MIST diagnostics: dispersive shifts, multilevel critical photon
// number, dressed coherent states, matrix-element error (exact and
// perturbative), qubit purity, eigenladder probabilities, qubit occupation.

#pragma once

#include <complex>
#include <map>
#include <utility>
#include <vector>

#include "mist/circuits.hpp"
#include "mist/dasi.hpp"

namespace mist::metrics {

using Complex = std::complex<double>;

// Poisson-weighted superposition over one eigenladder: the state of Eq-(4)
// form, sum_n e^{-|α|²/2} α^n/sqrt(n!) |k,n>̄, renormalized after truncation.
struct DressedCoherentState {
    int k = 0;
    Complex alpha{0.0, 0.0};
    CVector amplitudes;  // coefficient on |k,n>̄ for n = 0..n_max
    double tail_mass = 0.0;
};

// χ_k = (E_{k,1} − E_{k,0}) − ω_r, rad/ns.
double dispersive_shift(const dasi::DressedLadder& ladder, int k, double omega_r);

// Multilevel critical photon number for level k:
//   n_crit,k = min over l ≠ k, <k|n|l> ≠ 0 of |(|ω_kl| − ω_r)/(2g <k|n|l>)|².
// Returns the value and the minimizing level l_crit,k. Levels are scanned over
// the retained set minus the qubit guard band.
std::pair<double, int> n_crit(const circuits::QubitEigens& qubit, int k, double g,
                              double omega_r);

// Truncation rule for the coherent sum: n up to ceil(|α|² + 6 sqrt(|α|²+1)).
int coherent_cutoff(double alpha_sq);

DressedCoherentState dressed_coherent(const dasi::DressedLadder& ladder, int k, Complex alpha);

// Bare-basis vector of a dressed coherent state.
CVector dressed_coherent_vector(const dasi::DressedLadder& ladder,
                                const DressedCoherentState& state);

// E_{k,α} = |1 − <k,α|a|k,α>̄ / α| with the bare annihilation operator.
double mel_error(const dasi::DressedLadder& ladder, int k, Complex alpha);

// Second-order closed form of the same error; depends on the phase of α but
// not on its magnitude. alpha_phase in radians (default π/2 elsewhere).
double perturbative_mel_error(const circuits::QubitEigens& qubit, int k, double g,
                              double omega_r, double alpha_phase);

// Partial trace over the resonator. Accepts a pure state vector or a density
// matrix in the bare product basis.
Matrix reduced_qubit_dm(const CVector& state, int dim_q, int dim_r);
Matrix reduced_qubit_dm(const Matrix& rho, int dim_q, int dim_r);

double purity(const Matrix& rho_q);

// N_q = sum_k k <k|ρ_q|k>.
double qubit_occupation(const Matrix& rho_q);

// Probabilities of finding the system in the k-th dressed eigenladder /
// bare-qubit level. Sums run over interior levels; the guard-band remainder is
// reported separately so that sum(p) + guard_mass = 1.
struct BranchProbabilities {
    std::vector<double> p;  // indexed by k over interior qubit levels
    double guard_mass = 0.0;
};

BranchProbabilities ladder_probabilities(const CVector& state, const dasi::DressedLadder& ladder);
BranchProbabilities bare_probabilities(const CVector& state, int dim_q, int dim_r);

}  // namespace mist::metrics
