// circuits.hpp — Qubit eigensystems (fluxonium, transmon), the resonator, the
// coupled idle Hamiltonian H_idle(g) and the drive operator.
//
// All *Spec energies are ordinary frequencies in GHz (E/h); everything stored
// in QubitEigens / SystemModel is in rad/ns with the ground state at zero.

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "mist/qops.hpp"

namespace mist::circuits {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// H_q = 4 E_C n² + E_L φ²/2 − E_J cos(φ − φ_ext), prediagonalized in the
// harmonic-oscillator basis of the quadratic part.
struct FluxoniumSpec {
    double e_j_ghz;
    double e_c_ghz;
    double e_l_ghz;
    double phi_ext_phi0;  // Φ_ext/Φ₀, so φ_ext = 2π Φ_ext/Φ₀
    int n_ho = 50;        // harmonic prediagonalization basis size
    int n_keep = 20;      // retained qubit levels
};

// H_q = 4 E_C (n − n_g)² − E_J cos φ in the charge basis n ∈ [−N, N].
struct TransmonSpec {
    double e_j_ghz;
    double e_c_ghz;
    double n_g = 0.0;
    int n_charge = 30;  // N (basis size 2N+1)
    int n_keep = 12;
};

struct QubitEigens {
    Vector energies;           // rad/ns, ascending, E_0 = 0
    Matrix n_op;               // charge operator in the eigenbasis
    Matrix phi_op;             // flux operator in the eigenbasis (fluxonium only; empty otherwise)
    std::vector<int> parity;   // per-level parity tags (±1) when the circuit has them; empty otherwise
    double omega(int k, int l) const { return energies(l) - energies(k); }  // ω_kl
};

enum class CouplingKind { capacitive, inductive };

// H_idle(g) = H0 + g * v_qr_unit, with the drive quadrature along i(a†−a).
struct SystemModel {
    QubitEigens qubit;
    double omega_r;  // rad/ns
    double g;        // rad/ns
    CouplingKind coupling_kind;
    int dim_q;
    int dim_r;
    Matrix h0;         // diag(E_k)⊗I + I⊗ω_r a†a
    Matrix v_qr_unit;  // coupling operator at unit g (rad/ns per rad/ns of g)
    Matrix d_op;       // I ⊗ i(a†−a)

    int dim() const { return dim_q * dim_r; }
    Matrix h_idle(double g_val) const { return h0 + g_val * v_qr_unit; }
    Matrix h_idle() const { return h_idle(g); }
};

// Normalized flux/charge quadratures of the oscillator 4E_C n² + E_L φ²/2:
// φ = φ_zpf (b + b†), n = i n_zpf (b† − b), with φ_zpf n_zpf = 1/2 so that
// [φ, n] = i, and φ_zpf/n_zpf = sqrt(8 E_C / E_L) so the quadratic part is
// diagonal with spacing sqrt(8 E_C E_L).
std::pair<Matrix, Matrix> osc_quadratures(double e_c_ghz, double e_l_ghz, int n_ho);

QubitEigens fluxonium_eigens(const FluxoniumSpec& spec);
QubitEigens transmon_eigens(const TransmonSpec& spec);

// Solves for E_J such that the transmon's ω_01/2π equals freq_01_ghz, keeping
// the other spec fields fixed.
double transmon_ej_for_freq(const TransmonSpec& spec, double freq_01_ghz);

SystemModel build_system(const QubitEigens& qubit, double omega_r_ghz, double g_ghz,
                         CouplingKind kind, int dim_q, int dim_r);

// ε(t) = eps · sin(π t / 2 t_raise) for t < t_raise, eps afterwards.
double drive_envelope(double t_ns, double eps, double t_raise_ns);

}  // namespace mist::circuits
