// oracles.hpp — test-only reference computations, kept independent of the
// implementation paths they check.

#pragma once

#include <complex>
#include <vector>

#include "mist/qops.hpp"

namespace oracles {

// Fluxonium spectrum from a finite-difference discretization of
// 4E_C (-d²/dφ²) + E_L φ²/2 − E_J cos(φ − φ_ext) on a uniform phase grid
// (Dirichlet box). Returns the lowest n_levels energies in GHz, ground at 0.
std::vector<double> fluxonium_phase_grid(double e_j_ghz, double e_c_ghz, double e_l_ghz,
                                         double phi_ext_phi0, int n_levels,
                                         double phi_max = 10.0 * M_PI, int n_points = 4000);

// Transmon spectrum from a periodic finite-difference discretization of
// 4E_C (-i d/dφ − n_g)² − E_J cos φ on φ ∈ [0, 2π). GHz, ground at 0.
std::vector<double> transmon_phase_grid(double e_j_ghz, double e_c_ghz, double n_g,
                                        int n_levels, int n_points = 900);

// Classical driven (and optionally damped) oscillator amplitude:
//   dα/dt = −i ω_r α − (κ/2) α + 2 ε(t) cos(ω_d t),  ε(t) the ramped envelope.
// Returns |α|² at the requested times (RK4 with fine fixed steps).
std::vector<double> classical_driven_photon(double omega_r, double kappa, double eps,
                                            double t_raise, double omega_d,
                                            const std::vector<double>& times,
                                            double dt = 2e-4);

// Projects a product-space Hamiltonian onto the excitation-conserving part
// (RWA): entries between bare states |k,n> and |k',n'> with k+n != k'+n' are
// zeroed. Intended for 2-level qubit + resonator tests.
mist::Matrix rwa_project(const mist::Matrix& h, int dim_q, int dim_r);

}  // namespace oracles
