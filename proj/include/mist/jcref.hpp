// jcref.hpp — Closed-form Jaynes-Cummings reference results used as analytic
// oracles: mixing angles, eigenstate purity, and dressed-coherent-state purity
// in the exact, dispersive, and strong-hybridization forms.

#pragma once

#include <complex>

namespace mist::jcref {

// θ_n = (1/2) atan(2 λ sqrt(n)); θ_0 = 0. λ = g/Δ.
double jc_theta(int n, double lambda);

// Purity of the reduced qubit state for the eigenstate |0,n>̄:
// cos⁴θ_n + sin⁴θ_n ∈ [1/2, 1].
double jc_eigenstate_purity(int n, double lambda);

// Exact double-sum purity of the dressed coherent state |0,α>̄.
double jc_coherent_purity_exact(double lambda, std::complex<double> alpha);

// Dispersive limit: 1 − 2 |α|⁴ λ⁶ (valid for |α|² λ² ≪ 1; the flag reports
// whether the validity condition |α|² λ² < 0.01 held).
double jc_coherent_purity_dispersive(double lambda, std::complex<double> alpha,
                                     bool* in_validity_range = nullptr);

// Strong-hybridization series with cosθ = sinθ = 1/2 substituted verbatim.
double jc_coherent_purity_strong(std::complex<double> alpha);

}  // namespace mist::jcref
