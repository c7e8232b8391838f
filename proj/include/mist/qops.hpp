// qops.hpp — Operator algebra over truncated Hilbert spaces: ladder operators,
// tensor embedding, Hermitian eigendecomposition, matrix functions.
//
// Conventions used throughout the library:
//   * All Hamiltonian-like operators are in angular-frequency units (rad/ns);
//     public circuit APIs take ordinary frequencies in GHz and multiply by 2π.
//   * Product-space index order is |k, n> -> flat k*dim_r + n (qubit slow,
//     resonator fast).
//   * The top 10% of resonator levels and the top 2 qubit levels form a guard
//     band; quantitative contracts only cover interior levels.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <utility>

#include "mist/errors.hpp"

namespace mist {

using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;

namespace qops {

struct EigenSystem {
    Vector energies;  // ascending, rad/ns
    Matrix vectors;   // unitary, eigenvectors in columns
};

// Number of threads used by the BLAS/LAPACK backend. Sweep workers set this
// to 1 to avoid oversubscription; single-run paths use the full budget.
void set_blas_threads(int n);

// Relative Hermiticity tolerance: max |A - A†| < tol * max |A|.
inline constexpr double kHermitianTol = 1e-12;

bool is_hermitian(const Matrix& a, double rel_tol = kHermitianTol);

// a with sqrt(n) on the first superdiagonal and a_dag = a†.
std::pair<Matrix, Matrix> ladder_ops(int dim);

// Dense Hermitian eigendecomposition. Deterministic for a fixed input:
// eigenvalues ascending, exact ties broken by lexicographic comparison of
// eigenvector magnitudes, and each eigenvector's largest-magnitude entry
// rotated to be real and positive. A numerically real input is routed to the
// real-symmetric LAPACK driver.
EigenSystem hermitian_eig(const Matrix& a);

// Kronecker product with the qubit factor slow and the resonator factor fast:
// flat index = k*dim_res + n.
Matrix tensor_embed(const Matrix& a_qubit, const Matrix& b_res);

// V f(diag E) V† for Hermitian A.
Matrix hermitian_function(const Matrix& a, const std::function<double(double)>& f);

// Guard-band boundaries (exclusive upper bounds of the interior region).
inline int interior_resonator_levels(int dim_r) { return dim_r - (dim_r + 9) / 10; }
inline int interior_qubit_levels(int dim_q) { return dim_q > 2 ? dim_q - 2 : dim_q; }

}  // namespace qops
}  // namespace mist
