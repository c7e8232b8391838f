#include "mist/qops.hpp"

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

extern "C" void openblas_set_num_threads(int);

namespace mist::qops {

void set_blas_threads(int n) {
    openblas_set_num_threads(n > 0 ? n : 1);
}

bool is_hermitian(const Matrix& a, double rel_tol) {
    if (a.rows() != a.cols()) return false;
    const double scale = a.cwiseAbs().maxCoeff();
    if (scale == 0.0) return true;
    return (a - a.adjoint()).cwiseAbs().maxCoeff() < rel_tol * scale;
}

std::pair<Matrix, Matrix> ladder_ops(int dim) {
    if (dim < 2) throw ParameterError("ladder_ops: dim must be >= 2, got " + std::to_string(dim));
    Matrix a = Matrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) {
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    return {a, a.adjoint()};
}

namespace {

// Deterministic post-processing shared by both solver paths: tie-break exactly
// equal eigenvalues, then fix each column's phase.
void canonicalize(EigenSystem& es) {
    const int n = static_cast<int>(es.energies.size());
    for (int i = 0; i + 1 < n; ++i) {
        if (es.energies(i) == es.energies(i + 1)) {
            // lexicographic comparison of eigenvector magnitudes
            for (int r = 0; r < n; ++r) {
                const double mi = std::abs(es.vectors(r, i));
                const double mj = std::abs(es.vectors(r, i + 1));
                if (mi == mj) continue;
                if (mi > mj) es.vectors.col(i).swap(es.vectors.col(i + 1));
                break;
            }
        }
    }
    for (int j = 0; j < n; ++j) {
        int imax = 0;
        double vmax = -1.0;
        for (int r = 0; r < n; ++r) {
            const double v = std::abs(es.vectors(r, j));
            if (v > vmax) {
                vmax = v;
                imax = r;
            }
        }
        const std::complex<double> top = es.vectors(imax, j);
        if (vmax > 0.0) es.vectors.col(j) *= std::conj(top) / std::abs(top);
    }
}

}  // namespace

EigenSystem hermitian_eig(const Matrix& a) {
    const int n = static_cast<int>(a.rows());
    if (a.rows() != a.cols() || n == 0) {
        throw ContractViolation("hermitian_eig: matrix must be square and non-empty");
    }
    if (!is_hermitian(a)) {
        const double dev = (a - a.adjoint()).cwiseAbs().maxCoeff();
        throw ContractViolation("hermitian_eig: input is not Hermitian, max |A - A†| = " +
                                std::to_string(dev));
    }

    EigenSystem es;
    es.energies.resize(n);

    const double scale = a.cwiseAbs().maxCoeff();
    const bool real_input = scale == 0.0 || a.imag().cwiseAbs().maxCoeff() < 1e-14 * scale;

    lapack_int info = 0;
    if (real_input) {
        RealMatrix work = a.real();
        info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, work.data(), n, es.energies.data());
        if (info == 0) es.vectors = work.cast<std::complex<double>>();
    } else {
        Matrix work = a;
        info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, work.data(), n, es.energies.data());
        if (info == 0) es.vectors = std::move(work);
    }
    if (info != 0) {
        throw EigensolverError("hermitian_eig: LAPACK driver failed, info = " + std::to_string(info) +
                               ", dim = " + std::to_string(n));
    }

    canonicalize(es);
    return es;
}

Matrix tensor_embed(const Matrix& a_qubit, const Matrix& b_res) {
    if (a_qubit.rows() != a_qubit.cols() || b_res.rows() != b_res.cols()) {
        throw ParameterError("tensor_embed: factors must be square");
    }
    const long dq = a_qubit.rows();
    const long dr = b_res.rows();
    if (dq * dr > 1 << 16) {
        throw ParameterError("tensor_embed: product dimension too large");
    }
    Matrix out(dq * dr, dq * dr);
    for (long i = 0; i < dq; ++i)
        for (long j = 0; j < dq; ++j)
            out.block(i * dr, j * dr, dr, dr) = a_qubit(i, j) * b_res;
    return out;
}

Matrix hermitian_function(const Matrix& a, const std::function<double(double)>& f) {
    EigenSystem es = hermitian_eig(a);
    Vector fe = es.energies.unaryExpr(f);
    return es.vectors * fe.asDiagonal() * es.vectors.adjoint();
}

}  // namespace mist::qops
