#include "mist/metrics.hpp"

#include <cmath>
#include <string>

namespace mist::metrics {

double dispersive_shift(const dasi::DressedLadder& ladder, int k, double omega_r) {
    return ladder.energy(k, 1) - ladder.energy(k, 0) - omega_r;
}

std::pair<double, int> n_crit(const circuits::QubitEigens& qubit, int k, double g,
                              double omega_r) {
    const int n_levels = qops::interior_qubit_levels(static_cast<int>(qubit.energies.size()));
    if (k < 0 || k >= n_levels) throw ParameterError("n_crit: level index out of range");
    double mel_scale = 0.0;
    for (int l = 0; l < n_levels; ++l) {
        if (l != k) mel_scale = std::max(mel_scale, std::abs(qubit.n_op(k, l)));
    }
    if (mel_scale == 0.0) {
        throw UndefinedMetric("n_crit: all charge matrix elements from level " +
                              std::to_string(k) + " vanish");
    }

    double best = std::numeric_limits<double>::infinity();
    int l_best = -1;
    for (int l = 0; l < n_levels; ++l) {
        if (l == k) continue;
        const double mel = std::abs(qubit.n_op(k, l));
        if (mel < 1e-8 * mel_scale) continue;  // selection-rule zero
        const double num = std::abs(qubit.omega(k, l)) - omega_r;
        const double v = std::norm(num / (2.0 * g * mel));
        if (v < best) {
            best = v;
            l_best = l;
        }
    }
    return {best, l_best};
}

int coherent_cutoff(double alpha_sq) {
    return static_cast<int>(std::ceil(alpha_sq + 6.0 * std::sqrt(alpha_sq + 1.0)));
}

DressedCoherentState dressed_coherent(const dasi::DressedLadder& ladder, int k, Complex alpha) {
    const double a2 = std::norm(alpha);
    const int n_max = coherent_cutoff(a2);
    const int interior = qops::interior_resonator_levels(ladder.dim_r);
    if (n_max >= interior) {
        throw TruncationOverflow(
            "dressed_coherent: |α|² = " + std::to_string(a2) +
                " needs levels beyond the trusted interior band; enlarge dim_r",
            0.0, 0.0);
    }

    DressedCoherentState st;
    st.k = k;
    st.alpha = alpha;
    st.amplitudes.resize(n_max + 1);
    // log-space Poisson weights stay finite for any practical |α|²
    const double la = a2 > 0.0 ? 0.5 * std::log(a2) : 0.0;
    const double phase = std::arg(alpha);
    double tail = 1.0;
    for (int n = 0; n <= n_max; ++n) {
        const double lw = a2 > 0.0 ? -0.5 * a2 + n * la - 0.5 * std::lgamma(n + 1.0)
                                   : (n == 0 ? 0.0 : -std::numeric_limits<double>::infinity());
        const double mag = std::exp(lw);
        st.amplitudes(n) = std::polar(mag, phase * n);
        tail -= mag * mag;
    }
    st.tail_mass = std::max(0.0, tail);
    st.amplitudes.normalize();
    return st;
}

CVector dressed_coherent_vector(const dasi::DressedLadder& ladder,
                                const DressedCoherentState& state) {
    CVector psi = CVector::Zero(ladder.dim());
    for (int n = 0; n < state.amplitudes.size(); ++n) {
        psi += state.amplitudes(n) * ladder.vectors.col(ladder.index_of(state.k, n));
    }
    return psi;
}

double mel_error(const dasi::DressedLadder& ladder, int k, Complex alpha) {
    if (alpha == Complex(0.0, 0.0)) {
        throw ParameterError("mel_error: undefined at α = 0 (use the perturbative variant)");
    }
    const DressedCoherentState st = dressed_coherent(ladder, k, alpha);
    const CVector psi = dressed_coherent_vector(ladder, st);
    // <psi| (I ⊗ a) |psi> without forming the operator
    Complex expv(0.0, 0.0);
    const int dim_r = ladder.dim_r;
    for (int kk = 0; kk < ladder.dim_q; ++kk) {
        for (int n = 1; n < dim_r; ++n) {
            const int base = kk * dim_r;
            expv += std::conj(psi(base + n - 1)) * std::sqrt(static_cast<double>(n)) *
                    psi(base + n);
        }
    }
    return std::abs(1.0 - expv / alpha);
}

double perturbative_mel_error(const circuits::QubitEigens& qubit, int k, double g,
                              double omega_r, double alpha_phase) {
    const int n_levels = qops::interior_qubit_levels(static_cast<int>(qubit.energies.size()));
    if (k < 0 || k >= n_levels) {
        throw ParameterError("perturbative_mel_error: level index out of range");
    }
    const Complex ratio = std::polar(1.0, 2.0 * alpha_phase);  // α/α*
    Complex sum(0.0, 0.0);
    for (int l = 0; l < n_levels; ++l) {
        if (l == k) continue;
        const double o2 = std::norm(qubit.n_op(k, l));
        if (o2 == 0.0) continue;
        const double d = qubit.energies(k) - qubit.energies(l);
        const double dm = d - omega_r;
        const double dp = d + omega_r;
        if (std::abs(dm) < 1e-9 * omega_r || std::abs(dp) < 1e-9 * omega_r) {
            throw DivergentPerturbation(
                "perturbative_mel_error: resonant denominator for levels " + std::to_string(k) +
                " and " + std::to_string(l));
        }
        sum += o2 * (1.0 / (dm * dm) - 1.0 / (dp * dp) + 2.0 * d * ratio / (omega_r * dm * dp));
    }
    return 0.5 * g * g * std::abs(sum);
}

Matrix reduced_qubit_dm(const CVector& state, int dim_q, int dim_r) {
    if (state.size() != static_cast<Eigen::Index>(dim_q) * dim_r) {
        throw ParameterError("reduced_qubit_dm: state size does not match dims");
    }
    // rho_q = Psi Psi† with Psi the dim_q x dim_r amplitude matrix
    Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        amp(state.data(), dim_q, dim_r);
    return amp * amp.adjoint();
}

Matrix reduced_qubit_dm(const Matrix& rho, int dim_q, int dim_r) {
    if (rho.rows() != static_cast<Eigen::Index>(dim_q) * dim_r || rho.rows() != rho.cols()) {
        throw ParameterError("reduced_qubit_dm: density matrix size does not match dims");
    }
    Matrix out = Matrix::Zero(dim_q, dim_q);
    for (int i = 0; i < dim_q; ++i)
        for (int j = 0; j < dim_q; ++j)
            for (int n = 0; n < dim_r; ++n)
                out(i, j) += rho(i * dim_r + n, j * dim_r + n);
    return out;
}

double purity(const Matrix& rho_q) { return (rho_q * rho_q).trace().real(); }

double qubit_occupation(const Matrix& rho_q) {
    double nq = 0.0;
    for (int k = 0; k < rho_q.rows(); ++k) nq += k * rho_q(k, k).real();
    return nq;
}

BranchProbabilities ladder_probabilities(const CVector& state,
                                         const dasi::DressedLadder& ladder) {
    if (state.size() != ladder.dim()) {
        throw ParameterError("ladder_probabilities: state size does not match ladder");
    }
    const int iq = qops::interior_qubit_levels(ladder.dim_q);
    const int ir = qops::interior_resonator_levels(ladder.dim_r);
    BranchProbabilities out;
    out.p.assign(iq, 0.0);
    // overlaps with every dressed state at once
    const CVector amp = ladder.vectors.adjoint() * state;
    double interior_sum = 0.0;
    for (int k = 0; k < iq; ++k) {
        double s = 0.0;
        for (int n = 0; n < ir; ++n) s += std::norm(amp(ladder.index_of(k, n)));
        out.p[k] = s;
        interior_sum += s;
    }
    out.guard_mass = std::max(0.0, state.squaredNorm() - interior_sum);
    return out;
}

BranchProbabilities bare_probabilities(const CVector& state, int dim_q, int dim_r) {
    if (state.size() != static_cast<Eigen::Index>(dim_q) * dim_r) {
        throw ParameterError("bare_probabilities: state size does not match dims");
    }
    const int iq = qops::interior_qubit_levels(dim_q);
    const int ir = qops::interior_resonator_levels(dim_r);
    BranchProbabilities out;
    out.p.assign(iq, 0.0);
    double interior_sum = 0.0;
    for (int k = 0; k < iq; ++k) {
        double s = 0.0;
        for (int n = 0; n < ir; ++n) s += std::norm(state(k * dim_r + n));
        out.p[k] = s;
        interior_sum += s;
    }
    out.guard_mass = std::max(0.0, state.squaredNorm() - interior_sum);
    return out;
}

}  // namespace mist::metrics
