#include "mist/circuits.hpp"

#include <cmath>
#include <string>

namespace mist::circuits {

namespace {

constexpr double kParityPurityFloor = 0.999;

void check_positive(double v, const char* name) {
    if (!(v > 0.0)) throw ParameterError(std::string(name) + " must be positive");
}

// Parity tags from the even/odd harmonic-basis content of each eigenvector.
// Only assigned when every retained level is cleanly polarized, which is the
// case at the flux sweet spots.
std::vector<int> harmonic_parity_tags(const Matrix& vectors, int n_keep) {
    std::vector<int> tags(n_keep);
    for (int k = 0; k < n_keep; ++k) {
        double even = 0.0, odd = 0.0;
        for (int m = 0; m < vectors.rows(); ++m) {
            const double w = std::norm(vectors(m, k));
            (m % 2 == 0 ? even : odd) += w;
        }
        if (even > kParityPurityFloor) {
            tags[k] = +1;
        } else if (odd > kParityPurityFloor) {
            tags[k] = -1;
        } else {
            return {};
        }
    }
    return tags;
}

}  // namespace

std::pair<Matrix, Matrix> osc_quadratures(double e_c_ghz, double e_l_ghz, int n_ho) {
    check_positive(e_c_ghz, "E_C");
    check_positive(e_l_ghz, "E_L");
    auto [b, b_dag] = qops::ladder_ops(n_ho);
    const double phi_zpf = std::pow(8.0 * e_c_ghz / e_l_ghz, 0.25) / std::sqrt(2.0);
    const double n_zpf = 0.5 / phi_zpf;
    Matrix phi = phi_zpf * (b + b_dag);
    Matrix n = std::complex<double>(0.0, 1.0) * n_zpf * (b_dag - b);
    return {phi, n};
}

QubitEigens fluxonium_eigens(const FluxoniumSpec& spec) {
    check_positive(spec.e_j_ghz, "E_J");
    check_positive(spec.e_c_ghz, "E_C");
    check_positive(spec.e_l_ghz, "E_L");
    if (spec.n_keep > spec.n_ho || spec.n_ho < 2 * spec.n_keep) {
        throw ParameterError("fluxonium_eigens: need n_ho >= 2*n_keep");
    }

    auto [phi, n] = osc_quadratures(spec.e_c_ghz, spec.e_l_ghz, spec.n_ho);
    const double phi_ext = kTwoPi * spec.phi_ext_phi0;
    Matrix cos_shifted =
        qops::hermitian_function(phi, [phi_ext](double x) { return std::cos(x - phi_ext); });

    Matrix h = kTwoPi * (4.0 * spec.e_c_ghz * (n * n) +
                         0.5 * spec.e_l_ghz * (phi * phi) -
                         spec.e_j_ghz * cos_shifted);
    qops::EigenSystem es = qops::hermitian_eig(h);

    QubitEigens out;
    out.energies = es.energies.head(spec.n_keep).array() - es.energies(0);
    const Matrix basis = es.vectors.leftCols(spec.n_keep);
    out.n_op = basis.adjoint() * n * basis;
    out.phi_op = basis.adjoint() * phi * basis;

    const double frac = spec.phi_ext_phi0 - std::floor(spec.phi_ext_phi0);
    if (frac == 0.0 || frac == 0.5) {
        out.parity = harmonic_parity_tags(basis, spec.n_keep);
    }
    return out;
}

QubitEigens transmon_eigens(const TransmonSpec& spec) {
    check_positive(spec.e_j_ghz, "E_J");
    check_positive(spec.e_c_ghz, "E_C");
    const int dim = 2 * spec.n_charge + 1;
    if (dim < 3 * spec.n_keep) {
        throw ParameterError("transmon_eigens: need 2N+1 >= 3*n_keep");
    }

    Matrix n_shift = Matrix::Zero(dim, dim);
    Matrix h = Matrix::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        const double nv = static_cast<double>(i - spec.n_charge) - spec.n_g;
        n_shift(i, i) = nv;
        h(i, i) = 4.0 * spec.e_c_ghz * nv * nv;
        if (i + 1 < dim) {
            h(i, i + 1) = -0.5 * spec.e_j_ghz;  // cos φ couples n ↔ n±1
            h(i + 1, i) = -0.5 * spec.e_j_ghz;
        }
    }
    h *= kTwoPi;
    qops::EigenSystem es = qops::hermitian_eig(h);

    QubitEigens out;
    out.energies = es.energies.head(spec.n_keep).array() - es.energies(0);
    const Matrix basis = es.vectors.leftCols(spec.n_keep);
    out.n_op = basis.adjoint() * n_shift * basis;
    return out;
}

double transmon_ej_for_freq(const TransmonSpec& spec, double freq_01_ghz) {
    check_positive(freq_01_ghz, "target frequency");
    auto f01 = [&](double ej) {
        TransmonSpec s = spec;
        s.e_j_ghz = ej;
        return transmon_eigens(s).energies(1) / kTwoPi;
    };
    // ω_01 ≈ sqrt(8 E_C E_J) − E_C gives the bracket seed
    double lo = std::max(1e-3, 0.2 * (freq_01_ghz + spec.e_c_ghz) * (freq_01_ghz + spec.e_c_ghz) /
                                    (8.0 * spec.e_c_ghz));
    double hi = 5.0 * (freq_01_ghz + spec.e_c_ghz) * (freq_01_ghz + spec.e_c_ghz) /
                (8.0 * spec.e_c_ghz);
    double flo = f01(lo) - freq_01_ghz;
    double fhi = f01(hi) - freq_01_ghz;
    if (flo * fhi > 0.0) throw ParameterError("transmon_ej_for_freq: target frequency not bracketed");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f01(mid) - freq_01_ghz;
        if (std::abs(fm) < 1e-12 || hi - lo < 1e-13 * hi) return mid;
        if (flo * fm <= 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

SystemModel build_system(const QubitEigens& qubit, double omega_r_ghz, double g_ghz,
                         CouplingKind kind, int dim_q, int dim_r) {
    check_positive(omega_r_ghz, "omega_r");
    if (dim_q < 1 || dim_q > qubit.energies.size()) {
        throw ParameterError("build_system: dim_q exceeds retained qubit levels");
    }
    if (dim_r < 2) throw ParameterError("build_system: dim_r must be >= 2");
    if (kind == CouplingKind::inductive && qubit.phi_op.size() == 0) {
        throw ParameterError("build_system: inductive coupling requires a flux operator");
    }

    SystemModel m;
    m.qubit = qubit;
    m.omega_r = kTwoPi * omega_r_ghz;
    m.g = kTwoPi * g_ghz;
    m.coupling_kind = kind;
    m.dim_q = dim_q;
    m.dim_r = dim_r;

    auto [a, a_dag] = qops::ladder_ops(dim_r);
    const Matrix iq = Matrix::Identity(dim_q, dim_q);
    const Matrix ir = Matrix::Identity(dim_r, dim_r);

    Matrix hq = Matrix::Zero(dim_q, dim_q);
    hq.diagonal() = qubit.energies.head(dim_q).cast<std::complex<double>>();
    m.h0 = qops::tensor_embed(hq, ir) + qops::tensor_embed(iq, m.omega_r * (a_dag * a));

    const std::complex<double> im(0.0, 1.0);
    if (kind == CouplingKind::capacitive) {
        m.v_qr_unit = im * qops::tensor_embed(qubit.n_op.topLeftCorner(dim_q, dim_q), a_dag - a);
    } else {
        m.v_qr_unit = qops::tensor_embed(qubit.phi_op.topLeftCorner(dim_q, dim_q), a_dag + a);
    }
    // numerical dust removal keeps H_idle exactly Hermitian
    m.v_qr_unit = 0.5 * (m.v_qr_unit + m.v_qr_unit.adjoint()).eval();
    m.d_op = qops::tensor_embed(iq, im * (a_dag - a));
    return m;
}

double drive_envelope(double t_ns, double eps, double t_raise_ns) {
    if (t_ns < 0.0) throw ParameterError("drive_envelope: negative time");
    check_positive(t_raise_ns, "t_raise");
    if (t_ns >= t_raise_ns) return eps;
    return eps * std::sin(0.5 * M_PI * t_ns / t_raise_ns);
}

}  // namespace mist::circuits
