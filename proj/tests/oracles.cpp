#include "oracles.hpp"

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <cmath>
#include <stdexcept>

namespace oracles {

std::vector<double> fluxonium_phase_grid(double e_j_ghz, double e_c_ghz, double e_l_ghz,
                                         double phi_ext_phi0, int n_levels, double phi_max,
                                         int n_points) {
    const int n = n_points;
    const double h = 2.0 * phi_max / (n + 1);
    const double phi_ext = 2.0 * M_PI * phi_ext_phi0;

    // banded symmetric storage, lower, bandwidth 3 (6th-order -d²/dφ² stencil)
    // -d²: (1/h²) [ 49/18, -3/2, 3/20, -1/90 ] on diagonals 0..3
    const double inv_h2 = 1.0 / (h * h);
    const double c0 = 49.0 / 18.0 * inv_h2;
    const double c1 = -1.5 * inv_h2;
    const double c2 = 3.0 / 20.0 * inv_h2;
    const double c3 = -1.0 / 90.0 * inv_h2;

    const int kd = 3;
    std::vector<double> ab(static_cast<std::size_t>(kd + 1) * n, 0.0);
    auto at = [&](int i, int j) -> double& {  // i >= j, lower banded col-major
        return ab[static_cast<std::size_t>(j) * (kd + 1) + (i - j)];
    };
    for (int j = 0; j < n; ++j) {
        const double phi = -phi_max + (j + 1) * h;
        at(j, j) = 4.0 * e_c_ghz * c0 + 0.5 * e_l_ghz * phi * phi -
                   e_j_ghz * std::cos(phi - phi_ext);
        if (j + 1 < n) at(j + 1, j) = 4.0 * e_c_ghz * c1;
        if (j + 2 < n) at(j + 2, j) = 4.0 * e_c_ghz * c2;
        if (j + 3 < n) at(j + 3, j) = 4.0 * e_c_ghz * c3;
    }

    std::vector<double> w(n), z(1);
    std::vector<lapack_int> ifail(n);
    lapack_int m = 0;
    const lapack_int info = LAPACKE_dsbevx(
        LAPACK_COL_MAJOR, 'N', 'I', 'L', n, kd, ab.data(), kd + 1, z.data(), 1, 0.0, 0.0, 1,
        n_levels, 2.0 * LAPACKE_dlamch('S'), &m, w.data(), z.data(), 1, ifail.data());
    if (info != 0 || m < n_levels) {
        throw std::runtime_error("fluxonium_phase_grid: dsbevx failed");
    }
    std::vector<double> out(n_levels);
    for (int k = 0; k < n_levels; ++k) out[k] = w[k] - w[0];
    return out;
}

std::vector<double> transmon_phase_grid(double e_j_ghz, double e_c_ghz, double n_g,
                                        int n_levels, int n_points) {
    const int n = n_points;
    const double h = 2.0 * M_PI / n;
    mist::Matrix ham = mist::Matrix::Zero(n, n);

    // 6th-order periodic stencils
    const double d2[4] = {-49.0 / 18.0, 1.5, -3.0 / 20.0, 1.0 / 90.0};  // d²/dφ²
    const double d1[4] = {0.0, 0.75, -3.0 / 20.0, 1.0 / 60.0};          // d/dφ (antisym)
    const std::complex<double> im(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        const double phi = i * h;
        ham(i, i) += 4.0 * e_c_ghz * (-d2[0] / (h * h) + n_g * n_g) - e_j_ghz * std::cos(phi);
        for (int o = 1; o <= 3; ++o) {
            const int ip = (i + o) % n;
            const int in = (i - o + n) % n;
            ham(i, ip) += 4.0 * e_c_ghz * (-d2[o] / (h * h));
            ham(i, in) += 4.0 * e_c_ghz * (-d2[o] / (h * h));
            // (−i d/dφ − n_g)² cross term: +2 n_g i d/dφ
            ham(i, ip) += 4.0 * e_c_ghz * 2.0 * n_g * im * (d1[o] / h);
            ham(i, in) += 4.0 * e_c_ghz * 2.0 * n_g * im * (-d1[o] / h);
        }
    }
    const mist::qops::EigenSystem es = mist::qops::hermitian_eig(ham);
    std::vector<double> out(n_levels);
    for (int k = 0; k < n_levels; ++k) out[k] = es.energies(k) - es.energies(0);
    return out;
}

std::vector<double> classical_driven_photon(double omega_r, double kappa, double eps,
                                            double t_raise, double omega_d,
                                            const std::vector<double>& times, double dt) {
    std::complex<double> alpha(0.0, 0.0);
    const std::complex<double> im(0.0, 1.0);
    auto rhs = [&](double t, std::complex<double> a) {
        const double env = t < t_raise ? eps * std::sin(0.5 * M_PI * t / t_raise) : eps;
        return -im * omega_r * a - 0.5 * kappa * a + 2.0 * env * std::cos(omega_d * t);
    };
    std::vector<double> out;
    out.reserve(times.size());
    double t = 0.0;
    for (double ts : times) {
        while (t < ts - 1e-12) {
            const double hstep = std::min(dt, ts - t);
            const auto k1 = rhs(t, alpha);
            const auto k2 = rhs(t + 0.5 * hstep, alpha + 0.5 * hstep * k1);
            const auto k3 = rhs(t + 0.5 * hstep, alpha + 0.5 * hstep * k2);
            const auto k4 = rhs(t + hstep, alpha + hstep * k3);
            alpha += (hstep / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += hstep;
        }
        out.push_back(std::norm(alpha));
    }
    return out;
}

mist::Matrix rwa_project(const mist::Matrix& h, int dim_q, int dim_r) {
    mist::Matrix out = h;
    for (int k1 = 0; k1 < dim_q; ++k1)
        for (int n1 = 0; n1 < dim_r; ++n1)
            for (int k2 = 0; k2 < dim_q; ++k2)
                for (int n2 = 0; n2 < dim_r; ++n2)
                    if (k1 + n1 != k2 + n2) out(k1 * dim_r + n1, k2 * dim_r + n2) = 0.0;
    return out;
}

}  // namespace oracles
