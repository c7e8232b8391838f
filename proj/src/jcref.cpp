#include "mist/jcref.hpp"

#include <cmath>
#include <vector>

#include "mist/errors.hpp"

namespace mist::jcref {

namespace {

// Poisson weights e^{-a²} a^{2n}/n! in log space; cutoff keeps the neglected
// mass below ~1e-12.
std::vector<double> poisson_weights(double a_sq, int* n_max_out) {
    const int n_max = static_cast<int>(std::ceil(a_sq + 10.0 * std::sqrt(a_sq + 1.0)));
    std::vector<double> w(n_max + 1);
    if (a_sq == 0.0) {
        w.assign(n_max + 1, 0.0);
        w[0] = 1.0;
    } else {
        const double la = std::log(a_sq);
        for (int n = 0; n <= n_max; ++n) {
            w[n] = std::exp(-a_sq + n * la - std::lgamma(n + 1.0));
        }
    }
    if (n_max_out) *n_max_out = n_max;
    return w;
}

}  // namespace

double jc_theta(int n, double lambda) {
    if (n < 0) throw ParameterError("jc_theta: n must be >= 0");
    if (n == 0) return 0.0;
    return 0.5 * std::atan(2.0 * lambda * std::sqrt(static_cast<double>(n)));
}

double jc_eigenstate_purity(int n, double lambda) {
    if (n < 1) throw ParameterError("jc_eigenstate_purity: n must be >= 1");
    const double c = std::cos(jc_theta(n, lambda));
    const double s = std::sin(jc_theta(n, lambda));
    return c * c * c * c + s * s * s * s;
}

double jc_coherent_purity_exact(double lambda, std::complex<double> alpha) {
    const double a_sq = std::norm(alpha);
    int n_max = 0;
    const std::vector<double> w = poisson_weights(a_sq, &n_max);

    std::vector<double> cos_t(n_max + 2), sin_t(n_max + 2);
    for (int n = 0; n <= n_max + 1; ++n) {
        const double th = jc_theta(n, lambda);
        cos_t[n] = std::cos(th);
        sin_t[n] = std::sin(th);
    }

    double acc = 0.0;
    for (int n = 0; n <= n_max; ++n) {
        for (int np = 0; np <= n_max; ++np) {
            const double f = cos_t[n] * sin_t[np + 1] / std::sqrt(np + 1.0) -
                             cos_t[np] * sin_t[n + 1] / std::sqrt(n + 1.0);
            if (f != 0.0) acc += w[n] * w[np] * f * f;
        }
    }
    return 1.0 - a_sq * acc;
}

double jc_coherent_purity_dispersive(double lambda, std::complex<double> alpha,
                                     bool* in_validity_range) {
    const double a_sq = std::norm(alpha);
    if (in_validity_range) *in_validity_range = a_sq * lambda * lambda < 0.01;
    const double l2 = lambda * lambda;
    return 1.0 - 2.0 * a_sq * a_sq * l2 * l2 * l2;
}

double jc_coherent_purity_strong(std::complex<double> alpha) {
    const double a_sq = std::norm(alpha);
    const double a = std::sqrt(a_sq);
    int n_max = 0;
    const std::vector<double> w = poisson_weights(a_sq, &n_max);
    double s = 0.0;
    for (int n = 0; n <= n_max; ++n) {
        s += w[n] * (a - std::sqrt(n + 1.0)) / std::sqrt(n + 1.0);
    }
    const double bracket = 1.0 + s;
    return 1.0 - (1.0 - std::exp(-a_sq)) / 8.0 + bracket * bracket / 8.0;
}

}  // namespace mist::jcref
