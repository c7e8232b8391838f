#include <doctest.h>

#include <random>

#include "mist/qops.hpp"

using namespace mist;
using qops::hermitian_eig;
using qops::hermitian_function;
using qops::ladder_ops;
using qops::tensor_embed;

namespace {

Matrix random_hermitian(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix a(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            const std::complex<double> v(u(rng), i == j ? 0.0 : u(rng));
            a(i, j) = v;
            a(j, i) = std::conj(v);
        }
    }
    return a;
}

Matrix random_complex(int r, int c, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix a(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) a(i, j) = {u(rng), u(rng)};
    return a;
}

}  // namespace

TEST_CASE("ladder operators: defining matrix elements") {
    auto [a, a_dag] = ladder_ops(2);
    CHECK(a(0, 1).real() == doctest::Approx(1.0));
    CHECK(std::abs(a(0, 0)) == 0.0);
    CHECK(std::abs(a(1, 0)) == 0.0);
    CHECK(std::abs(a(1, 1)) == 0.0);
    CHECK((a_dag - Matrix(a.adjoint())).cwiseAbs().maxCoeff() == 0.0);

    auto [a5, a5d] = ladder_ops(5);
    const Matrix num = a5d * a5;
    for (int n = 0; n < 5; ++n) CHECK(num(n, n).real() == doctest::Approx(n));

    CHECK_THROWS_AS(ladder_ops(1), ParameterError);
}

TEST_CASE("ladder operators: truncated commutator") {
    auto [a, a_dag] = ladder_ops(40);
    const Matrix comm = a * a_dag - a_dag * a;
    for (int i = 0; i < 39; ++i) CHECK(std::abs(comm(i, i) - 1.0) < 1e-14);
    CHECK(comm(39, 39).real() == doctest::Approx(-39.0));
    for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 40; ++j)
            if (i != j) CHECK(std::abs(comm(i, j)) < 1e-14);
}

TEST_CASE("hermitian_eig: small closed forms and conventions") {
    Matrix z = Matrix::Zero(2, 2);
    z(0, 0) = 1.0;
    z(1, 1) = -1.0;
    auto es = hermitian_eig(z);
    CHECK(es.energies(0) == doctest::Approx(-1.0));
    CHECK(es.energies(1) == doctest::Approx(1.0));

    Matrix x = Matrix::Zero(2, 2);
    x(0, 1) = 1.0;
    x(1, 0) = 1.0;
    es = hermitian_eig(x);
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(es.energies(0) == doctest::Approx(-1.0));
    CHECK(es.energies(1) == doctest::Approx(1.0));
    // phase convention: first of the tied largest entries made real-positive
    CHECK(es.vectors(0, 0).real() == doctest::Approx(s));
    CHECK(es.vectors(1, 0).real() == doctest::Approx(-s));
    CHECK(es.vectors(0, 1).real() == doctest::Approx(s));
    CHECK(es.vectors(1, 1).real() == doctest::Approx(s));
}

TEST_CASE("hermitian_eig: reconstruction, unitarity, determinism") {
    const Matrix a = random_hermitian(50, 1234);
    const auto es = hermitian_eig(a);

    const Matrix vhv = es.vectors.adjoint() * es.vectors;
    CHECK((vhv - Matrix::Identity(50, 50)).cwiseAbs().maxCoeff() < 1e-10);

    const Matrix rec = es.vectors * es.energies.asDiagonal() * es.vectors.adjoint();
    CHECK((rec - a).cwiseAbs().maxCoeff() < 1e-9 * a.cwiseAbs().maxCoeff());

    for (int i = 1; i < 50; ++i) CHECK(es.energies(i) >= es.energies(i - 1));

    // involution consistency: re-diagonalizing the reconstruction recovers E
    const auto es2 = hermitian_eig(rec);
    CHECK((es2.energies - es.energies).cwiseAbs().maxCoeff() <
          1e-9 * es.energies.cwiseAbs().maxCoeff());

    // bitwise determinism for a fixed input
    const auto es3 = hermitian_eig(a);
    CHECK((es3.vectors - es.vectors).cwiseAbs().maxCoeff() == 0.0);
    CHECK((es3.energies - es.energies).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hermitian_eig: rejects non-Hermitian input") {
    Matrix bad = random_complex(4, 4, 7);
    CHECK_THROWS_AS(hermitian_eig(bad), ContractViolation);
    CHECK_THROWS_AS(hermitian_eig(Matrix::Zero(2, 3)), ContractViolation);
}

TEST_CASE("tensor_embed: index ordering and oracle") {
    const Matrix i2 = Matrix::Identity(2, 2);
    const Matrix i3 = Matrix::Identity(3, 3);
    CHECK((tensor_embed(i2, i3) - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);

    Matrix d = Matrix::Zero(2, 2);
    d(1, 1) = 1.0;
    const Matrix e = tensor_embed(d, i2);
    for (int i = 0; i < 4; ++i) CHECK(e(i, i).real() == doctest::Approx(i < 2 ? 0.0 : 1.0));

    // elementwise quadruple-loop oracle on 3x3 factors
    const Matrix a = random_complex(3, 3, 21);
    const Matrix b = random_complex(3, 3, 22);
    const Matrix k = tensor_embed(a, b);
    for (int i1 = 0; i1 < 3; ++i1)
        for (int j1 = 0; j1 < 3; ++j1)
            for (int i2b = 0; i2b < 3; ++i2b)
                for (int j2 = 0; j2 < 3; ++j2)
                    CHECK(std::abs(k(i1 * 3 + i2b, j1 * 3 + j2) - a(i1, j1) * b(i2b, j2)) <
                          1e-15);
}

TEST_CASE("tensor_embed: mixed product property") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const unsigned s = static_cast<unsigned>(rng());
        const Matrix a = random_complex(3, 3, s);
        const Matrix b = random_complex(2, 2, s + 1);
        const Matrix c = random_complex(3, 3, s + 2);
        const Matrix d = random_complex(2, 2, s + 3);
        const Matrix lhs = tensor_embed(a, b) * tensor_embed(c, d);
        const Matrix rhs = tensor_embed(a * c, b * d);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("hermitian_function: identity, cosine, Taylor-series oracle") {
    const Matrix a = random_hermitian(12, 5);
    const Matrix id = hermitian_function(a, [](double x) { return x; });
    CHECK((id - a).cwiseAbs().maxCoeff() < 1e-11);
    CHECK(qops::is_hermitian(hermitian_function(a, [](double x) { return std::cos(x); }), 1e-11));

    Matrix d = Matrix::Zero(2, 2);
    d(1, 1) = M_PI;
    const Matrix cd = hermitian_function(d, [](double x) { return std::cos(x); });
    CHECK(cd(0, 0).real() == doctest::Approx(1.0));
    CHECK(cd(1, 1).real() == doctest::Approx(-1.0));

    // cos(φ) on a 30-level harmonic φ against its Taylor series to order 20,
    // compared on the lowest 10x10 block
    auto [b, b_dag] = ladder_ops(30);
    const Matrix phi = 0.61 * (b + b_dag);
    const Matrix spectral = hermitian_function(phi, [](double x) { return std::cos(x); });
    Matrix series = Matrix::Identity(30, 30);
    Matrix phi2 = phi * phi;
    Matrix term = Matrix::Identity(30, 30);
    double fact = 1.0;
    for (int m = 1; m <= 10; ++m) {
        term = term * phi2;
        fact *= (2.0 * m - 1.0) * (2.0 * m);
        series += (m % 2 == 1 ? -1.0 : 1.0) / fact * term;
    }
    CHECK((spectral - series).topLeftCorner(10, 10).cwiseAbs().maxCoeff() < 1e-8);
}
