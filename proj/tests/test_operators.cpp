#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "doctest.h"
#include "insartd/operators.hpp"
#include "test_support.hpp"

using namespace insartd;

namespace {

// Dense matrix of the full difference normal operator D*D for a given
// shape, built entry by entry from the library's own diff/diff_adjoint.
// Used only as an oracle at tiny sizes.
Eigen::MatrixXcd dense_normal_operator(Dims3 d) {
    const std::size_t n = d.total();
    Eigen::MatrixXcd a(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        ComplexTensor3 e(d);
        e[j] = Complex(1.0, 0.0);
        ComplexTensor3 col = diff_adjoint(diff(e));
        for (std::size_t i = 0; i < n; ++i) a(i, j) = col[i];
    }
    return a;
}

// Independent dense D*D built from explicit circulant difference matrices,
// never touching diff/diff_adjoint. Mode-n difference acts along index n
// of the flattened (mode-1 fastest) layout.
Eigen::MatrixXcd dense_normal_oracle(Dims3 d) {
    const std::size_t n = d.total();
    auto flat = [&](std::size_t i1, std::size_t i2, std::size_t i3) {
        return i1 + d.i1 * (i2 + d.i2 * i3);
    };
    Eigen::MatrixXcd total = Eigen::MatrixXcd::Zero(n, n);
    for (int mode = 0; mode < 3; ++mode) {
        Eigen::MatrixXcd dm = Eigen::MatrixXcd::Zero(n, n);
        for (std::size_t i1 = 0; i1 < d.i1; ++i1)
            for (std::size_t i2 = 0; i2 < d.i2; ++i2)
                for (std::size_t i3 = 0; i3 < d.i3; ++i3) {
                    std::size_t row = flat(i1, i2, i3);
                    std::size_t p1 = i1, p2 = i2, p3 = i3;
                    if (mode == 0) p1 = (i1 + d.i1 - 1) % d.i1;
                    if (mode == 1) p2 = (i2 + d.i2 - 1) % d.i2;
                    if (mode == 2) p3 = (i3 + d.i3 - 1) % d.i3;
                    dm(row, flat(i1, i2, i3)) += 1.0;
                    dm(row, flat(p1, p2, p3)) -= 1.0;
                }
        total += dm.adjoint() * dm;
    }
    return total;
}

ComplexMatrix random_matrix(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ComplexMatrix m(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) m(r, c) = Complex(gauss(rng), gauss(rng));
    return m;
}

double nuclear_norm(const ComplexMatrix& m) {
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    return svd.singularValues().sum();
}

// Objective of the SVT prox problem: tau*||x||_* + 0.5*||x - m||_F^2.
double svt_objective(const ComplexMatrix& x, const ComplexMatrix& m, double tau) {
    return tau * nuclear_norm(x) + 0.5 * (x - m).squaredNorm();
}

}  // namespace

TEST_CASE("diff matches the closed form on a hand-built tensor") {
    // 2x2x1: mode-1 differences are vertical pairs, mode-3 is identically 0
    // (size-1 circular difference telescopes to x - x).
    ComplexTensor3 t(Dims3{2, 2, 1});
    t(0, 0, 0) = Complex(1.0, 0.0);
    t(1, 0, 0) = Complex(5.0, 0.0);
    t(0, 1, 0) = Complex(2.0, 1.0);
    t(1, 1, 0) = Complex(3.0, 0.0);

    DiffStack f = diff(t);
    CHECK(f.d[0](0, 0, 0) == Complex(-4.0, 0.0));   // 1 - 5 (wraps)
    CHECK(f.d[0](1, 0, 0) == Complex(4.0, 0.0));    // 5 - 1
    CHECK(f.d[1](0, 0, 0) == Complex(-1.0, -1.0));  // 1 - (2+i)
    CHECK(f.d[1](0, 1, 0) == Complex(1.0, 1.0));    // (2+i) - 1
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(f.d[2][i] == Complex(0.0, 0.0));
}

TEST_CASE("each diff component telescopes to zero along its own mode") {
    ComplexTensor3 t = test_support::random_tensor(Dims3{4, 5, 3}, 11);
    DiffStack f = diff(t);
    Dims3 d = t.dims();

    for (std::size_t i2 = 0; i2 < d.i2; ++i2)
        for (std::size_t i3 = 0; i3 < d.i3; ++i3) {
            Complex s(0.0, 0.0);
            for (std::size_t i1 = 0; i1 < d.i1; ++i1) s += f.d[0](i1, i2, i3);
            CHECK(std::abs(s) < 1e-12);
        }
    for (std::size_t i1 = 0; i1 < d.i1; ++i1)
        for (std::size_t i3 = 0; i3 < d.i3; ++i3) {
            Complex s(0.0, 0.0);
            for (std::size_t i2 = 0; i2 < d.i2; ++i2) s += f.d[1](i1, i2, i3);
            CHECK(std::abs(s) < 1e-12);
        }
    for (std::size_t i1 = 0; i1 < d.i1; ++i1)
        for (std::size_t i2 = 0; i2 < d.i2; ++i2) {
            Complex s(0.0, 0.0);
            for (std::size_t i3 = 0; i3 < d.i3; ++i3) s += f.d[2](i1, i2, i3);
            CHECK(std::abs(s) < 1e-12);
        }
}

TEST_CASE("adjoint identity <diff(z), f> == <z, diff_adjoint(f)> holds to 1e-10") {
    for (int trial = 0; trial < 100; ++trial) {
        Dims3 d{5, 6, 4};
        ComplexTensor3 z = test_support::random_tensor(d, 500 + std::uint64_t(trial));
        DiffStack f;
        double f_sq = 0.0;
        for (int n = 0; n < 3; ++n) {
            f.d[n] = test_support::random_tensor(d, 900 + 3 * std::uint64_t(trial) + n);
            double fn = frobenius_norm(f.d[n]);
            f_sq += fn * fn;
        }

        DiffStack dz = diff(z);
        Complex lhs(0.0, 0.0);
        for (int n = 0; n < 3; ++n) lhs += inner(dz.d[n], f.d[n]);
        Complex rhs = inner(z, diff_adjoint(f));
        // Mismatch is measured relative to the operand norms.
        CHECK(std::abs(lhs - rhs) / (frobenius_norm(z) * std::sqrt(f_sq)) <= 1e-10);
    }
}

TEST_CASE("dense circulant oracle agrees with diff_adjoint(diff(.))") {
    for (Dims3 d : {Dims3{4, 4, 1}, Dims3{3, 2, 4}, Dims3{2, 3, 3}}) {
        Eigen::MatrixXcd lib = dense_normal_operator(d);
        Eigen::MatrixXcd oracle = dense_normal_oracle(d);
        CHECK((lib - oracle).norm() < 1e-12);
    }
}

TEST_CASE("freq kernel is nonnegative with an exactly zero DC bin") {
    for (Dims3 d : {Dims3{4, 4, 3}, Dims3{1, 5, 2}, Dims3{7, 1, 1}}) {
        FreqKernel k = make_freq_kernel(d);
        REQUIRE(k.dims() == d);
        CHECK(k.t(0, 0, 0) == 0.0);
        for (double v : k.t.data) CHECK(v >= 0.0);
    }
}

TEST_CASE("solve_z matches a dense LU solve of (mu*I + mu*D*D) over all tiny shapes") {
    std::uint64_t seed = 4000;
    for (std::size_t i1 = 1; i1 <= 4; ++i1)
        for (std::size_t i2 = 1; i2 <= 4; ++i2)
            for (std::size_t i3 = 1; i3 <= 4; ++i3) {
                Dims3 d{i1, i2, i3};
                const std::size_t n = d.total();
                double mu = 0.37;
                Eigen::MatrixXcd a =
                    mu * Eigen::MatrixXcd::Identity(n, n) + mu * dense_normal_oracle(d);

                ComplexTensor3 h = test_support::random_tensor(d, seed++);
                Eigen::VectorXcd hv(n);
                for (std::size_t i = 0; i < n; ++i) hv(i) = h[i];
                Eigen::VectorXcd zv = a.partialPivLu().solve(hv);

                FreqKernel k = make_freq_kernel(d);
                ComplexTensor3 z = solve_z(h, mu, k);
                double num = 0.0, den = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    num += std::norm(z[i] - zv(i));
                    den += std::norm(zv(i));
                }
                CHECK(std::sqrt(num / den) < 1e-10);
            }
}

TEST_CASE("solve_z of a constant tensor divides by mu") {
    // D of a constant is zero, so (mu*I + mu*D*D) z = h gives z = h / mu.
    Dims3 d{3, 4, 2};
    ComplexTensor3 h(d, Complex(2.0, -6.0));
    double mu = 4.0;
    FreqKernel k = make_freq_kernel(d);
    ComplexTensor3 z = solve_z(h, mu, k);
    for (std::size_t i = 0; i < z.size(); ++i)
        CHECK(std::abs(z[i] - Complex(0.5, -1.5)) < 1e-12);
}

TEST_CASE("solve_z inverts the operator it claims to solve") {
    Dims3 d{5, 3, 4};
    ComplexTensor3 h = test_support::random_tensor(d, 77);
    double mu = 1.3;
    FreqKernel k = make_freq_kernel(d);
    ComplexTensor3 z = solve_z(h, mu, k);

    // Apply mu*z + mu*D*D z directly and compare with h.
    ComplexTensor3 dd = diff_adjoint(diff(z));
    ComplexTensor3 back(d);
    for (std::size_t i = 0; i < back.size(); ++i) back[i] = mu * z[i] + mu * dd[i];
    CHECK(test_support::rel_error(back, h) < 1e-12);

    CHECK_THROWS_AS((void)solve_z(h, 0.0, k), std::invalid_argument);
    CHECK_THROWS_AS((void)solve_z(h, -1.0, k), std::invalid_argument);
    ComplexTensor3 wrong(Dims3{5, 3, 5});
    CHECK_THROWS_AS((void)solve_z(wrong, mu, k), std::invalid_argument);
}

TEST_CASE("fft round trip is the identity up to rounding") {
    Dims3 d{4, 6, 5};
    Fft3 fft(d);
    ComplexTensor3 t = test_support::random_tensor(d, 55);
    ComplexTensor3 back = fft.inverse(fft.forward(t));
    CHECK(test_support::rel_error(back, t) < 1e-13);
}

TEST_CASE("svt shrinks singular values of a diagonal matrix") {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 0) = Complex(3.0, 0.0);
    m(1, 1) = Complex(1.0, 0.0);

    ComplexMatrix s2 = svt(m, 2.0);
    CHECK(std::abs(s2(0, 0) - Complex(1.0, 0.0)) < 1e-12);
    CHECK(std::abs(s2(1, 1)) < 1e-12);
    CHECK(std::abs(s2(0, 1)) < 1e-12);
    CHECK(std::abs(s2(1, 0)) < 1e-12);

    ComplexMatrix s0 = svt(m, 0.0);
    CHECK((s0 - m).norm() < 1e-12);

    ComplexMatrix s9 = svt(m, 9.0);
    CHECK(s9.norm() < 1e-12);

    CHECK_THROWS_AS((void)svt(m, -0.1), std::invalid_argument);
}

TEST_CASE("svt of a rank-1 matrix matches the closed form") {
    // m = sigma * u v^H has svt(m, tau) = max(sigma - tau, 0) * u v^H.
    Eigen::VectorXcd u = random_matrix(4, 1, 81).col(0);
    Eigen::VectorXcd v = random_matrix(3, 1, 82).col(0);
    u.normalize();
    v.normalize();
    double sigma = 2.5;
    ComplexMatrix m = sigma * u * v.adjoint();

    ComplexMatrix got = svt(m, 1.0);
    ComplexMatrix want = (sigma - 1.0) * u * v.adjoint();
    CHECK((got - want).norm() < 1e-10);
}

TEST_CASE("svt output minimizes the nuclear-norm prox objective locally") {
    // The prox objective at svt(m,tau) must beat scaled perturbations of the
    // candidate, of m itself, and of random directions.
    ComplexMatrix m = random_matrix(3, 3, 91);
    double tau = 0.8;
    ComplexMatrix x = svt(m, tau);
    double fx = svt_objective(x, m, tau);

    std::mt19937_64 rng(92);
    for (double scale : {0.8, 0.9, 0.95, 1.05, 1.1, 1.2}) {
        CHECK(fx <= svt_objective(scale * x, m, tau) + 1e-10);
        CHECK(fx <= svt_objective(scale * m, m, tau) + 1e-10);
    }
    for (int trial = 0; trial < 50; ++trial) {
        ComplexMatrix dir = random_matrix(3, 3, 1000 + std::uint64_t(trial));
        dir *= 0.1 / dir.norm();
        CHECK(fx <= svt_objective(x + dir, m, tau) + 1e-10);
    }
}

TEST_CASE("soft threshold keeps phase and shrinks modulus") {
    CHECK(soft_threshold(Complex(0.0, 0.0), 1.0) == Complex(0.0, 0.0));
    CHECK(std::abs(soft_threshold(Complex(3.0, 4.0), 1.0) - Complex(2.4, 3.2)) < 1e-12);
    CHECK(soft_threshold(Complex(0.5, 0.0), 1.0) == Complex(0.0, 0.0));
    CHECK(std::abs(soft_threshold(Complex(-2.0, 0.0), 0.5) - Complex(-1.5, 0.0)) < 1e-12);

    ComplexTensor3 t = test_support::random_tensor(Dims3{3, 3, 3}, 13);
    double tau = 0.7;
    ComplexTensor3 s = soft_threshold(t, tau);
    for (std::size_t i = 0; i < t.size(); ++i) {
        double a = std::abs(t[i]);
        CHECK(std::abs(std::abs(s[i]) - std::max(a - tau, 0.0)) < 1e-12);
        if (a > tau) {
            // Phase preserved: s and t are positive real multiples.
            Complex ratio = s[i] / t[i];
            CHECK(std::abs(ratio.imag()) < 1e-12);
            CHECK(ratio.real() > 0.0);
        }
    }
    CHECK_THROWS_AS((void)soft_threshold(t, -1e-9), std::invalid_argument);
}
