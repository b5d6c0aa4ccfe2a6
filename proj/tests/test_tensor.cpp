#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "insartd/tensor.hpp"
#include "test_support.hpp"

using namespace insartd;

namespace {

ComplexTensor3 numbered_2x2x2() {
    // Entries 1..8 laid down in storage order: (i1,i2,i3) -> 1 + flat offset.
    ComplexTensor3 t(Dims3{2, 2, 2});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = Complex(double(i + 1), 0.0);
    return t;
}

}  // namespace

TEST_CASE("unfold of the numbered 2x2x2 tensor matches the mode conventions") {
    ComplexTensor3 t = numbered_2x2x2();

    ComplexMatrix m1 = unfold(t, 1);
    REQUIRE(m1.rows() == 2);
    REQUIRE(m1.cols() == 4);
    CHECK(m1(0, 0) == Complex(1.0, 0.0));
    CHECK(m1(1, 0) == Complex(2.0, 0.0));
    double expect1[2][4] = {{1, 3, 5, 7}, {2, 4, 6, 8}};
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 4; ++c) CHECK(m1(r, c) == Complex(expect1[r][c], 0.0));

    ComplexMatrix m2 = unfold(t, 2);
    double expect2[2][4] = {{1, 2, 5, 6}, {3, 4, 7, 8}};
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 4; ++c) CHECK(m2(r, c) == Complex(expect2[r][c], 0.0));

    ComplexMatrix m3 = unfold(t, 3);
    double expect3[2][4] = {{1, 2, 3, 4}, {5, 6, 7, 8}};
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 4; ++c) CHECK(m3(r, c) == Complex(expect3[r][c], 0.0));
}

TEST_CASE("fold inverts unfold bit-exactly for random tensors in every mode") {
    std::mt19937_64 dims_rng(7);
    std::uniform_int_distribution<std::size_t> pick(1, 5);
    for (int trial = 0; trial < 1000; ++trial) {
        Dims3 d{pick(dims_rng), pick(dims_rng), pick(dims_rng)};
        ComplexTensor3 t = test_support::random_tensor(d, 1000 + std::uint64_t(trial));
        for (int mode = 1; mode <= 3; ++mode) {
            ComplexTensor3 back = fold(unfold(t, mode), mode, d);
            REQUIRE(back == t);
        }
    }
}

TEST_CASE("unfold row/column counts follow the mode") {
    ComplexTensor3 t(Dims3{3, 4, 5});
    CHECK(unfold(t, 1).rows() == 3);
    CHECK(unfold(t, 1).cols() == 20);
    CHECK(unfold(t, 2).rows() == 4);
    CHECK(unfold(t, 2).cols() == 15);
    CHECK(unfold(t, 3).rows() == 5);
    CHECK(unfold(t, 3).cols() == 12);
}

TEST_CASE("unfold and fold reject invalid modes and shapes") {
    ComplexTensor3 t(Dims3{2, 3, 4});
    CHECK_THROWS_AS((void)unfold(t, 0), std::invalid_argument);
    CHECK_THROWS_AS((void)unfold(t, 4), std::invalid_argument);
    ComplexMatrix m = unfold(t, 1);
    CHECK_THROWS_AS((void)fold(m, 0, t.dims()), std::invalid_argument);
    CHECK_THROWS_AS((void)fold(m, 2, t.dims()), std::invalid_argument);
    CHECK_THROWS_AS((void)fold(m, 1, Dims3{2, 3, 5}), std::invalid_argument);
}

TEST_CASE("from_data validates the element count") {
    std::vector<Complex> six(6, Complex(1.0, 0.0));
    ComplexTensor3 t = ComplexTensor3::from_data(Dims3{1, 2, 3}, six);
    CHECK(t.size() == 6);
    CHECK_THROWS_AS((void)ComplexTensor3::from_data(Dims3{2, 2, 2}, six), std::invalid_argument);
}

TEST_CASE("inner product is conjugate-linear in the first argument") {
    Dims3 d{4, 3, 5};
    ComplexTensor3 a = test_support::random_tensor(d, 21);
    ComplexTensor3 b = test_support::random_tensor(d, 22);

    // Conjugate symmetry.
    Complex ab = inner(a, b);
    Complex ba = inner(b, a);
    CHECK(std::abs(ab - std::conj(ba)) < 1e-12);

    // <a,a> is the squared Frobenius norm, real and nonnegative.
    Complex aa = inner(a, a);
    CHECK(std::abs(aa.imag()) < 1e-12);
    CHECK(aa.real() >= 0.0);
    CHECK(std::abs(aa.real() - frobenius_norm(a) * frobenius_norm(a)) <
          1e-10 * std::max(1.0, aa.real()));

    // Scaling the first argument by c scales the product by conj(c).
    Complex c(0.3, -1.7);
    ComplexTensor3 ca = a;
    for (std::size_t i = 0; i < ca.size(); ++i) ca[i] *= c;
    Complex cab = inner(ca, b);
    CHECK(std::abs(cab - std::conj(c) * ab) < 1e-10 * std::max(1.0, std::abs(ab)));

    ComplexTensor3 wrong(Dims3{4, 3, 4});
    CHECK_THROWS_AS((void)inner(a, wrong), std::invalid_argument);
}

TEST_CASE("norms agree with direct accumulation and survive unfolding") {
    Dims3 d{5, 4, 6};
    ComplexTensor3 t = test_support::random_tensor(d, 33);

    double sq = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        sq += std::norm(t[i]);
        l1 += std::abs(t[i]);
    }
    CHECK(frobenius_norm(t) == doctest::Approx(std::sqrt(sq)).epsilon(1e-12));
    CHECK(l1_norm(t) == doctest::Approx(l1).epsilon(1e-12));

    for (int mode = 1; mode <= 3; ++mode) {
        double mf = unfold(t, mode).norm();
        CHECK(mf == doctest::Approx(frobenius_norm(t)).epsilon(1e-12));
    }

    ComplexTensor3 z(Dims3{3, 3, 3});
    CHECK(frobenius_norm(z) == 0.0);
    CHECK(l1_norm(z) == 0.0);
    ComplexTensor3 single(Dims3{1, 1, 1});
    single[0] = Complex(3.0, 4.0);
    CHECK(l1_norm(single) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("all_finite spots NaN and infinity in either part") {
    ComplexTensor3 t(Dims3{2, 2, 2}, Complex(1.0, -1.0));
    CHECK(all_finite(t));
    t(1, 0, 1) = Complex(std::nan(""), 0.0);
    CHECK(!all_finite(t));
    t(1, 0, 1) = Complex(0.0, std::numeric_limits<double>::infinity());
    CHECK(!all_finite(t));
}
