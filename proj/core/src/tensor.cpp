#include "insartd/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace insartd {

namespace {

void check_mode(int mode) {
    if (mode < 1 || mode > 3)
        throw std::invalid_argument("tensor mode must be 1, 2 or 3, got " +
                                    std::to_string(mode));
}

}  // namespace

ComplexTensor3 ComplexTensor3::from_data(Dims3 dims, std::vector<Complex> data) {
    if (data.size() != dims.total())
        throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                    " does not match dims product " +
                                    std::to_string(dims.total()));
    ComplexTensor3 t;
    t.dims_ = dims;
    t.data_ = std::move(data);
    return t;
}

ComplexMatrix unfold(const ComplexTensor3& t, int mode) {
    check_mode(mode);
    const auto [I1, I2, I3] = t.dims();
    switch (mode) {
        case 1: {
            // Storage is already mode-1-fastest: a straight reshape.
            ComplexMatrix m(I1, I2 * I3);
            for (std::size_t j = 0; j < I2 * I3; ++j)
                for (std::size_t i = 0; i < I1; ++i) m(i, j) = t[i + I1 * j];
            return m;
        }
        case 2: {
            ComplexMatrix m(I2, I1 * I3);
            for (std::size_t i3 = 0; i3 < I3; ++i3)
                for (std::size_t i2 = 0; i2 < I2; ++i2)
                    for (std::size_t i1 = 0; i1 < I1; ++i1)
                        m(i2, i1 + I1 * i3) = t(i1, i2, i3);
            return m;
        }
        default: {
            ComplexMatrix m(I3, I1 * I2);
            for (std::size_t i3 = 0; i3 < I3; ++i3)
                for (std::size_t j = 0; j < I1 * I2; ++j) m(i3, j) = t[j + I1 * I2 * i3];
            return m;
        }
    }
}

ComplexTensor3 fold(const ComplexMatrix& m, int mode, Dims3 dims) {
    check_mode(mode);
    const auto [I1, I2, I3] = dims;
    const std::size_t expect_rows = mode == 1 ? I1 : mode == 2 ? I2 : I3;
    const std::size_t expect_cols = dims.total() / expect_rows;
    if (static_cast<std::size_t>(m.rows()) != expect_rows ||
        static_cast<std::size_t>(m.cols()) != expect_cols)
        throw std::invalid_argument("fold: matrix shape " + std::to_string(m.rows()) + "x" +
                                    std::to_string(m.cols()) +
                                    " inconsistent with mode/dims");

    ComplexTensor3 t(dims);
    switch (mode) {
        case 1:
            for (std::size_t j = 0; j < I2 * I3; ++j)
                for (std::size_t i = 0; i < I1; ++i) t[i + I1 * j] = m(i, j);
            break;
        case 2:
            for (std::size_t i3 = 0; i3 < I3; ++i3)
                for (std::size_t i2 = 0; i2 < I2; ++i2)
                    for (std::size_t i1 = 0; i1 < I1; ++i1)
                        t(i1, i2, i3) = m(i2, i1 + I1 * i3);
            break;
        default:
            for (std::size_t i3 = 0; i3 < I3; ++i3)
                for (std::size_t j = 0; j < I1 * I2; ++j) t[j + I1 * I2 * i3] = m(i3, j);
            break;
    }
    return t;
}

Complex inner(const ComplexTensor3& a, const ComplexTensor3& b) {
    if (!(a.dims() == b.dims()))
        throw std::invalid_argument("inner: tensor dims differ");
    Complex acc(0.0, 0.0);
    const auto da = a.data();
    const auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) acc += std::conj(da[i]) * db[i];
    return acc;
}

double frobenius_norm(const ComplexTensor3& t) {
    double acc = 0.0;
    for (const Complex& v : t.data()) acc += std::norm(v);
    return std::sqrt(acc);
}

double l1_norm(const ComplexTensor3& t) {
    double acc = 0.0;
    for (const Complex& v : t.data()) acc += std::abs(v);
    return acc;
}

bool all_finite(const ComplexTensor3& t) {
    for (const Complex& v : t.data())
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

}  // namespace insartd
