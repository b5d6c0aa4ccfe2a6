#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace insartd {

using Complex = std::complex<double>;

/// Shape of a 3-mode tensor.
struct Dims3 {
    std::size_t i1 = 0;
    std::size_t i2 = 0;
    std::size_t i3 = 0;

    std::size_t total() const { return i1 * i2 * i3; }
    bool operator==(const Dims3&) const = default;
};

// Complex matrices are plain Eigen matrices; rows/cols and entry access
// already satisfy everything the rest of the library needs.
using ComplexMatrix = Eigen::MatrixXcd;

/// Dense complex 3-mode tensor. Storage order is fixed: mode-1 fastest,
/// i.e. entry (i1,i2,i3) lives at offset i1 + I1*(i2 + I2*i3). All file
/// formats and unfoldings reference this single definition.
class ComplexTensor3 {
public:
    ComplexTensor3() = default;

    explicit ComplexTensor3(Dims3 dims, Complex fill = Complex(0.0, 0.0))
        : dims_(dims), data_(dims.total(), fill) {}

    static ComplexTensor3 from_data(Dims3 dims, std::vector<Complex> data);

    const Dims3& dims() const { return dims_; }
    std::size_t size() const { return data_.size(); }

    Complex& operator()(std::size_t i1, std::size_t i2, std::size_t i3) {
        return data_[i1 + dims_.i1 * (i2 + dims_.i2 * i3)];
    }
    const Complex& operator()(std::size_t i1, std::size_t i2, std::size_t i3) const {
        return data_[i1 + dims_.i1 * (i2 + dims_.i2 * i3)];
    }

    Complex& operator[](std::size_t flat) { return data_[flat]; }
    const Complex& operator[](std::size_t flat) const { return data_[flat]; }

    std::span<Complex> data() { return data_; }
    std::span<const Complex> data() const { return data_; }

    bool operator==(const ComplexTensor3&) const = default;

private:
    Dims3 dims_;
    std::vector<Complex> data_;
};

/// Dense real 3-mode tensor, same storage order as ComplexTensor3.
struct RealTensor3 {
    Dims3 dims;
    std::vector<double> data;

    RealTensor3() = default;
    explicit RealTensor3(Dims3 d, double fill = 0.0) : dims(d), data(d.total(), fill) {}

    double& operator()(std::size_t i1, std::size_t i2, std::size_t i3) {
        return data[i1 + dims.i1 * (i2 + dims.i2 * i3)];
    }
    double operator()(std::size_t i1, std::size_t i2, std::size_t i3) const {
        return data[i1 + dims.i1 * (i2 + dims.i2 * i3)];
    }
};

/// Row-major real grid over the spatial dimensions (I1 rows, I2 cols).
struct RealGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    RealGrid() = default;
    RealGrid(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::size_t size() const { return data.size(); }

    bool operator==(const RealGrid&) const = default;
};

/// Mode-n matricization: I_n rows, the remaining indices cycle in
/// ascending-mode order along the columns.
///   mode 1: column j = i2 + I2*i3
///   mode 2: column j = i1 + I1*i3
///   mode 3: column j = i1 + I1*i2
ComplexMatrix unfold(const ComplexTensor3& t, int mode);

/// Exact inverse of unfold.
ComplexTensor3 fold(const ComplexMatrix& m, int mode, Dims3 dims);

/// Inner product, conjugate-linear in the first argument.
Complex inner(const ComplexTensor3& a, const ComplexTensor3& b);

double frobenius_norm(const ComplexTensor3& t);

/// Sum of entry moduli.
double l1_norm(const ComplexTensor3& t);

/// True when every entry is finite in both parts.
bool all_finite(const ComplexTensor3& t);

}  // namespace insartd
