#pragma once

#include <array>
#include <memory>

#include "insartd/tensor.hpp"

namespace insartd {

/// The three first-difference images of a tensor, one per mode.
struct DiffStack {
    std::array<ComplexTensor3, 3> d;

    const Dims3& dims() const { return d[0].dims(); }
};

/// Fourier-domain kernel for the gradient normal operator: the tensor
/// T with T(k) = sum_n |fft3(delta_0 - delta_{-1 along mode n})(k)|^2.
/// Entries are >= 0 and the zero-frequency bin is exactly 0. Build once
/// per shape and reuse across iterations.
struct FreqKernel {
    RealTensor3 t;

    const Dims3& dims() const { return t.dims; }
};

/// Circular backward difference along each mode:
/// component n at index i is x[i] - x[i-1 mod I_n].
DiffStack diff(const ComplexTensor3& z);

/// Adjoint of diff under the standard inner product: the negated circular
/// forward difference, summed over modes.
ComplexTensor3 diff_adjoint(const DiffStack& f);

FreqKernel make_freq_kernel(Dims3 dims);

/// Unnormalized forward / normalized inverse 3D DFT workspace. One
/// instance per thread; instances share no state.
class Fft3 {
public:
    explicit Fft3(Dims3 dims);
    ~Fft3();
    Fft3(Fft3&&) noexcept;
    Fft3& operator=(Fft3&&) noexcept;
    Fft3(const Fft3&) = delete;
    Fft3& operator=(const Fft3&) = delete;

    const Dims3& dims() const;

    ComplexTensor3 forward(const ComplexTensor3& in) const;
    /// Inverse transform including the 1/(I1*I2*I3) factor.
    ComplexTensor3 inverse(const ComplexTensor3& in) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Solves (mu*I + mu*D*D) z = h spectrally: fft3, divide by mu*(1 + T),
/// inverse fft3. Requires mu > 0.
ComplexTensor3 solve_z(const ComplexTensor3& h, double mu, const FreqKernel& kernel);
ComplexTensor3 solve_z(const ComplexTensor3& h, double mu, const FreqKernel& kernel,
                       const Fft3& fft);

/// Singular value thresholding: U * diag(max(sigma_i - tau, 0)) * V^H.
/// Requires tau >= 0. Retries a failed factorization once with a
/// different algorithm before raising numerical_error.
ComplexMatrix svt(const ComplexMatrix& m, double tau);

/// Complex soft-thresholding: each entry a maps to (a/|a|) * max(|a|-tau, 0),
/// with 0 mapped to 0. Requires tau >= 0.
ComplexTensor3 soft_threshold(const ComplexTensor3& t, double tau);
Complex soft_threshold(Complex a, double tau);

}  // namespace insartd
