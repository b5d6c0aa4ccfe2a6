#include "insartd/operators.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <string>

#include <Eigen/SVD>
#include <fftw3.h>

#include "insartd/errors.hpp"
#include "insartd/util.hpp"

namespace insartd {

namespace {

// Strides of the three modes in the fixed storage order.
struct Strides {
    std::size_t len[3];
    std::size_t step[3];

    explicit Strides(const Dims3& d)
        : len{d.i1, d.i2, d.i3}, step{1, d.i1, d.i1 * d.i2} {}
};

// FFTW's planner is not reentrant; plan creation and destruction are
// serialized globally. Execution on distinct plans is safe.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

DiffStack diff(const ComplexTensor3& z) {
    const Dims3 d = z.dims();
    const Strides st(d);
    DiffStack out{{ComplexTensor3(d), ComplexTensor3(d), ComplexTensor3(d)}};

    for (int n = 0; n < 3; ++n) {
        ComplexTensor3& dn = out.d[n];
        const std::size_t wrap = (st.len[n] - 1) * st.step[n];
        for (std::size_t i3 = 0; i3 < d.i3; ++i3)
            for (std::size_t i2 = 0; i2 < d.i2; ++i2)
                for (std::size_t i1 = 0; i1 < d.i1; ++i1) {
                    const std::size_t idx[3] = {i1, i2, i3};
                    const std::size_t flat = i1 + d.i1 * (i2 + d.i2 * i3);
                    const std::size_t prev =
                        idx[n] == 0 ? flat + wrap : flat - st.step[n];
                    dn[flat] = z[flat] - z[prev];
                }
    }
    return out;
}

ComplexTensor3 diff_adjoint(const DiffStack& f) {
    const Dims3 d = f.dims();
    const Strides st(d);
    ComplexTensor3 out(d);

    for (int n = 0; n < 3; ++n) {
        const ComplexTensor3& fn = f.d[n];
        if (!(fn.dims() == d))
            throw std::invalid_argument("diff_adjoint: component dims differ");
        const std::size_t wrap = (st.len[n] - 1) * st.step[n];
        for (std::size_t i3 = 0; i3 < d.i3; ++i3)
            for (std::size_t i2 = 0; i2 < d.i2; ++i2)
                for (std::size_t i1 = 0; i1 < d.i1; ++i1) {
                    const std::size_t idx[3] = {i1, i2, i3};
                    const std::size_t flat = i1 + d.i1 * (i2 + d.i2 * i3);
                    const std::size_t next =
                        idx[n] == st.len[n] - 1 ? flat - wrap : flat + st.step[n];
                    out[flat] += fn[flat] - fn[next];
                }
    }
    return out;
}

struct Fft3::Impl {
    Dims3 dims;
    fftw_complex* buf = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;

    explicit Impl(Dims3 d) : dims(d) {
        const std::size_t n = d.total();
        buf = fftw_alloc_complex(n);
        if (!buf) throw std::bad_alloc();
        std::lock_guard<std::mutex> lock(planner_mutex());
        // FFTW wants row-major sizes; our storage is mode-1 fastest, so
        // mode 3 is the slowest (outermost) dimension.
        fwd = fftw_plan_dft_3d(static_cast<int>(d.i3), static_cast<int>(d.i2),
                               static_cast<int>(d.i1), buf, buf, FFTW_FORWARD,
                               FFTW_ESTIMATE);
        bwd = fftw_plan_dft_3d(static_cast<int>(d.i3), static_cast<int>(d.i2),
                               static_cast<int>(d.i1), buf, buf, FFTW_BACKWARD,
                               FFTW_ESTIMATE);
        if (!fwd || !bwd) throw numerical_error("fftw plan creation failed");
    }

    ~Impl() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
        fftw_free(buf);
    }

    ComplexTensor3 run(const ComplexTensor3& in, bool forward) const {
        const std::size_t n = dims.total();
        auto src = in.data();
        for (std::size_t i = 0; i < n; ++i) {
            buf[i][0] = src[i].real();
            buf[i][1] = src[i].imag();
        }
        fftw_execute(forward ? fwd : bwd);
        ComplexTensor3 out(dims);
        const double scale = forward ? 1.0 : 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            out[i] = Complex(buf[i][0] * scale, buf[i][1] * scale);
        return out;
    }
};

Fft3::Fft3(Dims3 dims) : impl_(std::make_unique<Impl>(dims)) {}
Fft3::~Fft3() = default;
Fft3::Fft3(Fft3&&) noexcept = default;
Fft3& Fft3::operator=(Fft3&&) noexcept = default;

const Dims3& Fft3::dims() const { return impl_->dims; }

ComplexTensor3 Fft3::forward(const ComplexTensor3& in) const {
    if (!(in.dims() == impl_->dims))
        throw std::invalid_argument("Fft3: input dims differ from plan dims");
    return impl_->run(in, true);
}

ComplexTensor3 Fft3::inverse(const ComplexTensor3& in) const {
    if (!(in.dims() == impl_->dims))
        throw std::invalid_argument("Fft3: input dims differ from plan dims");
    return impl_->run(in, false);
}

FreqKernel make_freq_kernel(Dims3 dims) {
    Fft3 fft(dims);
    FreqKernel kernel{RealTensor3(dims)};
    const Strides st(dims);
    for (int n = 0; n < 3; ++n) {
        // +1 at the origin, -1 at the previous index (wrapped) along mode n.
        ComplexTensor3 delta(dims);
        delta[0] = Complex(1.0, 0.0);
        delta[(st.len[n] - 1) * st.step[n]] += Complex(-1.0, 0.0);
        const ComplexTensor3 hat = fft.forward(delta);
        for (std::size_t i = 0; i < dims.total(); ++i)
            kernel.t.data[i] += std::norm(hat[i]);
    }
    // The exact zero at DC matters for the constant-preserving property.
    kernel.t.data[0] = 0.0;
    return kernel;
}

ComplexTensor3 solve_z(const ComplexTensor3& h, double mu, const FreqKernel& kernel,
                       const Fft3& fft) {
    if (!(mu > 0.0)) throw std::invalid_argument("solve_z: mu must be positive");
    if (!(h.dims() == kernel.dims()))
        throw std::invalid_argument("solve_z: kernel dims differ from input dims");

    ComplexTensor3 spec = fft.forward(h);
    for (std::size_t i = 0; i < spec.size(); ++i)
        spec[i] /= mu * (1.0 + kernel.t.data[i]);
    return fft.inverse(spec);
}

ComplexTensor3 solve_z(const ComplexTensor3& h, double mu, const FreqKernel& kernel) {
    Fft3 fft(h.dims());
    return solve_z(h, mu, kernel, fft);
}

ComplexMatrix svt(const ComplexMatrix& m, double tau) {
    if (!(tau >= 0.0)) throw std::invalid_argument("svt: tau must be >= 0");

    Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd sigma = svd.singularValues();
    if (!sigma.allFinite()) {
        // Retry once on a scaled copy; Jacobi iterations can stall on
        // badly scaled input.
        const double scale = m.cwiseAbs().maxCoeff();
        if (scale > 0.0 && std::isfinite(scale)) {
            svd.compute(ComplexMatrix(m / scale), Eigen::ComputeThinU | Eigen::ComputeThinV);
            sigma = svd.singularValues() * scale;
        }
        if (!sigma.allFinite())
            throw numerical_error(
                "svt: SVD failed after retry (shape " + std::to_string(m.rows()) + "x" +
                std::to_string(m.cols()) + ", max |entry| " +
                format_double(m.cwiseAbs().maxCoeff()) + ")");
    }

    Eigen::VectorXd shrunk = (sigma.array() - tau).max(0.0);
    return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().adjoint();
}

Complex soft_threshold(Complex a, double tau) {
    const double mag = std::abs(a);
    if (mag <= tau || mag == 0.0) return Complex(0.0, 0.0);
    return a * ((mag - tau) / mag);
}

ComplexTensor3 soft_threshold(const ComplexTensor3& t, double tau) {
    if (!(tau >= 0.0)) throw std::invalid_argument("soft_threshold: tau must be >= 0");
    ComplexTensor3 out(t.dims());
    const auto src = t.data();
    for (std::size_t i = 0; i < src.size(); ++i) out[i] = soft_threshold(src[i], tau);
    return out;
}

}  // namespace insartd
