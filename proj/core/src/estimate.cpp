#include "insartd/estimate.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "insartd/util.hpp"

namespace insartd {

namespace {

constexpr double kMmToM = 1e-3;

// Steering tables shared by every pixel of a scan: the phase coefficients
// depend only on geometry and grid, not on the data.
struct Tables {
    std::vector<double> c_elev;  // phase per metre of elevation, per image
    std::vector<double> c_defo;  // phase per mm/yr of deformation, per image
    std::vector<double> s_vals;
    std::vector<double> p_vals;
    ComplexMatrix es;  // n_s x K, es(i,k) = exp(+j c_elev[k] s_i)
    ComplexMatrix ep;  // K x n_p, ep(k,i) = exp(+j c_defo[k] p_i)
};

Tables make_tables(const InSARGeometry& geom, const SearchGrid& grid) {
    geom.validate();
    grid.validate();
    const std::size_t K = geom.n_images();
    if (K < 2) throw std::invalid_argument("periodogram: need at least 2 images");
    const double four_pi = 4.0 * std::numbers::pi;
    const std::vector<double> tau = geom.warped_time();

    Tables t;
    t.c_elev.resize(K);
    t.c_defo.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        t.c_elev[k] = four_pi / (geom.wavelength_m * geom.range_m) * geom.spatial_baselines_m[k];
        t.c_defo[k] = four_pi / geom.wavelength_m * tau[k] * kMmToM;
    }
    t.s_vals.resize(grid.n_s());
    for (std::size_t i = 0; i < t.s_vals.size(); ++i)
        t.s_vals[i] = grid.s_min + static_cast<double>(i) * grid.s_step;
    t.p_vals.resize(grid.n_p());
    for (std::size_t i = 0; i < t.p_vals.size(); ++i)
        t.p_vals[i] = grid.p_min + static_cast<double>(i) * grid.p_step;

    t.es.resize(static_cast<Eigen::Index>(t.s_vals.size()), static_cast<Eigen::Index>(K));
    for (std::size_t i = 0; i < t.s_vals.size(); ++i)
        for (std::size_t k = 0; k < K; ++k)
            t.es(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                std::polar(1.0, t.c_elev[k] * t.s_vals[i]);
    t.ep.resize(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(t.p_vals.size()));
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t i = 0; i < t.p_vals.size(); ++i)
            t.ep(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
                std::polar(1.0, t.c_defo[k] * t.p_vals[i]);
    return t;
}

struct Best {
    double val = -1.0;
    double s = 0.0;
    double p = 0.0;
};

// Deterministic argmax: larger value wins; exact ties prefer smaller |s|,
// then smaller |p|, then the earlier candidate.
void consider(Best& best, double val, double s, double p) {
    if (val > best.val) {
        best = {val, s, p};
        return;
    }
    if (val == best.val) {
        if (std::abs(s) < std::abs(best.s) ||
            (std::abs(s) == std::abs(best.s) && std::abs(p) < std::abs(best.p)))
            best = {val, s, p};
    }
}

double xi_direct(const std::vector<Complex>& u, const Tables& t, double s, double p,
                 double inv_norm) {
    Complex acc(0.0, 0.0);
    for (std::size_t k = 0; k < u.size(); ++k)
        acc += u[k] * std::polar(1.0, t.c_elev[k] * s + t.c_defo[k] * p);
    return std::abs(acc) * inv_norm;
}

PixelEstimate pixel_impl(std::span<const Complex> g, const Tables& t, const SearchGrid& grid) {
    const std::size_t K = t.c_elev.size();
    if (g.size() != K)
        throw std::invalid_argument("periodogram: pixel length differs from image count");

    std::vector<Complex> u(K, Complex(0.0, 0.0));
    std::size_t k_eff = 0;
    double mag_sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double mag = std::abs(g[k]);
        if (mag > 0.0 && std::isfinite(mag)) {
            u[k] = grid.amplitude_weighted ? g[k] : g[k] / mag;
            mag_sum += mag;
            ++k_eff;
        }
    }
    if (k_eff == 0) return PixelEstimate{0.0, 0.0, 0.0, false};
    const double inv_k =
        1.0 / (grid.amplitude_weighted ? mag_sum : static_cast<double>(k_eff));

    Eigen::Map<const Eigen::VectorXcd> uv(u.data(), static_cast<Eigen::Index>(K));
    const ComplexMatrix uep = uv.asDiagonal() * t.ep;  // K x n_p

    Best best;
    Eigen::RowVectorXcd row(t.ep.cols());
    for (std::size_t si = 0; si < t.s_vals.size(); ++si) {
        row.noalias() = t.es.row(static_cast<Eigen::Index>(si)) * uep;
        for (std::size_t pi = 0; pi < t.p_vals.size(); ++pi)
            consider(best, std::abs(row(static_cast<Eigen::Index>(pi))) * inv_k,
                     t.s_vals[si], t.p_vals[pi]);
    }

    if (grid.refine_factor > 1) {
        const double ss = grid.s_step / static_cast<double>(grid.refine_factor);
        const double ps = grid.p_step / static_cast<double>(grid.refine_factor);
        const int r = grid.refine_factor;
        for (int ds = -r; ds <= r; ++ds) {
            const double s = best.s + static_cast<double>(ds) * ss;
            if (s < grid.s_min || s > grid.s_max) continue;
            for (int dp = -r; dp <= r; ++dp) {
                const double p = best.p + static_cast<double>(dp) * ps;
                if (p < grid.p_min || p > grid.p_max) continue;
                consider(best, xi_direct(u, t, s, p, inv_k), s, p);
            }
        }
    }
    return PixelEstimate{best.s, best.p, best.val, true};
}

}  // namespace

std::size_t SearchGrid::n_s() const {
    return static_cast<std::size_t>(std::floor((s_max - s_min) / s_step + 1e-9)) + 1;
}

std::size_t SearchGrid::n_p() const {
    return static_cast<std::size_t>(std::floor((p_max - p_min) / p_step + 1e-9)) + 1;
}

void SearchGrid::validate() const {
    const bool finite = std::isfinite(s_min) && std::isfinite(s_max) &&
                        std::isfinite(p_min) && std::isfinite(p_max) &&
                        std::isfinite(s_step) && std::isfinite(p_step);
    if (!finite) throw std::invalid_argument("search grid: non-finite bounds");
    if (!(s_step > 0.0) || !(p_step > 0.0))
        throw std::invalid_argument("search grid: steps must be positive");
    if (s_max < s_min || p_max < p_min)
        throw std::invalid_argument("search grid: max must be >= min");
    if (refine_factor < 1)
        throw std::invalid_argument("search grid: refine_factor must be >= 1");
    if (n_s() * n_p() > max_nodes)
        throw std::invalid_argument("search grid: coarse grid exceeds max_nodes");
}

PixelEstimate periodogram_pixel(std::span<const Complex> g, const InSARGeometry& geom,
                                const SearchGrid& grid) {
    const Tables t = make_tables(geom, grid);
    return pixel_impl(g, t, grid);
}

EstimatedMaps estimate_maps(const ComplexTensor3& stack, const InSARGeometry& geom,
                            const SearchGrid& grid, int workers) {
    geom.validate();
    grid.validate();
    const Dims3 d = stack.dims();
    if (geom.n_images() != d.i3)
        throw std::invalid_argument("estimate_maps: geometry image count differs from stack");

    const Tables t = make_tables(geom, grid);
    EstimatedMaps out;
    out.maps.elevation = RealGrid(d.i1, d.i2, 0.0);
    out.maps.deformation = RealGrid(d.i1, d.i2, 0.0);
    out.coherence = RealGrid(d.i1, d.i2, 0.0);
    out.valid.assign(d.i1 * d.i2, 0);

    parallel_for(d.i1 * d.i2, workers, [&](std::size_t px) {
        const std::size_t r = px / d.i2;
        const std::size_t c = px % d.i2;
        std::vector<Complex> pixel(d.i3);
        for (std::size_t k = 0; k < d.i3; ++k) pixel[k] = stack(r, c, k);
        const PixelEstimate est = pixel_impl(pixel, t, grid);
        out.maps.elevation(r, c) = est.s;
        out.maps.deformation(r, c) = est.p;
        out.coherence(r, c) = est.coherence;
        out.valid[px] = est.valid ? 1 : 0;
    });
    return out;
}

RealGrid temporal_coherence(const ComplexTensor3& stack, const ParameterMaps& maps,
                            const InSARGeometry& geom) {
    geom.validate();
    const Dims3 d = stack.dims();
    if (geom.n_images() != d.i3)
        throw std::invalid_argument("temporal_coherence: geometry image count differs from stack");
    if (maps.elevation.rows != d.i1 || maps.elevation.cols != d.i2 ||
        maps.deformation.rows != d.i1 || maps.deformation.cols != d.i2)
        throw std::invalid_argument("temporal_coherence: map dims differ from stack");

    const double four_pi = 4.0 * std::numbers::pi;
    const std::vector<double> tau = geom.warped_time();
    std::vector<double> c_elev(d.i3), c_defo(d.i3);
    for (std::size_t k = 0; k < d.i3; ++k) {
        c_elev[k] = four_pi / (geom.wavelength_m * geom.range_m) * geom.spatial_baselines_m[k];
        c_defo[k] = four_pi / geom.wavelength_m * tau[k] * kMmToM;
    }

    RealGrid out(d.i1, d.i2, 0.0);
    for (std::size_t r = 0; r < d.i1; ++r)
        for (std::size_t c = 0; c < d.i2; ++c) {
            Complex acc(0.0, 0.0);
            std::size_t k_eff = 0;
            for (std::size_t k = 0; k < d.i3; ++k) {
                const Complex v = stack(r, c, k);
                const double mag = std::abs(v);
                if (!(mag > 0.0) || !std::isfinite(mag)) continue;
                const double phase =
                    c_elev[k] * maps.elevation(r, c) + c_defo[k] * maps.deformation(r, c);
                acc += (v / mag) * std::polar(1.0, phase);
                ++k_eff;
            }
            out(r, c) = k_eff > 0 ? std::abs(acc) / static_cast<double>(k_eff) : 0.0;
        }
    return out;
}

}  // namespace insartd
