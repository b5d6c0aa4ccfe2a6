#include "insartd/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "insartd/util.hpp"

namespace insartd {

namespace {

constexpr double kMmToM = 1e-3;  // deformation maps are mm-scale at the API boundary

void check_grid(const RealGrid& g, std::size_t rows, std::size_t cols, const char* name) {
    if (g.rows != rows || g.cols != cols)
        throw std::invalid_argument(std::string(name) + ": grid dims mismatch");
    for (double v : g.data)
        if (!std::isfinite(v))
            throw std::invalid_argument(std::string(name) + ": non-finite entries");
}

ComplexTensor3 forward_impl(const ParameterMaps& maps, const InSARGeometry& geom,
                            double amp_scalar, const RealTensor3* amp_map) {
    geom.validate();
    const std::size_t I1 = maps.elevation.rows;
    const std::size_t I2 = maps.elevation.cols;
    const std::size_t I3 = geom.n_images();
    check_grid(maps.elevation, I1, I2, "forward: elevation");
    check_grid(maps.deformation, I1, I2, "forward: deformation");
    if (amp_map && !(amp_map->dims == Dims3{I1, I2, I3}))
        throw std::invalid_argument("forward: amplitude tensor dims mismatch");

    const double four_pi = 4.0 * std::numbers::pi;
    const std::vector<double> tau = geom.warped_time();
    std::vector<double> c_elev(I3), c_defo(I3);
    for (std::size_t k = 0; k < I3; ++k) {
        c_elev[k] = four_pi / (geom.wavelength_m * geom.range_m) * geom.spatial_baselines_m[k];
        c_defo[k] = four_pi / geom.wavelength_m * tau[k] * kMmToM;
    }

    ComplexTensor3 out({I1, I2, I3});
    for (std::size_t k = 0; k < I3; ++k)
        for (std::size_t i2 = 0; i2 < I2; ++i2)
            for (std::size_t i1 = 0; i1 < I1; ++i1) {
                const double phase = c_elev[k] * maps.elevation(i1, i2) +
                                     c_defo[k] * maps.deformation(i1, i2);
                const double amp = amp_map ? (*amp_map)(i1, i2, k) : amp_scalar;
                out(i1, i2, k) = std::polar(amp, -phase);
            }
    return out;
}

}  // namespace

std::vector<double> InSARGeometry::warped_time() const {
    std::vector<double> tau(temporal_baselines_y.size());
    for (std::size_t k = 0; k < tau.size(); ++k)
        tau[k] = motion == MotionModel::linear
                     ? temporal_baselines_y[k]
                     : std::sin(2.0 * std::numbers::pi * (temporal_baselines_y[k] - t0_y));
    return tau;
}

void InSARGeometry::validate() const {
    if (spatial_baselines_m.empty() ||
        spatial_baselines_m.size() != temporal_baselines_y.size())
        throw std::invalid_argument("geometry: baseline vectors must be equal length >= 1");
    if (!(wavelength_m > 0.0) || !(range_m > 0.0))
        throw std::invalid_argument("geometry: wavelength and range must be positive");
    for (double b : spatial_baselines_m)
        if (!std::isfinite(b)) throw std::invalid_argument("geometry: non-finite baseline");
    for (double t : temporal_baselines_y)
        if (!std::isfinite(t)) throw std::invalid_argument("geometry: non-finite baseline");
}

void SimSpec::validate() const {
    if (dims.total() == 0) throw std::invalid_argument("sim: dims must be positive");
    geometry.validate();
    if (geometry.n_images() != dims.i3)
        throw std::invalid_argument("sim: geometry image count differs from dims.i3");
    check_grid(truth.elevation, dims.i1, dims.i2, "sim: truth elevation");
    check_grid(truth.deformation, dims.i1, dims.i2, "sim: truth deformation");
    if (!(outlier_fraction >= 0.0) || outlier_fraction >= 1.0)
        throw std::invalid_argument("sim: outlier_fraction must be in [0, 1)");
    if (!(amplitude >= 0.0)) throw std::invalid_argument("sim: amplitude must be >= 0");
    if (amplitude_map && !(amplitude_map->dims == dims))
        throw std::invalid_argument("sim: amplitude map dims mismatch");
}

ParameterMaps make_truth_maps(std::size_t i1, std::size_t i2, const TruthSpec& spec,
                              std::uint64_t seed) {
    if (i1 == 0 || i2 == 0) throw std::invalid_argument("make_truth_maps: empty grid");
    if (!(spec.elevation_min < spec.elevation_max) ||
        !(spec.deformation_min < spec.deformation_max))
        throw std::invalid_argument("make_truth_maps: ranges must be non-empty");
    if (spec.n_blocks < 0 || !(spec.block_min_frac > 0.0) ||
        !(spec.block_max_frac >= spec.block_min_frac) || spec.block_max_frac > 1.0)
        throw std::invalid_argument("make_truth_maps: bad block parameters");

    ParameterMaps maps;
    maps.elevation = RealGrid(i1, i2, 0.0);
    maps.deformation = RealGrid(i1, i2, 0.0);

    // Deformation: a ramp increasing from top-left to bottom-right.
    const double denom = static_cast<double>(i1 - 1 + i2 - 1);
    for (std::size_t r = 0; r < i1; ++r)
        for (std::size_t c = 0; c < i2; ++c) {
            const double t = denom > 0.0 ? static_cast<double>(r + c) / denom : 0.0;
            maps.deformation(r, c) =
                spec.deformation_min + (spec.deformation_max - spec.deformation_min) * t;
        }

    // Elevation: flat ground plus rectangular blocks at evenly spread levels,
    // randomly placed and sized.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ufrac(spec.block_min_frac, spec.block_max_frac);
    std::uniform_real_distribution<double> upos(0.0, 1.0);
    for (int b = 0; b < spec.n_blocks; ++b) {
        const double level =
            spec.elevation_min + (spec.elevation_max - spec.elevation_min) *
                                     (static_cast<double>(b) + 0.5) /
                                     static_cast<double>(spec.n_blocks);
        const auto h = std::max<std::size_t>(1, static_cast<std::size_t>(ufrac(rng) * i1));
        const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(ufrac(rng) * i2));
        const auto r0 = static_cast<std::size_t>(upos(rng) * static_cast<double>(i1 - std::min(h, i1)));
        const auto c0 = static_cast<std::size_t>(upos(rng) * static_cast<double>(i2 - std::min(w, i2)));
        for (std::size_t r = r0; r < std::min(r0 + h, i1); ++r)
            for (std::size_t c = c0; c < std::min(c0 + w, i2); ++c)
                maps.elevation(r, c) = level;
    }
    return maps;
}

InSARGeometry make_geometry(std::size_t n_images, double spatial_span_m,
                            double temporal_span_y, MotionModel motion, double t0_y,
                            std::uint64_t seed) {
    if (n_images == 0) throw std::invalid_argument("make_geometry: need at least one image");
    if (!(spatial_span_m > 0.0))
        throw std::invalid_argument("make_geometry: spatial span must be positive");
    if (temporal_span_y <= 0.0)
        temporal_span_y = static_cast<double>(n_images) * 11.0 / 365.0;  // 11-day repeat

    InSARGeometry geom;
    geom.motion = motion;
    geom.t0_y = t0_y;
    geom.spatial_baselines_m.resize(n_images);
    geom.temporal_baselines_y.resize(n_images);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ub(-spatial_span_m / 2.0, spatial_span_m / 2.0);
    std::uniform_real_distribution<double> ut(0.0, temporal_span_y);
    for (std::size_t k = 0; k < n_images; ++k) geom.spatial_baselines_m[k] = ub(rng);
    for (std::size_t k = 0; k < n_images; ++k) geom.temporal_baselines_y[k] = ut(rng);
    std::sort(geom.temporal_baselines_y.begin(), geom.temporal_baselines_y.end());
    return geom;
}

ComplexTensor3 forward(const ParameterMaps& maps, const InSARGeometry& geom, double amplitude) {
    return forward_impl(maps, geom, amplitude, nullptr);
}

ComplexTensor3 forward(const ParameterMaps& maps, const InSARGeometry& geom,
                       const RealTensor3& amplitude) {
    return forward_impl(maps, geom, 1.0, &amplitude);
}

ComplexTensor3 add_noise(const ComplexTensor3& g, double snr_db, std::uint64_t seed) {
    const std::size_t n = g.size();
    if (n == 0) return g;
    double power = 0.0;
    for (const Complex& v : g.data()) power += std::norm(v);
    power /= static_cast<double>(n);
    const double sigma2 = power / std::pow(10.0, snr_db / 10.0);
    if (!(sigma2 > 0.0)) return g;  // exact passthrough for vanishing noise

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(sigma2 / 2.0));
    ComplexTensor3 out = g;
    for (std::size_t i = 0; i < n; ++i) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        out[i] += Complex(re, im);
    }
    return out;
}

std::size_t OutlierMask::count() const {
    std::size_t c = 0;
    for (std::uint8_t v : replaced) c += v;
    return c;
}

std::pair<ComplexTensor3, OutlierMask> inject_outliers(const ComplexTensor3& g,
                                                       double fraction,
                                                       std::uint64_t seed) {
    if (!(fraction >= 0.0) || fraction >= 1.0)
        throw std::invalid_argument("inject_outliers: fraction must be in [0, 1)");
    const std::size_t n = g.size();
    const auto k = static_cast<std::size_t>(fraction * static_cast<double>(n));

    OutlierMask mask{g.dims(), std::vector<std::uint8_t>(n, 0)};
    ComplexTensor3 out = g;
    if (k == 0) return {std::move(out), std::move(mask)};

    // Partial Fisher-Yates; for equal seeds the selected set (and the
    // replacement phases) at a smaller fraction are a prefix of those at a
    // larger one, so outlier sets are nested across fractions.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uphase(0.0, 2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
        const std::size_t j = idx[i];
        out[j] = std::polar(std::abs(g[j]), uphase(rng));
        mask.replaced[j] = 1;
    }
    return {std::move(out), std::move(mask)};
}

SimResult simulate(const SimSpec& spec) {
    spec.validate();
    ComplexTensor3 stack =
        spec.amplitude_map ? forward(spec.truth, spec.geometry, *spec.amplitude_map)
                           : forward(spec.truth, spec.geometry, spec.amplitude);
    stack = add_noise(stack, spec.snr_db, derive_seed(spec.rng_seed, 1));
    auto [noisy, mask] = inject_outliers(stack, spec.outlier_fraction,
                                         derive_seed(spec.rng_seed, 2));
    return SimResult{std::move(noisy), spec.truth, std::move(mask)};
}

}  // namespace insartd
