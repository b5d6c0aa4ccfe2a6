#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "insartd/tensor.hpp"

namespace insartd {

enum class MotionModel { linear, seasonal };

/// Acquisition geometry of a stack of I3 interferograms.
struct InSARGeometry {
    double wavelength_m = 0.031;  // X-band default
    double range_m = 7.0e5;
    std::vector<double> spatial_baselines_m;
    std::vector<double> temporal_baselines_y;
    MotionModel motion = MotionModel::linear;
    double t0_y = 0.0;  // phase offset of the seasonal model

    std::size_t n_images() const { return spatial_baselines_m.size(); }

    /// Warped time variable: t for linear motion, sin(2*pi*(t - t0))
    /// for seasonal motion.
    std::vector<double> warped_time() const;

    void validate() const;
};

/// Elevation in meters and deformation in mm/year (linear motion) or
/// mm (seasonal amplitude), over the I1 x I2 spatial grid.
struct ParameterMaps {
    RealGrid elevation;
    RealGrid deformation;
};

/// Knobs for the synthetic truth generator: a flat background with
/// rectangular blocks at distinct elevation levels, and a deformation
/// ramp increasing from the top-left to the bottom-right corner.
struct TruthSpec {
    double elevation_min = -100.0;  // m
    double elevation_max = 100.0;
    double deformation_min = -15.0;  // mm/year
    double deformation_max = 15.0;
    int n_blocks = 6;
    double block_min_frac = 0.10;  // block side as a fraction of the grid side
    double block_max_frac = 0.30;
};

ParameterMaps make_truth_maps(std::size_t i1, std::size_t i2, const TruthSpec& spec,
                              std::uint64_t seed);

/// Baselines drawn close to uniform over the given spans; spatial span is
/// centered on zero, temporal baselines are sorted ascending from zero.
InSARGeometry make_geometry(std::size_t n_images, double spatial_span_m,
                            double temporal_span_y, MotionModel motion, double t0_y,
                            std::uint64_t seed);

struct SimSpec {
    Dims3 dims;
    InSARGeometry geometry;
    ParameterMaps truth;
    double amplitude = 1.0;                     // PS model default
    std::optional<RealTensor3> amplitude_map;   // overrides the scalar when set
    double snr_db = 0.0;
    double outlier_fraction = 0.0;  // in [0, 1)
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// Phase synthesis: entry (i1,i2,k) is
///   A * exp(-j * (4*pi/(lambda*r) * S[i1,i2] * b[k] + 4*pi/lambda * P_m[i1,i2] * tau[k]))
/// where P_m is the deformation map converted from millimeters to meters
/// (the only mm->m conversion site in the library).
ComplexTensor3 forward(const ParameterMaps& maps, const InSARGeometry& geom,
                       double amplitude = 1.0);
ComplexTensor3 forward(const ParameterMaps& maps, const InSARGeometry& geom,
                       const RealTensor3& amplitude);

/// Adds i.i.d. circular complex Gaussian noise with per-entry variance
/// mean(|g|^2) / 10^(snr_db/10).
ComplexTensor3 add_noise(const ComplexTensor3& g, double snr_db, std::uint64_t seed);

struct OutlierMask {
    Dims3 dims;
    std::vector<std::uint8_t> replaced;  // 1 where the entry was replaced

    std::size_t count() const;
};

/// Replaces floor(fraction * total) entries, selected uniformly without
/// replacement, by (original modulus) * exp(j*theta) with theta uniform on
/// [0, 2*pi). For a fixed seed the selected set is nested across
/// increasing fractions.
std::pair<ComplexTensor3, OutlierMask> inject_outliers(const ComplexTensor3& g,
                                                       double fraction,
                                                       std::uint64_t seed);

struct SimResult {
    ComplexTensor3 stack;
    ParameterMaps truth;
    OutlierMask mask;
};

/// forward -> add_noise -> inject_outliers, sub-seeded from spec.rng_seed
/// (streams 1 and 2 of derive_seed). Pure function of the spec.
SimResult simulate(const SimSpec& spec);

}  // namespace insartd
