#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "insartd/simulate.hpp"
#include "insartd/tensor.hpp"

namespace insartd {

struct Histogram {
    std::vector<double> edges;        // bin_count + 1 ascending edges
    std::vector<std::size_t> counts;  // per bin; values on the top edge go to the last bin

    std::size_t total() const;
    /// Counts normalized to a probability density over the bin widths.
    std::vector<double> pdf() const;
};

struct EvalSummary {
    double sd_deformation = 0.0;
    double bias_deformation = 0.0;
    double sd_elevation = 0.0;
    double bias_elevation = 0.0;
    // Robust companions (median / 1.4826*MAD), emitted for diagnostics.
    double median_deformation = 0.0;
    double mad_deformation = 0.0;
    double median_elevation = 0.0;
    double mad_elevation = 0.0;
    std::size_t n_valid_pixels = 0;
    Histogram coherence_histogram;
};

/// Bias = mean(est - ref), SD = population standard deviation of (est - ref),
/// both per parameter, over pixels where valid_mask is nonzero. A null mask
/// means all pixels. Throws std::invalid_argument on shape mismatch or an
/// empty mask.
EvalSummary residual_stats(const ParameterMaps& est, const ParameterMaps& ref,
                           const std::vector<std::uint8_t>* valid_mask = nullptr);

/// Histogram of coherence values over [0, 1]; bins >= 2. A null mask
/// means all pixels.
Histogram coherence_histogram(const RealGrid& c, int bins,
                              const std::vector<std::uint8_t>* valid_mask = nullptr);

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

/// Color assigned to invalid pixels in rendered maps.
inline constexpr Rgb kInvalidColor{128, 128, 128};

/// Piecewise-linear 5-anchor palette over t in [0, 1] (clamped).
Rgb palette(double t);

/// Writes the grid as a binary PPM (P6, one image pixel per cell, values
/// mapped linearly from [lo, hi] through palette()) and a small SVG color
/// bar next to it. Invalid pixels take kInvalidColor.
void render_map(const RealGrid& map, double lo, double hi, const std::string& ppm_path,
                const std::string& svg_path,
                const std::vector<std::uint8_t>* valid_mask = nullptr);

/// One summary row per method, CSV with a fixed header:
/// method,sd_deformation,bias_deformation,sd_elevation,bias_elevation,
/// median_deformation,mad_deformation,median_elevation,mad_elevation,n_valid_pixels
void write_summary_csv(const std::string& path,
                       const std::vector<std::pair<std::string, EvalSummary>>& rows);

}  // namespace insartd
