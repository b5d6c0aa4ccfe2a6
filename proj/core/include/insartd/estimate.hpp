#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "insartd/simulate.hpp"
#include "insartd/tensor.hpp"

namespace insartd {

/// Search grid of the periodogram. Elevation in meters, deformation in
/// mm/year (or mm for seasonal motion). refine_factor > 1 adds a local
/// second pass around the coarse argmax at step/refine_factor.
struct SearchGrid {
    double s_min = -120.0;
    double s_max = 120.0;
    double s_step = 1.0;
    double p_min = -22.5;
    double p_max = 22.5;
    double p_step = 0.5;
    int refine_factor = 10;            // 1 disables refinement
    std::size_t max_nodes = 4000000;   // cap on n_s * n_p
    // Weight each image by its modulus instead of normalizing to unit
    // phasors. Off by default: pure-phase matching is the PS-model MLE.
    bool amplitude_weighted = false;

    std::size_t n_s() const;
    std::size_t n_p() const;
    void validate() const;
};

struct PixelEstimate {
    double s = 0.0;
    double p = 0.0;
    double coherence = 0.0;
    bool valid = false;
};

/// Grid search maximizing the modulus of the model-compensated mean
/// phasor xi(s,p) = |1/K * sum_k u_k * exp(+j*phi_k(s,p))| with
/// u_k = g_k/|g_k|; zero-modulus entries are skipped and K reduced.
/// Ties break toward smallest |s|, then |p|, then scan order. An
/// all-zero pixel yields an invalid estimate with coherence 0.
PixelEstimate periodogram_pixel(std::span<const Complex> pixel,
                                const InSARGeometry& geom, const SearchGrid& grid);

struct EstimatedMaps {
    ParameterMaps maps;
    RealGrid coherence;
    std::vector<std::uint8_t> valid;  // row-major I1 x I2, 1 = valid pixel
};

/// Per-pixel periodogram over the whole stack. Pixels are independent;
/// `workers` threads may run concurrently, output is position-determined.
EstimatedMaps estimate_maps(const ComplexTensor3& stack, const InSARGeometry& geom,
                            const SearchGrid& grid, int workers = 1);

/// Temporal coherence of the stack against the model phases evaluated at
/// the given maps: |1/K * sum_k u_k * exp(+j*phi_model_k)| per pixel.
RealGrid temporal_coherence(const ComplexTensor3& stack, const ParameterMaps& maps,
                            const InSARGeometry& geom);

}  // namespace insartd
