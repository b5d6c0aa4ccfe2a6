#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "insartd/estimate.hpp"
#include "insartd/simulate.hpp"
#include "insartd/solver.hpp"
#include "insartd/tensor.hpp"

namespace insartd {

struct PatchRect {
    std::size_t r0 = 0, c0 = 0;
    std::size_t rows = 0, cols = 0;

    bool operator==(const PatchRect&) const = default;
};

/// Deterministic tiling of the I1 x I2 grid. Patches step by
/// (patch - overlap); edge patches are clipped to the grid.
struct PatchLayout {
    std::size_t grid_rows = 0, grid_cols = 0;
    std::size_t patch_rows = 0, patch_cols = 0;
    std::size_t overlap = 0;
    std::vector<PatchRect> rects;
};

/// Requires patch sides >= 8 and overlap < min(patch sides); throws
/// std::invalid_argument on degenerate grids.
PatchLayout plan_patches(std::size_t grid_rows, std::size_t grid_cols,
                         std::size_t patch_rows, std::size_t patch_cols,
                         std::size_t overlap = 0);

enum class Method { tvlr, lr, none };

struct PatchResult {
    PatchRect rect;
    SolverReport report;
    bool failed = false;  // solver raised; patch fell back to X = G, E = 0
};

struct TiledDecomposition {
    ComplexTensor3 x_hat;
    ComplexTensor3 e_hat;
    std::vector<PatchResult> patches;
};

/// Solves each patch independently (cfg.gamma == 0 re-derives gamma per
/// patch shape), stitches to full size, and averages overlapped pixels
/// uniformly. Patch solves may run on `workers` threads; the reduction is
/// in fixed patch order. A failing patch is recorded and passed through
/// unfiltered.
TiledDecomposition decompose_tiled(const ComplexTensor3& stack, const PatchLayout& layout,
                                   const SolverConfig& cfg, Method method = Method::tvlr,
                                   int workers = 1);

// ---------------------------------------------------------------------------
// End-to-end runs driven by a JSON config (schema in docs/config.md).

struct GeometryConfig {
    double wavelength_m = 0.031;
    double range_m = 7.0e5;
    double spatial_span_m = 500.0;
    double temporal_span_y = 0.0;  // 0 = 11-day repeat per image
    MotionModel motion = MotionModel::linear;
    double t0_y = 0.0;
};

struct SimulateConfig {
    Dims3 dims{60, 75, 15};
    double snr_db = 0.0;
    double outlier_fraction = 0.2;
    double amplitude = 1.0;
    GeometryConfig geometry;
    TruthSpec truth;
};

struct PatchConfig {
    std::size_t rows = 0;  // 0 = whole grid
    std::size_t cols = 0;
    std::size_t overlap = 0;
};

struct EstimateConfig {
    SearchGrid grid;
    bool target_filtered = true;
    bool target_raw = true;
};

struct EvaluateConfig {
    int histogram_bins = 20;
    bool render = true;
};

struct PipelineConfig {
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    std::vector<std::string> stages;  // subset of simulate|decompose|estimate|evaluate
    std::optional<std::string> input_stack;     // CT3 path when simulate is not run
    std::optional<std::string> geometry_path;   // geometry JSON when simulate is not run
    std::optional<std::string> truth_elevation_csv;
    std::optional<std::string> truth_deformation_csv;
    SimulateConfig simulate;
    Method method = Method::tvlr;
    SolverConfig solver;
    PatchConfig patch;
    int workers = 1;
    EstimateConfig estimate;
    EvaluateConfig evaluate;

    void validate() const;
};

/// Parses and validates a config file; throws std::invalid_argument with
/// the offending key on any schema violation.
PipelineConfig load_pipeline_config(const std::string& path);

/// Canonical serialized form (stable key order), used for the manifest
/// config snapshot.
std::string config_to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const std::string& text);

struct StageTiming {
    std::string stage;
    double seconds = 0.0;

    bool operator==(const StageTiming&) const = default;
};

struct PatchSummary {
    PatchRect rect;
    std::size_t iterations = 0;
    double final_primal = 0.0;
    bool converged = false;
    bool failed = false;

    bool operator==(const PatchSummary&) const = default;
};

struct ArtifactEntry {
    std::string path;  // relative to out_dir
    std::uint32_t crc32 = 0;
    std::uint64_t bytes = 0;

    bool operator==(const ArtifactEntry&) const = default;
};

/// Everything needed to reproduce a run: the config snapshot, seeds, what
/// ran, per-patch solver summaries, and a checksum per numeric artifact.
struct RunManifest {
    std::string config_text;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::vector<std::string> stages_run;
    std::vector<StageTiming> timings;
    std::map<std::string, std::vector<PatchSummary>> patch_reports;  // keyed by method
    std::vector<ArtifactEntry> artifacts;  // sorted by path

    bool operator==(const RunManifest&) const = default;
};

void save_manifest(const std::string& path, const RunManifest& m);
RunManifest load_manifest(const std::string& path);

/// Executes the configured stages, writing all artifacts under
/// cfg.out_dir (created if needed) plus manifest.json. Errors propagate
/// after the partial manifest is written.
RunManifest run_pipeline(const PipelineConfig& cfg);
RunManifest run_pipeline(const std::string& config_path);

}  // namespace insartd
