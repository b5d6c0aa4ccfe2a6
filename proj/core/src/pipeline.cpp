#include "insartd/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string_view>

#include <nlohmann/json.hpp>

#include "insartd/errors.hpp"
#include "insartd/io.hpp"
#include "insartd/metrics.hpp"
#include "insartd/util.hpp"

namespace insartd {

namespace {

using nlohmann::json;

const char* method_name(Method m) {
    switch (m) {
        case Method::tvlr: return "tvlr";
        case Method::lr: return "lr";
        case Method::none: return "none";
    }
    return "tvlr";
}

Method method_from_string(const std::string& s) {
    if (s == "tvlr") return Method::tvlr;
    if (s == "lr") return Method::lr;
    if (s == "none") return Method::none;
    throw std::invalid_argument("config: method must be tvlr, lr, or none, got '" + s + "'");
}

ComplexTensor3 extract_patch(const ComplexTensor3& t, const PatchRect& r) {
    const Dims3 d = t.dims();
    ComplexTensor3 out({r.rows, r.cols, d.i3});
    for (std::size_t k = 0; k < d.i3; ++k)
        for (std::size_t c = 0; c < r.cols; ++c)
            for (std::size_t i = 0; i < r.rows; ++i)
                out(i, c, k) = t(r.r0 + i, r.c0 + c, k);
    return out;
}

// ---------------------------------------------------------------------------
// Config (de)serialization. The loader is strict: unknown keys are errors.

void require_object(const json& j, const std::string& ctx) {
    if (!j.is_object())
        throw std::invalid_argument("config: '" + ctx + "' must be an object");
}

void check_keys(const json& j, const std::string& ctx,
                std::initializer_list<std::string_view> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (std::string_view a : allowed)
            if (it.key() == a) {
                ok = true;
                break;
            }
        if (!ok)
            throw std::invalid_argument("config: unknown key '" + ctx + it.key() + "'");
    }
}

template <typename T>
T get_field(const json& j, const std::string& ctx, const char* key, T def) {
    if (!j.contains(key)) return def;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument("config: bad value for '" + ctx + key + "'");
    }
}

GeometryConfig parse_geometry(const json& j, const std::string& ctx) {
    require_object(j, ctx);
    check_keys(j, ctx + ".",
               {"wavelength_m", "range_m", "spatial_span_m", "temporal_span_y", "motion",
                "t0_y"});
    GeometryConfig g;
    g.wavelength_m = get_field(j, ctx + ".", "wavelength_m", g.wavelength_m);
    g.range_m = get_field(j, ctx + ".", "range_m", g.range_m);
    g.spatial_span_m = get_field(j, ctx + ".", "spatial_span_m", g.spatial_span_m);
    g.temporal_span_y = get_field(j, ctx + ".", "temporal_span_y", g.temporal_span_y);
    const std::string motion =
        get_field<std::string>(j, ctx + ".", "motion", "linear");
    if (motion == "linear")
        g.motion = MotionModel::linear;
    else if (motion == "seasonal")
        g.motion = MotionModel::seasonal;
    else
        throw std::invalid_argument("config: bad value for '" + ctx + ".motion'");
    g.t0_y = get_field(j, ctx + ".", "t0_y", g.t0_y);
    return g;
}

TruthSpec parse_truth(const json& j, const std::string& ctx) {
    require_object(j, ctx);
    check_keys(j, ctx + ".",
               {"elevation_min", "elevation_max", "deformation_min", "deformation_max",
                "n_blocks", "block_min_frac", "block_max_frac"});
    TruthSpec t;
    t.elevation_min = get_field(j, ctx + ".", "elevation_min", t.elevation_min);
    t.elevation_max = get_field(j, ctx + ".", "elevation_max", t.elevation_max);
    t.deformation_min = get_field(j, ctx + ".", "deformation_min", t.deformation_min);
    t.deformation_max = get_field(j, ctx + ".", "deformation_max", t.deformation_max);
    t.n_blocks = get_field(j, ctx + ".", "n_blocks", t.n_blocks);
    t.block_min_frac = get_field(j, ctx + ".", "block_min_frac", t.block_min_frac);
    t.block_max_frac = get_field(j, ctx + ".", "block_max_frac", t.block_max_frac);
    return t;
}

SimulateConfig parse_simulate(const json& j, const std::string& ctx) {
    require_object(j, ctx);
    check_keys(j, ctx + ".",
               {"dims", "snr_db", "outlier_fraction", "amplitude", "geometry", "truth"});
    SimulateConfig c;
    if (j.contains("dims")) {
        const auto dims = get_field<std::vector<std::uint64_t>>(j, ctx + ".", "dims", {});
        if (dims.size() != 3)
            throw std::invalid_argument("config: '" + ctx + ".dims' must have 3 entries");
        c.dims = Dims3{dims[0], dims[1], dims[2]};
    }
    c.snr_db = get_field(j, ctx + ".", "snr_db", c.snr_db);
    c.outlier_fraction = get_field(j, ctx + ".", "outlier_fraction", c.outlier_fraction);
    c.amplitude = get_field(j, ctx + ".", "amplitude", c.amplitude);
    if (j.contains("geometry")) c.geometry = parse_geometry(j.at("geometry"), ctx + ".geometry");
    if (j.contains("truth")) c.truth = parse_truth(j.at("truth"), ctx + ".truth");
    return c;
}

SolverConfig parse_solver(const json& j, const std::string& ctx) {
    require_object(j, ctx);
    check_keys(j, ctx + ".",
               {"alpha", "beta", "gamma", "mu0", "eta", "mu_max", "max_iter", "tol",
                "mode_weights"});
    SolverConfig s;
    s.alpha = get_field(j, ctx + ".", "alpha", s.alpha);
    s.beta = get_field(j, ctx + ".", "beta", s.beta);
    s.gamma = get_field(j, ctx + ".", "gamma", s.gamma);
    s.mu0 = get_field(j, ctx + ".", "mu0", s.mu0);
    s.eta = get_field(j, ctx + ".", "eta", s.eta);
    s.mu_max = get_field(j, ctx + ".", "mu_max", s.mu_max);
    s.max_iter = get_field(j, ctx + ".", "max_iter", s.max_iter);
    s.tol = get_field(j, ctx + ".", "tol", s.tol);
    if (j.contains("mode_weights")) {
        const auto w = get_field<std::vector<double>>(j, ctx + ".", "mode_weights", {});
        if (w.size() != 3)
            throw std::invalid_argument("config: '" + ctx + ".mode_weights' must have 3 entries");
        s.mode_weights = {w[0], w[1], w[2]};
    }
    return s;
}

SearchGrid parse_grid(const json& j, const std::string& ctx) {
    require_object(j, ctx);
    check_keys(j, ctx + ".",
               {"s_min", "s_max", "s_step", "p_min", "p_max", "p_step", "refine_factor",
                "max_nodes", "amplitude_weighted"});
    SearchGrid g;
    g.s_min = get_field(j, ctx + ".", "s_min", g.s_min);
    g.s_max = get_field(j, ctx + ".", "s_max", g.s_max);
    g.s_step = get_field(j, ctx + ".", "s_step", g.s_step);
    g.p_min = get_field(j, ctx + ".", "p_min", g.p_min);
    g.p_max = get_field(j, ctx + ".", "p_max", g.p_max);
    g.p_step = get_field(j, ctx + ".", "p_step", g.p_step);
    g.refine_factor = get_field(j, ctx + ".", "refine_factor", g.refine_factor);
    g.max_nodes = get_field(j, ctx + ".", "max_nodes", g.max_nodes);
    g.amplitude_weighted = get_field(j, ctx + ".", "amplitude_weighted", g.amplitude_weighted);
    return g;
}

json geometry_to_json(const GeometryConfig& g) {
    json j;
    j["wavelength_m"] = g.wavelength_m;
    j["range_m"] = g.range_m;
    j["spatial_span_m"] = g.spatial_span_m;
    j["temporal_span_y"] = g.temporal_span_y;
    j["motion"] = g.motion == MotionModel::linear ? "linear" : "seasonal";
    j["t0_y"] = g.t0_y;
    return j;
}

json truth_to_json(const TruthSpec& t) {
    json j;
    j["elevation_min"] = t.elevation_min;
    j["elevation_max"] = t.elevation_max;
    j["deformation_min"] = t.deformation_min;
    j["deformation_max"] = t.deformation_max;
    j["n_blocks"] = t.n_blocks;
    j["block_min_frac"] = t.block_min_frac;
    j["block_max_frac"] = t.block_max_frac;
    return j;
}

}  // namespace

PatchLayout plan_patches(std::size_t grid_rows, std::size_t grid_cols,
                         std::size_t patch_rows, std::size_t patch_cols,
                         std::size_t overlap) {
    if (grid_rows == 0 || grid_cols == 0)
        throw std::invalid_argument("plan_patches: degenerate grid");
    if (patch_rows < 8 || patch_cols < 8)
        throw std::invalid_argument("plan_patches: patch sides must be >= 8");
    if (overlap >= std::min(patch_rows, patch_cols))
        throw std::invalid_argument("plan_patches: overlap must be < min patch side");

    PatchLayout layout;
    layout.grid_rows = grid_rows;
    layout.grid_cols = grid_cols;
    layout.patch_rows = patch_rows;
    layout.patch_cols = patch_cols;
    layout.overlap = overlap;

    auto starts = [overlap](std::size_t grid, std::size_t patch) {
        std::vector<std::size_t> s;
        if (patch >= grid) {
            s.push_back(0);
            return s;
        }
        const std::size_t step = patch - overlap;
        for (std::size_t x = 0;; x += step) {
            s.push_back(x);
            if (x + patch >= grid) break;
        }
        return s;
    };
    const std::vector<std::size_t> rs = starts(grid_rows, patch_rows);
    const std::vector<std::size_t> cs = starts(grid_cols, patch_cols);
    for (std::size_t r : rs)
        for (std::size_t c : cs)
            layout.rects.push_back(PatchRect{r, c, std::min(patch_rows, grid_rows - r),
                                             std::min(patch_cols, grid_cols - c)});
    return layout;
}

TiledDecomposition decompose_tiled(const ComplexTensor3& stack, const PatchLayout& layout,
                                   const SolverConfig& cfg, Method method, int workers) {
    const Dims3 d = stack.dims();
    if (layout.grid_rows != d.i1 || layout.grid_cols != d.i2)
        throw std::invalid_argument("decompose_tiled: layout grid differs from stack");
    if (layout.rects.empty()) throw std::invalid_argument("decompose_tiled: empty layout");
    for (const PatchRect& r : layout.rects)
        if (r.rows == 0 || r.cols == 0 || r.r0 + r.rows > d.i1 || r.c0 + r.cols > d.i2)
            throw std::invalid_argument("decompose_tiled: patch exceeds grid bounds");

    TiledDecomposition out;
    if (method == Method::none) {
        out.x_hat = stack;
        out.e_hat = ComplexTensor3(d);
        return out;
    }
    cfg.validate();

    struct Slot {
        ComplexTensor3 x, e;
        SolverReport report;
        bool failed = false;
    };
    std::vector<Slot> slots(layout.rects.size());
    parallel_for(layout.rects.size(), workers, [&](std::size_t i) {
        const PatchRect& rect = layout.rects[i];
        ComplexTensor3 patch = extract_patch(stack, rect);
        try {
            Decomposition dec = method == Method::tvlr ? decompose_tvlr(patch, cfg)
                                                       : decompose_lr(patch, cfg);
            slots[i] = Slot{std::move(dec.x_hat), std::move(dec.e_hat),
                            std::move(dec.report), false};
        } catch (const numerical_error&) {
            // Pass the patch through unfiltered; the failure is reported.
            ComplexTensor3 zero(patch.dims());
            slots[i] = Slot{std::move(patch), std::move(zero), SolverReport{}, true};
        }
    });

    out.x_hat = ComplexTensor3(d);
    out.e_hat = ComplexTensor3(d);
    RealGrid weight(d.i1, d.i2, 0.0);
    for (std::size_t i = 0; i < slots.size(); ++i) {  // fixed order: deterministic sums
        const PatchRect& rect = layout.rects[i];
        const Slot& s = slots[i];
        for (std::size_t k = 0; k < d.i3; ++k)
            for (std::size_t c = 0; c < rect.cols; ++c)
                for (std::size_t r = 0; r < rect.rows; ++r) {
                    out.x_hat(rect.r0 + r, rect.c0 + c, k) += s.x(r, c, k);
                    out.e_hat(rect.r0 + r, rect.c0 + c, k) += s.e(r, c, k);
                }
        for (std::size_t c = 0; c < rect.cols; ++c)
            for (std::size_t r = 0; r < rect.rows; ++r)
                weight(rect.r0 + r, rect.c0 + c) += 1.0;
        out.patches.push_back(PatchResult{rect, std::move(slots[i].report), s.failed});
    }
    for (std::size_t r = 0; r < d.i1; ++r)
        for (std::size_t c = 0; c < d.i2; ++c) {
            const double w = weight(r, c);
            if (w == 0.0)
                throw std::invalid_argument("decompose_tiled: layout does not cover grid");
            if (w == 1.0) continue;
            for (std::size_t k = 0; k < d.i3; ++k) {
                out.x_hat(r, c, k) /= w;
                out.e_hat(r, c, k) /= w;
            }
        }
    return out;
}

void PipelineConfig::validate() const {
    if (stages.empty()) throw std::invalid_argument("config: stages must not be empty");
    auto has = [&](std::string_view s) {
        return std::find(stages.begin(), stages.end(), s) != stages.end();
    };
    for (const std::string& s : stages) {
        if (s != "simulate" && s != "decompose" && s != "estimate" && s != "evaluate")
            throw std::invalid_argument("config: unknown stage '" + s + "'");
        if (std::count(stages.begin(), stages.end(), s) != 1)
            throw std::invalid_argument("config: duplicate stage '" + s + "'");
    }
    const bool sim = has("simulate"), dec = has("decompose");
    const bool est = has("estimate"), ev = has("evaluate");
    if (!sim && (dec || est || ev) && (!input_stack || !geometry_path))
        throw std::invalid_argument(
            "config: input_stack and geometry_path are required without the simulate stage");
    if (ev && !est)
        throw std::invalid_argument("config: evaluate requires the estimate stage");
    if (ev && !sim && (!truth_elevation_csv || !truth_deformation_csv))
        throw std::invalid_argument(
            "config: truth CSVs are required to evaluate without the simulate stage");
    if (est && !estimate.target_filtered && !estimate.target_raw)
        throw std::invalid_argument("config: estimate needs at least one target");
    if (est && estimate.target_filtered && !dec)
        throw std::invalid_argument(
            "config: estimating the filtered stack requires the decompose stage");
    if (workers < 1) throw std::invalid_argument("config: workers must be >= 1");
    if ((patch.rows == 0) != (patch.cols == 0))
        throw std::invalid_argument("config: patch rows and cols must be set together");
    if (evaluate.histogram_bins < 2)
        throw std::invalid_argument("config: histogram_bins must be >= 2");
    solver.validate();
    estimate.grid.validate();
    if (sim) {
        if (simulate.dims.total() == 0)
            throw std::invalid_argument("config: simulate.dims must be positive");
        if (!(simulate.outlier_fraction >= 0.0) || simulate.outlier_fraction >= 1.0)
            throw std::invalid_argument("config: outlier_fraction must be in [0, 1)");
        if (!(simulate.amplitude >= 0.0))
            throw std::invalid_argument("config: amplitude must be >= 0");
        const GeometryConfig& g = simulate.geometry;
        if (!(g.wavelength_m > 0.0) || !(g.range_m > 0.0) || !(g.spatial_span_m > 0.0) ||
            !(g.temporal_span_y >= 0.0))
            throw std::invalid_argument("config: bad geometry parameters");
        const TruthSpec& t = simulate.truth;
        if (!(t.elevation_min < t.elevation_max) ||
            !(t.deformation_min < t.deformation_max) || t.n_blocks < 0 ||
            !(t.block_min_frac > 0.0) || !(t.block_max_frac >= t.block_min_frac) ||
            t.block_max_frac > 1.0)
            throw std::invalid_argument("config: bad truth parameters");
    }
}

std::string config_to_json(const PipelineConfig& cfg) {
    json j;
    j["out_dir"] = cfg.out_dir;
    j["seed"] = cfg.seed;
    j["stages"] = cfg.stages;
    if (cfg.input_stack) j["input_stack"] = *cfg.input_stack;
    if (cfg.geometry_path) j["geometry_path"] = *cfg.geometry_path;
    if (cfg.truth_elevation_csv) j["truth_elevation_csv"] = *cfg.truth_elevation_csv;
    if (cfg.truth_deformation_csv) j["truth_deformation_csv"] = *cfg.truth_deformation_csv;
    json sim;
    sim["dims"] = {cfg.simulate.dims.i1, cfg.simulate.dims.i2, cfg.simulate.dims.i3};
    sim["snr_db"] = cfg.simulate.snr_db;
    sim["outlier_fraction"] = cfg.simulate.outlier_fraction;
    sim["amplitude"] = cfg.simulate.amplitude;
    sim["geometry"] = geometry_to_json(cfg.simulate.geometry);
    sim["truth"] = truth_to_json(cfg.simulate.truth);
    j["simulate"] = sim;
    j["method"] = method_name(cfg.method);
    json sol;
    sol["alpha"] = cfg.solver.alpha;
    sol["beta"] = cfg.solver.beta;
    sol["gamma"] = cfg.solver.gamma;
    sol["mu0"] = cfg.solver.mu0;
    sol["eta"] = cfg.solver.eta;
    sol["mu_max"] = cfg.solver.mu_max;
    sol["max_iter"] = cfg.solver.max_iter;
    sol["tol"] = cfg.solver.tol;
    sol["mode_weights"] = cfg.solver.mode_weights;
    j["solver"] = sol;
    json pat;
    pat["rows"] = cfg.patch.rows;
    pat["cols"] = cfg.patch.cols;
    pat["overlap"] = cfg.patch.overlap;
    j["patch"] = pat;
    j["workers"] = cfg.workers;
    json est;
    json grid;
    grid["s_min"] = cfg.estimate.grid.s_min;
    grid["s_max"] = cfg.estimate.grid.s_max;
    grid["s_step"] = cfg.estimate.grid.s_step;
    grid["p_min"] = cfg.estimate.grid.p_min;
    grid["p_max"] = cfg.estimate.grid.p_max;
    grid["p_step"] = cfg.estimate.grid.p_step;
    grid["refine_factor"] = cfg.estimate.grid.refine_factor;
    grid["max_nodes"] = cfg.estimate.grid.max_nodes;
    grid["amplitude_weighted"] = cfg.estimate.grid.amplitude_weighted;
    est["grid"] = grid;
    est["target_filtered"] = cfg.estimate.target_filtered;
    est["target_raw"] = cfg.estimate.target_raw;
    j["estimate"] = est;
    json ev;
    ev["histogram_bins"] = cfg.evaluate.histogram_bins;
    ev["render"] = cfg.evaluate.render;
    j["evaluate"] = ev;
    return j.dump(2);
}

PipelineConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: parse error: ") + e.what());
    }
    require_object(j, "config");
    check_keys(j, "",
               {"out_dir", "seed", "stages", "input_stack", "geometry_path",
                "truth_elevation_csv", "truth_deformation_csv", "simulate", "method",
                "solver", "patch", "workers", "estimate", "evaluate"});

    PipelineConfig cfg;
    cfg.out_dir = get_field<std::string>(j, "", "out_dir", cfg.out_dir);
    cfg.seed = get_field<std::uint64_t>(j, "", "seed", cfg.seed);
    cfg.stages = get_field<std::vector<std::string>>(
        j, "", "stages", {"simulate", "decompose", "estimate", "evaluate"});
    if (j.contains("input_stack"))
        cfg.input_stack = get_field<std::string>(j, "", "input_stack", "");
    if (j.contains("geometry_path"))
        cfg.geometry_path = get_field<std::string>(j, "", "geometry_path", "");
    if (j.contains("truth_elevation_csv"))
        cfg.truth_elevation_csv = get_field<std::string>(j, "", "truth_elevation_csv", "");
    if (j.contains("truth_deformation_csv"))
        cfg.truth_deformation_csv =
            get_field<std::string>(j, "", "truth_deformation_csv", "");
    if (j.contains("simulate")) cfg.simulate = parse_simulate(j.at("simulate"), "simulate");
    cfg.method = method_from_string(get_field<std::string>(j, "", "method", "tvlr"));
    if (j.contains("solver")) cfg.solver = parse_solver(j.at("solver"), "solver");
    if (j.contains("patch")) {
        const json& p = j.at("patch");
        require_object(p, "patch");
        check_keys(p, "patch.", {"rows", "cols", "overlap"});
        cfg.patch.rows = get_field<std::uint64_t>(p, "patch.", "rows", cfg.patch.rows);
        cfg.patch.cols = get_field<std::uint64_t>(p, "patch.", "cols", cfg.patch.cols);
        cfg.patch.overlap =
            get_field<std::uint64_t>(p, "patch.", "overlap", cfg.patch.overlap);
    }
    cfg.workers = get_field(j, "", "workers", cfg.workers);
    if (j.contains("estimate")) {
        const json& e = j.at("estimate");
        require_object(e, "estimate");
        check_keys(e, "estimate.", {"grid", "target_filtered", "target_raw"});
        if (e.contains("grid")) cfg.estimate.grid = parse_grid(e.at("grid"), "estimate.grid");
        cfg.estimate.target_filtered =
            get_field(e, "estimate.", "target_filtered", cfg.estimate.target_filtered);
        cfg.estimate.target_raw =
            get_field(e, "estimate.", "target_raw", cfg.estimate.target_raw);
    }
    if (j.contains("evaluate")) {
        const json& e = j.at("evaluate");
        require_object(e, "evaluate");
        check_keys(e, "evaluate.", {"histogram_bins", "render"});
        cfg.evaluate.histogram_bins =
            get_field(e, "evaluate.", "histogram_bins", cfg.evaluate.histogram_bins);
        cfg.evaluate.render = get_field(e, "evaluate.", "render", cfg.evaluate.render);
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json(text);
}

void save_manifest(const std::string& path, const RunManifest& m) {
    json j;
    j["config_text"] = m.config_text;
    j["out_dir"] = m.out_dir;
    j["seed"] = m.seed;
    j["stages_run"] = m.stages_run;
    json timings = json::array();
    for (const StageTiming& t : m.timings)
        timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
    j["timings"] = timings;
    json reports;
    for (const auto& [method, summaries] : m.patch_reports) {
        json arr = json::array();
        for (const PatchSummary& p : summaries)
            arr.push_back({{"r0", p.rect.r0},
                           {"c0", p.rect.c0},
                           {"rows", p.rect.rows},
                           {"cols", p.rect.cols},
                           {"iterations", p.iterations},
                           {"final_primal", p.final_primal},
                           {"converged", p.converged},
                           {"failed", p.failed}});
        reports[method] = arr;
    }
    j["patch_reports"] = reports;
    json artifacts = json::array();
    for (const ArtifactEntry& a : m.artifacts)
        artifacts.push_back({{"path", a.path}, {"crc32", a.crc32}, {"bytes", a.bytes}});
    j["artifacts"] = artifacts;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_manifest: cannot open " + path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("save_manifest: write failed for " + path);
}

RunManifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_manifest: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("load_manifest: parse error in " + path + ": " + e.what());
    }
    RunManifest m;
    try {
        m.config_text = j.at("config_text").get<std::string>();
        m.out_dir = j.at("out_dir").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.stages_run = j.at("stages_run").get<std::vector<std::string>>();
        for (const json& t : j.at("timings"))
            m.timings.push_back(StageTiming{t.at("stage").get<std::string>(),
                                            t.at("seconds").get<double>()});
        for (auto it = j.at("patch_reports").begin(); it != j.at("patch_reports").end();
             ++it) {
            std::vector<PatchSummary>& out = m.patch_reports[it.key()];
            for (const json& p : it.value()) {
                PatchSummary s;
                s.rect = PatchRect{p.at("r0").get<std::uint64_t>(),
                                   p.at("c0").get<std::uint64_t>(),
                                   p.at("rows").get<std::uint64_t>(),
                                   p.at("cols").get<std::uint64_t>()};
                s.iterations = p.at("iterations").get<std::uint64_t>();
                s.final_primal = p.at("final_primal").get<double>();
                s.converged = p.at("converged").get<bool>();
                s.failed = p.at("failed").get<bool>();
                out.push_back(s);
            }
        }
        for (const json& a : j.at("artifacts"))
            m.artifacts.push_back(ArtifactEntry{a.at("path").get<std::string>(),
                                                a.at("crc32").get<std::uint32_t>(),
                                                a.at("bytes").get<std::uint64_t>()});
    } catch (const json::exception& e) {
        throw std::runtime_error("load_manifest: bad fields in " + path + ": " + e.what());
    }
    return m;
}

namespace {

// Mutable state threaded through the pipeline stages.
struct RunState {
    std::filesystem::path out;
    RunManifest manifest;
    ComplexTensor3 stack_raw;
    ComplexTensor3 stack_filtered;
    InSARGeometry geometry;
    ParameterMaps truth;
    bool have_truth = false;
    EstimatedMaps est_raw, est_filtered;
    bool have_est_raw = false, have_est_filtered = false;

    void add_artifact(const std::string& rel) {
        const FileChecksum sum = checksum_file((out / rel).string());
        manifest.artifacts.push_back(ArtifactEntry{rel, sum.crc32, sum.bytes});
    }
};

void write_histogram_csv(const std::string& path, const Histogram& h) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_histogram_csv: cannot open " + path);
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        out << format_double(h.edges[i]) << ',' << format_double(h.edges[i + 1]) << ','
            << h.counts[i] << '\n';
    if (!out) throw std::runtime_error("write_histogram_csv: write failed for " + path);
}

std::pair<double, double> render_range(const RealGrid& g) {
    double lo = g.data.empty() ? 0.0 : g.data[0];
    double hi = lo;
    for (double v : g.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(lo < hi)) {
        lo -= 1.0;
        hi += 1.0;
    }
    return {lo, hi};
}

void stage_simulate(const PipelineConfig& cfg, RunState& st) {
    const SimulateConfig& c = cfg.simulate;
    SimSpec spec;
    spec.dims = c.dims;
    spec.geometry = make_geometry(c.dims.i3, c.geometry.spatial_span_m,
                                  c.geometry.temporal_span_y, c.geometry.motion,
                                  c.geometry.t0_y, derive_seed(cfg.seed, 4));
    spec.geometry.wavelength_m = c.geometry.wavelength_m;
    spec.geometry.range_m = c.geometry.range_m;
    spec.truth = make_truth_maps(c.dims.i1, c.dims.i2, c.truth, derive_seed(cfg.seed, 3));
    spec.amplitude = c.amplitude;
    spec.snr_db = c.snr_db;
    spec.outlier_fraction = c.outlier_fraction;
    spec.rng_seed = cfg.seed;

    SimResult r = simulate(spec);
    st.geometry = spec.geometry;
    st.truth = std::move(r.truth);
    st.have_truth = true;
    st.stack_raw = std::move(r.stack);

    const std::string defo_units =
        st.geometry.motion == MotionModel::linear ? "mm/yr" : "mm";
    write_ct3((st.out / "stack_raw.ct3").string(), st.stack_raw);
    st.add_artifact("stack_raw.ct3");
    write_geometry_json((st.out / "geometry.json").string(), st.geometry);
    st.add_artifact("geometry.json");
    write_grid_csv((st.out / "truth_elevation.csv").string(), st.truth.elevation, "m");
    st.add_artifact("truth_elevation.csv");
    write_grid_csv((st.out / "truth_deformation.csv").string(), st.truth.deformation,
                   defo_units);
    st.add_artifact("truth_deformation.csv");

    RealGrid outlier_count(c.dims.i1, c.dims.i2, 0.0);
    for (std::size_t k = 0; k < c.dims.i3; ++k)
        for (std::size_t col = 0; col < c.dims.i2; ++col)
            for (std::size_t row = 0; row < c.dims.i1; ++row)
                outlier_count(row, col) +=
                    r.mask.replaced[row + c.dims.i1 * (col + c.dims.i2 * k)] ? 1.0 : 0.0;
    write_grid_csv((st.out / "outlier_count.csv").string(), outlier_count, "count");
    st.add_artifact("outlier_count.csv");
}

void load_inputs(const PipelineConfig& cfg, RunState& st) {
    st.stack_raw = read_ct3(*cfg.input_stack);
    st.geometry = read_geometry_json(*cfg.geometry_path);
    if (st.geometry.n_images() != st.stack_raw.dims().i3)
        throw std::invalid_argument("config: geometry image count differs from input stack");
    if (cfg.truth_elevation_csv && cfg.truth_deformation_csv) {
        st.truth.elevation = read_grid_csv(*cfg.truth_elevation_csv);
        st.truth.deformation = read_grid_csv(*cfg.truth_deformation_csv);
        const Dims3 d = st.stack_raw.dims();
        if (st.truth.elevation.rows != d.i1 || st.truth.elevation.cols != d.i2 ||
            st.truth.deformation.rows != d.i1 || st.truth.deformation.cols != d.i2)
            throw std::invalid_argument("config: truth CSV dims differ from input stack");
        st.have_truth = true;
    }
}

void stage_decompose(const PipelineConfig& cfg, RunState& st) {
    const Dims3 d = st.stack_raw.dims();
    const std::size_t pr = cfg.patch.rows ? cfg.patch.rows : std::max<std::size_t>(d.i1, 8);
    const std::size_t pc = cfg.patch.cols ? cfg.patch.cols : std::max<std::size_t>(d.i2, 8);
    const PatchLayout layout = plan_patches(d.i1, d.i2, pr, pc, cfg.patch.overlap);

    TiledDecomposition tiled =
        decompose_tiled(st.stack_raw, layout, cfg.solver, cfg.method, cfg.workers);
    std::vector<PatchSummary>& summaries = st.manifest.patch_reports[method_name(cfg.method)];
    for (const PatchResult& p : tiled.patches)
        summaries.push_back(PatchSummary{
            p.rect, p.report.iterations,
            p.report.primal_residuals.empty() ? 0.0 : p.report.primal_residuals.back(),
            p.report.converged, p.failed});
    st.stack_filtered = std::move(tiled.x_hat);

    write_ct3((st.out / "stack_filtered.ct3").string(), st.stack_filtered);
    st.add_artifact("stack_filtered.ct3");
    write_ct3((st.out / "stack_outliers.ct3").string(), tiled.e_hat);
    st.add_artifact("stack_outliers.ct3");
}

void write_estimates(RunState& st, const EstimatedMaps& est, const std::string& tag,
                     const std::string& defo_units) {
    write_grid_csv((st.out / ("elevation_" + tag + ".csv")).string(), est.maps.elevation,
                   "m");
    st.add_artifact("elevation_" + tag + ".csv");
    write_grid_csv((st.out / ("deformation_" + tag + ".csv")).string(),
                   est.maps.deformation, defo_units);
    st.add_artifact("deformation_" + tag + ".csv");
    write_grid_csv((st.out / ("coherence_" + tag + ".csv")).string(), est.coherence,
                   "coherence");
    st.add_artifact("coherence_" + tag + ".csv");
    write_mask_csv((st.out / ("valid_" + tag + ".csv")).string(), est.coherence.rows,
                   est.coherence.cols, est.valid);
    st.add_artifact("valid_" + tag + ".csv");
}

void stage_estimate(const PipelineConfig& cfg, RunState& st) {
    const std::string defo_units =
        st.geometry.motion == MotionModel::linear ? "mm/yr" : "mm";
    if (cfg.estimate.target_raw) {
        st.est_raw = estimate_maps(st.stack_raw, st.geometry, cfg.estimate.grid, cfg.workers);
        st.have_est_raw = true;
        write_estimates(st, st.est_raw, "raw", defo_units);
    }
    if (cfg.estimate.target_filtered) {
        st.est_filtered =
            estimate_maps(st.stack_filtered, st.geometry, cfg.estimate.grid, cfg.workers);
        st.have_est_filtered = true;
        write_estimates(st, st.est_filtered, "filtered", defo_units);
    }
}

void stage_evaluate(const PipelineConfig& cfg, RunState& st) {
    if (!st.have_truth)
        throw std::invalid_argument("config: evaluate stage requires truth maps");

    std::vector<std::pair<std::string, EvalSummary>> rows;
    auto eval_one = [&](const EstimatedMaps& est, const std::string& tag,
                        const std::string& row_name) {
        // An all-invalid map is a numerical outcome, not a config problem.
        if (std::find(est.valid.begin(), est.valid.end(), std::uint8_t(1)) ==
            est.valid.end())
            throw numerical_error("evaluate: no valid pixels in the " + tag + " maps");
        EvalSummary s = residual_stats(est.maps, st.truth, &est.valid);
        s.coherence_histogram =
            coherence_histogram(est.coherence, cfg.evaluate.histogram_bins, &est.valid);
        write_histogram_csv((st.out / ("coherence_histogram_" + tag + ".csv")).string(),
                            s.coherence_histogram);
        st.add_artifact("coherence_histogram_" + tag + ".csv");
        rows.emplace_back(row_name, std::move(s));
    };
    if (st.have_est_raw) eval_one(st.est_raw, "raw", "raw");
    if (st.have_est_filtered) eval_one(st.est_filtered, "filtered", method_name(cfg.method));

    write_summary_csv((st.out / "summary.csv").string(), rows);
    st.add_artifact("summary.csv");

    if (!cfg.evaluate.render) return;
    const auto [elo, ehi] = render_range(st.truth.elevation);
    const auto [dlo, dhi] = render_range(st.truth.deformation);
    auto render_one = [&](const RealGrid& g, double lo, double hi, const std::string& name,
                          const std::vector<std::uint8_t>* mask) {
        render_map(g, lo, hi, (st.out / (name + ".ppm")).string(),
                   (st.out / (name + ".svg")).string(), mask);
        st.add_artifact(name + ".ppm");
        st.add_artifact(name + ".svg");
    };
    render_one(st.truth.elevation, elo, ehi, "render_elevation_truth", nullptr);
    render_one(st.truth.deformation, dlo, dhi, "render_deformation_truth", nullptr);
    if (st.have_est_raw) {
        render_one(st.est_raw.maps.elevation, elo, ehi, "render_elevation_raw",
                   &st.est_raw.valid);
        render_one(st.est_raw.maps.deformation, dlo, dhi, "render_deformation_raw",
                   &st.est_raw.valid);
    }
    if (st.have_est_filtered) {
        render_one(st.est_filtered.maps.elevation, elo, ehi, "render_elevation_filtered",
                   &st.est_filtered.valid);
        render_one(st.est_filtered.maps.deformation, dlo, dhi,
                   "render_deformation_filtered", &st.est_filtered.valid);
    }
}

}  // namespace

RunManifest run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    RunState st;
    st.out = cfg.out_dir;
    std::filesystem::create_directories(st.out);
    st.manifest.config_text = config_to_json(cfg);
    st.manifest.out_dir = cfg.out_dir;
    st.manifest.seed = cfg.seed;

    auto has = [&](std::string_view s) {
        return std::find(cfg.stages.begin(), cfg.stages.end(), s) != cfg.stages.end();
    };
    auto run_stage = [&](const char* name, auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        st.manifest.stages_run.push_back(name);
        st.manifest.timings.push_back(StageTiming{name, dt.count()});
    };

    try {
        if (has("simulate"))
            run_stage("simulate", [&] { stage_simulate(cfg, st); });
        else if (has("decompose") || has("estimate") || has("evaluate"))
            load_inputs(cfg, st);
        if (has("decompose")) run_stage("decompose", [&] { stage_decompose(cfg, st); });
        if (has("estimate")) run_stage("estimate", [&] { stage_estimate(cfg, st); });
        if (has("evaluate")) run_stage("evaluate", [&] { stage_evaluate(cfg, st); });
    } catch (...) {
        // Leave a partial manifest behind for diagnosis, then propagate.
        std::sort(st.manifest.artifacts.begin(), st.manifest.artifacts.end(),
                  [](const ArtifactEntry& a, const ArtifactEntry& b) { return a.path < b.path; });
        try {
            save_manifest((st.out / "manifest.json").string(), st.manifest);
        } catch (...) {
        }
        throw;
    }

    std::sort(st.manifest.artifacts.begin(), st.manifest.artifacts.end(),
              [](const ArtifactEntry& a, const ArtifactEntry& b) { return a.path < b.path; });
    save_manifest((st.out / "manifest.json").string(), st.manifest);
    return st.manifest;
}

RunManifest run_pipeline(const std::string& config_path) {
    return run_pipeline(load_pipeline_config(config_path));
}

}  // namespace insartd
