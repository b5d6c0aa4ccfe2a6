// insartd: simulate, decompose, estimate, and evaluate multipass InSAR
// stacks. Every subcommand drives the same pipeline; flags override the
// matching config fields. Exit codes: 0 success, 2 config error, 3
// numerical failure.

#include <charconv>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "insartd/errors.hpp"
#include "insartd/pipeline.hpp"

namespace {

struct Options {
    std::string config;
    std::optional<double> alpha, beta, gamma;
    std::optional<std::string> patch;
    std::optional<std::uint64_t> overlap;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> method;
};

void add_common_flags(CLI::App* cmd, Options& opt) {
    cmd->add_option("--config", opt.config, "JSON config file (see docs/config.md)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--alpha", opt.alpha, "TV regularization weight");
    cmd->add_option("--beta", opt.beta, "nuclear norm regularization weight");
    cmd->add_option("--gamma", opt.gamma, "sparsity weight; 0 derives 100/sqrt(I1*I2)");
    cmd->add_option("--patch", opt.patch, "patch size HxW for tiled decomposition");
    cmd->add_option("--overlap", opt.overlap, "patch overlap in pixels");
    cmd->add_option("--workers", opt.workers, "worker thread count");
    cmd->add_option("--seed", opt.seed, "base RNG seed");
    cmd->add_option("--out", opt.out, "output directory");
    cmd->add_option("--method", opt.method, "decomposition method")
        ->check(CLI::IsMember({"tvlr", "lr", "none"}));
}

std::pair<std::size_t, std::size_t> parse_patch(const std::string& s) {
    const std::size_t xpos = s.find('x');
    if (xpos == std::string::npos)
        throw std::invalid_argument("--patch must be HxW, e.g. 100x100");
    std::size_t h = 0, w = 0;
    const auto r1 = std::from_chars(s.data(), s.data() + xpos, h);
    const auto r2 = std::from_chars(s.data() + xpos + 1, s.data() + s.size(), w);
    if (r1.ec != std::errc() || r1.ptr != s.data() + xpos || r2.ec != std::errc() ||
        r2.ptr != s.data() + s.size() || h == 0 || w == 0)
        throw std::invalid_argument("--patch must be HxW, e.g. 100x100");
    return {h, w};
}

insartd::PipelineConfig build_config(const Options& opt,
                                     const std::optional<std::vector<std::string>>& stages) {
    insartd::PipelineConfig cfg;
    if (!opt.config.empty()) cfg = insartd::load_pipeline_config(opt.config);
    if (cfg.stages.empty()) cfg.stages = {"simulate", "decompose", "estimate", "evaluate"};
    if (stages) {
        cfg.stages = *stages;
        // Single-stage estimation targets the input stack directly.
        if (std::find(stages->begin(), stages->end(), "decompose") == stages->end() &&
            std::find(stages->begin(), stages->end(), "estimate") != stages->end())
            cfg.estimate.target_filtered = false;
    }
    if (opt.alpha) cfg.solver.alpha = *opt.alpha;
    if (opt.beta) cfg.solver.beta = *opt.beta;
    if (opt.gamma) cfg.solver.gamma = *opt.gamma;
    if (opt.patch) {
        const auto [h, w] = parse_patch(*opt.patch);
        cfg.patch.rows = h;
        cfg.patch.cols = w;
    }
    if (opt.overlap) cfg.patch.overlap = *opt.overlap;
    if (opt.workers) cfg.workers = *opt.workers;
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.out) cfg.out_dir = *opt.out;
    if (opt.method) {
        if (*opt.method == "tvlr")
            cfg.method = insartd::Method::tvlr;
        else if (*opt.method == "lr")
            cfg.method = insartd::Method::lr;
        else
            cfg.method = insartd::Method::none;
    }
    return cfg;
}

int run(const Options& opt, const std::optional<std::vector<std::string>>& stages) {
    const insartd::PipelineConfig cfg = build_config(opt, stages);
    const insartd::RunManifest m = insartd::run_pipeline(cfg);
    std::cout << "stages:";
    for (const std::string& s : m.stages_run) std::cout << ' ' << s;
    std::cout << '\n';
    std::size_t failed_total = 0;
    for (const auto& [method, patches] : m.patch_reports) {
        std::size_t failed = 0, max_iter = 0;
        for (const auto& p : patches) {
            failed += p.failed ? 1 : 0;
            max_iter = std::max(max_iter, p.iterations);
        }
        failed_total += failed;
        std::cout << "decompose[" << method << "]: " << patches.size() << " patch"
                  << (patches.size() == 1 ? "" : "es") << ", max " << max_iter
                  << " iterations, " << failed << " failed\n";
    }
    std::cout << "wrote " << m.out_dir << "/manifest.json (" << m.artifacts.size()
              << " artifacts)\n";
    // Failed patches passed through unfiltered; the artifacts are complete
    // but the decomposition did not succeed numerically.
    if (failed_total > 0) {
        std::cerr << "numerical failure: " << failed_total
                  << " patch(es) fell back to passthrough\n";
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"total-variation regularized robust low-rank InSAR stack processing"};
    app.require_subcommand(1);

    Options opt;
    std::optional<std::vector<std::string>> stages;
    auto add_cmd = [&](const char* name, const char* desc,
                       std::vector<std::string> forced) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        add_common_flags(cmd, opt);
        cmd->callback([&stages, forced = std::move(forced)] {
            if (!forced.empty()) stages = forced;
        });
        return cmd;
    };
    add_cmd("simulate", "synthesize a noisy, outlier-contaminated stack", {"simulate"});
    add_cmd("decompose", "split a stack into low-rank and outlier parts", {"decompose"});
    add_cmd("estimate", "periodogram parameter estimation on the input stack",
            {"estimate"});
    add_cmd("evaluate", "estimate the input stack and score it against truth",
            {"estimate", "evaluate"});
    add_cmd("pipeline", "run the stages listed in the config (default: all)", {});

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        return run(opt, stages);
    } catch (const insartd::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
