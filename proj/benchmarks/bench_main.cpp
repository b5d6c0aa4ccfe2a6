// Microbenchmarks for the kernels that dominate a decomposition run and
// for the per-pixel search. Build with -DINSARTD_BUILD_BENCHMARKS=ON.

#include <benchmark/benchmark.h>

#include <complex>
#include <random>

#include "insartd/estimate.hpp"
#include "insartd/operators.hpp"
#include "insartd/simulate.hpp"
#include "insartd/solver.hpp"
#include "insartd/tensor.hpp"

using namespace insartd;

namespace {

ComplexTensor3 random_tensor(Dims3 d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ComplexTensor3 t(d);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = Complex(gauss(rng), gauss(rng));
    return t;
}

void bm_svt(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ComplexMatrix m(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) m(i, j) = Complex(gauss(rng), gauss(rng));
    for (auto _ : state) benchmark::DoNotOptimize(svt(m, 0.5));
}

void bm_diff_roundtrip(benchmark::State& state) {
    const Dims3 d{64, 64, 8};
    const ComplexTensor3 z = random_tensor(d, 11);
    for (auto _ : state) benchmark::DoNotOptimize(diff_adjoint(diff(z)));
}

void bm_solve_z(benchmark::State& state) {
    const Dims3 d{64, 64, 8};
    const ComplexTensor3 h = random_tensor(d, 13);
    const FreqKernel kernel = make_freq_kernel(d);
    Fft3 fft(d);
    for (auto _ : state) benchmark::DoNotOptimize(solve_z(h, 0.3, kernel, fft));
}

void bm_decompose(benchmark::State& state) {
    const Dims3 d{32, 32, 8};
    const ComplexTensor3 g = random_tensor(d, 17);
    SolverConfig cfg;
    cfg.max_iter = 10;  // fixed iteration count: measures per-sweep cost
    cfg.tol = 1e-300;
    for (auto _ : state) benchmark::DoNotOptimize(decompose_tvlr(g, cfg));
}

void bm_periodogram_pixel(benchmark::State& state) {
    const std::size_t k = 15;
    const InSARGeometry geom =
        make_geometry(k, 500.0, 0.0, MotionModel::linear, 0.0, 19);
    std::vector<Complex> pixel(k);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> uphase(-3.14159, 3.14159);
    for (auto& v : pixel) v = std::polar(1.0, uphase(rng));
    const SearchGrid grid;
    for (auto _ : state)
        benchmark::DoNotOptimize(periodogram_pixel(pixel, geom, grid));
}

}  // namespace

BENCHMARK(bm_svt)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_diff_roundtrip)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_solve_z)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_decompose)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_periodogram_pixel)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
