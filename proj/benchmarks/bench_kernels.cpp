#include <benchmark/benchmark.h>

#include "bdiff/denoise.hpp"
#include "bdiff/elliptic.hpp"
#include "bdiff/image.hpp"
#include "bdiff/parabolic.hpp"

using namespace bdiff;

namespace {

const ImageTensor& noisy_image()
{
    static const ImageTensor img = [] {
        DenoiseParams p;
        return add_gaussian_noise(read_png(BDIFF_BENCH_IMAGE), p.sigma_noise, p.seed);
    }();
    return img;
}

}  // namespace

static void BM_EllipticSolve(benchmark::State& state)
{
    const Domain d = Domain::unit_square(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_brezis_oswald(d, 4.0, 1e-8, 1000));
    }
}
BENCHMARK(BM_EllipticSolve)->Arg(31)->Arg(63)->Unit(benchmark::kMillisecond);

static void BM_PoissonCG(benchmark::State& state)
{
    const Domain d = Domain::unit_square(static_cast<std::size_t>(state.range(0)));
    const Grid2D rhs = d.filled(1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_poisson(rhs, 1e-10));
    }
}
BENCHMARK(BM_PoissonCG)->Arg(63)->Arg(127)->Unit(benchmark::kMillisecond);

static void BM_ExplicitStep(benchmark::State& state)
{
    const EllipticSolution sol = solve_brezis_oswald(Domain::unit_square(63), 2.0, 1e-10, 1000);
    const BernoulliParams p{2.0, 1.0, GrowthRate::constant(1.0)};
    const Grid2D v = separable_solution(sol.u, p, 0.0);
    const double dt = 0.5 * cfl_max_dt(v, p.alpha);
    for (auto _ : state) {
        benchmark::DoNotOptimize(step_explicit(v, 0.0, dt, p.alpha, p.mu, ReactionSign::Growth));
    }
}
BENCHMARK(BM_ExplicitStep);

static void BM_DiffuseGmChannel(benchmark::State& state)
{
    DenoiseParams p;
    p.steps_gm = 1;
    const Grid2D ch = noisy_image().channel(0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(diffuse_gm(ch, p));
    }
}
BENCHMARK(BM_DiffuseGmChannel)->Unit(benchmark::kMicrosecond);

static void BM_DiffusePmChannel(benchmark::State& state)
{
    DenoiseParams p;
    p.steps_pm = 1;
    const Grid2D ch = noisy_image().channel(0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(diffuse_pm(ch, p));
    }
}
BENCHMARK(BM_DiffusePmChannel)->Unit(benchmark::kMicrosecond);

static void BM_Ssim(benchmark::State& state)
{
    const ImageTensor clean = read_png(BDIFF_BENCH_IMAGE);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ssim(clean, noisy_image()));
    }
}
BENCHMARK(BM_Ssim)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
