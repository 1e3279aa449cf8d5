#include "pwf/ensemble.hpp"
#include "pwf/holland.hpp"
#include "pwf/overlap.hpp"

#include <benchmark/benchmark.h>

using namespace pwf;

namespace {

ModeKey key(IVec3 n, int pol = 0) { return ModeKey{0, n, pol}; }

TheoryModel em(double cutoff) { return TheoryModel(TheoryKind::FreeEM_Bohm, {}, 2 * pi, cutoff); }

ModeCoefficients two_modes()
{
    return {{key({0, 0, 1}), cplx(0.8, 0.1)}, {key({1, 1, 0}, 1), cplx(-0.2, 0.6)}};
}

void BM_log_psi_gradient(benchmark::State& state)
{
    auto th = em(double(state.range(0)) / 2);
    auto f = WaveFunctional(one_particle(th, two_modes()));
    auto ens = sample_equilibrium(f, 64, 1);
    std::vector<cplx> grad(ens.dim);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(log_psi_gradient(f, ens.member(i++ % 64), grad));
    }
    state.counters["coordinates"] = double(ens.dim);
}
BENCHMARK(BM_log_psi_gradient)->Arg(3)->Arg(4)->Arg(5);

void BM_guidance_velocity(benchmark::State& state)
{
    auto th = em(1.5);
    auto f = WaveFunctional(coherent(th, two_modes()));
    auto ens = sample_equilibrium(f, 64, 2);
    std::size_t i = 0;
    for (auto _ : state) {
        auto cfg = FieldConfiguration::zero(th.space());
        cfg.x.assign(ens.member(i % 64).begin(), ens.member(i % 64).end());
        ++i;
        benchmark::DoNotOptimize(guidance_velocity(th, f, cfg));
    }
}
BENCHMARK(BM_guidance_velocity);

void BM_sample_one_particle(benchmark::State& state)
{
    auto th = em(1.5);
    auto f = WaveFunctional(one_particle(th, two_modes()));
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(sample_equilibrium(f, std::size_t(state.range(0)), ++seed));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_sample_one_particle)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_holland_alpha(benchmark::State& state)
{
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(sample_alpha(1, std::size_t(state.range(0)), ++seed));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_holland_alpha)->Arg(1 << 16)->Arg(1 << 20)->Unit(benchmark::kMillisecond);

void BM_density_overlap(benchmark::State& state)
{
    auto th = em(1.5);
    auto a = WaveFunctional(coherent(th, two_modes()));
    auto b = WaveFunctional(vacuum(th));
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(density_overlap(a, b, std::size_t(state.range(0)), ++seed));
}
BENCHMARK(BM_density_overlap)->Arg(4000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
