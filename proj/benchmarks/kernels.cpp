#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "ksadi/linalg.hpp"
#include "ksadi/manufactured.hpp"
#include "ksadi/schemes.hpp"

using namespace ksadi;

namespace {

TridiagSystem random_system(int m)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TridiagSystem s;
    s.lower.resize(m - 1);
    s.upper.resize(m - 1);
    for (int k = 0; k + 1 < m; ++k) {
        s.lower.at(k) = u(rng);
        s.upper.at(k) = u(rng);
    }
    for (int k = 0; k < m; ++k) {
        s.main.push_back(3.0 + u(rng));
        s.rhs.push_back(u(rng));
    }
    return s;
}

void BM_Thomas(benchmark::State& st)
{
    const auto sys = random_system(static_cast<int>(st.range(0)));
    for (auto _ : st)
        benchmark::DoNotOptimize(solve_tridiagonal(sys));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_Thomas)->RangeMultiplier(4)->Range(16, 4096);

void BM_CyclicThomas(benchmark::State& st)
{
    const auto base = random_system(static_cast<int>(st.range(0)));
    CyclicTridiagSystem sys{base.lower, base.main, base.upper, base.rhs, 0.5, 0.5};
    for (auto _ : st)
        benchmark::DoNotOptimize(solve_cyclic_tridiagonal(sys));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_CyclicThomas)->RangeMultiplier(4)->Range(16, 4096);

void run_step(benchmark::State& st, SchemeKind kind)
{
    const int n = static_cast<int>(st.range(0));
    const GridSpec g = make_grid(-5.0, 5.0, -5.0, 5.0, n, n, BoundaryKind::NeumannSymmetric);
    const ManufacturedCase mc = make_manufactured_case(1.0);
    SchemeConfig cfg;
    cfg.dt = 1e-3;
    cfg.scheme = kind;
    cfg.forcing = mc.forcing();
    cfg.dirichlet = mc.dirichlet();
    cfg.on_warning = [](const std::string&) {};
    Integrator integrator(cfg, g);
    const State s0 = exact_state(g, 0.0);
    for (auto _ : st) {
        integrator.reset();
        benchmark::DoNotOptimize(integrator.step(s0));
    }
    st.SetItemsProcessed(st.iterations() * 2 * static_cast<long long>(g.size()));
}

void BM_AdiFirstOrderStep(benchmark::State& st) { run_step(st, SchemeKind::AdiFirstOrder); }
void BM_FivePointStep(benchmark::State& st) { run_step(st, SchemeKind::FivePoint); }
BENCHMARK(BM_AdiFirstOrderStep)->Arg(80)->Arg(160)->Arg(320)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FivePointStep)->Arg(80)->Arg(160)->Arg(320)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
