#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "ksadi/harness.hpp"
#include "ksadi/manufactured.hpp"
#include "ksadi/schemes.hpp"
#include "oracles.hpp"

using namespace ksadi;
using namespace ksadi::testing;

TEST(Parallel, ThreadCountDoesNotChangeResults)
{
    const GridSpec g = make_grid(-1, 1, -1, 1, 32, 32, BoundaryKind::NeumannSymmetric);
    Rng rng(71);
    const State s0{smooth_random_field(g, rng, 1.0, 0.5), smooth_random_field(g, rng, 0.0, 0.3), 0.0};
    for (auto kind : {SchemeKind::AdiFirstOrder, SchemeKind::AdiSecondOrder}) {
        std::vector<State> finals;
        for (int threads : {0, 2, 3, 8}) {
            SchemeConfig cfg = quiet_config(kind, 1e-3);
            cfg.threads = threads;
            Integrator it(cfg, g);
            State s = s0;
            for (int n = 0; n < 5; ++n)
                s = it.step(s);
            finals.push_back(s);
        }
        for (std::size_t k = 1; k < finals.size(); ++k) {
            EXPECT_EQ(max_abs_diff(finals[k].rho, finals[0].rho), 0.0) << to_string(kind);
            EXPECT_EQ(max_abs_diff(finals[k].c, finals[0].c), 0.0) << to_string(kind);
        }
    }
}

TEST(Parallel, PinnedSweepsAreThreadInvariant)
{
    const GridSpec g = make_grid(-1, 1, -1, 1, 24, 24, BoundaryKind::NeumannSymmetric);
    const auto a = run_manufactured(g, SchemeKind::AdiFirstOrder, 1.0, 1e-4, 1e-3, 0);
    const auto b = run_manufactured(g, SchemeKind::AdiFirstOrder, 1.0, 1e-4, 1e-3, 4);
    EXPECT_EQ(a.error_rho, b.error_rho);
    EXPECT_EQ(a.error_c, b.error_c);
}

TEST(Parallel, IndependentIntegratorsRunConcurrently)
{
    const GridSpec g = make_grid(0, 1, 0, 1, 16, 16, BoundaryKind::Periodic);
    Rng rng(72);
    const State s0{smooth_random_field(g, rng, 1.0, 0.5), smooth_random_field(g, rng, 0.0, 0.3), 0.0};
    auto run = [&] {
        Integrator it(quiet_config(SchemeKind::AdiSecondOrder, 1e-3), g);
        State s = s0;
        for (int n = 0; n < 10; ++n)
            s = it.step(s);
        return s;
    };
    const State reference = run();
    std::vector<State> results(4);
    std::vector<std::thread> pool;
    for (auto& r : results)
        pool.emplace_back([&r, &run] { r = run(); });
    for (auto& t : pool)
        t.join();
    for (const auto& r : results)
        EXPECT_EQ(max_abs_diff(r.rho, reference.rho), 0.0);
}

TEST(Parallel, ThreadedBenchmarkReportsThreadedTimings)
{
    ExperimentConfig c = default_config(ExperimentKind::Benchmark);
    c.grid_list = {20, 40};
    c.t_final = 0.01;
    c.threads = 2;
    const BenchmarkReport r = run_benchmark(c);
    ASSERT_EQ(r.rows.size(), 2u);
    for (const auto& row : r.rows) {
        EXPECT_TRUE(row.adi_threaded_seconds.has_value());
        EXPECT_GT(row.adi_seconds, 0.0);
        EXPECT_GT(row.five_point_seconds, 0.0);
        EXPECT_GT(row.mean_cg_iterations, 0.0);
    }
    EXPECT_EQ(r.threads, 2);
}
