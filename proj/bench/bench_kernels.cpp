#include <benchmark/benchmark.h>

#include <cmath>

#include "logitnets/constructions.hpp"
#include "logitnets/parallel.hpp"
#include "logitnets/random.hpp"

using namespace logitnets;

namespace {

std::vector<double> random_points(std::size_t n, int d) {
    Rng g(1);
    std::vector<double> p(n * d);
    for (auto& v : p) v = uniform01(g);
    return p;
}

void BM_evaluate_batch(benchmark::State& state, Exec exec) {
    const ReluNet net = mult_net(1e-3);
    const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_batch(net, pts, exec));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_grid_sup_error(benchmark::State& state, Exec exec) {
    const ReluNet net = max_net(4);
    Grid grid{{-1, -1, -1, -1}, {1, 1, 1, 1}, static_cast<int>(state.range(0))};
    auto ref = [](std::span<const double> x) {
        double m = 0.0;
        for (double v : x) m = std::max(m, std::abs(v));
        return m;
    };
    for (auto _ : state) benchmark::DoNotOptimize(grid_sup_error(net, ref, grid, exec));
    state.SetItemsProcessed(state.iterations() * static_cast<long long>(grid.size()));
}

void BM_log_approx(benchmark::State& state) {
    LogOptions opt;
    opt.grid_points = 10000;
    opt.clamp_points = 2001;
    for (auto _ : state) benchmark::DoNotOptimize(log_approx(0.1, 0.9, 1.0, 0.1, opt));
}

}  // namespace

BENCHMARK_CAPTURE(BM_evaluate_batch, serial, Exec::Serial)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK_CAPTURE(BM_evaluate_batch, parallel, Exec::Parallel)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK_CAPTURE(BM_grid_sup_error, serial, Exec::Serial)->Arg(8)->Arg(16);
BENCHMARK_CAPTURE(BM_grid_sup_error, parallel, Exec::Parallel)->Arg(8)->Arg(16);
BENCHMARK(BM_log_approx)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
