#include <benchmark/benchmark.h>

#include "fedcurve/metrics.hpp"
#include "fedcurve/params.hpp"
#include "fedcurve/rng.hpp"

namespace {

fedcurve::ParamVector make_vec(std::size_t dim, std::uint64_t seed) {
    fedcurve::Rng rng(seed);
    fedcurve::ParamVector v(dim);
    for (auto& x : v.values) x = rng.normal();
    return v;
}

void BM_Inner(benchmark::State& state) {
    const auto a = make_vec(static_cast<std::size_t>(state.range(0)), 1);
    const auto b = make_vec(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fedcurve::inner(a, b));
    }
}
BENCHMARK(BM_Inner)->Arg(512)->Arg(4096)->Arg(32768);

void BM_ProjectOnto(benchmark::State& state) {
    const auto a = make_vec(static_cast<std::size_t>(state.range(0)), 3);
    const auto b = make_vec(static_cast<std::size_t>(state.range(0)), 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fedcurve::project_onto(a, b));
    }
}
BENCHMARK(BM_ProjectOnto)->Arg(4096);

void BM_Gini(benchmark::State& state) {
    fedcurve::Rng rng(5);
    std::vector<double> xs(static_cast<std::size_t>(state.range(0)));
    for (auto& x : xs) x = 0.1 + rng.uniform();
    for (auto _ : state) {
        benchmark::DoNotOptimize(fedcurve::gini(xs));
    }
}
BENCHMARK(BM_Gini)->Arg(30)->Arg(300);

} // namespace
