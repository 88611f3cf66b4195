#include <benchmark/benchmark.h>

#include "fedcurve/rng.hpp"
#include "fedcurve/sim.hpp"

namespace {

fedcurve::SimTask bench_task(int n_clients) {
    const fedcurve::Dataset global =
        fedcurve::make_synthetic(5, 10, n_clients * 60, 2.0, 7);
    fedcurve::SimTask task;
    task.spec = fedcurve::ModelSpec{fedcurve::ModelKind::Logistic, 10, 5, 0, 0.0};
    auto shards = fedcurve::dirichlet_partition(global, n_clients, 0.5, 7);
    for (std::size_t i = 0; i < shards.size(); ++i) {
        auto split = fedcurve::split_dataset(shards[i], 0.2, fedcurve::substream(7, "val", i));
        task.train.push_back(std::move(split.train));
        task.val.push_back(std::move(split.val));
    }
    return task;
}

void BM_SimRun(benchmark::State& state) {
    const int n_clients = static_cast<int>(state.range(0));
    const fedcurve::SimTask task = bench_task(n_clients);
    fedcurve::SimConfig cfg;
    cfg.n_clients = n_clients;
    cfg.total_updates = 50;
    cfg.strategy.kind = fedcurve::StrategyKind::AsyncBezier;
    cfg.strategy.eta_g = 0.5;
    cfg.strategy.correction.kind = fedcurve::CorrectionKind::OrthoDC;
    cfg.curve.k_sgd = 1;
    cfg.curve.k_curve = 1;
    cfg.curve.eta_l = 0.01;
    cfg.eval_every = 25;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        cfg.seed = seed++;
        benchmark::DoNotOptimize(fedcurve::run(task, cfg));
    }
}
BENCHMARK(BM_SimRun)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
