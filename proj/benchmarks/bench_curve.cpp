#include <benchmark/benchmark.h>

#include "fedcurve/curve.hpp"
#include "fedcurve/model.hpp"
#include "fedcurve/rng.hpp"

namespace {

void BM_Decasteljau(benchmark::State& state) {
    const std::size_t dim = static_cast<std::size_t>(state.range(0));
    fedcurve::Rng rng(1);
    fedcurve::BezierParams phi{fedcurve::ParamVector(dim), fedcurve::ParamVector(dim),
                               fedcurve::ParamVector(dim)};
    for (std::size_t i = 0; i < dim; ++i) {
        phi.a[i] = rng.normal();
        phi.b[i] = rng.normal();
        phi.c[i] = rng.normal();
    }
    double t = 0.0;
    for (auto _ : state) {
        t += 0.001;
        if (t > 1.0) t = 0.0;
        benchmark::DoNotOptimize(fedcurve::decasteljau(phi, t));
    }
}
BENCHMARK(BM_Decasteljau)->Arg(512)->Arg(8192);

void BM_ArcStep(benchmark::State& state) {
    const std::size_t dim = 512;
    fedcurve::Rng rng(2);
    fedcurve::ParamVector anchor(dim);
    for (auto& x : anchor.values) x = rng.normal();
    fedcurve::BezierParams psi{anchor, anchor, anchor};
    for (std::size_t i = 0; i < dim; ++i) {
        const double d = 0.5 * rng.normal();
        psi.c[i] += d;
        psi.b[i] += 0.5 * d;
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(fedcurve::arc_step(anchor, psi, 0.37));
    }
}
BENCHMARK(BM_ArcStep);

void BM_TrainCurveEpoch(benchmark::State& state) {
    const fedcurve::Dataset ds = fedcurve::make_synthetic(5, 20, 400, 2.0, 3);
    const fedcurve::ModelSpec spec{fedcurve::ModelKind::Mlp1, 20, 5, 16, 0.0};
    const fedcurve::ModelObjective obj(spec, ds);
    const fedcurve::ParamVector theta = fedcurve::init_params(spec, 4);
    fedcurve::CurveTrainConfig cfg;
    cfg.k_sgd = 1;
    cfg.k_curve = 1;
    cfg.eta_l = 0.01;
    cfg.batch_size = 32;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fedcurve::train_curve(obj, theta, cfg, seed++));
    }
}
BENCHMARK(BM_TrainCurveEpoch);

} // namespace
