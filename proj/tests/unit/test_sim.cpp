#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "fedcurve/errors.hpp"
#include "fedcurve/rng.hpp"
#include "fedcurve/sim.hpp"
#include "test_support.hpp"

using namespace fedcurve;

namespace {

SimTask small_task(int n_clients, int per_client = 40, std::uint64_t seed = 3) {
    const Dataset global = make_synthetic(3, 4, n_clients * per_client, 1.5, seed);
    SimTask task;
    task.spec = ModelSpec{ModelKind::Logistic, 4, 3, 0, 0.0};
    auto shards = n_clients == 1 ? std::vector<Dataset>{global}
                                 : dirichlet_partition(global, n_clients, 0.5, seed);
    for (std::size_t i = 0; i < shards.size(); ++i) {
        auto split = split_dataset(shards[i], 0.25, substream(seed, "val", i));
        task.train.push_back(std::move(split.train));
        task.val.push_back(std::move(split.val));
    }
    return task;
}

SimConfig base_config(int n_clients, long total) {
    SimConfig cfg;
    cfg.n_clients = n_clients;
    cfg.total_updates = total;
    cfg.seed = 0;
    cfg.strategy.kind = StrategyKind::FedAsync;
    cfg.strategy.eta_g = 0.5;
    cfg.curve.k_sgd = 1;
    cfg.curve.k_curve = 0;
    cfg.curve.eta_l = 0.05;
    cfg.curve.batch_size = 8;
    cfg.eval_every = 5;
    return cfg;
}

} // namespace

TEST_CASE("client weights") {
    Dataset a, b;
    a.n_features = b.n_features = 1;
    a.features = {0, 0, 0};
    a.labels = {0, 0, 0};
    b.features = {0};
    b.labels = {0};
    const std::vector<Dataset> train{a, b};
    const auto uniform = client_weights(train, Weighting::Uniform);
    CHECK(uniform[0] == doctest::Approx(0.5));
    CHECK(uniform[1] == doctest::Approx(0.5));
    const auto prop = client_weights(train, Weighting::Proportional);
    CHECK(prop[0] == doctest::Approx(0.75));
    CHECK(prop[1] == doctest::Approx(0.25));
}

TEST_CASE("single client never observes staleness") {
    const SimTask task = small_task(1);
    SimConfig cfg = base_config(1, 20);
    cfg.events_path.clear();
    std::vector<long> versions;
    const RunRecord rec = run(task, cfg, [&](long v, const ParamVector&) {
        versions.push_back(v);
    });
    CHECK_FALSE(rec.failure);
    CHECK(rec.arrivals_total == 20);
    CHECK(rec.arrivals_applied == 20);
    CHECK(rec.max_observed_staleness == 0);
    CHECK(versions.size() == 20);
    for (const auto& row : rec.rounds) CHECK(row.staleness == 0);
}

TEST_CASE("reruns are identical") {
    const SimTask task = small_task(3);
    SimConfig cfg = base_config(3, 30);
    cfg.strategy.kind = StrategyKind::AsyncBezier;
    cfg.strategy.eta_g = 0.5;
    cfg.strategy.correction.kind = CorrectionKind::OrthoDC;
    cfg.curve.k_curve = 1;
    cfg.seed = 12;

    std::vector<double> trace_a, trace_b;
    const RunRecord a = run(task, cfg, [&](long, const ParamVector& t) {
        trace_a.insert(trace_a.end(), t.values.begin(), t.values.end());
    });
    const RunRecord b = run(task, cfg, [&](long, const ParamVector& t) {
        trace_b.insert(trace_b.end(), t.values.begin(), t.values.end());
    });
    CHECK(trace_a == trace_b); // bitwise
    REQUIRE(a.rounds.size() == b.rounds.size());
    for (std::size_t i = 0; i < a.rounds.size(); ++i) {
        CHECK(a.rounds[i].loss == b.rounds[i].loss);
        CHECK(a.rounds[i].acc == b.rounds[i].acc);
    }
    CHECK(a.final_acc == b.final_acc);
}

TEST_CASE("two fixed-rate clients interleave as expected") {
    const SimTask task = small_task(2);
    SimConfig cfg = base_config(2, 6);
    cfg.service.kind = ServiceKind::Fixed;
    cfg.service.fixed_times = {1.0, 2.9};

    struct Arrival {
        int client;
        int staleness;
    };
    std::vector<Arrival> arrivals;
    SimConfig probe = cfg;
    // reconstruct the arrival order from the event log
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "fedcurve_sim_events";
    fs::create_directories(dir);
    probe.events_path = (dir / "events.jsonl").string();
    const RunRecord rec = run(task, probe);
    CHECK_FALSE(rec.failure);

    std::ifstream in(probe.events_path);
    std::string line;
    while (std::getline(in, line)) {
        const auto cpos = line.find("\"client\":");
        const auto spos = line.find("\"staleness\":");
        REQUIRE(cpos != std::string::npos);
        REQUIRE(spos != std::string::npos);
        arrivals.push_back({std::stoi(line.substr(cpos + 9)),
                            std::stoi(line.substr(spos + 12))});
    }
    fs::remove_all(dir);

    REQUIRE(arrivals.size() == 6);
    // A at t=1,2 then B at t=2.9 (staleness 2), then A at 3, 4, ...
    CHECK(arrivals[0].client == 0);
    CHECK(arrivals[0].staleness == 0);
    CHECK(arrivals[1].client == 0);
    CHECK(arrivals[2].client == 1);
    CHECK(arrivals[2].staleness == 2);
    CHECK(arrivals[3].client == 0);
}

TEST_CASE("measure_staleness") {
    GlobalState state(ParamVector{0.0}, 0, 1);
    ClientUpdate u;
    u.origin_version = 0;
    CHECK(measure_staleness(state, u) == 0);

    state.version = 3;
    state.history.push(3, state.theta);
    CHECK(measure_staleness(state, u) == 3);

    GlobalState bounded(ParamVector{0.0}, 2, 1);
    bounded.history.push(1, bounded.theta);
    bounded.history.push(2, bounded.theta); // version 0 evicted (capacity 2)
    bounded.version = 2;
    ClientUpdate old;
    old.origin_version = 0;
    CHECK_THROWS_AS(measure_staleness(bounded, old), HistoryEvictedError);
}

TEST_CASE("bounded staleness drops and counts over-stale arrivals") {
    const SimTask task = small_task(3);
    SimConfig cfg = base_config(3, 40);
    cfg.service.kind = ServiceKind::Fixed;
    cfg.service.fixed_times = {1.0, 1.0, 7.0}; // the third client is always over-stale
    cfg.max_staleness = 5;
    const RunRecord rec = run(task, cfg);
    CHECK_FALSE(rec.failure);
    CHECK(rec.arrivals_dropped > 0);
    CHECK(rec.arrivals_applied + rec.arrivals_dropped == rec.arrivals_total);
    CHECK(rec.arrivals_total == 40);
}

TEST_CASE("every client keeps participating") {
    const SimTask task = small_task(4);
    SimConfig cfg = base_config(4, 40);
    cfg.service.sigma = 0.3;
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "fedcurve_sim_liveness";
    fs::create_directories(dir);
    cfg.events_path = (dir / "events.jsonl").string();
    const RunRecord rec = run(task, cfg);
    CHECK_FALSE(rec.failure);

    std::vector<int> arrivals_per_client(4, 0);
    std::ifstream in(cfg.events_path);
    std::string line;
    while (std::getline(in, line)) {
        const auto cpos = line.find("\"client\":");
        arrivals_per_client[static_cast<std::size_t>(std::stoi(line.substr(cpos + 9)))]++;
    }
    fs::remove_all(dir);
    for (int c = 0; c < 4; ++c) CHECK(arrivals_per_client[static_cast<std::size_t>(c)] >= 1);
}

TEST_CASE("diverged runs persist a partial record with the failure flag") {
    SimTask task = small_task(2);
    task.spec.l2 = 0.5; // multiplicative growth under an absurd step size
    SimConfig cfg = base_config(2, 30);
    cfg.curve.eta_l = 1e9;
    const RunRecord rec = run(task, cfg);
    CHECK(rec.failure);
    CHECK_FALSE(rec.failure_reason.empty());
}

TEST_CASE("swa window evaluates the tail mean") {
    const SimTask task = small_task(2);
    SimConfig cfg = base_config(2, 15);
    cfg.swa_window = 5;
    const RunRecord rec = run(task, cfg);
    CHECK_FALSE(rec.failure);
    REQUIRE(rec.swa_acc.has_value());
    CHECK(*rec.swa_acc >= 0.0);
    CHECK(*rec.swa_acc <= 1.0);
}

TEST_CASE("sim config validation") {
    const SimTask task = small_task(2);
    SimConfig cfg = base_config(2, 10);
    cfg.n_clients = 3; // does not match the task
    CHECK_THROWS_AS(run(task, cfg), ConfigError);

    SimConfig fixed = base_config(2, 10);
    fixed.service.kind = ServiceKind::Fixed;
    fixed.service.fixed_times = {1.0}; // wrong arity
    CHECK_THROWS_AS(run(task, fixed), ConfigError);

    SimConfig pointless = base_config(2, 10);
    pointless.curve.k_sgd = 0;
    pointless.curve.k_curve = 3; // curve epochs are dropped for fedasync
    CHECK_THROWS_AS(run(task, pointless), ConfigError);
}
