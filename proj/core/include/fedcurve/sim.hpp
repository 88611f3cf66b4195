#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fedcurve/aggregate.hpp"
#include "fedcurve/curve.hpp"
#include "fedcurve/metrics.hpp"
#include "fedcurve/model.hpp"
#include "fedcurve/state.hpp"

namespace fedcurve {

enum class ServiceKind { Lognormal, Fixed };

struct ServiceModel {
    ServiceKind kind = ServiceKind::Lognormal;
    double sigma = 0.5;               // lognormal spread
    std::vector<double> fixed_times;  // per-client times in deterministic mode
};

struct SimConfig {
    int n_clients = 1;
    long total_updates = 1; // T: run ends after this many arrivals
    std::uint64_t seed = 0;
    ServiceModel service;
    std::optional<int> max_staleness; // over-stale arrivals are dropped and counted
    StrategyConfig strategy;
    CurveTrainConfig curve;
    int eval_every = 10; // evaluate at every eval_every-th version (and at the end)
    int swa_window = 0;  // 0 = no tail averaging
    std::string events_path; // JSONL event log; empty = off
};

struct SimTask {
    ModelSpec spec;
    std::vector<Dataset> train;
    std::vector<Dataset> val;
};

struct Event {
    double time = 0.0;
    std::uint64_t seq = 0; // tiebreaker, strictly increasing at insertion
    bool is_arrival = false;
    int client = 0;
    ClientUpdate update; // arrival only
};

// version gap now - origin; throws HistoryEvictedError if the origin model
// is no longer available for the correction step
int measure_staleness(const GlobalState& state, const ClientUpdate& update);

std::vector<double> client_weights(const std::vector<Dataset>& train, Weighting w);

using ModelObserver = std::function<void(long version, const ParamVector& theta)>;

// Deterministic event loop: every client trains against the snapshot it was
// dispatched with, the server applies updates strictly in (time, seq) order
// and immediately redispatches the sender. All randomness is drawn from
// per-purpose substreams of cfg.seed. On divergence the partial record is
// returned with the failure flag set.
RunRecord run(const SimTask& task, const SimConfig& cfg, const ModelObserver& observer = {});

} // namespace fedcurve
