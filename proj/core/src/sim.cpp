#include "fedcurve/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>

#include <nlohmann/json.hpp>

#include "fedcurve/errors.hpp"
#include "fedcurve/log.hpp"
#include "fedcurve/rng.hpp"

namespace fedcurve {

using json = nlohmann::ordered_json;

int measure_staleness(const GlobalState& state, const ClientUpdate& update) {
    if (update.origin_version > state.version) {
        throw ValueError("measure_staleness: origin version ahead of the server");
    }
    if (state.history.find(update.origin_version) == nullptr) {
        throw HistoryEvictedError("origin version " + std::to_string(update.origin_version) +
                                  " evicted from model history");
    }
    return static_cast<int>(state.version - update.origin_version);
}

std::vector<double> client_weights(const std::vector<Dataset>& train, Weighting w) {
    std::vector<double> weights(train.size(), 0.0);
    if (w == Weighting::Uniform) {
        std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(train.size()));
        return weights;
    }
    double total = 0.0;
    for (const auto& ds : train) total += ds.n_samples();
    for (std::size_t i = 0; i < train.size(); ++i) {
        weights[i] = static_cast<double>(train[i].n_samples()) / total;
    }
    return weights;
}

namespace {

struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.seq > b.seq;
    }
};

void validate(const SimTask& task, const SimConfig& cfg) {
    if (cfg.n_clients < 1) throw ConfigError("sim: n_clients must be >= 1");
    if (cfg.total_updates < 1) throw ConfigError("sim: total_updates must be >= 1");
    if (static_cast<int>(task.train.size()) != cfg.n_clients ||
        static_cast<int>(task.val.size()) != cfg.n_clients) {
        throw ConfigError("sim: task must provide one train and one val shard per client");
    }
    if (cfg.service.kind == ServiceKind::Fixed &&
        static_cast<int>(cfg.service.fixed_times.size()) != cfg.n_clients) {
        throw ConfigError("sim: fixed service model needs one time per client");
    }
    if (cfg.eval_every < 1) throw ConfigError("sim: eval_every must be >= 1");
    if (cfg.max_staleness && *cfg.max_staleness < 0) {
        throw ConfigError("sim: max_staleness must be >= 0");
    }
}

} // namespace

RunRecord run(const SimTask& task, const SimConfig& cfg, const ModelObserver& observer) {
    validate(task, cfg);

    Strategy strategy(cfg.strategy);

    // baselines train the far endpoint only; the curve phase is specific to
    // the curve-stepping strategy
    CurveTrainConfig curve_cfg = cfg.curve;
    if (!strategy.uses_curves()) {
        curve_cfg.k_curve = 0;
        curve_cfg.b_init = BInit::Global;
        if (curve_cfg.k_sgd < 1) {
            throw ConfigError("sim: pointwise strategies need k_sgd >= 1");
        }
    }

    const auto weights = client_weights(task.train, cfg.strategy.client_weighting);

    std::size_t history_capacity = 0; // unbounded
    if (cfg.max_staleness) {
        history_capacity = static_cast<std::size_t>(*cfg.max_staleness) + 2;
        if (cfg.swa_window > 0) {
            history_capacity = std::max(history_capacity, static_cast<std::size_t>(cfg.swa_window));
        }
    }

    GlobalState state(init_params(task.spec, cfg.seed), history_capacity, cfg.n_clients);

    // per-client scheduling streams keep service draws independent of the
    // event interleaving
    std::vector<Rng> sched;
    sched.reserve(static_cast<std::size_t>(cfg.n_clients));
    for (int c = 0; c < cfg.n_clients; ++c) {
        sched.emplace_back(substream(cfg.seed, "sched", static_cast<std::uint64_t>(c)));
    }
    double mean_size = 0.0;
    for (const auto& ds : task.train) mean_size += ds.n_samples();
    mean_size /= static_cast<double>(cfg.n_clients);
    const auto service_time = [&](int c) {
        if (cfg.service.kind == ServiceKind::Fixed) {
            return cfg.service.fixed_times[static_cast<std::size_t>(c)];
        }
        const double scale = task.train[static_cast<std::size_t>(c)].n_samples() / mean_size;
        return std::exp(cfg.service.sigma * sched[static_cast<std::size_t>(c)].normal()) * scale;
    };

    std::ofstream events_out;
    if (!cfg.events_path.empty()) {
        events_out.open(cfg.events_path);
        if (!events_out) throw ConfigError("sim: cannot write event log: " + cfg.events_path);
    }

    std::priority_queue<Event, std::vector<Event>, EventOrder> queue;
    std::uint64_t next_seq = 0;
    std::vector<long> dispatch_count(static_cast<std::size_t>(cfg.n_clients), 0);

    RunRecord rec;
    rec.strategy_label = strategy_kind_name(cfg.strategy.kind);
    rec.seed = cfg.seed;

    const auto dispatch = [&](int c, double now) {
        state.per_client_origin[static_cast<std::size_t>(c)] = state.version;
        Event ev;
        ev.time = now;
        ev.seq = next_seq++;
        ev.is_arrival = false;
        ev.client = c;
        queue.push(ev);
    };

    ParamVector best_theta = state.theta;
    bool have_best = false;
    const auto evaluate_round = [&](int staleness, double s_factor) {
        const EvalResult er = evaluate(task.spec, state.theta, task.val);
        rec.rounds.push_back({state.version, er.pooled_loss, er.pooled_acc, staleness, s_factor});
        if (!have_best || er.pooled_acc > rec.best_acc) { // strict: earliest round wins ties
            have_best = true;
            rec.best_acc = er.pooled_acc;
            rec.best_version = state.version;
            best_theta = state.theta;
        }
        return er;
    };

    for (int c = 0; c < cfg.n_clients; ++c) dispatch(c, 0.0);

    try {
        while (rec.arrivals_total < cfg.total_updates && !queue.empty()) {
            Event ev = queue.top();
            queue.pop();

            if (!ev.is_arrival) {
                const int c = ev.client;
                ModelObjective objective(task.spec, task.train[static_cast<std::size_t>(c)]);
                ClientUpdate upd;
                upd.client = c;
                upd.origin_version = state.version;
                upd.weight = weights[static_cast<std::size_t>(c)];
                upd.dispatch_time = ev.time;
                upd.v = train_curve(objective, state.theta, curve_cfg,
                                    substream(cfg.seed, "client", static_cast<std::uint64_t>(c),
                                              static_cast<std::uint64_t>(
                                                  dispatch_count[static_cast<std::size_t>(c)])));
                dispatch_count[static_cast<std::size_t>(c)]++;

                Event arrival;
                arrival.time = ev.time + service_time(c);
                arrival.seq = next_seq++;
                arrival.is_arrival = true;
                arrival.client = c;
                arrival.update = std::move(upd);
                queue.push(arrival);
                continue;
            }

            rec.arrivals_total++;
            const ClientUpdate& upd = ev.update;
            const int staleness = static_cast<int>(state.version - upd.origin_version);
            rec.max_observed_staleness = std::max(rec.max_observed_staleness, staleness);

            const bool dropped = cfg.max_staleness && staleness > *cfg.max_staleness;
            ApplyInfo info;
            if (dropped) {
                rec.arrivals_dropped++;
            } else {
                measure_staleness(state, upd); // asserts the origin model is held
                const ParamVector theta_then = *state.history.find(upd.origin_version);
                info = strategy.apply(state, upd, theta_then);
                rec.arrivals_applied++;
                rec.max_applied_staleness = std::max(rec.max_applied_staleness, staleness);
                if (info.version_advanced) {
                    if (observer) observer(state.version, state.theta);
                    if (state.version % cfg.eval_every == 0) {
                        evaluate_round(staleness, info.s_factor);
                    }
                }
            }

            if (events_out.is_open()) {
                json row;
                row["time"] = ev.time;
                row["client"] = upd.client;
                row["staleness"] = staleness;
                row["dropped"] = dropped;
                row["s_factor"] = info.s_factor;
                row["step"] = info.step;
                row["version"] = state.version;
                if (!rec.rounds.empty() && rec.rounds.back().version == state.version &&
                    info.version_advanced) {
                    row["loss"] = rec.rounds.back().loss;
                }
                events_out << row.dump() << "\n";
            }

            dispatch(ev.client, ev.time);
        }

        const ApplyInfo tail = strategy.flush_remaining(state);
        if (tail.version_advanced && observer) observer(state.version, state.theta);

        // final evaluation row (unless the last version is already recorded)
        if (rec.rounds.empty() || rec.rounds.back().version != state.version) {
            evaluate_round(0, 1.0);
        }
    } catch (const TrainingDivergedError& e) {
        rec.failure = true;
        rec.failure_reason = e.what();
    } catch (const DivergedError& e) {
        rec.failure = true;
        rec.failure_reason = e.what();
    }

    const EvalResult final_eval = evaluate(task.spec, state.theta, task.val);
    rec.per_client_final = final_eval.per_client;
    rec.final_loss = final_eval.pooled_loss;
    rec.final_acc = final_eval.pooled_acc;
    rec.per_client_best = have_best ? evaluate(task.spec, best_theta, task.val).per_client
                                    : final_eval.per_client;
    if (!have_best) {
        rec.best_version = state.version;
        rec.best_acc = final_eval.pooled_acc;
    }

    if (cfg.swa_window > 0) {
        const auto tail_models = state.history.tail(static_cast<std::size_t>(cfg.swa_window));
        if (static_cast<int>(tail_models.size()) >= cfg.swa_window) {
            const ParamVector swa = swa_tail_average(tail_models, cfg.swa_window);
            const EvalResult se = evaluate(task.spec, swa, task.val);
            rec.swa_loss = se.pooled_loss;
            rec.swa_acc = se.pooled_acc;
        } else {
            log_warn("sim: swa_window exceeds available history, skipping tail average");
        }
    }

    const auto& counters = strategy.counters();
    rec.step_clamps = counters.step_clamps;
    rec.scale_clamps = counters.scale_clamps;
    rec.arc_fallbacks = counters.arc.non_monotone_fallbacks;
    return rec;
}

} // namespace fedcurve
