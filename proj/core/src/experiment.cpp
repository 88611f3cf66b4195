#include "fedcurve/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "fedcurve/errors.hpp"
#include "fedcurve/log.hpp"
#include "fedcurve/rng.hpp"
#include "fedcurve/sim.hpp"

namespace fedcurve {

namespace fs = std::filesystem;

SimTask build_task(const ExperimentConfig& cfg) {
    Dataset global;
    if (cfg.source == DataSource::Synthetic) {
        global = make_synthetic(cfg.n_classes, cfg.n_features, cfg.n_samples, cfg.class_sep,
                                cfg.data_seed);
    } else {
        global = load_csv_dataset(cfg.csv_path);
    }
    const int n_classes = 1 + *std::max_element(global.labels.begin(), global.labels.end());

    SimTask task;
    task.spec.kind = cfg.model_kind;
    task.spec.n_features = global.n_features;
    task.spec.n_classes = n_classes;
    task.spec.hidden_width = cfg.hidden_width;
    task.spec.l2 = cfg.l2;

    auto shards = cfg.n_clients == 1
                      ? std::vector<Dataset>{global}
                      : dirichlet_partition(global, cfg.n_clients, cfg.dirichlet_alpha,
                                            cfg.data_seed);
    for (std::size_t i = 0; i < shards.size(); ++i) {
        SplitDataset split =
            split_dataset(shards[i], cfg.val_fraction, substream(cfg.data_seed, "val", i));
        task.train.push_back(std::move(split.train));
        task.val.push_back(std::move(split.val));
    }
    return task;
}

namespace {

SimConfig cell_sim_config(const ExperimentConfig& cfg, const StrategyInstance& inst,
                          std::uint64_t seed, const std::string& events_path) {
    SimConfig sim;
    sim.n_clients = cfg.n_clients;
    sim.total_updates = cfg.total_updates;
    sim.seed = seed;
    sim.service = cfg.service;
    sim.max_staleness = cfg.max_staleness;
    sim.strategy = inst.cfg;
    sim.curve = cfg.curve;
    sim.eval_every = cfg.eval_every;
    sim.swa_window = cfg.swa_window;
    sim.events_path = events_path;
    return sim;
}

CellResult run_cell(const ExperimentConfig& cfg, const SimTask& task,
                    const StrategyInstance& inst, std::uint64_t seed,
                    const fs::path& out_dir) {
    const std::string stem = inst.label + "_seed" + std::to_string(seed);
    SimConfig sim = cell_sim_config(cfg, inst, seed,
                                    cfg.events ? (out_dir / (stem + "_events.jsonl")).string()
                                               : std::string{});

    CellResult cell;
    cell.label = inst.label;
    cell.seed = seed;
    cell.rec = run(task, sim);
    cell.rec.strategy_label = inst.label;
    cell.rec.config_echo = cfg.echo();
    cell.rec.config_echo["cell.strategy"] = inst.label;
    cell.rec.config_echo["cell.seed"] = std::to_string(seed);
    cell.rec.config_echo["cell.k_sgd"] = std::to_string(sim.curve.k_sgd);
    cell.rec.config_echo["cell.k_curve"] = std::to_string(sim.curve.k_curve);

    std::vector<double> best_accs;
    for (const auto& c : cell.rec.per_client_best) best_accs.push_back(c.acc);
    try {
        cell.gini_best = gini(best_accs);
    } catch (const ValueError&) {
        cell.gini_best = std::numeric_limits<double>::quiet_NaN();
    }
    try {
        cell.theil_best = theil(best_accs);
    } catch (const ValueError&) {
        cell.theil_best = std::numeric_limits<double>::quiet_NaN();
    }
    cell.t_e = rounds_to_error(cell.rec.rounds, cfg.t_e);

    write_run_json((out_dir / (stem + ".json")).string(), cell.rec);
    write_rounds_csv((out_dir / (stem + "_rounds.csv")).string(), cell.rec);
    return cell;
}

std::vector<CellResult> run_grid(const ExperimentConfig& cfg, const SimTask& task,
                                 const fs::path& out_dir) {
    struct CellSpec {
        const StrategyInstance* inst;
        std::uint64_t seed;
    };
    std::vector<CellSpec> specs;
    for (const auto& inst : cfg.strategies) {
        for (const auto seed : cfg.seeds) specs.push_back({&inst, seed});
    }

    std::vector<CellResult> cells(specs.size());
    if (cfg.workers <= 1 || specs.size() <= 1) {
        for (std::size_t i = 0; i < specs.size(); ++i) {
            cells[i] = run_cell(cfg, task, *specs[i].inst, specs[i].seed, out_dir);
        }
        return cells;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= specs.size()) return;
            try {
                cells[i] = run_cell(cfg, task, *specs[i].inst, specs[i].seed, out_dir);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(cfg.workers, static_cast<int>(specs.size()));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return cells;
}

std::vector<StrategySummary> summarise(const ExperimentConfig& cfg,
                                       const std::vector<CellResult>& cells) {
    std::vector<StrategySummary> rows;
    for (const auto& inst : cfg.strategies) {
        std::vector<double> accs, losses, t_es, ginis, theils;
        for (const auto& cell : cells) {
            if (cell.label != inst.label) continue;
            accs.push_back(cell.rec.final_acc);
            losses.push_back(cell.rec.final_loss);
            if (cell.t_e) t_es.push_back(static_cast<double>(*cell.t_e));
            if (std::isfinite(cell.gini_best)) ginis.push_back(cell.gini_best);
            if (std::isfinite(cell.theil_best)) theils.push_back(cell.theil_best);
        }
        StrategySummary row;
        row.label = inst.label;
        row.n_seeds = static_cast<int>(accs.size());
        std::tie(row.acc_mean, row.acc_std) = mean_std(accs);
        std::tie(row.loss_mean, row.loss_std) = mean_std(losses);
        if (t_es.empty()) {
            row.t_e_mean = -1.0;
            row.t_e_std = 0.0;
        } else {
            std::tie(row.t_e_mean, row.t_e_std) = mean_std(t_es);
        }
        std::tie(row.gini_mean, row.gini_std) = mean_std(ginis);
        std::tie(row.theil_mean, row.theil_std) = mean_std(theils);
        rows.push_back(row);
    }
    return rows;
}

} // namespace

std::vector<CellResult> run_experiment(const ExperimentConfig& cfg) {
    const SimTask task = build_task(cfg);
    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    auto cells = run_grid(cfg, task, out_dir);
    write_summary_csv((out_dir / "summary.csv").string(), summarise(cfg, cells));
    return cells;
}

std::vector<CellResult> run_epoch_study(const ExperimentConfig& cfg) {
    if (cfg.epoch_k_values.empty()) throw ConfigError("epoch_study.k_values must not be empty");
    const SimTask task = build_task(cfg);
    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);

    std::vector<CellResult> all;
    std::ofstream grid((out_dir / "epoch_grid.csv").string());
    if (!grid) throw ConfigError("cannot write epoch grid csv");
    grid << "k";
    for (const auto& inst : cfg.strategies) {
        grid << "," << inst.label << "_mean," << inst.label << "_std";
    }
    grid << "\n";

    for (const int k : cfg.epoch_k_values) {
        if (k < 1) throw ConfigError("epoch_study.k_values: K must be >= 1");
        ExperimentConfig sub = cfg;
        sub.curve.k_sgd = k;
        sub.curve.k_curve = std::min(k, 2); // curve budget rule; baselines train pointwise
        sub.output_dir = (out_dir / ("epoch_K" + std::to_string(k))).string();
        fs::create_directories(sub.output_dir);
        auto cells = run_grid(sub, task, sub.output_dir);
        write_summary_csv((fs::path(sub.output_dir) / "summary.csv").string(),
                          summarise(sub, cells));

        grid << k;
        char buf[40];
        for (const auto& inst : cfg.strategies) {
            std::vector<double> accs;
            for (const auto& cell : cells) {
                if (cell.label == inst.label) accs.push_back(cell.rec.final_acc);
            }
            const auto [mean, sd] = mean_std(accs);
            std::snprintf(buf, sizeof(buf), "%.10g", mean);
            grid << "," << buf;
            std::snprintf(buf, sizeof(buf), "%.10g", sd);
            grid << "," << buf;
        }
        grid << "\n";
        for (auto& c : cells) all.push_back(std::move(c));
    }
    return all;
}

void run_profile(const std::string& curve_path, const std::string& data_path,
                 ModelKind kind, int hidden_width, int n_points,
                 const std::string& out_path) {
    const BezierParams curve = load_curve_csv(curve_path);
    const Dataset data = load_csv_dataset(data_path);

    ModelSpec spec;
    spec.kind = kind;
    spec.n_features = data.n_features;
    spec.n_classes = 1 + *std::max_element(data.labels.begin(), data.labels.end());
    spec.hidden_width = hidden_width;
    if (curve.a.dim() != spec.param_dim()) {
        throw ConfigError("curve dimension " + std::to_string(curve.a.dim()) +
                          " does not match the model's parameter dimension " +
                          std::to_string(spec.param_dim()));
    }

    const ModelObjective objective(spec, data);
    const auto bezier = loss_profile(objective, curve, n_points);
    ParamVector mid(curve.a.dim());
    for (std::size_t i = 0; i < mid.dim(); ++i) mid[i] = 0.5 * (curve.a[i] + curve.c[i]);
    const auto linear = loss_profile(objective, {curve.a, mid, curve.c}, n_points);

    std::ofstream out(out_path);
    if (!out) throw ConfigError("cannot write profile csv: " + out_path);
    out << "t,bezier_loss,linear_loss\n";
    char buf[40];
    for (std::size_t i = 0; i < bezier.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", bezier[i].first);
        out << buf;
        std::snprintf(buf, sizeof(buf), "%.17g", bezier[i].second);
        out << "," << buf;
        std::snprintf(buf, sizeof(buf), "%.17g", linear[i].second);
        out << "," << buf << "\n";
    }
}

bool any_failure(const std::vector<CellResult>& cells) {
    return std::any_of(cells.begin(), cells.end(),
                       [](const CellResult& c) { return c.rec.failure; });
}

} // namespace fedcurve
