#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedcurve/model.hpp"
#include "fedcurve/params.hpp"

namespace fedcurve {

struct RoundRow {
    long version = 0;
    double loss = 0.0;
    double acc = 0.0;
    int staleness = 0;
    double s_factor = 1.0;
};

struct ClientEval {
    int client = 0;
    double loss = 0.0;
    double acc = 0.0;
    int n_samples = 0;
};

// Per-run metrics stream plus enough config echo to reproduce the run.
struct RunRecord {
    std::string strategy_label;
    std::uint64_t seed = 0;
    bool failure = false;
    std::string failure_reason;

    std::vector<RoundRow> rounds; // sorted by version
    std::vector<ClientEval> per_client_final;
    std::map<std::string, std::string> config_echo;

    long arrivals_total = 0;
    long arrivals_applied = 0;
    long arrivals_dropped = 0;
    long step_clamps = 0;
    long scale_clamps = 0;
    long arc_fallbacks = 0;
    int max_observed_staleness = 0; // including dropped arrivals
    int max_applied_staleness = 0;

    double final_loss = 0.0;
    double final_acc = 0.0;
    std::optional<double> swa_loss;
    std::optional<double> swa_acc;

    // best global model by pooled validation accuracy (earliest round on ties)
    long best_version = 0;
    double best_acc = 0.0;
    std::vector<ClientEval> per_client_best;
};

// smallest recorded version with (1 - accuracy) <= e; nullopt if never
std::optional<long> rounds_to_error(const std::vector<RoundRow>& rounds, double e);

// exact O(N^2) double sum, normalised by the sample mean; requires mean > 0
double gini(std::span<const double> x);

// (1/(N*mean)) sum x_i ln(x_i/mean); requires every x_i > 0
double theil(std::span<const double> x);

struct EvalResult {
    double pooled_loss = 0.0;
    double pooled_acc = 0.0;
    std::vector<ClientEval> per_client;
};

// full-batch loss and accuracy per client plus the sample-weighted pool
EvalResult evaluate(const ModelSpec& spec, const ParamVector& theta,
                    const std::vector<Dataset>& datasets);

void write_run_json(const std::string& path, const RunRecord& rec);
void write_rounds_csv(const std::string& path, const RunRecord& rec);

struct StrategySummary {
    std::string label;
    int n_seeds = 0;
    double acc_mean = 0.0, acc_std = 0.0;
    double loss_mean = 0.0, loss_std = 0.0;
    double t_e_mean = 0.0, t_e_std = 0.0; // -1 mean when never reached
    double gini_mean = 0.0, gini_std = 0.0;
    double theil_mean = 0.0, theil_std = 0.0;
};

// one row per strategy, mirroring mean +/- std result tables
void write_summary_csv(const std::string& path, const std::vector<StrategySummary>& rows);

// mean and (population) standard deviation helpers for summaries
std::pair<double, double> mean_std(std::span<const double> xs);

} // namespace fedcurve
