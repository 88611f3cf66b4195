#pragma once

#include <string>
#include <vector>

#include "fedcurve/config.hpp"
#include "fedcurve/metrics.hpp"
#include "fedcurve/sim.hpp"

namespace fedcurve {

// The shared task for every cell of an experiment: client shards built once
// from the data seed so the same data is seen by every (strategy, seed) pair.
SimTask build_task(const ExperimentConfig& cfg);

struct CellResult {
    std::string label;
    std::uint64_t seed = 0;
    RunRecord rec;
    double gini_best = 0.0;  // over per-client accuracy of the best model
    double theil_best = 0.0; // NaN when undefined (a zero per-client accuracy)
    std::optional<long> t_e;
};

// Runs every (strategy x seed) cell, writes one RunRecord JSON and rounds CSV
// per cell plus summary.csv, and returns the cell results in grid order.
// Exit-code semantics of the callers: 0 ok, 3 if any run diverged.
std::vector<CellResult> run_experiment(const ExperimentConfig& cfg);

// K-sweep over local epoch budgets: the curve strategy trains min(K,2) curve
// epochs per round, baselines none; writes epoch_grid.csv with one row per K.
std::vector<CellResult> run_epoch_study(const ExperimentConfig& cfg);

// Writes a "t,bezier_loss,linear_loss" CSV for a stored curve against the
// straight chord between its endpoints.
void run_profile(const std::string& curve_path, const std::string& data_path,
                 ModelKind kind, int hidden_width, int n_points,
                 const std::string& out_path);

bool any_failure(const std::vector<CellResult>& cells);

} // namespace fedcurve
