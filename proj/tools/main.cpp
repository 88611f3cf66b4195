// Experiment runner for the asynchronous federated curve-aggregation library.
//
// Subcommands:
//   run          execute every (strategy x seed) cell of a config file
//   profile      loss profile of a stored curve vs the straight chord
//   epoch-study  sweep local epoch budgets K and emit an accuracy grid
//
// Exit codes: 0 ok, 2 configuration error, 3 a run diverged.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedcurve/config.hpp"
#include "fedcurve/errors.hpp"
#include "fedcurve/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::string seeds;
    bool events = false;
    int workers = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "experiment config file")->required();
    cmd->add_option("--out", flags.out_dir, "output directory (overrides config and env)");
    cmd->add_option("--seeds", flags.seeds, "comma-separated seed list override");
    cmd->add_flag("--events", flags.events, "write a JSONL event log per run");
    cmd->add_option("--workers", flags.workers, "parallel cells (default from config)");
}

fedcurve::ExperimentConfig load_with_overrides(const CommonFlags& flags) {
    auto cfg = fedcurve::load_experiment_config(flags.config_path);
    if (!flags.out_dir.empty()) {
        cfg.output_dir = flags.out_dir;
    } else if (const char* env = std::getenv("FEDCURVE_OUT_DIR"); env && *env) {
        cfg.output_dir = env;
    }
    if (!flags.seeds.empty()) {
        cfg.seeds.clear();
        std::string tok;
        std::stringstream ss(flags.seeds);
        while (std::getline(ss, tok, ',')) {
            if (!tok.empty()) cfg.seeds.push_back(std::stoull(tok));
        }
        if (cfg.seeds.empty()) throw fedcurve::ConfigError("--seeds: no seeds given");
    }
    if (flags.events) cfg.events = true;
    if (flags.workers > 0) cfg.workers = flags.workers;
    return cfg;
}

void print_cells(const std::vector<fedcurve::CellResult>& cells) {
    for (const auto& c : cells) {
        std::cout << c.label << " seed=" << c.seed << " acc=" << c.rec.final_acc
                  << " loss=" << c.rec.final_loss
                  << (c.rec.failure ? "  [DIVERGED]" : "") << "\n";
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"asynchronous federated curve-aggregation simulator"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    auto* run_cmd = app.add_subcommand("run", "run every (strategy x seed) cell");
    add_common(run_cmd, run_flags);

    CommonFlags study_flags;
    auto* study_cmd = app.add_subcommand("epoch-study", "sweep local epoch budgets");
    add_common(study_cmd, study_flags);

    std::string curve_path, data_path, model_kind = "logistic", profile_out = "profile.csv";
    int hidden = 16, n_points = 21;
    auto* profile_cmd = app.add_subcommand("profile", "curve vs straight-line loss profile");
    profile_cmd->add_option("--curve", curve_path, "3-row CSV of control points A,B,C")
        ->required();
    profile_cmd->add_option("--data", data_path, "dataset CSV (label,f0,f1,...)")->required();
    profile_cmd->add_option("--model", model_kind, "logistic or mlp1 (default logistic)");
    profile_cmd->add_option("--hidden", hidden, "mlp1 hidden width (default 16)");
    profile_cmd->add_option("--points", n_points, "profile points (default 21)");
    profile_cmd->add_option("--out", profile_out, "output CSV (default profile.csv)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            const auto cfg = load_with_overrides(run_flags);
            const auto cells = fedcurve::run_experiment(cfg);
            print_cells(cells);
            std::cout << "summary: " << cfg.output_dir << "/summary.csv\n";
            return fedcurve::any_failure(cells) ? kExitDiverged : kExitOk;
        }
        if (study_cmd->parsed()) {
            const auto cfg = load_with_overrides(study_flags);
            const auto cells = fedcurve::run_epoch_study(cfg);
            print_cells(cells);
            std::cout << "grid: " << cfg.output_dir << "/epoch_grid.csv\n";
            return fedcurve::any_failure(cells) ? kExitDiverged : kExitOk;
        }
        if (profile_cmd->parsed()) {
            fedcurve::ModelKind kind;
            if (model_kind == "logistic") {
                kind = fedcurve::ModelKind::Logistic;
            } else if (model_kind == "mlp1") {
                kind = fedcurve::ModelKind::Mlp1;
            } else {
                throw fedcurve::ConfigError("--model: expected logistic or mlp1");
            }
            fedcurve::run_profile(curve_path, data_path, kind, hidden, n_points, profile_out);
            std::cout << "profile: " << profile_out << "\n";
            return kExitOk;
        }
    } catch (const fedcurve::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const fedcurve::ValueError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const fedcurve::DivergedError& e) {
        std::cerr << "diverged: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
