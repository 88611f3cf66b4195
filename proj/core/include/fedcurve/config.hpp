#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedcurve/aggregate.hpp"
#include "fedcurve/curve.hpp"
#include "fedcurve/model.hpp"
#include "fedcurve/sim.hpp"

namespace fedcurve {

// Parsed "key = value" file with [section] headers; '#' and ';' start
// comments. Order-preserving enough for deterministic echoes via std::map.
struct IniDoc {
    std::map<std::string, std::map<std::string, std::string>> sections;

    static IniDoc parse_text(const std::string& text, const std::string& origin = "<string>");
    static IniDoc parse_file(const std::string& path);
};

enum class DataSource { Synthetic, Csv };

struct StrategyInstance {
    std::string label; // e.g. "asyncbezier-ed"
    StrategyConfig cfg;
};

struct ExperimentConfig {
    // experiment
    std::string preset;
    std::vector<std::uint64_t> seeds{0, 1, 2};
    std::vector<StrategyInstance> strategies;
    std::string output_dir = "runs";
    int workers = 1;
    std::uint64_t data_seed = 12345;
    bool events = false;
    double t_e = 0.2; // error threshold for the rounds-to-error summary column

    // data
    DataSource source = DataSource::Synthetic;
    std::string csv_path;
    int n_classes = 10;
    int n_features = 20;
    int n_samples = 12000;
    double class_sep = 2.0;
    int n_clients = 30;
    double dirichlet_alpha = 0.5;
    double val_fraction = 0.2;
    Weighting weighting = Weighting::Proportional;

    // model
    ModelKind model_kind = ModelKind::Logistic;
    int hidden_width = 16;
    double l2 = 0.0;

    // local curve training
    CurveTrainConfig curve;

    // sim
    long total_updates = 400;
    int eval_every = 10;
    ServiceModel service;
    std::optional<int> max_staleness;
    int swa_window = 0;

    // epoch study
    std::vector<int> epoch_k_values{1, 2, 5, 10};

    // flat deterministic echo of every effective value
    std::map<std::string, std::string> echo() const;
};

// Builds the effective configuration: library defaults, then the named
// preset's values, then explicit file keys. Unknown sections or keys raise
// ConfigError naming the offender.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig experiment_config_from_text(const std::string& text,
                                             const std::string& origin = "<string>");

// preset names: synth-het, femnist-like, shakespeare-like
std::vector<std::string> known_presets();

} // namespace fedcurve
