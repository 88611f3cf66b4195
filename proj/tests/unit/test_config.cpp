#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fedcurve/config.hpp"
#include "fedcurve/errors.hpp"
#include "fedcurve/experiment.hpp"

using namespace fedcurve;

namespace {

const char* kSmallConfig = R"(
[experiment]
seeds = 0,1
strategies = asyncbezier, fedasync
output_dir = unused
data_seed = 42

[data]
n_classes = 3
n_features = 5
n_samples = 300
class_sep = 2.0
n_clients = 4
val_fraction = 0.25

[model]
kind = logistic

[curve]
k_sgd = 1
k_curve = 1
eta_l = 0.05
batch_size = 16

[sim]
total_updates = 24
eval_every = 6

[strategy.asyncbezier]
eta_g = 0.5
vartheta = 1.0

[strategy.fedasync]
eta_g = 1.0
)";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("ini parsing") {
    const IniDoc doc = IniDoc::parse_text("[a]\nx = 1\n# comment\ny = hello world ; tail\n[b]\n");
    CHECK(doc.sections.at("a").at("x") == "1");
    CHECK(doc.sections.at("a").at("y") == "hello world");
    CHECK(doc.sections.count("b") == 1);

    CHECK_THROWS_AS(IniDoc::parse_text("x = 1\n"), ConfigError);        // key before section
    CHECK_THROWS_AS(IniDoc::parse_text("[a\nx = 1\n"), ConfigError);    // malformed header
    CHECK_THROWS_AS(IniDoc::parse_text("[a]\njust a line\n"), ConfigError);
}

TEST_CASE("config build and validation") {
    const ExperimentConfig cfg = experiment_config_from_text(kSmallConfig);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{0, 1});
    REQUIRE(cfg.strategies.size() == 2);
    CHECK(cfg.strategies[0].label == "asyncbezier");
    CHECK(cfg.strategies[0].cfg.kind == StrategyKind::AsyncBezier);
    CHECK(cfg.strategies[0].cfg.eta_g == 0.5);
    CHECK(cfg.strategies[0].cfg.correction.kind == CorrectionKind::OrthoDC);
    CHECK(cfg.strategies[1].cfg.kind == StrategyKind::FedAsync);
    CHECK(cfg.strategies[1].cfg.eta_g == 1.0);
    CHECK(cfg.n_clients == 4);
    CHECK(cfg.curve.batch_size == 16);

    SUBCASE("unknown keys are named in the error") {
        const std::string bad = std::string(kSmallConfig) + "\n[sim]\nbogus_key = 1\n";
        CHECK_THROWS_WITH_AS(experiment_config_from_text(bad),
                             doctest::Contains("sim.bogus_key"), ConfigError);
    }
    SUBCASE("unknown sections are rejected") {
        const std::string bad = std::string(kSmallConfig) + "\n[nonsense]\nx = 1\n";
        CHECK_THROWS_WITH_AS(experiment_config_from_text(bad),
                             doctest::Contains("nonsense"), ConfigError);
    }
    SUBCASE("strategy sections must match the list") {
        const std::string bad = std::string(kSmallConfig) + "\n[strategy.fedbuff]\neta_g = 1\n";
        CHECK_THROWS_AS(experiment_config_from_text(bad), ConfigError);
    }
    SUBCASE("bad values name the key") {
        const std::string bad = std::string(kSmallConfig) + "\n[sim]\neval_every = soon\n";
        CHECK_THROWS_WITH_AS(experiment_config_from_text(bad),
                             doctest::Contains("sim.eval_every"), ConfigError);
    }
}

TEST_CASE("presets fill strategy hyperparameters") {
    const char* text = R"(
[experiment]
preset = femnist-like
seeds = 0
strategies = asyncbezier, asyncbezier-ed, fedasync, fedgs
)";
    const ExperimentConfig cfg = experiment_config_from_text(text);
    REQUIRE(cfg.strategies.size() == 4);
    CHECK(cfg.strategies[0].cfg.eta_g == 0.5);      // asyncbezier
    CHECK(cfg.strategies[0].cfg.vartheta == 1.0);
    CHECK(cfg.strategies[0].cfg.alpha == 0.0);
    CHECK(cfg.strategies[1].cfg.eta_g == 0.25);     // the -ED variant
    CHECK(cfg.strategies[1].cfg.alpha == 1.0);
    CHECK(cfg.strategies[2].cfg.eta_g == 3.0);      // fedasync
    CHECK(cfg.strategies[3].cfg.eta_g == 1.0);      // fedgs

    const char* shakespeare = R"(
[experiment]
preset = shakespeare-like
seeds = 0
strategies = asyncbezier, fedbuff
)";
    const ExperimentConfig cfg2 = experiment_config_from_text(shakespeare);
    CHECK(cfg2.strategies[0].cfg.eta_g == 1.5);
    CHECK(cfg2.strategies[0].cfg.vartheta == 0.0);
    CHECK(cfg2.strategies[1].cfg.eta_g == 2.0);

    SUBCASE("explicit keys override the preset") {
        const char* override_text = R"(
[experiment]
preset = femnist-like
seeds = 0
strategies = fedasync

[strategy.fedasync]
eta_g = 0.125
)";
        const ExperimentConfig cfg3 = experiment_config_from_text(override_text);
        CHECK(cfg3.strategies[0].cfg.eta_g == 0.125);
    }

    SUBCASE("unknown preset is rejected") {
        CHECK_THROWS_AS(
            experiment_config_from_text("[experiment]\npreset = nope\nstrategies = fedasync\n"),
            ConfigError);
    }
}

TEST_CASE("config echo survives a rebuild") {
    const ExperimentConfig cfg = experiment_config_from_text(kSmallConfig);
    const auto echo = cfg.echo();
    CHECK(echo.at("data.n_clients") == "4");
    CHECK(echo.at("strategy.asyncbezier.eta_g") == "0.5");
    CHECK(echo.at("experiment.seeds") == "0,1");
}

TEST_CASE("experiment run writes records and is byte-stable") {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "fedcurve_config_test";
    fs::remove_all(base);

    ExperimentConfig cfg = experiment_config_from_text(kSmallConfig);
    cfg.output_dir = (base / "a").string();
    const auto cells = run_experiment(cfg);
    CHECK(cells.size() == 4); // 2 strategies x 2 seeds
    CHECK_FALSE(any_failure(cells));
    CHECK(fs::exists(base / "a" / "summary.csv"));
    CHECK(fs::exists(base / "a" / "asyncbezier_seed0.json"));
    CHECK(fs::exists(base / "a" / "asyncbezier_seed0_rounds.csv"));
    CHECK(fs::exists(base / "a" / "fedasync_seed1.json"));

    cfg.output_dir = (base / "b").string();
    run_experiment(cfg);
    CHECK(read_file((base / "a" / "summary.csv").string()) ==
          read_file((base / "b" / "summary.csv").string()));
    CHECK(read_file((base / "a" / "asyncbezier_seed0_rounds.csv").string()) ==
          read_file((base / "b" / "asyncbezier_seed0_rounds.csv").string()));
    fs::remove_all(base);
}

TEST_CASE("epoch study uses the min(K,2) curve budget") {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "fedcurve_epoch_test";
    fs::remove_all(base);

    ExperimentConfig cfg = experiment_config_from_text(kSmallConfig);
    cfg.output_dir = base.string();
    cfg.total_updates = 8;
    cfg.eval_every = 4;
    cfg.seeds = {0};
    cfg.epoch_k_values = {1, 5};
    const auto cells = run_epoch_study(cfg);
    CHECK(cells.size() == 4); // 2 K values x 2 strategies x 1 seed
    CHECK(fs::exists(base / "epoch_grid.csv"));
    CHECK(fs::exists(base / "epoch_K1" / "summary.csv"));
    CHECK(fs::exists(base / "epoch_K5" / "summary.csv"));

    // the cell echo records the effective budgets
    for (const auto& cell : cells) {
        const auto k_sgd = std::stoi(cell.rec.config_echo.at("cell.k_sgd"));
        const auto k_curve = std::stoi(cell.rec.config_echo.at("cell.k_curve"));
        CHECK((k_sgd == 1 || k_sgd == 5));
        CHECK(k_curve == std::min(k_sgd, 2));
    }

    std::ifstream grid((base / "epoch_grid.csv").string());
    std::string header;
    std::getline(grid, header);
    CHECK(header == "k,asyncbezier_mean,asyncbezier_std,fedasync_mean,fedasync_std");
    fs::remove_all(base);
}

TEST_CASE("profile command output") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "fedcurve_profile_test";
    fs::create_directories(dir);

    const Dataset ds = make_synthetic(2, 3, 40, 1.5, 4);
    const std::string data_path = (dir / "data.csv").string();
    save_csv_dataset(data_path, ds);

    const ModelSpec spec{ModelKind::Logistic, 3, 2, 0, 0.0};
    const ParamVector theta(spec.param_dim(), 0.1);
    const std::string curve_path = (dir / "curve.csv").string();
    save_curve_csv(curve_path, BezierParams::point(theta));

    const std::string out_path = (dir / "profile.csv").string();
    run_profile(curve_path, data_path, ModelKind::Logistic, 0, 5, out_path);

    std::ifstream in(out_path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,bezier_loss,linear_loss");
    // point curve: both columns constant and equal
    std::string line;
    std::string first_b, first_l;
    int rows = 0;
    while (std::getline(in, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const std::string b = line.substr(c1 + 1, c2 - c1 - 1);
        const std::string l = line.substr(c2 + 1);
        CHECK(b == l);
        if (rows == 0) {
            first_b = b;
        } else {
            CHECK(b == first_b);
        }
        ++rows;
    }
    CHECK(rows == 5);

    // dimension mismatch is a config error
    const std::string short_curve = (dir / "short.csv").string();
    save_curve_csv(short_curve, BezierParams::point(ParamVector{1.0, 2.0}));
    CHECK_THROWS_AS(run_profile(short_curve, data_path, ModelKind::Logistic, 0, 5, out_path),
                    ConfigError);
    fs::remove_all(dir);
}
