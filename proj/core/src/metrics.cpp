#include "fedcurve/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fedcurve/errors.hpp"

namespace fedcurve {

using json = nlohmann::ordered_json;

std::optional<long> rounds_to_error(const std::vector<RoundRow>& rounds, double e) {
    if (!(e > 0.0 && e < 1.0)) throw RangeError("rounds_to_error: e must be in (0,1)");
    for (const auto& r : rounds) {
        if (1.0 - r.acc <= e) return r.version;
    }
    return std::nullopt;
}

double gini(std::span<const double> x) {
    if (x.empty()) throw ValueError("gini: empty sample");
    double mean = 0.0;
    for (double v : x) {
        if (v < 0.0) throw ValueError("gini: negative sample value");
        mean += v;
    }
    const auto n = static_cast<double>(x.size());
    mean /= n;
    if (mean == 0.0) throw ValueError("gini: sample mean is zero");
    double sum = 0.0;
    for (double a : x) {
        for (double b : x) sum += std::abs(a - b);
    }
    return sum / (2.0 * n * n * mean);
}

double theil(std::span<const double> x) {
    if (x.empty()) throw ValueError("theil: empty sample");
    double mean = 0.0;
    for (double v : x) {
        if (!(v > 0.0)) throw ValueError("theil: sample values must be > 0");
        mean += v;
    }
    const auto n = static_cast<double>(x.size());
    mean /= n;
    double sum = 0.0;
    for (double v : x) sum += v * std::log(v / mean);
    return sum / (n * mean);
}

EvalResult evaluate(const ModelSpec& spec, const ParamVector& theta,
                    const std::vector<Dataset>& datasets) {
    EvalResult out;
    double loss_weighted = 0.0;
    long correct = 0, total = 0;
    int client = 0;
    for (const auto& ds : datasets) {
        ClientEval ce;
        ce.client = client++;
        ce.n_samples = ds.n_samples();
        const LossEval le = loss_and_grad(spec, theta, ds);
        ce.loss = le.loss;
        long ok = 0;
        for (int i = 0; i < ds.n_samples(); ++i) {
            if (predict_class(spec, theta, ds.row(i)) == ds.labels[static_cast<std::size_t>(i)]) {
                ++ok;
            }
        }
        ce.acc = static_cast<double>(ok) / static_cast<double>(ds.n_samples());
        loss_weighted += le.loss * ds.n_samples();
        correct += ok;
        total += ds.n_samples();
        out.per_client.push_back(ce);
    }
    if (total == 0) throw ValueError("evaluate: no samples");
    out.pooled_loss = loss_weighted / static_cast<double>(total);
    out.pooled_acc = static_cast<double>(correct) / static_cast<double>(total);
    return out;
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt10(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace

void write_run_json(const std::string& path, const RunRecord& rec) {
    json j;
    j["strategy"] = rec.strategy_label;
    j["seed"] = rec.seed;
    j["failure"] = rec.failure;
    if (rec.failure) j["failure_reason"] = rec.failure_reason;
    j["config"] = rec.config_echo;
    j["arrivals"] = {{"total", rec.arrivals_total},
                     {"applied", rec.arrivals_applied},
                     {"dropped", rec.arrivals_dropped}};
    j["counters"] = {{"step_clamps", rec.step_clamps},
                     {"scale_clamps", rec.scale_clamps},
                     {"arc_fallbacks", rec.arc_fallbacks},
                     {"max_observed_staleness", rec.max_observed_staleness}};
    j["final"] = {{"loss", rec.final_loss}, {"acc", rec.final_acc}};
    if (rec.swa_acc) j["swa"] = {{"loss", *rec.swa_loss}, {"acc", *rec.swa_acc}};
    json rounds = json::array();
    for (const auto& r : rec.rounds) {
        rounds.push_back({{"version", r.version},
                          {"loss", r.loss},
                          {"acc", r.acc},
                          {"staleness", r.staleness},
                          {"s_factor", r.s_factor}});
    }
    j["rounds"] = std::move(rounds);
    const auto client_array = [](const std::vector<ClientEval>& evals) {
        json arr = json::array();
        for (const auto& c : evals) {
            arr.push_back({{"client", c.client},
                           {"loss", c.loss},
                           {"acc", c.acc},
                           {"n_samples", c.n_samples}});
        }
        return arr;
    };
    j["per_client_final"] = client_array(rec.per_client_final);
    j["best"] = {{"version", rec.best_version}, {"acc", rec.best_acc}};
    j["per_client_best"] = client_array(rec.per_client_best);

    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write run record: " + path);
    out << j.dump(2) << "\n";
}

void write_rounds_csv(const std::string& path, const RunRecord& rec) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write rounds csv: " + path);
    out << "version,loss,acc,staleness,s_factor\n";
    for (const auto& r : rec.rounds) {
        out << r.version << "," << fmt17(r.loss) << "," << fmt17(r.acc) << ","
            << r.staleness << "," << fmt17(r.s_factor) << "\n";
    }
}

void write_summary_csv(const std::string& path, const std::vector<StrategySummary>& rows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write summary csv: " + path);
    out << "strategy,seeds,acc_mean,acc_std,loss_mean,loss_std,"
           "t_e_mean,t_e_std,gini_mean,gini_std,theil_mean,theil_std\n";
    for (const auto& r : rows) {
        out << r.label << "," << r.n_seeds << "," << fmt10(r.acc_mean) << ","
            << fmt10(r.acc_std) << "," << fmt10(r.loss_mean) << "," << fmt10(r.loss_std)
            << "," << fmt10(r.t_e_mean) << "," << fmt10(r.t_e_std) << ","
            << fmt10(r.gini_mean) << "," << fmt10(r.gini_std) << "," << fmt10(r.theil_mean)
            << "," << fmt10(r.theil_std) << "\n";
    }
}

std::pair<double, double> mean_std(std::span<const double> xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double v : xs) var += (v - mean) * (v - mean);
    var /= static_cast<double>(xs.size());
    return {mean, std::sqrt(var)};
}

} // namespace fedcurve
