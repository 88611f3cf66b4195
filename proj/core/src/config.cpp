#include "fedcurve/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "fedcurve/errors.hpp"

namespace fedcurve {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

std::string fmtd(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

IniDoc IniDoc::parse_text(const std::string& text, const std::string& origin) {
    IniDoc doc;
    std::stringstream ss(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
            }
            doc.sections[section]; // ensure presence even if empty
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        if (section.empty()) {
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": key outside of any [section]");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        }
        doc.sections[section][key] = trim(line.substr(eq + 1));
    }
    return doc;
}

IniDoc IniDoc::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), path);
}

std::vector<std::string> known_presets() {
    return {"synth-het", "femnist-like", "shakespeare-like"};
}

namespace {

// global learning rates per method from the reference experiment tables,
// plus the matching orthodc threshold
IniDoc preset_overlay(const std::string& name) {
    IniDoc doc;
    const auto set_strategy_etas = [&doc](double fedasync, double fedortho, double fedgs,
                                          double dcasgd, double fedbuff, double bezier,
                                          double bezier_ed, double vartheta) {
        doc.sections["strategy.fedasync"]["eta_g"] = fmtd(fedasync);
        doc.sections["strategy.fedortho"]["eta_g"] = fmtd(fedortho);
        doc.sections["strategy.fedgs"]["eta_g"] = fmtd(fedgs);
        doc.sections["strategy.dcasgd"]["eta_g"] = fmtd(dcasgd);
        doc.sections["strategy.fedbuff"]["eta_g"] = fmtd(fedbuff);
        doc.sections["strategy.asyncbezier"]["eta_g"] = fmtd(bezier);
        doc.sections["strategy.asyncbezier-ed"]["eta_g"] = fmtd(bezier_ed);
        doc.sections["strategy.asyncbezier"]["vartheta"] = fmtd(vartheta);
        doc.sections["strategy.asyncbezier-ed"]["vartheta"] = fmtd(vartheta);
    };
    if (name == "femnist-like" || name == "synth-het") {
        set_strategy_etas(3.0, 3.0, 1.0, 1.0, 1.0, 0.5, 0.25, 1.0);
    } else if (name == "shakespeare-like") {
        set_strategy_etas(5.0, 5.0, 2.5, 2.5, 2.0, 1.5, 1.0, 0.0);
    } else {
        throw ConfigError("unknown preset: " + name + " (known: synth-het, femnist-like, "
                          "shakespeare-like)");
    }
    if (name == "synth-het") {
        // heterogeneous desk-scale task
        auto& data = doc.sections["data"];
        data["n_classes"] = "10";
        data["n_features"] = "20";
        data["n_samples"] = "12000";
        data["class_sep"] = "2";
        data["n_clients"] = "30";
        data["dirichlet_alpha"] = "0.5";
        auto& model = doc.sections["model"];
        model["kind"] = "mlp1";
        model["hidden_width"] = "16";
        auto& curve = doc.sections["curve"];
        curve["k_sgd"] = "2";
        curve["k_curve"] = "2";
        curve["eta_l"] = "0.05";
        auto& sim = doc.sections["sim"];
        sim["total_updates"] = "400";
        sim["sigma"] = "0.5";
        sim["eval_every"] = "10";
    }
    return doc;
}

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"experiment",
         {"preset", "seeds", "strategies", "output_dir", "workers", "data_seed", "events",
          "t_e"}},
        {"data",
         {"source", "csv_path", "n_classes", "n_features", "n_samples", "class_sep",
          "n_clients", "dirichlet_alpha", "val_fraction", "weighting"}},
        {"model", {"kind", "hidden_width", "l2"}},
        {"curve",
         {"k_sgd", "k_curve", "mu", "eta_l", "b_init", "batch_size",
          "samples_per_batch_draw", "optimizer"}},
        {"sim",
         {"total_updates", "eval_every", "service_time", "sigma", "fixed_times",
          "max_staleness", "swa_window"}},
        {"epoch_study", {"k_values"}},
    };
    return s;
}

const std::set<std::string>& strategy_keys() {
    static const std::set<std::string> s = {"eta_g",   "alpha",    "vartheta", "correction",
                                            "lambda0", "adaptive", "per_block", "buffer_k"};
    return s;
}

// layered raw-value lookup: file first, then preset overlay
class Lookup {
public:
    Lookup(const IniDoc& file, IniDoc preset) : file_(file), preset_(std::move(preset)) {}

    std::optional<std::string> raw(const std::string& section, const std::string& key) const {
        for (const IniDoc* doc : {&file_, &preset_}) {
            auto sit = doc->sections.find(section);
            if (sit == doc->sections.end()) continue;
            auto kit = sit->second.find(key);
            if (kit != sit->second.end()) return kit->second;
        }
        return std::nullopt;
    }

    std::string get_str(const std::string& sec, const std::string& key,
                        const std::string& def) const {
        auto v = raw(sec, key);
        return v ? *v : def;
    }

    double get_double(const std::string& sec, const std::string& key, double def) const {
        auto v = raw(sec, key);
        if (!v) return def;
        try {
            std::size_t pos = 0;
            const double x = std::stod(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("");
            return x;
        } catch (...) {
            throw ConfigError(sec + "." + key + ": cannot parse '" + *v + "' as a real");
        }
    }

    long get_long(const std::string& sec, const std::string& key, long def) const {
        auto v = raw(sec, key);
        if (!v) return def;
        try {
            std::size_t pos = 0;
            const long x = std::stol(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("");
            return x;
        } catch (...) {
            throw ConfigError(sec + "." + key + ": cannot parse '" + *v + "' as an integer");
        }
    }

    int get_int(const std::string& sec, const std::string& key, int def) const {
        return static_cast<int>(get_long(sec, key, def));
    }

    bool get_bool(const std::string& sec, const std::string& key, bool def) const {
        auto v = raw(sec, key);
        if (!v) return def;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw ConfigError(sec + "." + key + ": cannot parse '" + *v + "' as a boolean");
    }

private:
    const IniDoc& file_;
    IniDoc preset_;
};

void validate_schema(const IniDoc& doc, const std::vector<std::string>& strategy_labels) {
    for (const auto& [section, keys] : doc.sections) {
        if (section.rfind("strategy.", 0) == 0) {
            const std::string label = section.substr(9);
            if (std::find(strategy_labels.begin(), strategy_labels.end(), label) ==
                strategy_labels.end()) {
                throw ConfigError("config section [" + section +
                                  "] does not match any listed strategy");
            }
            for (const auto& [key, value] : keys) {
                (void)value;
                if (!strategy_keys().count(key)) {
                    throw ConfigError("unknown config key: " + section + "." + key);
                }
            }
            continue;
        }
        auto sit = schema().find(section);
        if (sit == schema().end()) throw ConfigError("unknown config section: [" + section + "]");
        for (const auto& [key, value] : keys) {
            (void)value;
            if (!sit->second.count(key)) {
                throw ConfigError("unknown config key: " + section + "." + key);
            }
        }
    }
}

StrategyInstance build_strategy(const std::string& label, const Lookup& lk, double default_t_e) {
    (void)default_t_e;
    StrategyInstance inst;
    inst.label = label;
    inst.cfg.kind = parse_strategy_kind(label);
    const std::string sec = "strategy." + label;

    inst.cfg.eta_g = lk.get_double(sec, "eta_g", 1.0);
    inst.cfg.alpha = lk.get_double(sec, "alpha", label == "asyncbezier-ed" ? 1.0 : 0.0);
    inst.cfg.vartheta = lk.get_double(sec, "vartheta", 1.0);
    inst.cfg.buffer_k = lk.get_int(sec, "buffer_k", 10);

    const std::string corr = lk.get_str(
        sec, "correction", inst.cfg.kind == StrategyKind::AsyncBezier ? "orthodc" : "identity");
    if (corr == "orthodc") {
        inst.cfg.correction.kind = CorrectionKind::OrthoDC;
    } else if (corr == "identity") {
        inst.cfg.correction.kind = CorrectionKind::Identity;
    } else if (corr == "dcasgd") {
        inst.cfg.correction.kind = CorrectionKind::DcAsgd;
    } else {
        throw ConfigError(sec + ".correction: unknown rule '" + corr + "'");
    }
    if (inst.cfg.kind == StrategyKind::DcAsgd) inst.cfg.correction.kind = CorrectionKind::DcAsgd;
    inst.cfg.correction.vartheta = inst.cfg.vartheta;
    inst.cfg.correction.lambda0 = lk.get_double(sec, "lambda0", 2.0);
    inst.cfg.correction.adaptive = lk.get_bool(sec, "adaptive", false);
    inst.cfg.correction.per_block = lk.get_bool(sec, "per_block", false);
    return inst;
}

ExperimentConfig build(const IniDoc& file, const std::string& origin) {
    (void)origin;
    ExperimentConfig cfg;

    // the preset key must be read before the layered lookup exists
    if (auto sit = file.sections.find("experiment"); sit != file.sections.end()) {
        if (auto kit = sit->second.find("preset"); kit != sit->second.end()) {
            cfg.preset = kit->second;
        }
    }
    IniDoc preset;
    if (!cfg.preset.empty()) preset = preset_overlay(cfg.preset);
    const Lookup lk(file, preset);

    const auto strategy_tokens = split_list(lk.get_str("experiment", "strategies",
                                                       "asyncbezier,fedasync"));
    if (strategy_tokens.empty()) throw ConfigError("experiment.strategies: need at least one");
    validate_schema(file, strategy_tokens);

    // experiment
    cfg.output_dir = lk.get_str("experiment", "output_dir", "runs");
    cfg.workers = lk.get_int("experiment", "workers", 1);
    if (cfg.workers < 1) throw ConfigError("experiment.workers must be >= 1");
    cfg.data_seed = static_cast<std::uint64_t>(lk.get_long("experiment", "data_seed", 12345));
    cfg.events = lk.get_bool("experiment", "events", false);
    cfg.t_e = lk.get_double("experiment", "t_e", 0.2);
    cfg.seeds.clear();
    for (const auto& tok : split_list(lk.get_str("experiment", "seeds", "0,1,2"))) {
        try {
            cfg.seeds.push_back(std::stoull(tok));
        } catch (...) {
            throw ConfigError("experiment.seeds: cannot parse '" + tok + "'");
        }
    }
    if (cfg.seeds.empty()) throw ConfigError("experiment.seeds: need at least one seed");

    // data
    const std::string source = lk.get_str("data", "source", "synthetic");
    if (source == "synthetic") {
        cfg.source = DataSource::Synthetic;
    } else if (source == "csv") {
        cfg.source = DataSource::Csv;
    } else {
        throw ConfigError("data.source: expected synthetic or csv, got '" + source + "'");
    }
    cfg.csv_path = lk.get_str("data", "csv_path", "");
    if (cfg.source == DataSource::Csv && cfg.csv_path.empty()) {
        throw ConfigError("data.csv_path required when data.source = csv");
    }
    cfg.n_classes = lk.get_int("data", "n_classes", 10);
    cfg.n_features = lk.get_int("data", "n_features", 20);
    cfg.n_samples = lk.get_int("data", "n_samples", 12000);
    cfg.class_sep = lk.get_double("data", "class_sep", 2.0);
    cfg.n_clients = lk.get_int("data", "n_clients", 30);
    cfg.dirichlet_alpha = lk.get_double("data", "dirichlet_alpha", 0.5);
    cfg.val_fraction = lk.get_double("data", "val_fraction", 0.2);
    const std::string weighting = lk.get_str("data", "weighting", "proportional");
    if (weighting == "proportional") {
        cfg.weighting = Weighting::Proportional;
    } else if (weighting == "uniform") {
        cfg.weighting = Weighting::Uniform;
    } else {
        throw ConfigError("data.weighting: expected proportional or uniform");
    }

    // model
    const std::string kind = lk.get_str("model", "kind", "logistic");
    if (kind == "logistic") {
        cfg.model_kind = ModelKind::Logistic;
    } else if (kind == "mlp1") {
        cfg.model_kind = ModelKind::Mlp1;
    } else {
        throw ConfigError("model.kind: expected logistic or mlp1, got '" + kind + "'");
    }
    cfg.hidden_width = lk.get_int("model", "hidden_width", 16);
    cfg.l2 = lk.get_double("model", "l2", 0.0);

    // curve
    cfg.curve.k_sgd = lk.get_int("curve", "k_sgd", 2);
    cfg.curve.k_curve = lk.get_int("curve", "k_curve", 2);
    cfg.curve.mu = lk.get_double("curve", "mu", 0.001);
    cfg.curve.eta_l = lk.get_double("curve", "eta_l", 0.001);
    const std::string b_init = lk.get_str("curve", "b_init", "midpoint");
    if (b_init == "midpoint") {
        cfg.curve.b_init = BInit::Midpoint;
    } else if (b_init == "global") {
        cfg.curve.b_init = BInit::Global;
    } else {
        throw ConfigError("curve.b_init: expected midpoint or global");
    }
    cfg.curve.batch_size = lk.get_int("curve", "batch_size", 32);
    cfg.curve.samples_per_batch_draw = lk.get_int("curve", "samples_per_batch_draw", 1);
    const std::string opt = lk.get_str("curve", "optimizer", "sgd");
    if (opt == "sgd") {
        cfg.curve.optimizer = LocalOptimizer::Sgd;
    } else if (opt == "adam") {
        cfg.curve.optimizer = LocalOptimizer::Adam;
    } else {
        throw ConfigError("curve.optimizer: expected sgd or adam");
    }

    // sim
    cfg.total_updates = lk.get_long("sim", "total_updates", 400);
    cfg.eval_every = lk.get_int("sim", "eval_every", 10);
    const std::string service = lk.get_str("sim", "service_time", "lognormal");
    if (service == "lognormal") {
        cfg.service.kind = ServiceKind::Lognormal;
    } else if (service == "fixed") {
        cfg.service.kind = ServiceKind::Fixed;
    } else {
        throw ConfigError("sim.service_time: expected lognormal or fixed");
    }
    cfg.service.sigma = lk.get_double("sim", "sigma", 0.5);
    cfg.service.fixed_times.clear();
    for (const auto& tok : split_list(lk.get_str("sim", "fixed_times", ""))) {
        try {
            cfg.service.fixed_times.push_back(std::stod(tok));
        } catch (...) {
            throw ConfigError("sim.fixed_times: cannot parse '" + tok + "'");
        }
    }
    const std::string max_stale = lk.get_str("sim", "max_staleness", "");
    if (!max_stale.empty()) {
        try {
            cfg.max_staleness = std::stoi(max_stale);
        } catch (...) {
            throw ConfigError("sim.max_staleness: cannot parse '" + max_stale + "'");
        }
    }
    cfg.swa_window = lk.get_int("sim", "swa_window", 0);

    // epoch study
    cfg.epoch_k_values.clear();
    for (const auto& tok : split_list(lk.get_str("epoch_study", "k_values", "1,2,5,10"))) {
        try {
            cfg.epoch_k_values.push_back(std::stoi(tok));
        } catch (...) {
            throw ConfigError("epoch_study.k_values: cannot parse '" + tok + "'");
        }
    }

    // strategies (after scalar fields so weighting can be propagated)
    for (const auto& label : strategy_tokens) {
        StrategyInstance inst = build_strategy(label, lk, cfg.t_e);
        inst.cfg.client_weighting = cfg.weighting;
        cfg.strategies.push_back(std::move(inst));
    }
    return cfg;
}

} // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    return build(IniDoc::parse_file(path), path);
}

ExperimentConfig experiment_config_from_text(const std::string& text, const std::string& origin) {
    return build(IniDoc::parse_text(text, origin), origin);
}

std::map<std::string, std::string> ExperimentConfig::echo() const {
    std::map<std::string, std::string> e;
    e["experiment.preset"] = preset;
    {
        std::string s;
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            s += (i ? "," : "") + std::to_string(seeds[i]);
        }
        e["experiment.seeds"] = s;
    }
    {
        std::string s;
        for (std::size_t i = 0; i < strategies.size(); ++i) {
            s += (i ? "," : "") + strategies[i].label;
        }
        e["experiment.strategies"] = s;
    }
    e["experiment.output_dir"] = output_dir;
    e["experiment.workers"] = std::to_string(workers);
    e["experiment.data_seed"] = std::to_string(data_seed);
    e["experiment.events"] = events ? "true" : "false";
    e["experiment.t_e"] = fmtd(t_e);

    e["data.source"] = source == DataSource::Synthetic ? "synthetic" : "csv";
    if (!csv_path.empty()) e["data.csv_path"] = csv_path;
    e["data.n_classes"] = std::to_string(n_classes);
    e["data.n_features"] = std::to_string(n_features);
    e["data.n_samples"] = std::to_string(n_samples);
    e["data.class_sep"] = fmtd(class_sep);
    e["data.n_clients"] = std::to_string(n_clients);
    e["data.dirichlet_alpha"] = fmtd(dirichlet_alpha);
    e["data.val_fraction"] = fmtd(val_fraction);
    e["data.weighting"] = weighting == Weighting::Proportional ? "proportional" : "uniform";

    e["model.kind"] = model_kind == ModelKind::Logistic ? "logistic" : "mlp1";
    e["model.hidden_width"] = std::to_string(hidden_width);
    e["model.l2"] = fmtd(l2);

    e["curve.k_sgd"] = std::to_string(curve.k_sgd);
    e["curve.k_curve"] = std::to_string(curve.k_curve);
    e["curve.mu"] = fmtd(curve.mu);
    e["curve.eta_l"] = fmtd(curve.eta_l);
    e["curve.b_init"] = curve.b_init == BInit::Midpoint ? "midpoint" : "global";
    e["curve.batch_size"] = std::to_string(curve.batch_size);
    e["curve.samples_per_batch_draw"] = std::to_string(curve.samples_per_batch_draw);
    e["curve.optimizer"] = curve.optimizer == LocalOptimizer::Sgd ? "sgd" : "adam";

    e["sim.total_updates"] = std::to_string(total_updates);
    e["sim.eval_every"] = std::to_string(eval_every);
    e["sim.service_time"] = service.kind == ServiceKind::Lognormal ? "lognormal" : "fixed";
    e["sim.sigma"] = fmtd(service.sigma);
    if (!service.fixed_times.empty()) {
        std::string s;
        for (std::size_t i = 0; i < service.fixed_times.size(); ++i) {
            s += (i ? "," : "") + fmtd(service.fixed_times[i]);
        }
        e["sim.fixed_times"] = s;
    }
    if (max_staleness) e["sim.max_staleness"] = std::to_string(*max_staleness);
    e["sim.swa_window"] = std::to_string(swa_window);

    for (const auto& inst : strategies) {
        const std::string p = "strategy." + inst.label + ".";
        e[p + "eta_g"] = fmtd(inst.cfg.eta_g);
        e[p + "alpha"] = fmtd(inst.cfg.alpha);
        e[p + "vartheta"] = fmtd(inst.cfg.vartheta);
        e[p + "buffer_k"] = std::to_string(inst.cfg.buffer_k);
        switch (inst.cfg.correction.kind) {
            case CorrectionKind::Identity: e[p + "correction"] = "identity"; break;
            case CorrectionKind::OrthoDC: e[p + "correction"] = "orthodc"; break;
            case CorrectionKind::DcAsgd: e[p + "correction"] = "dcasgd"; break;
        }
        e[p + "lambda0"] = fmtd(inst.cfg.correction.lambda0);
        e[p + "adaptive"] = inst.cfg.correction.adaptive ? "true" : "false";
        e[p + "per_block"] = inst.cfg.correction.per_block ? "true" : "false";
    }
    return e;
}

} // namespace fedcurve
