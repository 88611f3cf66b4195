#include "fedcurve/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fedcurve/errors.hpp"
#include "fedcurve/rng.hpp"

namespace fedcurve {

namespace {

// parameter layout offsets
struct Layout {
    // logistic: W (C x F) then b (C)
    // mlp1:     W1 (H x F), b1 (H), W2 (C x H), b2 (C)
    std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, total = 0;
};

Layout layout_of(const ModelSpec& s) {
    Layout l;
    const auto F = static_cast<std::size_t>(s.n_features);
    const auto C = static_cast<std::size_t>(s.n_classes);
    if (s.kind == ModelKind::Logistic) {
        l.w1 = 0;
        l.b1 = C * F;
        l.total = C * F + C;
    } else {
        const auto H = static_cast<std::size_t>(s.hidden_width);
        l.w1 = 0;
        l.b1 = H * F;
        l.w2 = l.b1 + H;
        l.b2 = l.w2 + C * H;
        l.total = l.b2 + C;
    }
    return l;
}

void validate_spec(const ModelSpec& s) {
    if (s.n_features < 1 || s.n_classes < 2) {
        throw ValueError("model spec needs n_features >= 1 and n_classes >= 2");
    }
    if (s.kind == ModelKind::Mlp1 && s.hidden_width < 1) {
        throw ValueError("mlp1 needs hidden_width >= 1");
    }
    if (s.l2 < 0.0) throw ValueError("l2 coefficient must be >= 0");
}

// softmax cross-entropy on precomputed logits; returns loss, fills probs
double softmax_ce(std::vector<double>& logits, int label, std::vector<double>& probs) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    probs.resize(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) {
        probs[c] = std::exp(logits[c] - m);
        z += probs[c];
    }
    for (auto& p : probs) p /= z;
    return -(logits[static_cast<std::size_t>(label)] - m - std::log(z));
}

} // namespace

std::size_t ModelSpec::param_dim() const {
    validate_spec(*this);
    return layout_of(*this).total;
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    const Layout l = layout_of(spec);
    ParamVector theta(l.total, 0.0);
    if (spec.kind == ModelKind::Mlp1) {
        Rng rng(substream(seed, "init"));
        const double bound1 = 1.0 / std::sqrt(static_cast<double>(spec.n_features));
        const double bound2 = 1.0 / std::sqrt(static_cast<double>(spec.hidden_width));
        for (std::size_t i = l.w1; i < l.b1; ++i) theta[i] = (2.0 * rng.uniform() - 1.0) * bound1;
        for (std::size_t i = l.w2; i < l.b2; ++i) theta[i] = (2.0 * rng.uniform() - 1.0) * bound2;
    }
    return theta;
}

LossEval loss_and_grad(const ModelSpec& spec, const ParamVector& theta,
                       const Dataset& data, std::span<const int> batch) {
    validate_spec(spec);
    const Layout l = layout_of(spec);
    if (theta.dim() != l.total) {
        throw DimensionError("theta dim " + std::to_string(theta.dim()) +
                             " does not match model dim " + std::to_string(l.total));
    }
    if (data.n_features != spec.n_features) {
        throw DimensionError("dataset feature width does not match model spec");
    }
    if (batch.empty()) throw ValueError("loss_and_grad: empty batch");

    const auto F = static_cast<std::size_t>(spec.n_features);
    const auto C = static_cast<std::size_t>(spec.n_classes);
    const auto H = static_cast<std::size_t>(spec.hidden_width);

    LossEval out;
    out.gradient = ParamVector(l.total, 0.0);
    out.n_samples_used = static_cast<int>(batch.size());

    std::vector<double> logits(C), probs(C), hidden, pre;
    if (spec.kind == ModelKind::Mlp1) {
        hidden.resize(H);
        pre.resize(H);
    }

    double loss_sum = 0.0;
    for (int idx : batch) {
        if (idx < 0 || idx >= data.n_samples()) throw ValueError("batch index out of range");
        const auto x = data.row(idx);
        const int y = data.labels[static_cast<std::size_t>(idx)];
        if (y < 0 || y >= spec.n_classes) throw ValueError("label out of range");

        if (spec.kind == ModelKind::Logistic) {
            for (std::size_t c = 0; c < C; ++c) {
                double s = theta[l.b1 + c];
                const double* w = &theta.values[l.w1 + c * F];
                for (std::size_t f = 0; f < F; ++f) s += w[f] * x[f];
                logits[c] = s;
            }
            loss_sum += softmax_ce(logits, y, probs);
            for (std::size_t c = 0; c < C; ++c) {
                const double d = probs[c] - (static_cast<int>(c) == y ? 1.0 : 0.0);
                double* gw = &out.gradient.values[l.w1 + c * F];
                for (std::size_t f = 0; f < F; ++f) gw[f] += d * x[f];
                out.gradient[l.b1 + c] += d;
            }
        } else {
            for (std::size_t h = 0; h < H; ++h) {
                double s = theta[l.b1 + h];
                const double* w = &theta.values[l.w1 + h * F];
                for (std::size_t f = 0; f < F; ++f) s += w[f] * x[f];
                pre[h] = s;
                hidden[h] = s > 0.0 ? s : 0.0;
            }
            for (std::size_t c = 0; c < C; ++c) {
                double s = theta[l.b2 + c];
                const double* w = &theta.values[l.w2 + c * H];
                for (std::size_t h = 0; h < H; ++h) s += w[h] * hidden[h];
                logits[c] = s;
            }
            loss_sum += softmax_ce(logits, y, probs);
            for (std::size_t c = 0; c < C; ++c) {
                const double d = probs[c] - (static_cast<int>(c) == y ? 1.0 : 0.0);
                double* gw2 = &out.gradient.values[l.w2 + c * H];
                for (std::size_t h = 0; h < H; ++h) gw2[h] += d * hidden[h];
                out.gradient[l.b2 + c] += d;
            }
            for (std::size_t h = 0; h < H; ++h) {
                if (pre[h] <= 0.0) continue;
                double dh = 0.0;
                for (std::size_t c = 0; c < C; ++c) {
                    dh += (probs[c] - (data.labels[static_cast<std::size_t>(idx)] == static_cast<int>(c) ? 1.0 : 0.0)) *
                          theta[l.w2 + c * H + h];
                }
                double* gw1 = &out.gradient.values[l.w1 + h * F];
                for (std::size_t f = 0; f < F; ++f) gw1[f] += dh * x[f];
                out.gradient[l.b1 + h] += dh;
            }
        }
    }

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    out.loss = loss_sum * inv_b;
    for (auto& g : out.gradient.values) g *= inv_b;

    if (spec.l2 > 0.0) {
        double sq = 0.0;
        for (std::size_t i = 0; i < theta.dim(); ++i) sq += theta[i] * theta[i];
        out.loss += 0.5 * spec.l2 * sq;
        for (std::size_t i = 0; i < theta.dim(); ++i) out.gradient[i] += spec.l2 * theta[i];
    }
    return out;
}

LossEval loss_and_grad(const ModelSpec& spec, const ParamVector& theta, const Dataset& data) {
    std::vector<int> all(static_cast<std::size_t>(data.n_samples()));
    std::iota(all.begin(), all.end(), 0);
    return loss_and_grad(spec, theta, data, all);
}

LossEval prox_loss_and_grad(const ModelSpec& spec, const ParamVector& theta,
                            const ParamVector& anchor, double mu,
                            const Dataset& data, std::span<const int> batch) {
    if (mu < 0.0) throw ValueError("prox coefficient mu must be >= 0");
    check_same_dim(theta, anchor);
    LossEval out = loss_and_grad(spec, theta, data, batch);
    if (mu > 0.0) {
        double sq = 0.0;
        for (std::size_t i = 0; i < theta.dim(); ++i) {
            const double d = theta[i] - anchor[i];
            sq += d * d;
            out.gradient[i] += mu * d;
        }
        out.loss += 0.5 * mu * sq;
    }
    return out;
}

LossEval prox_loss_and_grad(const ModelSpec& spec, const ParamVector& theta,
                            const ParamVector& anchor, double mu, const Dataset& data) {
    std::vector<int> all(static_cast<std::size_t>(data.n_samples()));
    std::iota(all.begin(), all.end(), 0);
    return prox_loss_and_grad(spec, theta, anchor, mu, data, all);
}

int predict_class(const ModelSpec& spec, const ParamVector& theta,
                  std::span<const double> x) {
    const Layout l = layout_of(spec);
    const auto F = static_cast<std::size_t>(spec.n_features);
    const auto C = static_cast<std::size_t>(spec.n_classes);
    const auto H = static_cast<std::size_t>(spec.hidden_width);
    std::vector<double> logits(C);
    if (spec.kind == ModelKind::Logistic) {
        for (std::size_t c = 0; c < C; ++c) {
            double s = theta[l.b1 + c];
            const double* w = &theta.values[l.w1 + c * F];
            for (std::size_t f = 0; f < F; ++f) s += w[f] * x[f];
            logits[c] = s;
        }
    } else {
        std::vector<double> hidden(H);
        for (std::size_t h = 0; h < H; ++h) {
            double s = theta[l.b1 + h];
            const double* w = &theta.values[l.w1 + h * F];
            for (std::size_t f = 0; f < F; ++f) s += w[f] * x[f];
            hidden[h] = s > 0.0 ? s : 0.0;
        }
        for (std::size_t c = 0; c < C; ++c) {
            double s = theta[l.b2 + c];
            const double* w = &theta.values[l.w2 + c * H];
            for (std::size_t h = 0; h < H; ++h) s += w[h] * hidden[h];
            logits[c] = s;
        }
    }
    int best = 0;
    for (std::size_t c = 1; c < C; ++c) {
        if (logits[c] > logits[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
    }
    return best;
}

namespace {

Dataset gather(const Dataset& global, const std::vector<int>& indices, std::string id) {
    Dataset out;
    out.n_features = global.n_features;
    out.id = std::move(id);
    out.labels.reserve(indices.size());
    out.features.reserve(indices.size() * static_cast<std::size_t>(global.n_features));
    for (int i : indices) {
        const auto r = global.row(i);
        out.features.insert(out.features.end(), r.begin(), r.end());
        out.labels.push_back(global.labels[static_cast<std::size_t>(i)]);
    }
    return out;
}

} // namespace

std::vector<Dataset> dirichlet_partition(const Dataset& global, int n_clients,
                                         double alpha, std::uint64_t seed) {
    if (n_clients < 1) throw ValueError("dirichlet_partition: n_clients must be >= 1");
    if (!(alpha > 0.0)) throw ValueError("dirichlet_partition: alpha must be > 0");
    if (global.n_samples() < 1) throw ValueError("dirichlet_partition: empty global dataset");
    if (n_clients > global.n_samples()) {
        throw ValueError("dirichlet_partition: more clients than samples");
    }

    const int n_classes = 1 + *std::max_element(global.labels.begin(), global.labels.end());
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(n_classes));
    for (int i = 0; i < global.n_samples(); ++i) {
        by_class[static_cast<std::size_t>(global.labels[static_cast<std::size_t>(i)])].push_back(i);
    }

    Rng rng(substream(seed, "dirichlet"));
    std::vector<std::vector<int>> bins;
    const int max_redraws = 100;
    for (int attempt = 0; attempt < max_redraws; ++attempt) {
        bins.assign(static_cast<std::size_t>(n_clients), {});
        for (auto cls : by_class) {
            if (cls.empty()) continue;
            rng.shuffle(cls);
            const auto props = rng.dirichlet(alpha, static_cast<std::size_t>(n_clients));
            // largest-remainder apportionment of this class's samples
            const auto n_c = static_cast<double>(cls.size());
            std::vector<int> counts(static_cast<std::size_t>(n_clients));
            std::vector<std::pair<double, int>> frac;
            int assigned = 0;
            for (int k = 0; k < n_clients; ++k) {
                const double target = props[static_cast<std::size_t>(k)] * n_c;
                counts[static_cast<std::size_t>(k)] = static_cast<int>(std::floor(target));
                assigned += counts[static_cast<std::size_t>(k)];
                frac.emplace_back(target - std::floor(target), k);
            }
            std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
            for (int r = 0; r < static_cast<int>(cls.size()) - assigned; ++r) {
                counts[static_cast<std::size_t>(frac[static_cast<std::size_t>(r)].second)]++;
            }
            std::size_t pos = 0;
            for (int k = 0; k < n_clients; ++k) {
                for (int j = 0; j < counts[static_cast<std::size_t>(k)]; ++j) {
                    bins[static_cast<std::size_t>(k)].push_back(cls[pos++]);
                }
            }
        }
        const bool ok = std::all_of(bins.begin(), bins.end(),
                                    [](const auto& b) { return !b.empty(); });
        if (ok) break;
        if (attempt == max_redraws - 1) {
            // give each empty client one sample from the currently largest bin
            for (auto& bin : bins) {
                while (bin.empty()) {
                    auto donor = std::max_element(bins.begin(), bins.end(),
                                                  [](const auto& a, const auto& b) {
                                                      return a.size() < b.size();
                                                  });
                    bin.push_back(donor->back());
                    donor->pop_back();
                }
            }
        }
    }

    std::vector<Dataset> out;
    out.reserve(static_cast<std::size_t>(n_clients));
    for (int k = 0; k < n_clients; ++k) {
        auto& bin = bins[static_cast<std::size_t>(k)];
        std::sort(bin.begin(), bin.end());
        out.push_back(gather(global, bin, "client" + std::to_string(k)));
    }
    return out;
}

Dataset make_synthetic(int n_classes, int n_features, int n_samples,
                       double class_sep, std::uint64_t seed) {
    if (n_classes < 1 || n_features < 1 || n_samples < 1) {
        throw ValueError("make_synthetic: sizes must be positive");
    }
    if (class_sep < 0.0) throw ValueError("make_synthetic: class_sep must be >= 0");

    Rng rng(substream(seed, "synth"));
    const double radius = class_sep / std::sqrt(2.0);
    std::vector<std::vector<double>> means(static_cast<std::size_t>(n_classes),
                                           std::vector<double>(static_cast<std::size_t>(n_features), 0.0));
    for (int c = 0; c < n_classes; ++c) {
        auto& m = means[static_cast<std::size_t>(c)];
        if (c < n_features) {
            m[static_cast<std::size_t>(c)] = radius;
        } else {
            double sq = 0.0;
            for (auto& v : m) {
                v = rng.normal();
                sq += v * v;
            }
            const double inv = radius / std::sqrt(std::max(sq, 1e-300));
            for (auto& v : m) v *= inv;
        }
    }

    Dataset ds;
    ds.n_features = n_features;
    ds.id = "global";
    ds.labels.resize(static_cast<std::size_t>(n_samples));
    ds.features.resize(static_cast<std::size_t>(n_samples) * static_cast<std::size_t>(n_features));
    for (int i = 0; i < n_samples; ++i) {
        const int y = i % n_classes;
        ds.labels[static_cast<std::size_t>(i)] = y;
        double* row = &ds.features[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_features)];
        const auto& m = means[static_cast<std::size_t>(y)];
        for (int f = 0; f < n_features; ++f) {
            row[f] = m[static_cast<std::size_t>(f)] + rng.normal();
        }
    }
    return ds;
}

SplitDataset split_dataset(const Dataset& ds, double val_fraction, std::uint64_t seed) {
    if (ds.n_samples() < 1) throw ValueError("split_dataset: empty dataset");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
        throw ValueError("split_dataset: val_fraction must be in (0,1)");
    }
    const int n = ds.n_samples();
    if (n == 1) {
        std::vector<int> one{0};
        return {gather(ds, one, ds.id), gather(ds, one, ds.id)};
    }
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(substream(seed, "split"));
    rng.shuffle(idx);
    int n_val = static_cast<int>(std::lround(val_fraction * n));
    n_val = std::clamp(n_val, 1, n - 1);
    std::vector<int> val_idx(idx.begin(), idx.begin() + n_val);
    std::vector<int> train_idx(idx.begin() + n_val, idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    return {gather(ds, train_idx, ds.id), gather(ds, val_idx, ds.id)};
}

Dataset load_csv_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ValueError(path + ": empty file");
    if (line.rfind("label", 0) != 0) {
        throw ValueError(path + ":1:1: expected header starting with 'label'");
    }
    const int n_features = static_cast<int>(std::count(line.begin(), line.end(), ','));

    Dataset ds;
    ds.n_features = n_features;
    ds.id = path;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        int col = 0;
        while (std::getline(ss, cell, ',')) {
            ++col;
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0') {
                throw ValueError(path + ":" + std::to_string(row) + ":" +
                                 std::to_string(col) + ": cannot parse '" + cell + "'");
            }
            if (col == 1) {
                ds.labels.push_back(static_cast<int>(v));
            } else {
                ds.features.push_back(v);
            }
        }
        if (col != n_features + 1) {
            throw ValueError(path + ":" + std::to_string(row) + ": expected " +
                             std::to_string(n_features + 1) + " columns, got " +
                             std::to_string(col));
        }
    }
    if (ds.labels.empty()) throw ValueError(path + ": no data rows");
    return ds;
}

void save_csv_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write dataset file: " + path);
    out << "label";
    for (int f = 0; f < ds.n_features; ++f) out << ",f" << f;
    out << "\n";
    char buf[32];
    for (int i = 0; i < ds.n_samples(); ++i) {
        out << ds.labels[static_cast<std::size_t>(i)];
        for (double v : ds.row(i)) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << "," << buf;
        }
        out << "\n";
    }
}

LossEval Objective::eval_full(const ParamVector& theta) const {
    std::vector<int> all(static_cast<std::size_t>(n_samples()));
    std::iota(all.begin(), all.end(), 0);
    return eval(theta, all);
}

} // namespace fedcurve
