#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedcurve/objective.hpp"
#include "fedcurve/params.hpp"

namespace fedcurve {

// Row-major sample matrix plus integer class labels.
struct Dataset {
    std::vector<double> features; // n_samples * n_features
    std::vector<int> labels;
    int n_features = 0;
    std::string id = "global";

    int n_samples() const { return static_cast<int>(labels.size()); }
    std::span<const double> row(int i) const {
        return {features.data() + static_cast<std::size_t>(i) * n_features,
                static_cast<std::size_t>(n_features)};
    }
};

enum class ModelKind { Logistic, Mlp1 };

struct ModelSpec {
    ModelKind kind = ModelKind::Logistic;
    int n_features = 0;
    int n_classes = 0;
    int hidden_width = 0; // mlp1 only
    double l2 = 0.0;

    std::size_t param_dim() const;
};

// zeros for logistic; uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights and
// zero biases for mlp1
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

// mean cross-entropy over the batch plus (l2/2)*||theta||^2, with the exact
// analytic gradient of that scalar
LossEval loss_and_grad(const ModelSpec& spec, const ParamVector& theta,
                       const Dataset& data, std::span<const int> batch);
LossEval loss_and_grad(const ModelSpec& spec, const ParamVector& theta,
                       const Dataset& data);

// loss_and_grad plus (mu/2)*||theta - anchor||^2 and its gradient
LossEval prox_loss_and_grad(const ModelSpec& spec, const ParamVector& theta,
                            const ParamVector& anchor, double mu,
                            const Dataset& data, std::span<const int> batch);
LossEval prox_loss_and_grad(const ModelSpec& spec, const ParamVector& theta,
                            const ParamVector& anchor, double mu,
                            const Dataset& data);

// class-index logits argmax, ties broken towards the lowest index
int predict_class(const ModelSpec& spec, const ParamVector& theta,
                  std::span<const double> x);

// Splits a global dataset into per-client shards with Dirichlet(alpha)
// per-class proportions. Deterministic in seed; every client receives at
// least one sample (proportions are redrawn up to 100 times, after which
// samples are reassigned round-robin from the largest shards).
std::vector<Dataset> dirichlet_partition(const Dataset& global, int n_clients,
                                         double alpha, std::uint64_t seed);

// Gaussian class clusters with unit covariance; pairwise cluster-mean
// distance equals class_sep when n_classes <= n_features. Labels are
// balanced (sample i gets class i mod n_classes).
Dataset make_synthetic(int n_classes, int n_features, int n_samples,
                       double class_sep, std::uint64_t seed);

// deterministic train/validation split; both halves are non-empty whenever
// the input has >= 2 samples (a 1-sample shard appears in both)
struct SplitDataset {
    Dataset train;
    Dataset val;
};
SplitDataset split_dataset(const Dataset& ds, double val_fraction, std::uint64_t seed);

// CSV with header "label,f0,f1,...": label an integer, features 64-bit reals
Dataset load_csv_dataset(const std::string& path);
void save_csv_dataset(const std::string& path, const Dataset& ds);

// Objective adaptor binding a model spec to a dataset (borrowed reference).
class ModelObjective final : public Objective {
public:
    ModelObjective(const ModelSpec& spec, const Dataset& data)
        : spec_(spec), data_(&data) {}

    std::size_t dim() const override { return spec_.param_dim(); }
    int n_samples() const override { return data_->n_samples(); }
    LossEval eval(const ParamVector& theta, std::span<const int> batch) const override {
        return loss_and_grad(spec_, theta, *data_, batch);
    }

private:
    ModelSpec spec_;
    const Dataset* data_;
};

} // namespace fedcurve
