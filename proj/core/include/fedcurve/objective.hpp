#pragma once

#include <span>

#include "fedcurve/params.hpp"

namespace fedcurve {

struct LossEval {
    double loss = 0.0;
    ParamVector gradient;
    int n_samples_used = 0;
};

// Batched differentiable objective over a fixed sample set. Implementations
// must be pure: eval() may be called concurrently on the same object.
class Objective {
public:
    virtual ~Objective() = default;

    virtual std::size_t dim() const = 0;
    virtual int n_samples() const = 0;

    // mean loss and exact gradient over the given sample indices;
    // throws ValueError on an empty batch
    virtual LossEval eval(const ParamVector& theta, std::span<const int> batch) const = 0;

    // full-sample evaluation
    LossEval eval_full(const ParamVector& theta) const;
};

} // namespace fedcurve
