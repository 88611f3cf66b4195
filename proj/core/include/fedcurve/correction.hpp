#pragma once

#include "fedcurve/curve.hpp"
#include "fedcurve/params.hpp"

namespace fedcurve {

// Global drift between a stale update's origin model and the current one,
// replicated per control point when flattened into curve-parameter space.
struct DriftVector {
    ParamVector dg; // theta_now - theta_then

    // (dg, dg, dg) for quadratic curves
    ParamVector flat() const;
};

enum class CorrectionKind { Identity, OrthoDC, DcAsgd };

struct CorrectionRule {
    CorrectionKind kind = CorrectionKind::Identity;
    double vartheta = 1.0;  // orthodc threshold in [-1, 1]
    double lambda0 = 2.0;   // dcasgd strength
    bool adaptive = false;  // dcasgd: lambda scaled by an EMA of g^2
    bool per_block = false; // orthodc: test/project each control point separately
};

// EMA of squared update entries, owned by the server loop.
struct DcAsgdState {
    ParamVector ema;
    double lambda_t(double lambda0) const;
    void update(const ParamVector& g);
};

// Removes the drift-parallel component of the flattened update when its
// cosine against the flattened drift is <= vartheta; returns the update
// unchanged otherwise (and always when the drift is zero).
ReparamVector orthodc(const ReparamVector& delta, const DriftVector& drift,
                      double vartheta, bool per_block = false);

// same rule on a single tangent vector (pointwise strategies)
ParamVector orthodc(const ParamVector& delta, const ParamVector& drift, double vartheta);

// g + lambda_t * (g .* g) .* (theta_now - theta_then); lambda_t = lambda0 in
// constant mode, lambda0 / (1e-8 + mean(EMA of g .* g)) in adaptive mode
ParamVector dcasgd_correct(const ParamVector& g, const ParamVector& theta_now,
                           const ParamVector& theta_then, double lambda0,
                           DcAsgdState* state = nullptr);

// Dispatch on the rule; the result is a control-point displacement to be
// re-based at theta_now with the first endpoint re-pinned there.
ReparamVector apply_correction(const CorrectionRule& rule, const ReparamVector& v,
                               const ParamVector& theta_now, const ParamVector& theta_then,
                               DcAsgdState* state = nullptr);

} // namespace fedcurve
