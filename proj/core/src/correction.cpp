#include "fedcurve/correction.hpp"

#include <cmath>

#include "fedcurve/errors.hpp"

namespace fedcurve {

namespace {

ParamVector flatten(const ReparamVector& v) {
    ParamVector out(3 * v.da.dim());
    std::size_t k = 0;
    for (const ParamVector* block : {&v.da, &v.db, &v.dc}) {
        for (double x : block->values) out[k++] = x;
    }
    return out;
}

ReparamVector unflatten(const ParamVector& flat, std::size_t dim) {
    ReparamVector out = ReparamVector::zeros(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        out.da[i] = flat[i];
        out.db[i] = flat[dim + i];
        out.dc[i] = flat[2 * dim + i];
    }
    return out;
}

} // namespace

ParamVector orthodc(const ParamVector& delta, const ParamVector& drift, double vartheta) {
    if (vartheta < -1.0 || vartheta > 1.0) {
        throw RangeError("orthodc: vartheta must be in [-1,1]");
    }
    if (inner(drift, drift) == 0.0) return delta;
    if (cosine(delta, drift) <= vartheta) {
        return sub(delta, project_onto(delta, drift));
    }
    return delta;
}

ParamVector DriftVector::flat() const {
    ParamVector out(3 * dg.dim());
    for (std::size_t i = 0; i < dg.dim(); ++i) {
        out[i] = dg[i];
        out[dg.dim() + i] = dg[i];
        out[2 * dg.dim() + i] = dg[i];
    }
    return out;
}

double DcAsgdState::lambda_t(double lambda0) const {
    double mean = 0.0;
    if (ema.dim() > 0) {
        for (double x : ema.values) mean += x;
        mean /= static_cast<double>(ema.dim());
    }
    return lambda0 / (1e-8 + mean);
}

void DcAsgdState::update(const ParamVector& g) {
    constexpr double decay = 0.95;
    if (ema.dim() == 0) ema = ParamVector(g.dim(), 0.0);
    check_same_dim(ema, g);
    for (std::size_t i = 0; i < g.dim(); ++i) {
        ema[i] = decay * ema[i] + (1.0 - decay) * g[i] * g[i];
    }
}

ReparamVector orthodc(const ReparamVector& delta, const DriftVector& drift,
                      double vartheta, bool per_block) {
    if (vartheta < -1.0 || vartheta > 1.0) {
        throw RangeError("orthodc: vartheta must be in [-1,1]");
    }
    check_same_dim(delta.da, drift.dg);
    check_same_dim(delta.db, drift.dg);
    check_same_dim(delta.dc, drift.dg);
    if (inner(drift.dg, drift.dg) == 0.0) return delta; // no interleaved update
    if (per_block) {
        return {orthodc(delta.da, drift.dg, vartheta),
                orthodc(delta.db, drift.dg, vartheta),
                orthodc(delta.dc, drift.dg, vartheta)};
    }
    return unflatten(orthodc(flatten(delta), drift.flat(), vartheta), drift.dg.dim());
}

ParamVector dcasgd_correct(const ParamVector& g, const ParamVector& theta_now,
                           const ParamVector& theta_then, double lambda0,
                           DcAsgdState* state) {
    check_same_dim(g, theta_now);
    check_same_dim(g, theta_then);
    double lambda = lambda0;
    if (state != nullptr) {
        state->update(g);
        lambda = state->lambda_t(lambda0);
    }
    ParamVector out(g.dim());
    for (std::size_t i = 0; i < g.dim(); ++i) {
        out[i] = g[i] + lambda * g[i] * g[i] * (theta_now[i] - theta_then[i]);
    }
    return out;
}

ReparamVector apply_correction(const CorrectionRule& rule, const ReparamVector& v,
                               const ParamVector& theta_now, const ParamVector& theta_then,
                               DcAsgdState* state) {
    check_same_dim(theta_now, theta_then);
    switch (rule.kind) {
        case CorrectionKind::Identity:
            return v;
        case CorrectionKind::OrthoDC: {
            DriftVector drift{sub(theta_now, theta_then)};
            return orthodc(v, drift, rule.vartheta, rule.per_block);
        }
        case CorrectionKind::DcAsgd: {
            // lambda computed once from the principal (endpoint) displacement
            DcAsgdState* s = rule.adaptive ? state : nullptr;
            ReparamVector out = ReparamVector::zeros(v.da.dim());
            out.dc = dcasgd_correct(v.dc, theta_now, theta_then, rule.lambda0, s);
            double lambda = rule.lambda0;
            if (s != nullptr) lambda = s->lambda_t(rule.lambda0);
            for (std::size_t i = 0; i < v.db.dim(); ++i) {
                out.db[i] = v.db[i] + lambda * v.db[i] * v.db[i] * (theta_now[i] - theta_then[i]);
            }
            return out;
        }
    }
    throw ConfigError("apply_correction: unknown correction rule");
}

} // namespace fedcurve
