#include "fedcurve/params.hpp"

#include <algorithm>
#include <cmath>

#include "fedcurve/errors.hpp"

namespace fedcurve {

void check_same_dim(const ParamVector& a, const ParamVector& b) {
    if (a.dim() != b.dim()) {
        throw DimensionError("dimension mismatch: " + std::to_string(a.dim()) +
                             " vs " + std::to_string(b.dim()));
    }
}

double inner(const ParamVector& a, const ParamVector& b) {
    check_same_dim(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const ParamVector& a) {
    return std::sqrt(inner(a, a));
}

ParamVector project_onto(const ParamVector& a, const ParamVector& b) {
    check_same_dim(a, b);
    const double bb = inner(b, b);
    if (bb == 0.0) {
        throw DegenerateDirectionError("project_onto: zero-norm direction");
    }
    return scaled(b, inner(a, b) / bb);
}

double cosine(const ParamVector& a, const ParamVector& b) {
    check_same_dim(a, b);
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0; // zero vector: no conflict
    return std::clamp(inner(a, b) / (na * nb), -1.0, 1.0);
}

bool all_finite(const ParamVector& a) {
    for (double x : a.values) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

ParamVector add(const ParamVector& a, const ParamVector& b) {
    check_same_dim(a, b);
    ParamVector out(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) out[i] = a[i] + b[i];
    return out;
}

ParamVector sub(const ParamVector& a, const ParamVector& b) {
    check_same_dim(a, b);
    ParamVector out(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) out[i] = a[i] - b[i];
    return out;
}

ParamVector scaled(const ParamVector& a, double s) {
    ParamVector out(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) out[i] = a[i] * s;
    return out;
}

void axpy(ParamVector& y, double s, const ParamVector& x) {
    check_same_dim(y, x);
    for (std::size_t i = 0; i < y.dim(); ++i) y[i] += s * x[i];
}

} // namespace fedcurve
