#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fedcurve {

// Flat 64-bit parameter point / tangent in Euclidean model space.
// All reductions run sequentially in index order so that repeated runs are
// bitwise reproducible.
struct ParamVector {
    std::vector<double> values;

    ParamVector() = default;
    explicit ParamVector(std::size_t dim, double fill = 0.0) : values(dim, fill) {}
    explicit ParamVector(std::vector<double> v) : values(std::move(v)) {}
    ParamVector(std::initializer_list<double> init) : values(init) {}

    std::size_t dim() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    bool operator==(const ParamVector&) const = default;
};

// throws DimensionError unless a.dim == b.dim
void check_same_dim(const ParamVector& a, const ParamVector& b);

double inner(const ParamVector& a, const ParamVector& b);
double norm(const ParamVector& a);

// (<a,b>/<b,b>) b; throws DegenerateDirectionError when ||b|| == 0
ParamVector project_onto(const ParamVector& a, const ParamVector& b);

// <a,b>/(||a|| ||b||) clamped to [-1,1]; 0 when either norm is 0
double cosine(const ParamVector& a, const ParamVector& b);

bool all_finite(const ParamVector& a);

ParamVector add(const ParamVector& a, const ParamVector& b);
ParamVector sub(const ParamVector& a, const ParamVector& b);
ParamVector scaled(const ParamVector& a, double s);

// y += s * x
void axpy(ParamVector& y, double s, const ParamVector& x);

} // namespace fedcurve
