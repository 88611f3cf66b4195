#include "fedcurve/curve.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fedcurve/errors.hpp"
#include "fedcurve/log.hpp"
#include "fedcurve/rng.hpp"

namespace fedcurve {

ParamVector decasteljau(const BezierParams& phi, double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw RangeError("decasteljau: t must be in [0,1], got " + std::to_string(t));
    }
    check_same_dim(phi.a, phi.b);
    check_same_dim(phi.b, phi.c);
    const double w_a = (1.0 - t) * (1.0 - t);
    const double w_b = 2.0 * t * (1.0 - t);
    const double w_c = t * t;
    ParamVector out(phi.a.dim());
    for (std::size_t i = 0; i < out.dim(); ++i) {
        out[i] = w_a * phi.a[i] + w_b * phi.b[i] + w_c * phi.c[i];
    }
    return out;
}

ParamVector curve_tangent_at_zero(const BezierParams& phi) {
    check_same_dim(phi.a, phi.b);
    ParamVector out(phi.a.dim());
    for (std::size_t i = 0; i < out.dim(); ++i) out[i] = 2.0 * (phi.b[i] - phi.a[i]);
    return out;
}

namespace {

// SGD or Adam on a single control point
struct PointOptimizer {
    LocalOptimizer kind;
    double eta;
    ParamVector m, v;
    long steps = 0;

    PointOptimizer(LocalOptimizer k, double lr, std::size_t dim)
        : kind(k), eta(lr), m(dim), v(dim) {}

    void step(ParamVector& x, const ParamVector& g) {
        if (kind == LocalOptimizer::Sgd) {
            for (std::size_t i = 0; i < x.dim(); ++i) x[i] -= eta * g[i];
            return;
        }
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        ++steps;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
        for (std::size_t i = 0; i < x.dim(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            x[i] -= eta * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
    }
};

std::vector<std::vector<int>> make_batches(int n, int batch_size, Rng& shuffle_rng) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    shuffle_rng.shuffle(idx);
    if (batch_size <= 0 || batch_size >= n) return {idx};
    std::vector<std::vector<int>> batches;
    for (int start = 0; start < n; start += batch_size) {
        const int stop = std::min(start + batch_size, n);
        batches.emplace_back(idx.begin() + start, idx.begin() + stop);
    }
    return batches;
}

} // namespace

ReparamVector train_curve(const Objective& objective, const ParamVector& theta_global,
                          const CurveTrainConfig& cfg, std::uint64_t seed) {
    if (objective.dim() != theta_global.dim()) {
        throw DimensionError("train_curve: objective/theta dimension mismatch");
    }
    if (!all_finite(theta_global)) throw ValueError("train_curve: non-finite global model");
    if (cfg.k_sgd < 0 || cfg.k_curve < 0 || (cfg.k_sgd == 0 && cfg.k_curve == 0)) {
        throw ValueError("train_curve: need k_sgd >= 0, k_curve >= 0, not both 0");
    }
    if (cfg.samples_per_batch_draw < 1) {
        throw ValueError("train_curve: samples_per_batch_draw must be >= 1");
    }
    if (cfg.eta_l <= 0.0 || cfg.mu < 0.0) {
        throw ValueError("train_curve: eta_l must be > 0 and mu >= 0");
    }

    const std::size_t dim = theta_global.dim();
    const int n = objective.n_samples();
    const ParamVector& anchor = theta_global; // A stays pinned here
    ParamVector ctrl_b = theta_global;
    ParamVector ctrl_c = theta_global;

    PointOptimizer opt_b(cfg.optimizer, cfg.eta_l, dim);
    PointOptimizer opt_c(cfg.optimizer, cfg.eta_l, dim);

    int epoch = 0;

    // phase 1: Dirac sampling at t = 1 is proximal SGD on the far endpoint
    for (int e = 0; e < cfg.k_sgd; ++e, ++epoch) {
        Rng shuffle_rng(substream(seed, "shuffle", static_cast<std::uint64_t>(epoch)));
        for (const auto& batch : make_batches(n, cfg.batch_size, shuffle_rng)) {
            LossEval le = objective.eval(ctrl_c, batch);
            if (cfg.mu > 0.0) {
                for (std::size_t i = 0; i < dim; ++i) {
                    le.gradient[i] += cfg.mu * (ctrl_c[i] - anchor[i]);
                }
            }
            opt_c.step(ctrl_c, le.gradient);
            if (!all_finite(ctrl_c)) {
                throw TrainingDivergedError("train_curve: diverged in phase 1 epoch " +
                                                std::to_string(epoch),
                                            epoch);
            }
        }
    }

    if (cfg.b_init == BInit::Midpoint) {
        for (std::size_t i = 0; i < dim; ++i) ctrl_b[i] = 0.5 * (anchor[i] + ctrl_c[i]);
    }

    // phase 2: t ~ U[0,1] per minibatch; chain rule onto the free control points
    ParamVector grad_b(dim), grad_c(dim);
    for (int e = 0; e < cfg.k_curve; ++e, ++epoch) {
        Rng shuffle_rng(substream(seed, "shuffle", static_cast<std::uint64_t>(epoch)));
        Rng t_rng(substream(seed, "tsample", static_cast<std::uint64_t>(epoch)));
        for (const auto& batch : make_batches(n, cfg.batch_size, shuffle_rng)) {
            std::fill(grad_b.values.begin(), grad_b.values.end(), 0.0);
            std::fill(grad_c.values.begin(), grad_c.values.end(), 0.0);
            for (int draw = 0; draw < cfg.samples_per_batch_draw; ++draw) {
                const double t = t_rng.uniform();
                const BezierParams phi{anchor, ctrl_b, ctrl_c};
                const ParamVector point = decasteljau(phi, t);
                LossEval le = objective.eval(point, batch);
                if (cfg.mu > 0.0) {
                    for (std::size_t i = 0; i < dim; ++i) {
                        le.gradient[i] += cfg.mu * (point[i] - anchor[i]);
                    }
                }
                const double w_b = 2.0 * t * (1.0 - t);
                const double w_c = t * t;
                axpy(grad_b, w_b, le.gradient);
                axpy(grad_c, w_c, le.gradient);
            }
            if (cfg.samples_per_batch_draw > 1) {
                const double inv = 1.0 / cfg.samples_per_batch_draw;
                for (auto& g : grad_b.values) g *= inv;
                for (auto& g : grad_c.values) g *= inv;
            }
            opt_b.step(ctrl_b, grad_b);
            opt_c.step(ctrl_c, grad_c);
            if (!all_finite(ctrl_b) || !all_finite(ctrl_c)) {
                throw TrainingDivergedError("train_curve: diverged in phase 2 epoch " +
                                                std::to_string(epoch),
                                            epoch);
            }
        }
    }

    ReparamVector out = ReparamVector::zeros(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        out.db[i] = ctrl_b[i] - theta_global[i];
        out.dc[i] = ctrl_c[i] - theta_global[i];
    }
    return out;
}

ParamVector arc_step(const ParamVector& theta_anchor, const BezierParams& psi,
                     double step, ArcStepStats* stats) {
    if (!(step > 0.0 && step <= 1.0)) {
        throw RangeError("arc_step: step must be in (0,1], got " + std::to_string(step));
    }
    check_same_dim(theta_anchor, psi.a);
    if (psi.a.values != theta_anchor.values) {
        throw ValueError("arc_step: curve must start at the anchor");
    }

    const double chord_full = norm(sub(psi.c, theta_anchor));
    if (chord_full == 0.0) return theta_anchor;
    if (step == 1.0) return decasteljau(psi, 1.0);

    if (psi.b.values == psi.a.values) {
        // degenerate curve: point(s) - A = s^2 (C - A), so the chord target
        // is met exactly at s* = sqrt(step)
        ParamVector out = theta_anchor;
        for (std::size_t i = 0; i < out.dim(); ++i) {
            out[i] += step * (psi.c[i] - theta_anchor[i]);
        }
        return out;
    }

    const auto chord_at = [&](double s) { return norm(sub(decasteljau(psi, s), theta_anchor)); };

    // monotonicity probe on a 33-point grid
    bool monotone = true;
    double prev = 0.0;
    for (int i = 0; i <= 32; ++i) {
        const double c = chord_at(static_cast<double>(i) / 32.0);
        if (c < prev - 1e-12 * chord_full) {
            monotone = false;
            break;
        }
        prev = c;
    }
    if (!monotone) {
        log_warn("arc_step: non-monotone chord length, falling back to s = step");
        if (stats) stats->non_monotone_fallbacks++;
        return decasteljau(psi, step);
    }

    if (stats) stats->bisection_calls++;
    const double target = step * chord_full;
    double lo = 0.0, hi = 1.0, mid = step;
    for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (lo + hi);
        const double c = chord_at(mid);
        if (std::abs(c - target) <= 1e-10 * chord_full) break;
        if (c < target) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-16) break;
    }
    return decasteljau(psi, mid);
}

std::vector<std::pair<double, double>> loss_profile(const Objective& objective,
                                                    const BezierParams& phi,
                                                    int n_points) {
    if (n_points < 2) throw RangeError("loss_profile: n_points must be >= 2");
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n_points - 1);
        out.emplace_back(t, objective.eval_full(decasteljau(phi, t)).loss);
    }
    return out;
}

void save_curve_csv(const std::string& path, const BezierParams& phi) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write curve file: " + path);
    char buf[32];
    for (const ParamVector* p : {&phi.a, &phi.b, &phi.c}) {
        for (std::size_t i = 0; i < p->dim(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", (*p)[i]);
            out << (i ? "," : "") << buf;
        }
        out << "\n";
    }
}

BezierParams load_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open curve file: " + path);
    std::vector<ParamVector> rows;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        ParamVector v;
        std::stringstream ss(line);
        std::string cell;
        int col = 0;
        while (std::getline(ss, cell, ',')) {
            ++col;
            char* end = nullptr;
            const double x = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0') {
                throw ValueError(path + ":" + std::to_string(row) + ":" +
                                 std::to_string(col) + ": cannot parse '" + cell + "'");
            }
            v.values.push_back(x);
        }
        rows.push_back(std::move(v));
    }
    if (rows.size() != 3) {
        throw ValueError(path + ": expected 3 rows (A,B,C), got " + std::to_string(rows.size()));
    }
    if (rows[0].dim() != rows[1].dim() || rows[1].dim() != rows[2].dim()) {
        throw ValueError(path + ": rows have differing lengths");
    }
    return {std::move(rows[0]), std::move(rows[1]), std::move(rows[2])};
}

} // namespace fedcurve
