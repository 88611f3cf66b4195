#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedcurve/objective.hpp"
#include "fedcurve/params.hpp"

namespace fedcurve {

// Control points of a quadratic Bezier curve in parameter space.
struct BezierParams {
    ParamVector a, b, c;

    static BezierParams point(const ParamVector& theta) { return {theta, theta, theta}; }
};

// Displacement of the control points from the point parametrisation of the
// training anchor. da stays all-zeros while the first endpoint is pinned.
struct ReparamVector {
    ParamVector da, db, dc;

    static ReparamVector zeros(std::size_t dim) {
        return {ParamVector(dim), ParamVector(dim), ParamVector(dim)};
    }
};

enum class BInit { Global, Midpoint };
enum class LocalOptimizer { Sgd, Adam };

struct CurveTrainConfig {
    int k_sgd = 2;         // phase 1: epochs sampled at t = 1
    int k_curve = 2;       // phase 2: epochs sampled at t ~ U[0,1]
    double mu = 0.001;     // proximal coefficient towards the anchor
    double eta_l = 0.001;  // local step size
    BInit b_init = BInit::Midpoint;
    int samples_per_batch_draw = 1;
    int batch_size = 32;   // 0 = full batch
    LocalOptimizer optimizer = LocalOptimizer::Sgd;
};

// (1-t)^2 A + 2t(1-t) B + t^2 C; throws RangeError for t outside [0,1]
ParamVector decasteljau(const BezierParams& phi, double t);

// d/dt at t=0 for the quadratic curve: 2 (B - A)
ParamVector curve_tangent_at_zero(const BezierParams& phi);

// Two-phase local curve fitting from the received global model. Phase 1
// trains the far endpoint at t = 1 (plain proximal SGD on C); phase 2 draws
// t per minibatch and applies the chain-rule gradients 2t(1-t) g to B and
// t^2 g to C. A is pinned to the anchor throughout. Returns the control
// point displacement; throws TrainingDivergedError (with the epoch index)
// if any parameter becomes non-finite.
ReparamVector train_curve(const Objective& objective, const ParamVector& theta_global,
                          const CurveTrainConfig& cfg, std::uint64_t seed);

struct ArcStepStats {
    long bisection_calls = 0;
    long non_monotone_fallbacks = 0;
};

// Point on the curve whose chord distance from the anchor equals
// step * ||C - anchor||, found by bisection on the chord length. If the
// chord length is non-monotone over a 33-point grid the curve parameter
// falls back to step itself (counted in stats). step = 1 returns C; a
// zero-length chord returns the anchor unchanged.
ParamVector arc_step(const ParamVector& theta_anchor, const BezierParams& psi,
                     double step, ArcStepStats* stats = nullptr);

// full-sample loss at t = i/(n_points-1), i = 0..n_points-1
std::vector<std::pair<double, double>> loss_profile(const Objective& objective,
                                                    const BezierParams& phi,
                                                    int n_points);

// 3-row CSV matrix, rows = A, B, C
void save_curve_csv(const std::string& path, const BezierParams& phi);
BezierParams load_curve_csv(const std::string& path);

} // namespace fedcurve
