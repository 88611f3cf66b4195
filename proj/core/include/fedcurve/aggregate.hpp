#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fedcurve/correction.hpp"
#include "fedcurve/state.hpp"

namespace fedcurve {

enum class StrategyKind { FedAsync, FedBuff, DcAsgd, FedGS, FedOrtho, AsyncBezier };

enum class Weighting { Uniform, Proportional };

struct StrategyConfig {
    StrategyKind kind = StrategyKind::AsyncBezier;
    double eta_g = 1.0;
    int buffer_k = 10;        // fedbuff
    double alpha = 0.0;       // asyncbezier staleness decay in [0,1]
    double vartheta = 1.0;    // orthodc threshold for fedgs/fedortho/asyncbezier
    Weighting client_weighting = Weighting::Proportional;
    CorrectionRule correction; // asyncbezier correction step
};

std::string strategy_kind_name(StrategyKind k);
StrategyKind parse_strategy_kind(const std::string& name);

// 1 + alpha * (||theta_tau - theta_hat|| / ||theta_t - theta_tau|| - 1),
// exactly 1 when there is no staleness displacement; clamped to (0, 10]
double staleness_scale(const ParamVector& theta_t, const ParamVector& theta_tau,
                       const ParamVector& theta_hat_tau, double alpha,
                       long* clamp_counter = nullptr);

// mean of the last `window` entries; throws ValueError on short history
ParamVector swa_tail_average(const std::vector<ParamVector>& history, int window);

struct ApplyInfo {
    bool version_advanced = false;
    double s_factor = 1.0;
    double step = 0.0;
    int buffered = 0; // fedbuff backlog after this arrival
};

struct StrategyCounters {
    long step_clamps = 0;     // s*w*eta_g exceeded the curve domain
    long scale_clamps = 0;    // staleness scale hit its cap
    long partial_flushes = 0; // fedbuff flushed a short buffer at run end
    ArcStepStats arc;
};

// Server update rule dispatcher. Owns the only mutable strategy state
// (FedBuff's buffer, DC-ASGD's EMA); apply() must be called serially in
// arrival order by the single server loop.
class Strategy {
public:
    explicit Strategy(StrategyConfig cfg);

    const StrategyConfig& config() const { return cfg_; }
    const StrategyCounters& counters() const { return counters_; }
    bool uses_curves() const { return cfg_.kind == StrategyKind::AsyncBezier; }

    // applies one update; theta_then is the origin model looked up from
    // history. Throws DivergedError if the global model leaves finite range.
    ApplyInfo apply(GlobalState& state, const ClientUpdate& update,
                    const ParamVector& theta_then);

    // fedbuff: apply whatever is buffered (run end); no-op for the rest
    ApplyInfo flush_remaining(GlobalState& state);

private:
    StrategyConfig cfg_;
    StrategyCounters counters_;
    DcAsgdState dcasgd_state_;
    std::vector<ClientUpdate> buffer_;
};

// Single AsyncBezier arrival: correct the reparametrisation vector, re-pin
// the curve at the current model, scale the step by the staleness factor and
// move along the curve by arc length.
ApplyInfo asyncbezier_apply(GlobalState& state, const ClientUpdate& update,
                            const StrategyConfig& cfg, const CorrectionRule& rule,
                            const ParamVector& theta_then,
                            StrategyCounters* counters = nullptr,
                            DcAsgdState* dcasgd_state = nullptr);

// Position-interpolation step towards the re-based client endpoint; FedGS /
// FedOrtho first project the delta against the global drift with
// vartheta = 0 / 1.
ApplyInfo fedasync_apply(GlobalState& state, const ClientUpdate& update,
                         const StrategyConfig& cfg, const ParamVector& theta_then);

// One buffered step: the weighted mean of the buffered deltas
ApplyInfo fedbuff_apply(std::vector<ClientUpdate>& buffer, GlobalState& state,
                        const StrategyConfig& cfg);

} // namespace fedcurve
