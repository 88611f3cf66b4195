#include "fedcurve/aggregate.hpp"

#include <algorithm>
#include <cmath>

#include "fedcurve/errors.hpp"
#include "fedcurve/log.hpp"

namespace fedcurve {

std::string strategy_kind_name(StrategyKind k) {
    switch (k) {
        case StrategyKind::FedAsync: return "fedasync";
        case StrategyKind::FedBuff: return "fedbuff";
        case StrategyKind::DcAsgd: return "dcasgd";
        case StrategyKind::FedGS: return "fedgs";
        case StrategyKind::FedOrtho: return "fedortho";
        case StrategyKind::AsyncBezier: return "asyncbezier";
    }
    return "unknown";
}

StrategyKind parse_strategy_kind(const std::string& name) {
    if (name == "fedasync") return StrategyKind::FedAsync;
    if (name == "fedbuff") return StrategyKind::FedBuff;
    if (name == "dcasgd") return StrategyKind::DcAsgd;
    if (name == "fedgs") return StrategyKind::FedGS;
    if (name == "fedortho") return StrategyKind::FedOrtho;
    if (name == "asyncbezier" || name == "asyncbezier-ed") return StrategyKind::AsyncBezier;
    throw ConfigError("unknown strategy kind: " + name);
}

double staleness_scale(const ParamVector& theta_t, const ParamVector& theta_tau,
                       const ParamVector& theta_hat_tau, double alpha,
                       long* clamp_counter) {
    if (alpha < 0.0 || alpha > 1.0) throw RangeError("staleness_scale: alpha must be in [0,1]");
    const double denom = norm(sub(theta_t, theta_tau));
    if (denom == 0.0) return 1.0; // no staleness displacement
    const double ratio = norm(sub(theta_tau, theta_hat_tau)) / denom;
    double s = 1.0 + alpha * (ratio - 1.0);
    constexpr double s_max = 10.0;
    if (s > s_max) {
        s = s_max;
        if (clamp_counter) (*clamp_counter)++;
    }
    if (s < 1e-12) s = 1e-12;
    return s;
}

ParamVector swa_tail_average(const std::vector<ParamVector>& history, int window) {
    if (window < 1) throw ValueError("swa_tail_average: window must be >= 1");
    if (static_cast<int>(history.size()) < window) {
        throw ValueError("swa_tail_average: history shorter than window");
    }
    const std::size_t start = history.size() - static_cast<std::size_t>(window);
    ParamVector out(history[start].dim(), 0.0);
    for (std::size_t k = start; k < history.size(); ++k) {
        check_same_dim(out, history[k]);
        for (std::size_t i = 0; i < out.dim(); ++i) out[i] += history[k][i];
    }
    const double inv = 1.0 / static_cast<double>(window);
    for (auto& x : out.values) x *= inv;
    return out;
}

std::vector<ParamVector> ModelHistory::tail(std::size_t window) const {
    std::vector<ParamVector> out;
    if (window == 0 || buf_.empty()) return out;
    const std::size_t take = std::min(window, buf_.size());
    for (std::size_t i = buf_.size() - take; i < buf_.size(); ++i) {
        out.push_back(buf_[i].second);
    }
    return out;
}

namespace {

void commit(GlobalState& state, ParamVector next) {
    if (!all_finite(next)) {
        throw DivergedError("global model diverged at version " +
                            std::to_string(state.version + 1));
    }
    state.theta = std::move(next);
    state.version += 1;
    state.history.push(state.version, state.theta);
}

} // namespace

ApplyInfo asyncbezier_apply(GlobalState& state, const ClientUpdate& update,
                            const StrategyConfig& cfg, const CorrectionRule& rule,
                            const ParamVector& theta_then, StrategyCounters* counters,
                            DcAsgdState* dcasgd_state) {
    const ReparamVector corrected =
        apply_correction(rule, update.v, state.theta, theta_then, dcasgd_state);

    // re-pin the curve start at the current global model
    BezierParams psi{state.theta, add(state.theta, corrected.db), add(state.theta, corrected.dc)};
    const ParamVector& theta_hat = psi.c; // decasteljau(psi, 1)

    ApplyInfo info;
    info.s_factor = staleness_scale(theta_then, state.theta, theta_hat, cfg.alpha,
                                    counters ? &counters->scale_clamps : nullptr);
    const double raw_step = info.s_factor * update.weight * cfg.eta_g;
    info.step = std::min(raw_step, 1.0);
    if (raw_step > 1.0 && counters) counters->step_clamps++;

    ParamVector next = info.step > 0.0
                           ? arc_step(state.theta, psi, info.step, counters ? &counters->arc : nullptr)
                           : state.theta;
    commit(state, std::move(next));
    info.version_advanced = true;
    return info;
}

ApplyInfo fedasync_apply(GlobalState& state, const ClientUpdate& update,
                         const StrategyConfig& cfg, const ParamVector& theta_then) {
    // the transmitted endpoint displacement, re-based at the current model
    ParamVector delta = update.v.dc;
    if (cfg.kind == StrategyKind::FedGS || cfg.kind == StrategyKind::FedOrtho) {
        const double vartheta = cfg.kind == StrategyKind::FedGS ? 0.0 : 1.0;
        delta = orthodc(delta, sub(state.theta, theta_then), vartheta);
    }

    ApplyInfo info;
    info.step = cfg.eta_g * update.weight;
    ParamVector next = state.theta;
    axpy(next, info.step, delta);
    commit(state, std::move(next));
    info.version_advanced = true;
    return info;
}

ApplyInfo fedbuff_apply(std::vector<ClientUpdate>& buffer, GlobalState& state,
                        const StrategyConfig& cfg) {
    if (buffer.empty()) throw ValueError("fedbuff_apply: empty buffer");
    const std::size_t dim = state.theta.dim();
    ParamVector mean_delta(dim, 0.0);
    double weight_sum = 0.0;
    for (const auto& u : buffer) {
        axpy(mean_delta, u.weight, u.v.dc);
        weight_sum += u.weight;
    }
    if (weight_sum > 0.0) {
        for (auto& x : mean_delta.values) x /= weight_sum;
    }

    ApplyInfo info;
    info.step = cfg.eta_g;
    ParamVector next = state.theta;
    axpy(next, cfg.eta_g, mean_delta);
    commit(state, std::move(next));
    info.version_advanced = true;
    buffer.clear();
    return info;
}

Strategy::Strategy(StrategyConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.eta_g <= 0.0) throw ConfigError("strategy: eta_g must be > 0");
    if (cfg_.buffer_k < 1) throw ConfigError("strategy: buffer_k must be >= 1");
    if (cfg_.alpha < 0.0 || cfg_.alpha > 1.0) throw ConfigError("strategy: alpha must be in [0,1]");
    if (cfg_.vartheta < -1.0 || cfg_.vartheta > 1.0) {
        throw ConfigError("strategy: vartheta must be in [-1,1]");
    }
    if (cfg_.correction.kind == CorrectionKind::OrthoDC) {
        cfg_.correction.vartheta = cfg_.vartheta;
    }
}

ApplyInfo Strategy::apply(GlobalState& state, const ClientUpdate& update,
                          const ParamVector& theta_then) {
    if (update.origin_version > state.version) {
        throw ValueError("update origin version is ahead of the server");
    }
    switch (cfg_.kind) {
        case StrategyKind::AsyncBezier:
            return asyncbezier_apply(state, update, cfg_, cfg_.correction, theta_then,
                                     &counters_, &dcasgd_state_);
        case StrategyKind::FedAsync:
        case StrategyKind::FedGS:
        case StrategyKind::FedOrtho:
            return fedasync_apply(state, update, cfg_, theta_then);
        case StrategyKind::DcAsgd: {
            ClientUpdate corrected = update;
            corrected.v.dc = dcasgd_correct(update.v.dc, state.theta, theta_then,
                                            cfg_.correction.lambda0,
                                            cfg_.correction.adaptive ? &dcasgd_state_ : nullptr);
            StrategyConfig plain = cfg_;
            plain.kind = StrategyKind::FedAsync;
            return fedasync_apply(state, corrected, plain, theta_then);
        }
        case StrategyKind::FedBuff: {
            buffer_.push_back(update);
            if (static_cast<int>(buffer_.size()) >= cfg_.buffer_k) {
                return fedbuff_apply(buffer_, state, cfg_);
            }
            ApplyInfo info;
            info.buffered = static_cast<int>(buffer_.size());
            return info;
        }
    }
    throw ConfigError("strategy: unknown kind");
}

ApplyInfo Strategy::flush_remaining(GlobalState& state) {
    if (cfg_.kind != StrategyKind::FedBuff || buffer_.empty()) return {};
    counters_.partial_flushes++;
    log_info("fedbuff: flushing short buffer of " + std::to_string(buffer_.size()) +
             " updates at run end");
    return fedbuff_apply(buffer_, state, cfg_);
}

} // namespace fedcurve
