#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "fedcurve/curve.hpp"
#include "fedcurve/params.hpp"

namespace fedcurve {

// Message from a client to the server.
struct ClientUpdate {
    int client = 0;
    long origin_version = 0; // t: version the client trained against
    ReparamVector v;         // control-point displacement (da is all-zeros)
    double weight = 1.0;     // w_i
    double dispatch_time = 0.0;
};

// Window of recent global models keyed by version. capacity 0 keeps all
// entries; otherwise the oldest are evicted past the capacity.
class ModelHistory {
public:
    explicit ModelHistory(std::size_t capacity = 0) : capacity_(capacity) {}

    void push(long version, const ParamVector& theta) {
        buf_.emplace_back(version, theta);
        if (capacity_ > 0) {
            while (buf_.size() > capacity_) buf_.pop_front();
        }
    }

    // nullptr when the version has been evicted (or never stored)
    const ParamVector* find(long version) const {
        for (auto it = buf_.rbegin(); it != buf_.rend(); ++it) {
            if (it->first == version) return &it->second;
        }
        return nullptr;
    }

    std::size_t size() const { return buf_.size(); }

    // most recent `window` models, oldest first
    std::vector<ParamVector> tail(std::size_t window) const;

private:
    std::size_t capacity_;
    std::deque<std::pair<long, ParamVector>> buf_;
};

// Server-owned optimisation state: the current global model, its version
// counter and the bookkeeping needed to resolve stale updates.
struct GlobalState {
    ParamVector theta;
    long version = 0;
    ModelHistory history;
    std::vector<long> per_client_origin;

    GlobalState() = default;
    GlobalState(ParamVector initial, std::size_t history_capacity, int n_clients)
        : theta(std::move(initial)),
          history(history_capacity),
          per_client_origin(static_cast<std::size_t>(n_clients), 0) {
        history.push(0, theta);
    }
};

} // namespace fedcurve
