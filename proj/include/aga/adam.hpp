#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "network.hpp"

namespace aga {

// Adam state aligned with parameter_spans(net) order.
struct AdamState {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;  // decoupled, applied to linear weights only
    std::uint64_t timestep = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

inline AdamState make_adam(const Network& net, double learning_rate) {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("make_adam: learning_rate must be positive");
    AdamState state;
    state.learning_rate = learning_rate;
    for (const auto& span : parameter_spans(net)) {
        state.m.emplace_back(span.size(), 0.0);
        state.v.emplace_back(span.size(), 0.0);
    }
    return state;
}

// One bias-corrected Adam update over every trainable parameter.
inline void adam_step(Network& net, Gradients& grads, AdamState& state) {
    auto params = parameter_spans(net);
    auto gspans = gradient_spans(net, grads);
    if (params.size() != state.m.size())
        throw std::invalid_argument("adam_step: state does not match network");

    for (std::size_t s = 0; s < gspans.size(); ++s) {
        if (gspans[s].size() != params[s].size())
            throw std::invalid_argument("adam_step: gradient shape does not match parameters");
        for (double g : gspans[s])
            if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient input");
    }

    state.timestep += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.timestep));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.timestep));

    // decay targets linear weights only; biases and BatchNorm scale/shift set
    // offsets where shrinkage would just fight the data
    std::vector<std::uint8_t> decay(params.size(), 0);
    if (state.weight_decay > 0.0) {
        std::size_t s = 0;
        for (const Layer& layer : net.layers) {
            if (std::holds_alternative<LinearLayer>(layer)) {
                decay[s] = 1;
                s += 2;
            } else if (std::holds_alternative<BatchNormLayer>(layer)) {
                s += 2;
            }
        }
    }

    for (std::size_t s = 0; s < params.size(); ++s) {
        auto p = params[s];
        auto g = gspans[s];
        auto& m = state.m[s];
        auto& v = state.v[s];
        const double shrink = decay[s] ? state.learning_rate * state.weight_decay : 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon) + shrink * p[i];
        }
    }
}

}  // namespace aga
