#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace aga {

enum class Mode { Train, Eval };

struct LinearLayer {
    Matrix weight;             // in_dim x out_dim
    std::vector<double> bias;  // out_dim

    std::size_t in_dim() const { return weight.rows; }
    std::size_t out_dim() const { return weight.cols; }
};

struct BatchNormLayer {
    std::vector<double> scale;  // gamma, init 1
    std::vector<double> shift;  // beta, init 0
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double epsilon = 1e-5;
    double momentum = 0.1;

    explicit BatchNormLayer(std::size_t dim = 0)
        : scale(dim, 1.0), shift(dim, 0.0), running_mean(dim, 0.0), running_var(dim, 1.0) {}

    std::size_t dim() const { return scale.size(); }
};

struct ReluLayer {};

struct EluLayer {
    double alpha = 1.0;
};

struct DropoutLayer {
    double rate = 0.25;
};

using Layer = std::variant<LinearLayer, BatchNormLayer, ReluLayer, EluLayer, DropoutLayer>;

struct Network {
    std::size_t input_dim = 0;
    std::vector<Layer> layers;
};

inline const char* layer_name(const Layer& layer) {
    switch (layer.index()) {
        case 0: return "Linear";
        case 1: return "BatchNorm";
        case 2: return "ReLU";
        case 3: return "ELU";
        default: return "Dropout";
    }
}

// Walks the stack and returns the output dimension; throws on any
// inter-layer dimension conflict.
inline std::size_t validate_network(const Network& net) {
    if (net.input_dim == 0) throw std::invalid_argument("network: input_dim must be positive");
    std::size_t dim = net.input_dim;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& layer = net.layers[i];
        if (const auto* lin = std::get_if<LinearLayer>(&layer)) {
            if (lin->in_dim() == 0 || lin->out_dim() == 0)
                throw std::invalid_argument("network: layer " + std::to_string(i) +
                                            " (Linear) has empty weight matrix");
            if (lin->bias.size() != lin->out_dim())
                throw std::invalid_argument("network: layer " + std::to_string(i) +
                                            " (Linear) bias length mismatch");
            if (lin->in_dim() != dim)
                throw std::invalid_argument("network: layer " + std::to_string(i) +
                                            " (Linear) expects input dim " +
                                            std::to_string(lin->in_dim()) + ", got " +
                                            std::to_string(dim));
            dim = lin->out_dim();
        } else if (const auto* bn = std::get_if<BatchNormLayer>(&layer)) {
            if (bn->dim() != dim || bn->shift.size() != bn->dim() ||
                bn->running_mean.size() != bn->dim() || bn->running_var.size() != bn->dim())
                throw std::invalid_argument("network: layer " + std::to_string(i) +
                                            " (BatchNorm) dimension mismatch");
            if (!(bn->epsilon > 0.0))
                throw std::invalid_argument("network: layer " + std::to_string(i) +
                                            " (BatchNorm) epsilon must be positive");
        } else if (const auto* drop = std::get_if<DropoutLayer>(&layer)) {
            if (drop->rate < 0.0 || drop->rate >= 1.0)
                throw std::invalid_argument("network: layer " + std::to_string(i) +
                                            " (Dropout) rate outside [0,1)");
        }
    }
    return dim;
}

inline std::size_t network_output_dim(const Network& net) { return validate_network(net); }

inline bool network_has_dropout(const Network& net) {
    for (const Layer& layer : net.layers)
        if (std::holds_alternative<DropoutLayer>(layer)) return true;
    return false;
}

// Glorot-uniform weights, zero biases; BatchNorm scale/shift and running
// stats reset to their identity values.
inline void init_parameters(Network& net, Rng& rng) {
    validate_network(net);
    for (Layer& layer : net.layers) {
        if (auto* lin = std::get_if<LinearLayer>(&layer)) {
            const double bound = std::sqrt(6.0 / static_cast<double>(lin->in_dim() + lin->out_dim()));
            for (double& w : lin->weight.data) w = rng.uniform(-bound, bound);
            for (double& b : lin->bias) b = 0.0;
        } else if (auto* bn = std::get_if<BatchNormLayer>(&layer)) {
            std::fill(bn->scale.begin(), bn->scale.end(), 1.0);
            std::fill(bn->shift.begin(), bn->shift.end(), 0.0);
            std::fill(bn->running_mean.begin(), bn->running_mean.end(), 0.0);
            std::fill(bn->running_var.begin(), bn->running_var.end(), 1.0);
        }
    }
}

// Per-layer activation cache recorded during forward; exactly what the
// corresponding backward needs, nothing more.
struct LayerCache {
    Matrix input;       // Linear, ReLU, ELU
    Matrix normalized;  // BatchNorm: x_hat
    std::vector<double> inv_std;  // BatchNorm: 1/sqrt(var+eps) (batch or running)
    Matrix mask;        // Dropout: scaled keep mask
};

struct ForwardTrace {
    Mode mode = Mode::Eval;
    std::vector<LayerCache> caches;
    Matrix output;
};

namespace detail {

inline void check_layer_finite(const Matrix& out, std::size_t index, const Layer& layer) {
    if (!all_finite(out))
        throw std::runtime_error("forward: non-finite values after layer " + std::to_string(index) +
                                 " (" + layer_name(layer) + ")");
}

}  // namespace detail

// Runs the stack on a batch (rows are samples). Train mode updates BatchNorm
// running statistics and samples dropout masks from `rng`; Eval mode uses
// running statistics and passes dropout through unscaled.
inline ForwardTrace forward(Network& net, const Matrix& batch, Mode mode, Rng* rng = nullptr) {
    validate_network(net);
    if (batch.cols != net.input_dim)
        throw std::invalid_argument("forward: batch has " + std::to_string(batch.cols) +
                                    " columns, network expects " + std::to_string(net.input_dim));
    if (batch.rows == 0) throw std::invalid_argument("forward: empty batch");
    if (!all_finite(batch)) throw std::runtime_error("forward: non-finite values in input batch");
    if (mode == Mode::Train && rng == nullptr && network_has_dropout(net))
        throw std::invalid_argument("forward: Train mode with Dropout layers requires an rng");

    ForwardTrace trace;
    trace.mode = mode;
    trace.caches.resize(net.layers.size());
    Matrix x = batch;

    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        Layer& layer = net.layers[i];
        LayerCache& cache = trace.caches[i];
        if (auto* lin = std::get_if<LinearLayer>(&layer)) {
            cache.input = x;
            Matrix y = matmul(x, lin->weight);
            for (std::size_t r = 0; r < y.rows; ++r)
                for (std::size_t c = 0; c < y.cols; ++c) y(r, c) += lin->bias[c];
            x = std::move(y);
        } else if (auto* bn = std::get_if<BatchNormLayer>(&layer)) {
            const std::size_t d = bn->dim();
            const std::size_t n = x.rows;
            cache.inv_std.assign(d, 0.0);
            cache.normalized = Matrix(n, d);
            if (mode == Mode::Train) {
                if (n < 2)
                    throw std::invalid_argument("forward: BatchNorm at layer " + std::to_string(i) +
                                                " needs batch size >= 2 in Train mode");
                for (std::size_t c = 0; c < d; ++c) {
                    double mean = 0.0;
                    for (std::size_t r = 0; r < n; ++r) mean += x(r, c);
                    mean /= static_cast<double>(n);
                    double var = 0.0;
                    for (std::size_t r = 0; r < n; ++r) {
                        const double dlt = x(r, c) - mean;
                        var += dlt * dlt;
                    }
                    var /= static_cast<double>(n);  // biased, used for normalization
                    const double inv = 1.0 / std::sqrt(var + bn->epsilon);
                    cache.inv_std[c] = inv;
                    for (std::size_t r = 0; r < n; ++r) {
                        const double xhat = (x(r, c) - mean) * inv;
                        cache.normalized(r, c) = xhat;
                        x(r, c) = bn->scale[c] * xhat + bn->shift[c];
                    }
                    const double var_unbiased = var * static_cast<double>(n) / static_cast<double>(n - 1);
                    bn->running_mean[c] = (1.0 - bn->momentum) * bn->running_mean[c] + bn->momentum * mean;
                    bn->running_var[c] = (1.0 - bn->momentum) * bn->running_var[c] + bn->momentum * var_unbiased;
                }
            } else {
                for (std::size_t c = 0; c < d; ++c) {
                    const double inv = 1.0 / std::sqrt(bn->running_var[c] + bn->epsilon);
                    cache.inv_std[c] = inv;
                    for (std::size_t r = 0; r < n; ++r) {
                        const double xhat = (x(r, c) - bn->running_mean[c]) * inv;
                        cache.normalized(r, c) = xhat;
                        x(r, c) = bn->scale[c] * xhat + bn->shift[c];
                    }
                }
            }
        } else if (std::holds_alternative<ReluLayer>(layer)) {
            cache.input = x;
            for (double& v : x.data) v = v > 0.0 ? v : 0.0;
        } else if (const auto* elu = std::get_if<EluLayer>(&layer)) {
            cache.input = x;
            for (double& v : x.data) v = v > 0.0 ? v : elu->alpha * std::expm1(v);
        } else {
            const auto& drop = std::get<DropoutLayer>(layer);
            if (mode == Mode::Train && drop.rate > 0.0) {
                // inverted dropout: surviving units scaled by 1/(1-rate) so
                // Eval needs no rescaling
                const double keep_scale = 1.0 / (1.0 - drop.rate);
                cache.mask = Matrix(x.rows, x.cols);
                for (std::size_t idx = 0; idx < x.data.size(); ++idx) {
                    const double m = rng->bernoulli(drop.rate) ? 0.0 : keep_scale;
                    cache.mask.data[idx] = m;
                    x.data[idx] *= m;
                }
            } else if (mode == Mode::Train) {
                cache.mask = Matrix(x.rows, x.cols, 1.0);
            }
            // Eval: identity, no cache needed
        }
        detail::check_layer_finite(x, i, layer);
    }
    trace.output = x;
    return trace;
}

// Eval-only forward on a const network (no running-stat updates, no dropout).
inline ForwardTrace forward(const Network& net, const Matrix& batch) {
    return forward(const_cast<Network&>(net), batch, Mode::Eval, nullptr);
}

struct LayerGrads {
    Matrix weight;              // Linear
    std::vector<double> bias;   // Linear
    std::vector<double> scale;  // BatchNorm
    std::vector<double> shift;  // BatchNorm
};

struct Gradients {
    std::vector<LayerGrads> layers;
    Matrix input;  // dL/d(batch)
};

// Backpropagates `output_grad` (dL/d output, same shape as trace.output)
// through the stack the trace was recorded from.
inline Gradients backward(const Network& net, const ForwardTrace& trace, const Matrix& output_grad) {
    if (trace.caches.size() != net.layers.size())
        throw std::invalid_argument("backward: trace does not match network (missing or stale activations)");
    if (!output_grad.same_shape(trace.output))
        throw std::invalid_argument("backward: output_grad shape does not match traced output");
    if (!all_finite(output_grad)) throw std::runtime_error("backward: non-finite output gradient");

    Gradients grads;
    grads.layers.resize(net.layers.size());
    Matrix g = output_grad;

    for (std::size_t ri = net.layers.size(); ri-- > 0;) {
        const Layer& layer = net.layers[ri];
        const LayerCache& cache = trace.caches[ri];
        LayerGrads& lg = grads.layers[ri];
        if (const auto* lin = std::get_if<LinearLayer>(&layer)) {
            if (cache.input.rows != g.rows || cache.input.cols != lin->in_dim())
                throw std::invalid_argument("backward: stale activations at layer " + std::to_string(ri));
            lg.weight = matmul_at(cache.input, g);
            lg.bias.assign(lin->out_dim(), 0.0);
            for (std::size_t r = 0; r < g.rows; ++r)
                for (std::size_t c = 0; c < g.cols; ++c) lg.bias[c] += g(r, c);
            g = matmul_bt(g, lin->weight);
        } else if (const auto* bn = std::get_if<BatchNormLayer>(&layer)) {
            const std::size_t d = bn->dim();
            const std::size_t n = g.rows;
            if (cache.normalized.rows != n || cache.normalized.cols != d)
                throw std::invalid_argument("backward: stale activations at layer " + std::to_string(ri));
            lg.scale.assign(d, 0.0);
            lg.shift.assign(d, 0.0);
            for (std::size_t c = 0; c < d; ++c) {
                for (std::size_t r = 0; r < n; ++r) {
                    lg.scale[c] += g(r, c) * cache.normalized(r, c);
                    lg.shift[c] += g(r, c);
                }
            }
            if (trace.mode == Mode::Train) {
                // batch statistics took part in the forward pass, so the
                // gradient couples all rows of each column
                Matrix dx(n, d);
                for (std::size_t c = 0; c < d; ++c) {
                    const double inv = cache.inv_std[c];
                    const double sum_dy = lg.shift[c];
                    const double sum_dy_xhat = lg.scale[c];
                    for (std::size_t r = 0; r < n; ++r) {
                        const double dxhat = g(r, c) * bn->scale[c];
                        dx(r, c) = inv * (dxhat - (sum_dy * bn->scale[c] +
                                                   cache.normalized(r, c) * sum_dy_xhat * bn->scale[c]) /
                                                      static_cast<double>(n));
                    }
                }
                g = std::move(dx);
            } else {
                for (std::size_t c = 0; c < d; ++c) {
                    const double k = bn->scale[c] * cache.inv_std[c];
                    for (std::size_t r = 0; r < n; ++r) g(r, c) *= k;
                }
            }
        } else if (std::holds_alternative<ReluLayer>(layer)) {
            if (!cache.input.same_shape(g))
                throw std::invalid_argument("backward: stale activations at layer " + std::to_string(ri));
            for (std::size_t idx = 0; idx < g.data.size(); ++idx)
                if (cache.input.data[idx] <= 0.0) g.data[idx] = 0.0;
        } else if (const auto* elu = std::get_if<EluLayer>(&layer)) {
            if (!cache.input.same_shape(g))
                throw std::invalid_argument("backward: stale activations at layer " + std::to_string(ri));
            for (std::size_t idx = 0; idx < g.data.size(); ++idx) {
                const double x = cache.input.data[idx];
                if (x <= 0.0) g.data[idx] *= elu->alpha * std::exp(x);
            }
        } else {
            if (trace.mode == Mode::Train) {
                if (!cache.mask.same_shape(g))
                    throw std::invalid_argument("backward: stale activations at layer " + std::to_string(ri));
                for (std::size_t idx = 0; idx < g.data.size(); ++idx) g.data[idx] *= cache.mask.data[idx];
            }
        }
        if (!all_finite(g))
            throw std::runtime_error("backward: non-finite gradient below layer " + std::to_string(ri));
    }
    grads.input = std::move(g);
    return grads;
}

// Flat views over all trainable parameters in a fixed order (layer by layer:
// Linear weight then bias; BatchNorm scale then shift). Same order is used by
// gradient_spans and the Adam state, so the three always zip cleanly.
inline std::vector<std::span<double>> parameter_spans(Network& net) {
    std::vector<std::span<double>> spans;
    for (Layer& layer : net.layers) {
        if (auto* lin = std::get_if<LinearLayer>(&layer)) {
            spans.emplace_back(lin->weight.data);
            spans.emplace_back(lin->bias);
        } else if (auto* bn = std::get_if<BatchNormLayer>(&layer)) {
            spans.emplace_back(bn->scale);
            spans.emplace_back(bn->shift);
        }
    }
    return spans;
}

inline std::vector<std::span<const double>> parameter_spans(const Network& net) {
    std::vector<std::span<const double>> spans;
    for (const Layer& layer : net.layers) {
        if (const auto* lin = std::get_if<LinearLayer>(&layer)) {
            spans.emplace_back(lin->weight.data);
            spans.emplace_back(lin->bias);
        } else if (const auto* bn = std::get_if<BatchNormLayer>(&layer)) {
            spans.emplace_back(bn->scale);
            spans.emplace_back(bn->shift);
        }
    }
    return spans;
}

inline std::vector<std::span<double>> gradient_spans(const Network& net, Gradients& grads) {
    if (grads.layers.size() != net.layers.size())
        throw std::invalid_argument("gradient_spans: gradients do not match network");
    std::vector<std::span<double>> spans;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& layer = net.layers[i];
        LayerGrads& lg = grads.layers[i];
        if (std::holds_alternative<LinearLayer>(layer)) {
            spans.emplace_back(lg.weight.data);
            spans.emplace_back(lg.bias);
        } else if (std::holds_alternative<BatchNormLayer>(layer)) {
            spans.emplace_back(lg.scale);
            spans.emplace_back(lg.shift);
        }
    }
    return spans;
}

inline std::size_t parameter_count(const Network& net) {
    std::size_t n = 0;
    for (const auto& span : parameter_spans(net)) n += span.size();
    return n;
}

}  // namespace aga
