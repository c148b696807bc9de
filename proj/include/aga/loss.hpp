#pragma once

#include <cstdint>
#include <stdexcept>
#include <variant>

#include "network.hpp"

namespace aga {

// Mean squared error against a fixed target matrix (mean over all entries).
struct MseLoss {
    Matrix target;
};

// Attribute-steering loss for an encoder-decoder f with identical input and
// output width: mean_i [ (g(f(x_i)) - target)^2 + lambda * |f(x_i) - x_i|^2 ]
// where g is a frozen attribute regressor evaluated in Eval mode. Gradients
// flow through g's weights and running statistics, but g itself receives no
// update.
struct CompositeLoss {
    const Network* attribute_regressor = nullptr;
    double target = 0.0;
    double lambda = 0.01;
};

using LossSpec = std::variant<MseLoss, CompositeLoss>;

struct LossGrads {
    double value = 0.0;
    Gradients grads;
};

namespace detail {

inline void check_composite(const Network& net, const CompositeLoss& loss) {
    if (loss.attribute_regressor == nullptr)
        throw std::invalid_argument("composite loss: attribute regressor is null");
    if (network_output_dim(*loss.attribute_regressor) != 1)
        throw std::invalid_argument("composite loss: attribute regressor must output a scalar");
    if (network_output_dim(net) != net.input_dim)
        throw std::invalid_argument("composite loss: network must map inputs to the same width");
    if (net.input_dim != loss.attribute_regressor->input_dim)
        throw std::invalid_argument("composite loss: regressor input width does not match network output");
    if (!(loss.lambda >= 0.0)) throw std::invalid_argument("composite loss: lambda must be >= 0");
}

}  // namespace detail

// Loss at the current parameters. `rng_seed` fixes the dropout masks, so the
// same call is exactly repeatable (the gradient checker relies on this).
inline double loss_value(Network& net, const Matrix& batch, Mode mode, std::uint64_t rng_seed,
                         const LossSpec& loss) {
    Rng rng(rng_seed);
    ForwardTrace trace = forward(net, batch, mode, &rng);
    const Matrix& y = trace.output;
    const double n = static_cast<double>(y.rows);

    if (const auto* mse = std::get_if<MseLoss>(&loss)) {
        if (!mse->target.same_shape(y))
            throw std::invalid_argument("mse loss: target shape does not match network output");
        double sum = 0.0;
        for (std::size_t i = 0; i < y.data.size(); ++i) {
            const double d = y.data[i] - mse->target.data[i];
            sum += d * d;
        }
        return sum / static_cast<double>(y.data.size());
    }

    const auto& comp = std::get<CompositeLoss>(loss);
    detail::check_composite(net, comp);
    ForwardTrace gtrace = forward(*comp.attribute_regressor, y);
    double sum = 0.0;
    for (std::size_t r = 0; r < y.rows; ++r) {
        const double d = gtrace.output(r, 0) - comp.target;
        sum += d * d;
        for (std::size_t c = 0; c < y.cols; ++c) {
            const double rdiff = y(r, c) - batch(r, c);
            sum += comp.lambda * rdiff * rdiff;
        }
    }
    return sum / n;
}

// Loss plus gradients with respect to every trainable parameter of `net`
// (and the input batch). For the composite loss the regressor contributes
// only via the chain rule; its own parameter gradients are discarded.
inline LossGrads loss_gradients(Network& net, const Matrix& batch, Mode mode, std::uint64_t rng_seed,
                                const LossSpec& loss) {
    Rng rng(rng_seed);
    ForwardTrace trace = forward(net, batch, mode, &rng);
    const Matrix& y = trace.output;
    const double n = static_cast<double>(y.rows);

    LossGrads out;
    Matrix dy(y.rows, y.cols);

    if (const auto* mse = std::get_if<MseLoss>(&loss)) {
        if (!mse->target.same_shape(y))
            throw std::invalid_argument("mse loss: target shape does not match network output");
        double sum = 0.0;
        const double scale = 2.0 / static_cast<double>(y.data.size());
        for (std::size_t i = 0; i < y.data.size(); ++i) {
            const double d = y.data[i] - mse->target.data[i];
            sum += d * d;
            dy.data[i] = scale * d;
        }
        out.value = sum / static_cast<double>(y.data.size());
    } else {
        const auto& comp = std::get<CompositeLoss>(loss);
        detail::check_composite(net, comp);
        ForwardTrace gtrace = forward(*comp.attribute_regressor, y);
        Matrix dg(y.rows, 1);
        double sum = 0.0;
        for (std::size_t r = 0; r < y.rows; ++r) {
            const double d = gtrace.output(r, 0) - comp.target;
            sum += d * d;
            dg(r, 0) = 2.0 * d / n;
        }
        Gradients ggrads = backward(*comp.attribute_regressor, gtrace, dg);
        for (std::size_t r = 0; r < y.rows; ++r) {
            for (std::size_t c = 0; c < y.cols; ++c) {
                const double rdiff = y(r, c) - batch(r, c);
                sum += comp.lambda * rdiff * rdiff;
                dy(r, c) = ggrads.input(r, c) + 2.0 * comp.lambda * rdiff / n;
            }
        }
        out.value = sum / n;
    }

    out.grads = backward(net, trace, dy);
    return out;
}

}  // namespace aga
