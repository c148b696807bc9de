#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "loss.hpp"

namespace aga {

struct GradCheckConfig {
    double step = 1e-5;            // central-difference half step
    double kink_margin = 1e-4;     // required distance of ReLU/ELU pre-activations from 0
    double nudge = 1e-3;           // uniform batch perturbation when the margin is violated
    std::size_t max_nudges = 64;
    // Parameters whose analytic and numeric gradients agree to this absolute
    // tolerance count as exact. Needed for structurally dead parameters (for
    // example a Linear bias feeding straight into BatchNorm, which the mean
    // subtraction cancels): their true gradient is zero, and the central
    // difference only recovers zero up to ~1e-11 of cancellation noise.
    double zero_tolerance = 1e-9;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t parameter_count = 0;
    std::size_t nudges = 0;  // batch perturbations needed to clear kinks
};

namespace detail {

inline double trace_kink_margin(const Network& net, const ForwardTrace& trace) {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& layer = net.layers[i];
        if (!std::holds_alternative<ReluLayer>(layer) && !std::holds_alternative<EluLayer>(layer))
            continue;
        for (double v : trace.caches[i].input.data) margin = std::min(margin, std::abs(v));
    }
    return margin;
}

inline double kink_margin(Network& net, const Matrix& batch, Mode mode, std::uint64_t rng_seed,
                          const LossSpec& loss) {
    Rng rng(rng_seed);
    ForwardTrace trace = forward(net, batch, mode, &rng);
    double margin = trace_kink_margin(net, trace);
    if (const auto* comp = std::get_if<CompositeLoss>(&loss)) {
        ForwardTrace gtrace = forward(*comp->attribute_regressor, trace.output);
        margin = std::min(margin, trace_kink_margin(*comp->attribute_regressor, gtrace));
    }
    return margin;
}

}  // namespace detail

// Central-difference check of every analytic parameter gradient. Works on
// private copies; dropout draws are pinned by `rng_seed` so each evaluation
// sees the same masks. Batches that put a ReLU/ELU pre-activation within
// `kink_margin` of its kink are nudged away first, since the loss is not
// differentiable there and finite differences would straddle the corner.
inline GradCheckResult grad_check(const Network& net, const Matrix& batch, Mode mode,
                                  std::uint64_t rng_seed, const LossSpec& loss,
                                  const GradCheckConfig& cfg = {}) {
    if (!(cfg.step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");
    Network work = net;
    Matrix b = batch;

    GradCheckResult result;
    double margin = detail::kink_margin(work, b, mode, rng_seed, loss);
    while (margin < cfg.kink_margin && result.nudges < cfg.max_nudges) {
        Rng nudge_rng(derive_seed(rng_seed, 17 * (result.nudges + 1)));
        for (double& v : b.data) v += nudge_rng.uniform(-cfg.nudge, cfg.nudge);
        margin = detail::kink_margin(work, b, mode, rng_seed, loss);
        ++result.nudges;
    }
    if (margin < cfg.kink_margin)
        throw std::runtime_error("grad_check: could not move batch clear of activation kinks");

    LossGrads analytic = loss_gradients(work, b, mode, rng_seed, loss);
    auto params = parameter_spans(work);
    auto aspans = gradient_spans(work, analytic.grads);

    for (std::size_t s = 0; s < params.size(); ++s) {
        for (std::size_t i = 0; i < params[s].size(); ++i) {
            const double saved = params[s][i];
            params[s][i] = saved + cfg.step;
            const double up = loss_value(work, b, mode, rng_seed, loss);
            params[s][i] = saved - cfg.step;
            const double down = loss_value(work, b, mode, rng_seed, loss);
            params[s][i] = saved;
            const double numeric = (up - down) / (2.0 * cfg.step);
            const double a = aspans[s][i];
            const double gap = std::abs(a - numeric);
            const double rel =
                gap <= cfg.zero_tolerance ? 0.0 : gap / std::max(1e-8, std::abs(a) + std::abs(numeric));
            result.max_rel_error = std::max(result.max_rel_error, rel);
            ++result.parameter_count;
        }
    }
    return result;
}

}  // namespace aga
