#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "adam.hpp"
#include "dataset.hpp"
#include "loss.hpp"
#include "network.hpp"
#include "parallel.hpp"
#include "stats.hpp"

namespace aga {

struct RegressorTrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 300;
    double learning_rate = 0.001;
    std::size_t hidden = 64;
    double weight_decay = 0.0;  // L2 shrinkage; pulls the readout toward the
                                // minimum-norm solution, which generalizes
                                // across classes instead of keying on them
    std::uint64_t seed = 0;
};

// Scalar attribute predictor: Linear(D->H), BatchNorm, ReLU, Linear(H->1).
struct AttributeRegressor {
    std::string attribute;
    Network network;
    RegressorTrainConfig config;
    std::vector<double> epoch_losses;  // mean training MSE per epoch; diagnostics only
};

inline Network make_regressor_net(std::size_t input_dim, std::size_t hidden) {
    if (input_dim == 0 || hidden == 0)
        throw std::invalid_argument("make_regressor_net: dimensions must be positive");
    Network net;
    net.input_dim = input_dim;
    LinearLayer l1;
    l1.weight = Matrix(input_dim, hidden);
    l1.bias.assign(hidden, 0.0);
    net.layers.emplace_back(std::move(l1));
    net.layers.emplace_back(BatchNormLayer(hidden));
    net.layers.emplace_back(ReluLayer{});
    LinearLayer l2;
    l2.weight = Matrix(hidden, 1);
    l2.bias.assign(1, 0.0);
    net.layers.emplace_back(std::move(l2));
    return net;
}

inline void validate_train_config(const RegressorTrainConfig& cfg) {
    if (cfg.epochs == 0) throw std::invalid_argument("regressor: epochs must be >= 1");
    if (cfg.batch_size < 2) throw std::invalid_argument("regressor: batch_size must be >= 2");
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("regressor: learning_rate must be > 0");
    if (cfg.hidden == 0) throw std::invalid_argument("regressor: hidden width must be >= 1");
    if (cfg.weight_decay < 0.0) throw std::invalid_argument("regressor: weight_decay must be >= 0");
}

// Adam-trained MSE regression of one attribute on the given samples.
inline AttributeRegressor train_regressor(const FeatureDataset& ds,
                                          std::span<const std::size_t> indices,
                                          const std::string& attribute,
                                          const RegressorTrainConfig& cfg) {
    validate_train_config(cfg);
    const std::size_t attr = ds.attribute_index(attribute);
    if (indices.size() < cfg.batch_size)
        throw std::invalid_argument("train_regressor: " + std::to_string(indices.size()) +
                                    " samples for batch size " + std::to_string(cfg.batch_size));

    Matrix x(indices.size(), ds.dim);
    Matrix y(indices.size(), 1);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const AttributeSample& s = ds.samples[indices[i]];
        std::copy(s.features.begin(), s.features.end(), x.row(i).begin());
        y(i, 0) = s.attributes[attr];
    }

    // standardized targets keep the optimization scale-free across attributes;
    // the affine map folds back into the output layer below, so the stored
    // network predicts raw attribute values
    double t_mean = 0.0;
    for (std::size_t i = 0; i < indices.size(); ++i) t_mean += y(i, 0);
    t_mean /= static_cast<double>(indices.size());
    double t_var = 0.0;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const double d = y(i, 0) - t_mean;
        t_var += d * d;
    }
    const double t_std = std::sqrt(std::max(t_var / static_cast<double>(indices.size()), 1e-24));
    for (std::size_t i = 0; i < indices.size(); ++i) y(i, 0) = (y(i, 0) - t_mean) / t_std;

    AttributeRegressor reg;
    reg.attribute = attribute;
    reg.config = cfg;
    reg.network = make_regressor_net(ds.dim, cfg.hidden);
    Rng init_rng(derive_seed(cfg.seed, 0x11));
    init_parameters(reg.network, init_rng);

    AdamState adam = make_adam(reg.network, cfg.learning_rate);
    adam.weight_decay = cfg.weight_decay;
    Rng order_rng(derive_seed(cfg.seed, 0x12));
    std::vector<std::size_t> order(indices.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t size = std::min(cfg.batch_size, order.size() - start);
            if (size < 2) break;  // BatchNorm cannot train on a single row
            Matrix bx(size, ds.dim);
            Matrix by(size, 1);
            for (std::size_t r = 0; r < size; ++r) {
                const std::size_t src = order[start + r];
                std::copy(x.row(src).begin(), x.row(src).end(), bx.row(r).begin());
                by(r, 0) = y(src, 0);
            }
            LossGrads lg = loss_gradients(reg.network, bx, Mode::Train, 0, MseLoss{std::move(by)});
            adam_step(reg.network, lg.grads, adam);
            epoch_loss += lg.value * static_cast<double>(size);
            seen += size;
        }
        reg.epoch_losses.push_back(epoch_loss / static_cast<double>(seen));
    }
    return reg;
}

inline AttributeRegressor train_regressor(const FeatureDataset& ds, const std::string& attribute,
                                          const RegressorTrainConfig& cfg) {
    return train_regressor(ds, all_indices(ds), attribute, cfg);
}

// Attributes are non-negative by construction, so predictions clamp at zero.
// The raw network output (used inside the synthesis loss, where a clamp would
// kill the gradient) is available via predict_attribute_raw.
inline double predict_attribute_raw(const AttributeRegressor& reg, std::span<const double> features) {
    ForwardTrace trace = forward(reg.network, matrix_from_row(features));
    return trace.output(0, 0);
}

inline double predict_attribute(const AttributeRegressor& reg, std::span<const double> features) {
    return std::max(0.0, predict_attribute_raw(reg, features));
}

inline std::vector<double> predict_attribute_batch(const AttributeRegressor& reg,
                                                   const FeatureDataset& ds,
                                                   std::span<const std::size_t> indices) {
    if (indices.empty()) return {};
    Matrix x(indices.size(), ds.dim);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto& f = ds.samples[indices[i]].features;
        std::copy(f.begin(), f.end(), x.row(i).begin());
    }
    ForwardTrace trace = forward(reg.network, x);
    std::vector<double> out(indices.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, trace.output(i, 0));
    return out;
}

struct RegressionTableRow {
    std::string class_label;
    std::size_t train_count = 0;
    std::size_t test_count = 0;
    double per_object_mae = 0.0;  // median absolute error, per-class regressor
    double agnostic_mae = 0.0;    // median absolute error, class-agnostic regressor
};

struct RegressionTable {
    std::string attribute;
    std::vector<RegressionTableRow> rows;
    double per_object_mean = 0.0;   // mean of per-class MAEs
    double agnostic_mean = 0.0;
    double agnostic_overall_mae = 0.0;  // pooled held-out median absolute error
};

// Per-class versus class-agnostic regression comparison on the dataset's
// Train/Test split. Per-class regressors shrink their batch to the class's
// training pool when needed; classes lacking train or test samples are
// skipped. Class rows train independently, so they parallelize cleanly.
inline RegressionTable regression_protocol(const FeatureDataset& ds, const std::string& attribute,
                                           const RegressorTrainConfig& cfg, std::size_t jobs = 1) {
    const std::size_t attr = ds.attribute_index(attribute);
    const std::vector<std::size_t> train_idx = indices_with_split(ds, Split::Train);
    const std::vector<std::size_t> test_idx = indices_with_split(ds, Split::Test);
    if (train_idx.empty() || test_idx.empty())
        throw std::invalid_argument("regression_protocol: dataset needs both train and test samples");

    RegressorTrainConfig agnostic_cfg = cfg;
    agnostic_cfg.batch_size = std::min(cfg.batch_size, std::max<std::size_t>(2, train_idx.size()));
    AttributeRegressor agnostic = train_regressor(ds, train_idx, attribute, agnostic_cfg);

    const auto truth_of = [&](std::span<const std::size_t> idx) {
        std::vector<double> t(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) t[i] = ds.samples[idx[i]].attributes[attr];
        return t;
    };

    RegressionTable table;
    table.attribute = attribute;
    {
        const auto preds = predict_attribute_batch(agnostic, ds, test_idx);
        table.agnostic_overall_mae = median_absolute_error(preds, truth_of(test_idx));
    }

    struct ClassPools {
        std::string label;
        std::vector<std::size_t> train, test;
    };
    std::vector<ClassPools> pools;
    for (const auto& [label, members] : by_class(ds)) {
        ClassPools p;
        p.label = label;
        for (std::size_t i : members)
            (ds.samples[i].split == Split::Train ? p.train : p.test).push_back(i);
        if (p.train.size() >= 2 && !p.test.empty()) pools.push_back(std::move(p));
    }

    table.rows.resize(pools.size());
    parallel_for(pools.size(), jobs, [&](std::size_t c) {
        const ClassPools& p = pools[c];
        RegressorTrainConfig class_cfg = cfg;
        class_cfg.batch_size = std::min(cfg.batch_size, p.train.size());
        class_cfg.seed = derive_seed(cfg.seed, 0x100 + c);
        AttributeRegressor per_object = train_regressor(ds, p.train, attribute, class_cfg);

        RegressionTableRow row;
        row.class_label = p.label;
        row.train_count = p.train.size();
        row.test_count = p.test.size();
        const auto truths = truth_of(p.test);
        row.per_object_mae = median_absolute_error(predict_attribute_batch(per_object, ds, p.test), truths);
        row.agnostic_mae = median_absolute_error(predict_attribute_batch(agnostic, ds, p.test), truths);
        table.rows[c] = std::move(row);
    });

    if (table.rows.empty())
        throw std::invalid_argument("regression_protocol: no class has both train and test samples");
    double po = 0.0, ag = 0.0;
    for (const auto& row : table.rows) {
        po += row.per_object_mae;
        ag += row.agnostic_mae;
    }
    table.per_object_mean = po / static_cast<double>(table.rows.size());
    table.agnostic_mean = ag / static_cast<double>(table.rows.size());
    return table;
}

}  // namespace aga
