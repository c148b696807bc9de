#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "adam.hpp"
#include "dataset.hpp"
#include "interval_grid.hpp"
#include "loss.hpp"
#include "parallel.hpp"
#include "regressor.hpp"
#include "stats.hpp"

namespace aga {

struct SynthTrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 128;
    double learning_rate = 0.001;
    double dropout = 0.25;
    double lambda = 0.01;      // weight of the stay-close regularizer
    double weight_decay = 0.0; // L2 shrinkage on linear weights
    std::size_t hidden1 = 0;   // 0 -> max(4, D/2)
    std::size_t hidden2 = 0;   // 0 -> max(4, D/4)
    std::uint64_t seed = 0;
};

// One trained synthesis function: moves features whose attribute lies in
// [lo, hi] towards attribute value `target`.
struct EncoderDecoder {
    std::string attribute;
    std::size_t interval_index = 0;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t target_index = 0;
    double target = 0.0;
    double lambda = 0.01;
    Network network;
    std::vector<double> epoch_losses;  // diagnostics only
};

inline std::size_t default_hidden1(std::size_t dim) { return std::max<std::size_t>(4, dim / 2); }
inline std::size_t default_hidden2(std::size_t dim) { return std::max<std::size_t>(4, dim / 4); }

// Encoder-decoder stack: D -> H1 -> H2 -> H1 -> D, BatchNorm+ELU+Dropout
// between linear maps, final ReLU keeping outputs in feature space.
inline Network make_encoder_decoder_net(std::size_t dim, std::size_t hidden1, std::size_t hidden2,
                                        double dropout) {
    if (dim == 0 || hidden1 == 0 || hidden2 == 0)
        throw std::invalid_argument("make_encoder_decoder_net: dimensions must be positive");
    Network net;
    net.input_dim = dim;
    const std::size_t widths[4][2] = {{dim, hidden1}, {hidden1, hidden2}, {hidden2, hidden1}, {hidden1, dim}};
    for (int i = 0; i < 4; ++i) {
        LinearLayer lin;
        lin.weight = Matrix(widths[i][0], widths[i][1]);
        lin.bias.assign(widths[i][1], 0.0);
        net.layers.emplace_back(std::move(lin));
        if (i < 3) {
            net.layers.emplace_back(BatchNormLayer(widths[i][1]));
            net.layers.emplace_back(EluLayer{1.0});
            net.layers.emplace_back(DropoutLayer{dropout});
        }
    }
    net.layers.emplace_back(ReluLayer{});
    return net;
}

inline void validate_synth_config(const SynthTrainConfig& cfg) {
    if (cfg.epochs == 0) throw std::invalid_argument("synthesis: epochs must be >= 1");
    if (cfg.batch_size < 2) throw std::invalid_argument("synthesis: batch_size must be >= 2");
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("synthesis: learning_rate must be > 0");
    if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
        throw std::invalid_argument("synthesis: dropout rate outside [0,1)");
    if (!(cfg.lambda >= 0.0)) throw std::invalid_argument("synthesis: lambda must be >= 0");
    if (cfg.weight_decay < 0.0) throw std::invalid_argument("synthesis: weight_decay must be >= 0");
}

// Trains one synthesis function on the given sample subset against a frozen
// attribute regressor. The regressor is only read: gradients flow through it
// but never update it.
inline EncoderDecoder train_synthesis_fn(const FeatureDataset& ds,
                                         std::span<const std::size_t> subset, double target,
                                         const AttributeRegressor& gamma,
                                         const SynthTrainConfig& cfg) {
    validate_synth_config(cfg);
    if (subset.size() < 2)
        throw std::invalid_argument("train_synthesis_fn: needs at least two samples");
    if (gamma.network.input_dim != ds.dim)
        throw std::invalid_argument("train_synthesis_fn: regressor width does not match dataset");

    Matrix x(subset.size(), ds.dim);
    for (std::size_t i = 0; i < subset.size(); ++i) {
        const auto& f = ds.samples[subset[i]].features;
        std::copy(f.begin(), f.end(), x.row(i).begin());
    }

    EncoderDecoder fn;
    fn.attribute = gamma.attribute;
    fn.target = target;
    fn.lambda = cfg.lambda;
    const std::size_t h1 = cfg.hidden1 ? cfg.hidden1 : default_hidden1(ds.dim);
    const std::size_t h2 = cfg.hidden2 ? cfg.hidden2 : default_hidden2(ds.dim);
    fn.network = make_encoder_decoder_net(ds.dim, h1, h2, cfg.dropout);
    Rng init_rng(derive_seed(cfg.seed, 0x21));
    init_parameters(fn.network, init_rng);

    CompositeLoss loss;
    loss.attribute_regressor = &gamma.network;
    loss.target = target;
    loss.lambda = cfg.lambda;

    AdamState adam = make_adam(fn.network, cfg.learning_rate);
    adam.weight_decay = cfg.weight_decay;
    Rng order_rng(derive_seed(cfg.seed, 0x22));
    std::vector<std::size_t> order(subset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t batch = std::min(cfg.batch_size, subset.size());

    std::uint64_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t size = std::min(batch, order.size() - start);
            if (size < 2) break;  // BatchNorm cannot train on a single row
            Matrix bx(size, ds.dim);
            for (std::size_t r = 0; r < size; ++r) {
                const auto row = x.row(order[start + r]);
                std::copy(row.begin(), row.end(), bx.row(r).begin());
            }
            LossGrads lg = loss_gradients(fn.network, bx, Mode::Train,
                                          derive_seed(cfg.seed, 0x1000 + step), LossSpec{loss});
            adam_step(fn.network, lg.grads, adam);
            epoch_loss += lg.value * static_cast<double>(size);
            seen += size;
            ++step;
        }
        fn.epoch_losses.push_back(epoch_loss / static_cast<double>(seen));
    }
    return fn;
}

// Dropout off, BatchNorm on running statistics: synthesis is deterministic.
inline std::vector<double> synthesize(const EncoderDecoder& fn, std::span<const double> features) {
    ForwardTrace trace = forward(fn.network, matrix_from_row(features));
    return std::move(trace.output.data);
}

struct AttributeBank {
    std::string attribute;
    IntervalGrid grid;
    AttributeRegressor regressor;
    std::vector<EncoderDecoder> functions;

    const EncoderDecoder* find(std::size_t interval_index, std::size_t target_index) const {
        for (const auto& fn : functions)
            if (fn.interval_index == interval_index && fn.target_index == target_index) return &fn;
        return nullptr;
    }
};

struct SynthesisBank {
    std::vector<AttributeBank> attributes;
    std::vector<std::string> training_classes;  // sorted class labels seen at training time

    const AttributeBank& bank_for(const std::string& attribute) const {
        for (const auto& ab : attributes)
            if (ab.attribute == attribute) return ab;
        throw std::invalid_argument("synthesis bank has no attribute '" + attribute + "'");
    }
};

// Trains every (interval, target) function for every attribute. Intervals
// with fewer than two training samples produce no functions. Each function
// derives its own seed from (attribute, interval, target), so results do not
// depend on `jobs` or scheduling.
inline SynthesisBank train_bank(const FeatureDataset& ds, const std::vector<IntervalGrid>& grids,
                                const std::vector<AttributeRegressor>& regressors,
                                const SynthTrainConfig& cfg, std::size_t jobs = 1) {
    validate_synth_config(cfg);
    validate_dataset(ds);
    if (grids.empty()) throw std::invalid_argument("train_bank: no interval grids");
    if (grids.size() != regressors.size())
        throw std::invalid_argument("train_bank: need one regressor per grid");
    if (ds.samples.empty()) throw std::invalid_argument("train_bank: empty training set");

    SynthesisBank bank;
    {
        std::set<std::string> labels;
        for (const auto& s : ds.samples) labels.insert(s.class_label);
        bank.training_classes.assign(labels.begin(), labels.end());
    }

    struct Task {
        std::size_t attr_slot;
        std::size_t interval_index;
        std::size_t target_index;
        std::vector<std::size_t> subset;
    };
    std::vector<Task> tasks;

    for (std::size_t a = 0; a < grids.size(); ++a) {
        const IntervalGrid& grid = grids[a];
        const AttributeRegressor& gamma = regressors[a];
        if (gamma.attribute != grid.attribute)
            throw std::invalid_argument("train_bank: grid '" + grid.attribute +
                                        "' paired with regressor for '" + gamma.attribute + "'");
        const std::size_t attr = ds.attribute_index(grid.attribute);

        AttributeBank ab;
        ab.attribute = grid.attribute;
        ab.grid = grid;
        ab.regressor = gamma;
        bank.attributes.push_back(std::move(ab));

        std::vector<double> values(ds.samples.size());
        for (std::size_t i = 0; i < values.size(); ++i) values[i] = ds.samples[i].attributes[attr];
        const auto subsets = partition_by_intervals(grid, values);
        for (std::size_t i = 0; i < subsets.size(); ++i) {
            if (subsets[i].size() < 2) continue;
            for (std::size_t k = 0; k < grid.targets.size(); ++k)
                tasks.push_back({a, i, k, subsets[i]});
        }
    }
    if (tasks.empty()) throw std::invalid_argument("train_bank: no interval has enough samples");

    std::vector<EncoderDecoder> trained(tasks.size());
    parallel_for(tasks.size(), jobs, [&](std::size_t t) {
        const Task& task = tasks[t];
        const AttributeBank& ab = bank.attributes[task.attr_slot];
        SynthTrainConfig fn_cfg = cfg;
        fn_cfg.seed = derive_seed(cfg.seed, mix64((task.attr_slot << 40) ^ (task.interval_index << 20) ^
                                                  task.target_index));
        EncoderDecoder fn = train_synthesis_fn(ds, task.subset, ab.grid.targets[task.target_index],
                                               ab.regressor, fn_cfg);
        fn.attribute = ab.attribute;
        fn.interval_index = task.interval_index;
        fn.lo = ab.grid.intervals[task.interval_index].lo;
        fn.hi = ab.grid.intervals[task.interval_index].hi;
        fn.target_index = task.target_index;
        trained[t] = std::move(fn);
    });
    for (std::size_t t = 0; t < tasks.size(); ++t)
        bank.attributes[tasks[t].attr_slot].functions.push_back(std::move(trained[t]));
    return bank;
}

// One synthesized variant of a source feature vector.
struct AugmentedFeature {
    std::vector<double> features;
    std::string attribute;
    std::size_t interval_index = 0;
    std::size_t target_index = 0;
    double target = 0.0;
    double estimated_attribute = 0.0;  // regressor estimate for the source vector
};

// Augmentation rule: estimate the attribute, find the covering interval(s),
// and apply every function of those intervals whose target lies outside the
// interval (targets inside would synthesize what the sample already is).
inline std::vector<AugmentedFeature> augment_with(const AttributeBank& ab,
                                                  std::span<const double> features) {
    std::vector<AugmentedFeature> out;
    const double estimate = predict_attribute(ab.regressor, features);
    for (std::size_t i : containing_intervals(ab.grid, estimate)) {
        const Interval& window = ab.grid.intervals[i];
        for (std::size_t k = 0; k < ab.grid.targets.size(); ++k) {
            if (window.contains(ab.grid.targets[k])) continue;
            const EncoderDecoder* fn = ab.find(i, k);
            if (fn == nullptr) continue;  // interval had too little training data
            AugmentedFeature af;
            af.features = synthesize(*fn, features);
            af.attribute = ab.attribute;
            af.interval_index = i;
            af.target_index = k;
            af.target = ab.grid.targets[k];
            af.estimated_attribute = estimate;
            out.push_back(std::move(af));
        }
    }
    return out;
}

inline std::vector<AugmentedFeature> augment(const SynthesisBank& bank,
                                             std::span<const double> features,
                                             const std::string& attribute) {
    return augment_with(bank.bank_for(attribute), features);
}

inline std::vector<AugmentedFeature> augment(const SynthesisBank& bank,
                                             std::span<const double> features) {
    std::vector<AugmentedFeature> out;
    for (const auto& ab : bank.attributes) {
        auto part = augment_with(ab, features);
        out.insert(out.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
    }
    return out;
}

struct BankEvalRow {
    std::string class_label;
    std::size_t applications = 0;
    double median_target_error = 0.0;  // |regressor(synthesized) - target|
    double mean_rho = 0.0;             // correlation between source and synthesized features
};

struct BankEvalReport {
    std::string attribute;
    std::vector<BankEvalRow> rows;  // one per class, sorted by label
    std::size_t applications = 0;
    double median_target_error = 0.0;
    double mean_rho = 0.0;
};

// Fidelity of the bank's synthesis on a labelled evaluation set: how close
// the regressor judges each synthesized vector to its target, and how
// correlated synthesized vectors stay with their source.
inline BankEvalReport evaluate_bank(const SynthesisBank& bank, const std::string& attribute,
                                    const FeatureDataset& testset) {
    const AttributeBank& ab = bank.bank_for(attribute);
    if (testset.dim != ab.regressor.network.input_dim)
        throw std::invalid_argument("evaluate_bank: dataset width does not match bank");

    BankEvalReport report;
    report.attribute = attribute;
    std::vector<double> all_errors;
    double all_rho = 0.0;

    // a constant vector (e.g. everything clipped to zero) has no defined
    // correlation; score it as 0 rather than erroring the whole evaluation
    const auto safe_rho = [](std::span<const double> a, std::span<const double> b) {
        const auto constant = [](std::span<const double> v) {
            for (double x : v)
                if (x != v[0]) return false;
            return true;
        };
        if (constant(a) || constant(b)) return 0.0;
        return pearson_rho(a, b);
    };

    for (const auto& [label, members] : by_class(testset)) {
        std::vector<double> errors;
        double rho_sum = 0.0;
        std::size_t count = 0;
        for (std::size_t idx : members) {
            const auto& x = testset.samples[idx].features;
            for (const AugmentedFeature& af : augment_with(ab, x)) {
                errors.push_back(std::abs(predict_attribute(ab.regressor, af.features) - af.target));
                rho_sum += safe_rho(x, af.features);
                ++count;
            }
        }
        if (count == 0) continue;
        BankEvalRow row;
        row.class_label = label;
        row.applications = count;
        row.median_target_error = median(errors);
        row.mean_rho = rho_sum / static_cast<double>(count);
        report.rows.push_back(std::move(row));
        all_errors.insert(all_errors.end(), errors.begin(), errors.end());
        all_rho += rho_sum;
        report.applications += count;
    }
    if (report.applications > 0) {
        report.median_target_error = median(all_errors);
        report.mean_rho = all_rho / static_cast<double>(report.applications);
    }
    return report;
}

}  // namespace aga
