#pragma once

#include <aga/dataset.hpp>
#include <aga/parallel.hpp>
#include <aga/regressor.hpp>
#include <aga/rng.hpp>
#include <aga/stats.hpp>
#include <aga/svm.hpp>
#include <aga/synthesis.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aga {

// All samples of one class, raw (un-normalized) features.
struct ClassPool {
    std::string class_label;
    std::vector<std::vector<double>> features;
};

// Collects the pools for the given classes, sorted by label. Classes missing
// from the dataset error: a silent mismatch would corrupt the comparison.
inline std::vector<ClassPool> build_pools(const FeatureDataset& ds,
                                          const std::vector<std::string>& classes) {
    std::set<std::string> wanted(classes.begin(), classes.end());
    if (wanted.empty()) throw std::invalid_argument("build_pools: no classes requested");
    std::map<std::string, std::vector<std::vector<double>>> groups;
    for (const auto& s : ds.samples)
        if (wanted.count(s.class_label)) groups[s.class_label].push_back(s.features);
    std::vector<ClassPool> pools;
    for (const auto& label : wanted) {
        auto it = groups.find(label);
        if (it == groups.end())
            throw std::invalid_argument("build_pools: class '" + label + "' not in dataset");
        pools.push_back({label, std::move(it->second)});
    }
    return pools;
}

// Accuracies of the four augmentation variants on one k-shot draw.
struct TrialResult {
    std::size_t trial_index = 0;
    std::uint64_t seed = 0;
    double accuracy_baseline = 0.0;
    double accuracy_plus_depth = 0.0;
    double accuracy_plus_pose = 0.0;
    double accuracy_plus_both = 0.0;
};

struct EvalConfig {
    std::size_t k_shot = 1;
    std::size_t n_trials = 100;   // 500 matches the original protocol; 100 keeps CI fast
    std::uint64_t base_seed = 1;
    std::size_t max_synth_per_instance = 0;  // per attribute; 0 = keep all
    std::string attribute_depth = "depth";   // fills accuracy_plus_depth
    std::string attribute_pose = "pose";     // fills accuracy_plus_pose
    double cost = 10.0;
    std::size_t jobs = 1;
};

inline void validate_eval_config(const EvalConfig& cfg) {
    if (cfg.k_shot == 0) throw std::invalid_argument("eval: k_shot must be >= 1");
    if (cfg.n_trials == 0) throw std::invalid_argument("eval: n_trials must be >= 1");
    if (!(cfg.cost > 0.0)) throw std::invalid_argument("eval: cost must be positive");
    if (cfg.jobs == 0) throw std::invalid_argument("eval: jobs must be >= 1");
}

namespace detail {

// Appends the synthesized variants of `features` for one attribute, capped.
inline void append_synthesized(std::vector<std::vector<double>>& out, const SynthesisBank& bank,
                               std::span<const double> features, const std::string& attribute,
                               std::size_t cap) {
    auto augs = augment(bank, features, attribute);
    const std::size_t keep = cap == 0 ? augs.size() : std::min(cap, augs.size());
    for (std::size_t i = 0; i < keep; ++i) out.push_back(std::move(augs[i].features));
}

inline double svm_accuracy(const LinearSvmModel& model,
                           const std::vector<std::vector<double>>& features,
                           const std::vector<std::string>& labels) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < features.size(); ++i)
        correct += predict_class(model, features[i]) == labels[i];
    return features.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(features.size());
}

}  // namespace detail

// One k-shot draw: k training instances per class (per-class shuffles derived
// from the trial seed), the rest held out. Trains the same C-SVM on the bare
// instances and on instances + synthesized features (depth / pose / both);
// synthesized features inherit the class label of their source instance.
// Features are L1-normalized for the SVM only; synthesis sees raw features.
inline TrialResult one_shot_trial(const std::vector<ClassPool>& pools, const SynthesisBank& bank,
                                  const EvalConfig& cfg, std::size_t trial_index,
                                  std::uint64_t seed) {
    validate_eval_config(cfg);
    if (pools.size() < 2) throw std::invalid_argument("one_shot_trial: needs at least two classes");
    for (const auto& pool : pools)
        if (pool.features.size() < cfg.k_shot + 1)
            throw std::invalid_argument("one_shot_trial: class '" + pool.class_label + "' has " +
                                        std::to_string(pool.features.size()) +
                                        " samples, needs k_shot+1");

    std::vector<std::vector<double>> train_base, train_depth, train_pose, train_both, test;
    std::vector<std::string> labels_base, labels_depth, labels_pose, labels_both, labels_test;

    for (std::size_t c = 0; c < pools.size(); ++c) {
        const ClassPool& pool = pools[c];
        std::vector<std::size_t> perm(pool.features.size());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        Rng rng(derive_seed(seed, 0xC1A55 + c));
        rng.shuffle(perm);

        for (std::size_t i = 0; i < perm.size(); ++i) {
            const auto& x = pool.features[perm[i]];
            if (i >= cfg.k_shot) {
                test.push_back(x);
                labels_test.push_back(pool.class_label);
                continue;
            }
            std::vector<std::vector<double>> depth_synth, pose_synth;
            detail::append_synthesized(depth_synth, bank, x, cfg.attribute_depth,
                                       cfg.max_synth_per_instance);
            detail::append_synthesized(pose_synth, bank, x, cfg.attribute_pose,
                                       cfg.max_synth_per_instance);

            train_base.push_back(x);
            labels_base.push_back(pool.class_label);
            train_depth.push_back(x);
            train_pose.push_back(x);
            train_both.push_back(x);
            for (const auto& v : depth_synth) {
                train_depth.push_back(v);
                train_both.push_back(v);
            }
            for (const auto& v : pose_synth) {
                train_pose.push_back(v);
                train_both.push_back(v);
            }
            labels_depth.insert(labels_depth.end(), 1 + depth_synth.size(), pool.class_label);
            labels_pose.insert(labels_pose.end(), 1 + pose_synth.size(), pool.class_label);
            labels_both.insert(labels_both.end(), 1 + depth_synth.size() + pose_synth.size(),
                               pool.class_label);
        }
    }

    auto normalized_matrix = [](const std::vector<std::vector<double>>& rows) {
        Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto norm = l1_normalize(rows[r]);
            std::copy(norm.begin(), norm.end(), m.row(r).begin());
        }
        return m;
    };
    std::vector<std::vector<double>> test_norm(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) test_norm[i] = l1_normalize(test[i]);

    TrialResult result;
    result.trial_index = trial_index;
    result.seed = seed;

    const std::vector<std::vector<double>>* variant_rows[4] = {&train_base, &train_depth,
                                                               &train_pose, &train_both};
    const std::vector<std::string>* variant_labels[4] = {&labels_base, &labels_depth, &labels_pose,
                                                         &labels_both};
    double* variant_out[4] = {&result.accuracy_baseline, &result.accuracy_plus_depth,
                              &result.accuracy_plus_pose, &result.accuracy_plus_both};
    for (std::size_t v = 0; v < 4; ++v) {
        SvmTrainConfig svm_cfg;
        svm_cfg.cost = cfg.cost;
        svm_cfg.seed = derive_seed(seed, 0x54A + v);
        const LinearSvmModel model =
            train_linear_svm(normalized_matrix(*variant_rows[v]), *variant_labels[v], svm_cfg);
        *variant_out[v] = detail::svm_accuracy(model, test_norm, labels_test);
    }
    return result;
}

struct EvalReport {
    std::size_t k_shot = 0;
    std::size_t n_trials = 0;
    std::uint64_t base_seed = 0;
    std::size_t max_synth_per_instance = 0;
    double cost = 0.0;
    std::vector<std::string> classes;
    std::vector<TrialResult> trials;
    double mean_baseline = 0.0;
    double mean_plus_depth = 0.0;
    double mean_plus_pose = 0.0;
    double mean_plus_both = 0.0;
    double p_depth = 1.0;  // Wilcoxon rank-sum vs the baseline accuracies
    double p_pose = 1.0;
    double p_both = 1.0;
};

// Repeats one_shot_trial n_trials times (trial t seeded base_seed + t) and
// aggregates. Per-trial seeding makes the report independent of `jobs`.
inline EvalReport run_trials(const std::vector<ClassPool>& pools, const SynthesisBank& bank,
                             const EvalConfig& cfg) {
    validate_eval_config(cfg);
    EvalReport report;
    report.k_shot = cfg.k_shot;
    report.n_trials = cfg.n_trials;
    report.base_seed = cfg.base_seed;
    report.max_synth_per_instance = cfg.max_synth_per_instance;
    report.cost = cfg.cost;
    for (const auto& pool : pools) report.classes.push_back(pool.class_label);

    report.trials.resize(cfg.n_trials);
    parallel_for(cfg.n_trials, cfg.jobs, [&](std::size_t t) {
        report.trials[t] = one_shot_trial(pools, bank, cfg, t, cfg.base_seed + t);
    });

    std::vector<double> base, depth, pose, both;
    for (const auto& trial : report.trials) {
        base.push_back(trial.accuracy_baseline);
        depth.push_back(trial.accuracy_plus_depth);
        pose.push_back(trial.accuracy_plus_pose);
        both.push_back(trial.accuracy_plus_both);
    }
    report.mean_baseline = mean(base);
    report.mean_plus_depth = mean(depth);
    report.mean_plus_pose = mean(pose);
    report.mean_plus_both = mean(both);
    report.p_depth = wilcoxon_rank_sum_p(depth, base);
    report.p_pose = wilcoxon_rank_sum_p(pose, base);
    report.p_both = wilcoxon_rank_sum_p(both, base);
    return report;
}

// Aligned text table of the k-shot comparison.
inline std::string format_eval_table(const EvalReport& report) {
    char line[160];
    std::string out;
    std::snprintf(line, sizeof(line), "%zu-shot accuracy over %zu trials (%zu classes)\n",
                  report.k_shot, report.n_trials, report.classes.size());
    out += line;
    std::snprintf(line, sizeof(line), "  %-12s %10s %14s\n", "variant", "mean acc", "p vs baseline");
    out += line;
    auto row = [&](const char* name, double acc, double p, bool has_p) {
        if (has_p)
            std::snprintf(line, sizeof(line), "  %-12s %10.4f %14.4g\n", name, acc, p);
        else
            std::snprintf(line, sizeof(line), "  %-12s %10.4f %14s\n", name, acc, "-");
        out += line;
    };
    row("baseline", report.mean_baseline, 0.0, false);
    row("+depth", report.mean_plus_depth, report.p_depth, true);
    row("+pose", report.mean_plus_pose, report.p_pose, true);
    row("+both", report.mean_plus_both, report.p_both, true);
    return out;
}

// --- regression protocol ----------------------------------------------------

struct RegressionRow {
    std::string class_label;
    std::size_t n_eval = 0;
    double mae_agnostic = 0.0;
    double mae_per_object = 0.0;  // valid only when has_per_object
    bool has_per_object = false;  // false for classes without training data
};

struct RegressionReport {
    std::string attribute;
    double range_min = 0.0;
    double range_max = 0.0;
    std::vector<RegressionRow> rows;  // classes with training data first, then the rest
    double seen_test_mae = 0.0;       // agnostic regressor, pooled held-out samples of trained classes
    double unseen_mae = 0.0;          // agnostic regressor, pooled samples of the other classes
};

// Object-agnostic vs per-object comparison: one regressor on every training
// class against one regressor per class, both scored per class on held-out
// data. Classes without a train split get only the agnostic column.
inline RegressionReport regression_protocol(const FeatureDataset& ds, const std::string& attribute,
                                            const RegressorTrainConfig& cfg, double range_min,
                                            double range_max, std::size_t jobs = 1) {
    const std::size_t attr = ds.attribute_index(attribute);

    std::map<std::string, std::vector<std::size_t>> train_by_class, eval_by_class;
    std::vector<std::size_t> train_all;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& s = ds.samples[i];
        if (s.split == Split::Train) {
            train_by_class[s.class_label].push_back(i);
            train_all.push_back(i);
        } else {
            eval_by_class[s.class_label].push_back(i);
        }
    }
    if (train_all.empty()) throw std::invalid_argument("regression_protocol: no training samples");

    const AttributeRegressor agnostic = train_regressor(ds, train_all, attribute, cfg);

    std::vector<std::string> trained_classes;
    for (const auto& [label, indices] : train_by_class) {
        (void)indices;
        trained_classes.push_back(label);
    }
    std::vector<AttributeRegressor> per_object(trained_classes.size());
    parallel_for(trained_classes.size(), jobs, [&](std::size_t c) {
        const auto& indices = train_by_class.at(trained_classes[c]);
        RegressorTrainConfig class_cfg = cfg;
        // per-object pools are smaller than the corpus-level batch; shrink to fit
        class_cfg.batch_size = std::min(cfg.batch_size, indices.size());
        class_cfg.seed = derive_seed(cfg.seed, 0x9E6 + c);
        per_object[c] = train_regressor(ds, indices, attribute, class_cfg);
    });

    auto mae_of = [&](const AttributeRegressor& reg, const std::vector<std::size_t>& indices) {
        std::vector<double> pred, truth;
        for (std::size_t i : indices) {
            pred.push_back(predict_attribute(reg, ds.samples[i].features));
            truth.push_back(ds.samples[i].attributes[attr]);
        }
        return median_absolute_error(pred, truth);
    };

    RegressionReport report;
    report.attribute = attribute;
    report.range_min = range_min;
    report.range_max = range_max;

    std::vector<std::size_t> seen_eval, unseen_eval;
    for (std::size_t c = 0; c < trained_classes.size(); ++c) {
        const std::string& label = trained_classes[c];
        auto it = eval_by_class.find(label);
        if (it == eval_by_class.end()) continue;
        RegressionRow row;
        row.class_label = label;
        row.n_eval = it->second.size();
        row.mae_agnostic = mae_of(agnostic, it->second);
        row.mae_per_object = mae_of(per_object[c], it->second);
        row.has_per_object = true;
        report.rows.push_back(std::move(row));
        seen_eval.insert(seen_eval.end(), it->second.begin(), it->second.end());
    }
    for (const auto& [label, indices] : eval_by_class) {
        if (train_by_class.count(label)) continue;
        RegressionRow row;
        row.class_label = label;
        row.n_eval = indices.size();
        row.mae_agnostic = mae_of(agnostic, indices);
        report.rows.push_back(std::move(row));
        unseen_eval.insert(unseen_eval.end(), indices.begin(), indices.end());
    }
    if (!seen_eval.empty()) report.seen_test_mae = mae_of(agnostic, seen_eval);
    if (!unseen_eval.empty()) report.unseen_mae = mae_of(agnostic, unseen_eval);
    return report;
}

// Aligned per-class MAE table for one attribute.
inline std::string format_regression_table(const RegressionReport& report) {
    char line[160];
    std::string out;
    std::snprintf(line, sizeof(line), "attribute '%s' on [%g, %g]: per-class median absolute error\n",
                  report.attribute.c_str(), report.range_min, report.range_max);
    out += line;
    std::snprintf(line, sizeof(line), "  %-12s %6s %12s %12s\n", "class", "n", "agnostic",
                  "per-object");
    out += line;
    for (const auto& row : report.rows) {
        if (row.has_per_object)
            std::snprintf(line, sizeof(line), "  %-12s %6zu %12.4f %12.4f\n",
                          row.class_label.c_str(), row.n_eval, row.mae_agnostic,
                          row.mae_per_object);
        else
            std::snprintf(line, sizeof(line), "  %-12s %6zu %12.4f %12s\n", row.class_label.c_str(),
                          row.n_eval, row.mae_agnostic, "-");
        out += line;
    }
    std::snprintf(line, sizeof(line), "  held-out MAE %.4f (trained classes), %.4f (other classes)\n",
                  report.seen_test_mae, report.unseen_mae);
    out += line;
    return out;
}

// --- retrieval -------------------------------------------------------------

// A synthesized feature queried against original samples.
struct RetrievalQuery {
    std::vector<double> features;
    std::string source_class;
    double target = 0.0;  // requested attribute value
};

struct GalleryItem {
    std::vector<double> features;
    std::string class_label;
    double attribute = 0.0;  // true attribute value
};

struct RetrievalClassResult {
    std::string class_label;
    std::size_t queries = 0;
    double top1 = 0.0;
    double r2 = 0.0;      // clamped to [0,1] for reporting
    double r2_raw = 0.0;  // unclamped
};

struct RetrievalReport {
    std::vector<RetrievalClassResult> per_class;
    double mean_top1 = 0.0;
    double mean_r2 = 0.0;      // mean of clamped values
    double mean_r2_raw = 0.0;  // mean of unclamped values
};

namespace detail {

// R^2 of the simple least-squares regression of y on t.
inline double regression_r2(std::span<const double> y, std::span<const double> t) {
    const double my = mean(y), mt = mean(t);
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        stt += (t[i] - mt) * (t[i] - mt);
        sty += (t[i] - mt) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (syy == 0.0 || stt == 0.0) return 0.0;  // no variance to explain (or to explain with)
    const double slope = sty / stt;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double fit = my + slope * (t[i] - mt);
        ss_res += (y[i] - fit) * (y[i] - fit);
    }
    return 1.0 - ss_res / syy;
}

}  // namespace detail

// Nearest-gallery-neighbor retrieval: Top-1 = neighbor shares the query's
// source class; per-class R^2 regresses the neighbors' attribute values on
// the requested targets.
inline RetrievalReport retrieval_eval(const std::vector<RetrievalQuery>& queries,
                                      const std::vector<GalleryItem>& gallery) {
    if (queries.empty()) throw std::invalid_argument("retrieval_eval: no queries");
    if (gallery.empty()) throw std::invalid_argument("retrieval_eval: empty gallery");

    struct PerClass {
        std::size_t n = 0, hits = 0;
        std::vector<double> neighbor_attr, targets;
    };
    std::map<std::string, PerClass> acc;

    for (const auto& q : queries) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_g = 0;
        for (std::size_t g = 0; g < gallery.size(); ++g) {
            const double d = squared_distance(q.features, gallery[g].features);
            if (d < best) {
                best = d;
                best_g = g;
            }
        }
        PerClass& pc = acc[q.source_class];
        ++pc.n;
        pc.hits += gallery[best_g].class_label == q.source_class;
        pc.neighbor_attr.push_back(gallery[best_g].attribute);
        pc.targets.push_back(q.target);
    }

    RetrievalReport report;
    for (const auto& [label, pc] : acc) {
        RetrievalClassResult row;
        row.class_label = label;
        row.queries = pc.n;
        row.top1 = static_cast<double>(pc.hits) / static_cast<double>(pc.n);
        row.r2_raw = pc.neighbor_attr.size() >= 2
                         ? detail::regression_r2(pc.neighbor_attr, pc.targets)
                         : 0.0;
        row.r2 = std::clamp(row.r2_raw, 0.0, 1.0);
        report.per_class.push_back(std::move(row));
    }
    for (const auto& row : report.per_class) {
        report.mean_top1 += row.top1;
        report.mean_r2 += row.r2;
        report.mean_r2_raw += row.r2_raw;
    }
    const auto n = static_cast<double>(report.per_class.size());
    report.mean_top1 /= n;
    report.mean_r2 /= n;
    report.mean_r2_raw /= n;
    return report;
}

}  // namespace aga
