#pragma once

#include <aga/dataset_io.hpp>
#include <aga/eval.hpp>
#include <aga/run_config.hpp>

#include <json.hpp>

#include <stdexcept>
#include <string>

namespace aga {

// Reports are deliberately timestamp-free: identical runs must serialize to
// identical bytes. Wall-clock provenance belongs in the run log.

inline ordered_json eval_report_to_json(const EvalReport& report, const ordered_json& config) {
    ordered_json root;
    root["kind"] = "k_shot_eval";
    root["k_shot"] = report.k_shot;
    root["n_trials"] = report.n_trials;
    root["base_seed"] = report.base_seed;
    root["max_synth_per_instance"] = report.max_synth_per_instance;
    root["cost"] = report.cost;
    root["classes"] = report.classes;
    root["mean_accuracy"] = {{"baseline", report.mean_baseline},
                             {"plus_depth", report.mean_plus_depth},
                             {"plus_pose", report.mean_plus_pose},
                             {"plus_both", report.mean_plus_both}};
    root["p_vs_baseline"] = {{"plus_depth", report.p_depth},
                             {"plus_pose", report.p_pose},
                             {"plus_both", report.p_both}};
    ordered_json trials = ordered_json::array();
    for (const TrialResult& t : report.trials)
        trials.push_back({{"trial", t.trial_index},
                          {"seed", t.seed},
                          {"baseline", t.accuracy_baseline},
                          {"plus_depth", t.accuracy_plus_depth},
                          {"plus_pose", t.accuracy_plus_pose},
                          {"plus_both", t.accuracy_plus_both}});
    root["trials"] = std::move(trials);
    root["config"] = config;
    return root;
}

inline EvalReport eval_report_from_json(const ordered_json& root, const std::string& origin) {
    if (!root.is_object() || root.value("kind", "") != "k_shot_eval")
        throw std::runtime_error(origin + ": not a k-shot evaluation report");
    EvalReport report;
    report.k_shot = root.at("k_shot").get<std::size_t>();
    report.n_trials = root.at("n_trials").get<std::size_t>();
    report.base_seed = root.at("base_seed").get<std::uint64_t>();
    report.max_synth_per_instance = root.at("max_synth_per_instance").get<std::size_t>();
    report.cost = root.at("cost").get<double>();
    report.classes = root.at("classes").get<std::vector<std::string>>();
    const auto& means = root.at("mean_accuracy");
    report.mean_baseline = means.at("baseline").get<double>();
    report.mean_plus_depth = means.at("plus_depth").get<double>();
    report.mean_plus_pose = means.at("plus_pose").get<double>();
    report.mean_plus_both = means.at("plus_both").get<double>();
    const auto& ps = root.at("p_vs_baseline");
    report.p_depth = ps.at("plus_depth").get<double>();
    report.p_pose = ps.at("plus_pose").get<double>();
    report.p_both = ps.at("plus_both").get<double>();
    for (const auto& t : root.at("trials")) {
        TrialResult trial;
        trial.trial_index = t.at("trial").get<std::size_t>();
        trial.seed = t.at("seed").get<std::uint64_t>();
        trial.accuracy_baseline = t.at("baseline").get<double>();
        trial.accuracy_plus_depth = t.at("plus_depth").get<double>();
        trial.accuracy_plus_pose = t.at("plus_pose").get<double>();
        trial.accuracy_plus_both = t.at("plus_both").get<double>();
        report.trials.push_back(trial);
    }
    return report;
}

inline ordered_json regression_report_to_json(const RegressionReport& report) {
    ordered_json root;
    root["kind"] = "regression_eval";
    root["attribute"] = report.attribute;
    root["range"] = {report.range_min, report.range_max};
    ordered_json rows = ordered_json::array();
    for (const RegressionRow& row : report.rows) {
        ordered_json r;
        r["class"] = row.class_label;
        r["n_eval"] = row.n_eval;
        r["mae_agnostic"] = row.mae_agnostic;
        if (row.has_per_object) r["mae_per_object"] = row.mae_per_object;
        rows.push_back(std::move(r));
    }
    root["rows"] = std::move(rows);
    root["seen_test_mae"] = report.seen_test_mae;
    root["unseen_mae"] = report.unseen_mae;
    return root;
}

inline ordered_json retrieval_report_to_json(const RetrievalReport& report) {
    ordered_json root;
    root["kind"] = "retrieval_eval";
    ordered_json rows = ordered_json::array();
    for (const RetrievalClassResult& row : report.per_class)
        rows.push_back({{"class", row.class_label},
                        {"queries", row.queries},
                        {"top1", row.top1},
                        {"r2", row.r2},
                        {"r2_raw", row.r2_raw}});
    root["per_class"] = std::move(rows);
    root["mean_top1"] = report.mean_top1;
    root["mean_r2"] = report.mean_r2;
    root["mean_r2_raw"] = report.mean_r2_raw;
    return root;
}

inline void save_json(const ordered_json& root, const std::string& path) {
    io::write_file(path, root.dump(2) + "\n");
}

inline ordered_json load_json(const std::string& path) {
    try {
        return ordered_json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

}  // namespace aga
