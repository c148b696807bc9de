#pragma once

#include <aga/eval.hpp>
#include <aga/interval_grid.hpp>
#include <aga/regressor.hpp>
#include <aga/synthesis.hpp>
#include <aga/synthetic.hpp>

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace aga {

using ordered_json = nlohmann::ordered_json;

// Sliding-window plus target-list parameters for one attribute.
struct GridConfig {
    std::string attribute;
    double l0 = 0.0;
    double h0 = 0.0;
    double step = 0.0;
    double range_min = 0.0;
    double range_max = 0.0;
    std::vector<double> targets;
};

// The whole declarative pipeline: where data comes from, how each stage
// trains, where outputs go. Flags override individual fields.
struct RunConfig {
    std::string dataset_path;  // empty: generate the synthetic corpus below
    SyntheticSpec synthetic;
    std::string output_dir = "out";
    std::vector<GridConfig> grids;
    RegressorTrainConfig regressor;
    SynthTrainConfig synthesis;
    double svm_cost = 10.0;
    EvalConfig eval;
    std::size_t jobs = 1;
};

inline IntervalGrid make_grid(const GridConfig& gc) {
    return build_grid(gc.attribute, gc.l0, gc.h0, gc.step, gc.range_min, gc.range_max, gc.targets);
}

// Desk-scale defaults: the 20-class synthetic corpus, four touching windows
// per attribute with targets at the centers (every applied source/target
// pair is then at least half a window width apart), and the training
// profile validated against the oracle bounds in the acceptance suite.
inline RunConfig default_run_config() {
    RunConfig cfg;
    auto touching_grid = [](const std::string& name, double lo, double hi) {
        GridConfig gc;
        gc.attribute = name;
        const double width = (hi - lo) / 4.0;
        gc.l0 = lo;
        gc.h0 = lo + width;
        gc.step = width;
        gc.range_min = lo;
        gc.range_max = hi;
        for (std::size_t k = 0; k < 4; ++k)
            gc.targets.push_back(lo + width * (static_cast<double>(k) + 0.5));
        return gc;
    };
    for (const auto& attr : cfg.synthetic.attributes)
        cfg.grids.push_back(touching_grid(attr.name, attr.min_value, attr.max_value));
    cfg.regressor.epochs = 240;
    cfg.regressor.seed = 7;
    cfg.synthesis.epochs = 300;
    cfg.synthesis.batch_size = 64;
    cfg.synthesis.dropout = 0.0;
    cfg.synthesis.lambda = 5.0;
    cfg.synthesis.seed = 11;
    return cfg;
}

inline void validate_run_config(const RunConfig& cfg);

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& what) {
    throw std::invalid_argument("config field '" + path + "': " + what);
}

inline void expect_keys(const ordered_json& node, const std::string& path,
                        std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : node.items()) {
        bool ok = false;
        for (const char* k : allowed) ok = ok || key == k;
        if (!ok) config_error(path.empty() ? key : path + "." + key, "unknown field");
    }
}

inline double get_number(const ordered_json& node, const std::string& path) {
    if (!node.is_number()) config_error(path, "expected a number");
    return node.get<double>();
}

inline std::size_t get_count(const ordered_json& node, const std::string& path) {
    if (!node.is_number_unsigned()) config_error(path, "expected a non-negative integer");
    return node.get<std::size_t>();
}

inline std::uint64_t get_seed(const ordered_json& node, const std::string& path) {
    if (!node.is_number_unsigned()) config_error(path, "expected a non-negative integer");
    return node.get<std::uint64_t>();
}

inline std::string get_string(const ordered_json& node, const std::string& path) {
    if (!node.is_string()) config_error(path, "expected a string");
    return node.get<std::string>();
}

inline std::vector<double> get_number_list(const ordered_json& node, const std::string& path) {
    if (!node.is_array()) config_error(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < node.size(); ++i)
        out.push_back(get_number(node[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

}  // namespace detail

// Parses and validates a JSON run configuration. Missing fields keep their
// defaults; unknown fields are rejected so typos cannot silently fall back.
inline RunConfig parse_run_config(const std::string& text, const std::string& origin) {
    ordered_json root;
    try {
        root = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw std::invalid_argument(origin + ": " + e.what());
    }
    if (!root.is_object()) throw std::invalid_argument(origin + ": config must be a JSON object");

    RunConfig cfg = default_run_config();
    detail::expect_keys(root, "",
                        {"dataset_path", "synthetic", "output_dir", "grids", "regressor",
                         "synthesis", "svm", "eval", "jobs"});

    if (root.contains("dataset_path"))
        cfg.dataset_path = detail::get_string(root["dataset_path"], "dataset_path");
    if (root.contains("output_dir"))
        cfg.output_dir = detail::get_string(root["output_dir"], "output_dir");
    if (root.contains("jobs")) cfg.jobs = detail::get_count(root["jobs"], "jobs");

    if (root.contains("synthetic")) {
        const auto& node = root["synthetic"];
        if (!node.is_object()) detail::config_error("synthetic", "expected an object");
        detail::expect_keys(node, "synthetic",
                            {"n_classes", "n_seen", "dim", "samples_per_class", "attributes",
                             "noise_rel", "class_offset", "shared_direction_frac", "subspace_dim",
                             "train_fraction", "response", "seed"});
        SyntheticSpec& spec = cfg.synthetic;
        if (node.contains("n_classes"))
            spec.n_classes = detail::get_count(node["n_classes"], "synthetic.n_classes");
        if (node.contains("n_seen"))
            spec.n_seen = detail::get_count(node["n_seen"], "synthetic.n_seen");
        if (node.contains("dim")) spec.dim = detail::get_count(node["dim"], "synthetic.dim");
        if (node.contains("samples_per_class"))
            spec.samples_per_class =
                detail::get_count(node["samples_per_class"], "synthetic.samples_per_class");
        if (node.contains("noise_rel"))
            spec.noise_rel = detail::get_number(node["noise_rel"], "synthetic.noise_rel");
        if (node.contains("class_offset"))
            spec.class_offset = detail::get_number(node["class_offset"], "synthetic.class_offset");
        if (node.contains("shared_direction_frac"))
            spec.shared_direction_frac = detail::get_number(node["shared_direction_frac"],
                                                            "synthetic.shared_direction_frac");
        if (node.contains("subspace_dim"))
            spec.subspace_dim = detail::get_count(node["subspace_dim"], "synthetic.subspace_dim");
        if (node.contains("train_fraction"))
            spec.train_fraction =
                detail::get_number(node["train_fraction"], "synthetic.train_fraction");
        if (node.contains("seed")) spec.seed = detail::get_seed(node["seed"], "synthetic.seed");
        if (node.contains("response")) {
            const std::string r = detail::get_string(node["response"], "synthetic.response");
            if (r == "linear")
                spec.response = AttributeResponse::Linear;
            else if (r == "sqrt")
                spec.response = AttributeResponse::Sqrt;
            else
                detail::config_error("synthetic.response", "must be 'linear' or 'sqrt'");
        }
        if (node.contains("attributes")) {
            const auto& attrs = node["attributes"];
            if (!attrs.is_array() || attrs.empty())
                detail::config_error("synthetic.attributes", "expected a nonempty array");
            spec.attributes.clear();
            for (std::size_t i = 0; i < attrs.size(); ++i) {
                const std::string path = "synthetic.attributes[" + std::to_string(i) + "]";
                const auto& a = attrs[i];
                if (!a.is_object()) detail::config_error(path, "expected an object");
                detail::expect_keys(a, path, {"name", "min", "max"});
                if (!a.contains("name") || !a.contains("min") || !a.contains("max"))
                    detail::config_error(path, "needs name, min, max");
                spec.attributes.push_back({detail::get_string(a["name"], path + ".name"),
                                           detail::get_number(a["min"], path + ".min"),
                                           detail::get_number(a["max"], path + ".max")});
            }
        }
    }

    if (root.contains("grids")) {
        const auto& grids = root["grids"];
        if (!grids.is_array() || grids.empty())
            detail::config_error("grids", "expected a nonempty array");
        cfg.grids.clear();
        for (std::size_t i = 0; i < grids.size(); ++i) {
            const std::string path = "grids[" + std::to_string(i) + "]";
            const auto& g = grids[i];
            if (!g.is_object()) detail::config_error(path, "expected an object");
            detail::expect_keys(g, path,
                                {"attribute", "l0", "h0", "step", "range_min", "range_max",
                                 "targets"});
            for (const char* required :
                 {"attribute", "l0", "h0", "step", "range_min", "range_max", "targets"})
                if (!g.contains(required))
                    detail::config_error(path + "." + required, "missing required field");
            GridConfig gc;
            gc.attribute = detail::get_string(g["attribute"], path + ".attribute");
            gc.l0 = detail::get_number(g["l0"], path + ".l0");
            gc.h0 = detail::get_number(g["h0"], path + ".h0");
            gc.step = detail::get_number(g["step"], path + ".step");
            gc.range_min = detail::get_number(g["range_min"], path + ".range_min");
            gc.range_max = detail::get_number(g["range_max"], path + ".range_max");
            gc.targets = detail::get_number_list(g["targets"], path + ".targets");
            cfg.grids.push_back(std::move(gc));
        }
    }

    if (root.contains("regressor")) {
        const auto& node = root["regressor"];
        if (!node.is_object()) detail::config_error("regressor", "expected an object");
        detail::expect_keys(node, "regressor",
                            {"epochs", "batch_size", "learning_rate", "hidden", "weight_decay",
                             "seed"});
        if (node.contains("epochs"))
            cfg.regressor.epochs = detail::get_count(node["epochs"], "regressor.epochs");
        if (node.contains("batch_size"))
            cfg.regressor.batch_size = detail::get_count(node["batch_size"], "regressor.batch_size");
        if (node.contains("learning_rate"))
            cfg.regressor.learning_rate =
                detail::get_number(node["learning_rate"], "regressor.learning_rate");
        if (node.contains("hidden"))
            cfg.regressor.hidden = detail::get_count(node["hidden"], "regressor.hidden");
        if (node.contains("weight_decay"))
            cfg.regressor.weight_decay =
                detail::get_number(node["weight_decay"], "regressor.weight_decay");
        if (node.contains("seed"))
            cfg.regressor.seed = detail::get_seed(node["seed"], "regressor.seed");
    }

    if (root.contains("synthesis")) {
        const auto& node = root["synthesis"];
        if (!node.is_object()) detail::config_error("synthesis", "expected an object");
        detail::expect_keys(node, "synthesis",
                            {"epochs", "batch_size", "learning_rate", "dropout", "lambda",
                             "weight_decay", "hidden1", "hidden2", "seed"});
        if (node.contains("epochs"))
            cfg.synthesis.epochs = detail::get_count(node["epochs"], "synthesis.epochs");
        if (node.contains("batch_size"))
            cfg.synthesis.batch_size = detail::get_count(node["batch_size"], "synthesis.batch_size");
        if (node.contains("learning_rate"))
            cfg.synthesis.learning_rate =
                detail::get_number(node["learning_rate"], "synthesis.learning_rate");
        if (node.contains("dropout"))
            cfg.synthesis.dropout = detail::get_number(node["dropout"], "synthesis.dropout");
        if (node.contains("lambda"))
            cfg.synthesis.lambda = detail::get_number(node["lambda"], "synthesis.lambda");
        if (node.contains("weight_decay"))
            cfg.synthesis.weight_decay =
                detail::get_number(node["weight_decay"], "synthesis.weight_decay");
        if (node.contains("hidden1"))
            cfg.synthesis.hidden1 = detail::get_count(node["hidden1"], "synthesis.hidden1");
        if (node.contains("hidden2"))
            cfg.synthesis.hidden2 = detail::get_count(node["hidden2"], "synthesis.hidden2");
        if (node.contains("seed"))
            cfg.synthesis.seed = detail::get_seed(node["seed"], "synthesis.seed");
    }

    if (root.contains("svm")) {
        const auto& node = root["svm"];
        if (!node.is_object()) detail::config_error("svm", "expected an object");
        detail::expect_keys(node, "svm", {"cost"});
        if (node.contains("cost")) cfg.svm_cost = detail::get_number(node["cost"], "svm.cost");
    }

    if (root.contains("eval")) {
        const auto& node = root["eval"];
        if (!node.is_object()) detail::config_error("eval", "expected an object");
        detail::expect_keys(node, "eval",
                            {"k_shot", "n_trials", "base_seed", "max_synth_per_instance"});
        if (node.contains("k_shot"))
            cfg.eval.k_shot = detail::get_count(node["k_shot"], "eval.k_shot");
        if (node.contains("n_trials"))
            cfg.eval.n_trials = detail::get_count(node["n_trials"], "eval.n_trials");
        if (node.contains("base_seed"))
            cfg.eval.base_seed = detail::get_seed(node["base_seed"], "eval.base_seed");
        if (node.contains("max_synth_per_instance"))
            cfg.eval.max_synth_per_instance =
                detail::get_count(node["max_synth_per_instance"], "eval.max_synth_per_instance");
    }

    validate_run_config(cfg);
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str(), path);
}

// Cross-field checks; the owning modules re-validate their own configs when
// the stages run, this catches everything a dry parse can catch.
inline void validate_run_config(const RunConfig& cfg) {
    if (cfg.dataset_path.empty()) validate_spec(cfg.synthetic);
    if (cfg.output_dir.empty()) detail::config_error("output_dir", "must not be empty");
    if (cfg.grids.empty()) detail::config_error("grids", "needs at least one attribute grid");
    for (std::size_t i = 0; i < cfg.grids.size(); ++i)
        make_grid(cfg.grids[i]);  // build_grid validates geometry and targets
    validate_train_config(cfg.regressor);
    validate_synth_config(cfg.synthesis);
    if (!(cfg.svm_cost > 0.0)) detail::config_error("svm.cost", "must be positive");
    validate_eval_config(cfg.eval);
    if (cfg.jobs == 0) detail::config_error("jobs", "must be >= 1");
}

// The resolved configuration, embedded into every report for provenance.
inline ordered_json run_config_to_json(const RunConfig& cfg) {
    ordered_json root;
    root["dataset_path"] = cfg.dataset_path;
    ordered_json synth;
    synth["n_classes"] = cfg.synthetic.n_classes;
    synth["n_seen"] = cfg.synthetic.n_seen;
    synth["dim"] = cfg.synthetic.dim;
    synth["samples_per_class"] = cfg.synthetic.samples_per_class;
    ordered_json attrs = ordered_json::array();
    for (const auto& a : cfg.synthetic.attributes)
        attrs.push_back({{"name", a.name}, {"min", a.min_value}, {"max", a.max_value}});
    synth["attributes"] = std::move(attrs);
    synth["noise_rel"] = cfg.synthetic.noise_rel;
    synth["class_offset"] = cfg.synthetic.class_offset;
    synth["shared_direction_frac"] = cfg.synthetic.shared_direction_frac;
    synth["subspace_dim"] = cfg.synthetic.subspace_dim;
    synth["train_fraction"] = cfg.synthetic.train_fraction;
    synth["response"] = cfg.synthetic.response == AttributeResponse::Sqrt ? "sqrt" : "linear";
    synth["seed"] = cfg.synthetic.seed;
    root["synthetic"] = std::move(synth);
    root["output_dir"] = cfg.output_dir;
    ordered_json grids = ordered_json::array();
    for (const auto& g : cfg.grids)
        grids.push_back({{"attribute", g.attribute},
                         {"l0", g.l0},
                         {"h0", g.h0},
                         {"step", g.step},
                         {"range_min", g.range_min},
                         {"range_max", g.range_max},
                         {"targets", g.targets}});
    root["grids"] = std::move(grids);
    root["regressor"] = {{"epochs", cfg.regressor.epochs},
                         {"batch_size", cfg.regressor.batch_size},
                         {"learning_rate", cfg.regressor.learning_rate},
                         {"hidden", cfg.regressor.hidden},
                         {"weight_decay", cfg.regressor.weight_decay},
                         {"seed", cfg.regressor.seed}};
    root["synthesis"] = {{"epochs", cfg.synthesis.epochs},
                         {"batch_size", cfg.synthesis.batch_size},
                         {"learning_rate", cfg.synthesis.learning_rate},
                         {"dropout", cfg.synthesis.dropout},
                         {"lambda", cfg.synthesis.lambda},
                         {"weight_decay", cfg.synthesis.weight_decay},
                         {"hidden1", cfg.synthesis.hidden1},
                         {"hidden2", cfg.synthesis.hidden2},
                         {"seed", cfg.synthesis.seed}};
    root["svm"] = {{"cost", cfg.svm_cost}};
    root["eval"] = {{"k_shot", cfg.eval.k_shot},
                    {"n_trials", cfg.eval.n_trials},
                    {"base_seed", cfg.eval.base_seed},
                    {"max_synth_per_instance", cfg.eval.max_synth_per_instance}};
    root["jobs"] = cfg.jobs;
    return root;
}

}  // namespace aga
