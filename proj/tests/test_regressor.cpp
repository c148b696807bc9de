#include <catch2/catch_amalgamated.hpp>

#include <aga/regressor.hpp>
#include <aga/synthetic.hpp>

using namespace aga;

namespace {

const SyntheticCorpus& fixture_corpus() {
    static const SyntheticCorpus corpus = [] {
        SyntheticSpec spec;
        spec.n_classes = 6;
        spec.n_seen = 4;
        spec.dim = 24;
        spec.samples_per_class = 80;
        spec.seed = 13;
        return generate_synthetic(spec);
    }();
    return corpus;
}

RegressorTrainConfig quick_config() {
    // the fixture pool is tiny (256 train samples = 4 batches/epoch), so it
    // needs more epochs than the full-size default corpus would
    RegressorTrainConfig cfg;
    cfg.epochs = 60;
    cfg.batch_size = 64;
    cfg.hidden = 32;
    cfg.seed = 3;
    return cfg;
}

}  // namespace

TEST_CASE("regressor training drives the loss down and predicts held-out attributes") {
    const auto& corpus = fixture_corpus();
    const auto train_idx = indices_with_split(corpus.dataset, Split::Train);
    AttributeRegressor reg = train_regressor(corpus.dataset, train_idx, "depth", quick_config());

    REQUIRE(reg.epoch_losses.size() == 60);
    CHECK(reg.epoch_losses.back() < reg.epoch_losses.front());
    for (double l : reg.epoch_losses) CHECK(std::isfinite(l));

    const auto test_idx = indices_with_split(corpus.dataset, Split::Test);
    const auto preds = predict_attribute_batch(reg, corpus.dataset, test_idx);
    std::vector<double> truths(test_idx.size());
    for (std::size_t i = 0; i < test_idx.size(); ++i)
        truths[i] = corpus.dataset.samples[test_idx[i]].attributes[0];
    const double mae = median_absolute_error(preds, truths);
    // depth spans [0.2, 7.5]; a trained regressor lands near 4%, an untrained
    // or diverged one near 30%
    CHECK(mae < 0.15 * (7.5 - 0.2));
    for (double p : preds) CHECK(p >= 0.0);
}

TEST_CASE("regressor training is deterministic per seed") {
    const auto& corpus = fixture_corpus();
    const auto train_idx = indices_with_split(corpus.dataset, Split::Train);
    RegressorTrainConfig cfg = quick_config();
    cfg.epochs = 3;
    AttributeRegressor a = train_regressor(corpus.dataset, train_idx, "pose", cfg);
    AttributeRegressor b = train_regressor(corpus.dataset, train_idx, "pose", cfg);
    auto sa = parameter_spans(a.network);
    auto sb = parameter_spans(b.network);
    for (std::size_t i = 0; i < sa.size(); ++i)
        CHECK(std::vector<double>(sa[i].begin(), sa[i].end()) ==
              std::vector<double>(sb[i].begin(), sb[i].end()));
    CHECK(a.epoch_losses == b.epoch_losses);
}

TEST_CASE("regressor rejects unknown attributes and undersized pools") {
    const auto& corpus = fixture_corpus();
    CHECK_THROWS_AS(train_regressor(corpus.dataset, "weight", quick_config()),
                    std::invalid_argument);
    RegressorTrainConfig cfg = quick_config();
    cfg.batch_size = corpus.dataset.samples.size() + 1;
    CHECK_THROWS_AS(train_regressor(corpus.dataset, "depth", cfg), std::invalid_argument);
}

TEST_CASE("per-object versus agnostic table has one row per evaluable class") {
    const auto& corpus = fixture_corpus();
    RegressorTrainConfig cfg = quick_config();
    cfg.epochs = 6;
    RegressionTable table = regression_protocol(corpus.dataset, "depth", cfg);
    // only seen classes carry a train split
    CHECK(table.rows.size() == 4);
    for (const auto& row : table.rows) {
        CHECK(row.train_count == 64);
        CHECK(row.test_count == 16);
        CHECK(std::isfinite(row.per_object_mae));
        CHECK(std::isfinite(row.agnostic_mae));
    }
    CHECK(std::isfinite(table.agnostic_overall_mae));
    CHECK(table.per_object_mean > 0.0);

    // per-class work items are scheduling-independent
    RegressionTable parallel_table = regression_protocol(corpus.dataset, "depth", cfg, 4);
    REQUIRE(parallel_table.rows.size() == table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        CHECK(parallel_table.rows[i].class_label == table.rows[i].class_label);
        CHECK(parallel_table.rows[i].per_object_mae == table.rows[i].per_object_mae);
        CHECK(parallel_table.rows[i].agnostic_mae == table.rows[i].agnostic_mae);
    }
}
