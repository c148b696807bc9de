#include <catch2/catch_amalgamated.hpp>

#include <aga/synthesis.hpp>
#include <aga/synthetic.hpp>

#include <set>
#include <utility>

using namespace aga;

namespace {

struct BankFixture {
    SyntheticCorpus corpus;
    AttributeRegressor gamma;
    IntervalGrid grid;
    SynthesisBank bank;
};

const BankFixture& fixture() {
    static const BankFixture fix = [] {
        BankFixture f;
        SyntheticSpec spec;
        spec.n_classes = 5;
        spec.n_seen = 3;
        spec.dim = 16;
        spec.samples_per_class = 90;
        spec.seed = 21;
        spec.attributes = {{"depth", 0.2, 7.5}};
        f.corpus = generate_synthetic(spec);

        RegressorTrainConfig rcfg;
        rcfg.epochs = 15;
        rcfg.batch_size = 64;
        rcfg.hidden = 24;
        rcfg.seed = 2;
        const auto train_idx = indices_with_split(f.corpus.dataset, Split::Train);
        f.gamma = train_regressor(f.corpus.dataset, train_idx, "depth", rcfg);

        f.grid = build_grid("depth", 0.2, 3.85, 1.825, 0.2, 7.5, {1.0, 3.0, 5.0, 7.0});

        SynthTrainConfig scfg;
        scfg.epochs = 10;
        scfg.batch_size = 64;
        scfg.seed = 5;
        FeatureDataset train_pool = subset_dataset(f.corpus.dataset, train_idx);
        f.bank = train_bank(train_pool, {f.grid}, {f.gamma}, scfg);
        return f;
    }();
    return fix;
}

}  // namespace

TEST_CASE("encoder-decoder stack has the documented shape") {
    Network net = make_encoder_decoder_net(16, 8, 4, 0.25);
    CHECK(network_output_dim(net) == 16);
    CHECK(net.layers.size() == 14);  // 4 linear + 3x[bn, elu, dropout] + final relu
    CHECK(std::holds_alternative<ReluLayer>(net.layers.back()));
    CHECK(default_hidden1(64) == 32);
    CHECK(default_hidden2(64) == 16);
    CHECK(default_hidden1(5) == 4);  // floor of 4 on tiny widths
}

TEST_CASE("training a synthesis function reduces its loss and is deterministic") {
    const auto& f = fixture();
    const auto train_idx = indices_with_split(f.corpus.dataset, Split::Train);
    std::vector<std::size_t> subset(train_idx.begin(), train_idx.begin() + 60);

    SynthTrainConfig cfg;
    cfg.epochs = 8;
    cfg.batch_size = 32;
    cfg.seed = 9;
    EncoderDecoder fn = train_synthesis_fn(f.corpus.dataset, subset, 5.0, f.gamma, cfg);
    REQUIRE(fn.epoch_losses.size() == 8);
    CHECK(fn.epoch_losses.back() < fn.epoch_losses.front());

    EncoderDecoder fn2 = train_synthesis_fn(f.corpus.dataset, subset, 5.0, f.gamma, cfg);
    CHECK(fn.epoch_losses == fn2.epoch_losses);
    const auto& x = f.corpus.dataset.samples[subset[0]].features;
    CHECK(synthesize(fn, x) == synthesize(fn2, x));

    CHECK_THROWS_AS(
        train_synthesis_fn(f.corpus.dataset, std::vector<std::size_t>{0}, 5.0, f.gamma, cfg),
        std::invalid_argument);
}

TEST_CASE("synthesized features stay in feature space") {
    const auto& f = fixture();
    for (const auto& ab : f.bank.attributes)
        for (const auto& fn : ab.functions) {
            const auto& x = f.corpus.dataset.samples[3].features;
            const auto y = synthesize(fn, x);
            REQUIRE(y.size() == x.size());
            for (double v : y) {
                CHECK(v >= 0.0);
                CHECK(std::isfinite(v));
            }
        }
}

TEST_CASE("bank trains every target for every populated interval") {
    const auto& f = fixture();
    REQUIRE(f.bank.attributes.size() == 1);
    const AttributeBank& ab = f.bank.attributes[0];
    // the fixture grid has 3 windows over [0.2, 7.5] and 4 targets; the
    // uniform attribute distribution populates every window
    CHECK(ab.grid.intervals.size() == 3);
    CHECK(ab.functions.size() == 12);
    CHECK(f.bank.training_classes == std::vector<std::string>{"class00", "class01", "class02"});
}

TEST_CASE("augmentation follows the interval selection rule") {
    const auto& f = fixture();
    const AttributeBank& ab = f.bank.attributes[0];
    std::size_t total = 0;
    for (std::size_t i = 0; i < f.corpus.dataset.samples.size(); i += 13) {
        const auto& x = f.corpus.dataset.samples[i].features;
        const double estimate = predict_attribute(ab.regressor, x);
        const auto variants = augment(f.bank, x);
        for (const auto& af : variants) {
            const Interval& window = ab.grid.intervals[af.interval_index];
            // the source estimate lies in (or snapped to) the window; the
            // target never does
            CHECK_FALSE(window.contains(af.target));
            CHECK(af.estimated_attribute == estimate);
            CHECK(af.features.size() == f.corpus.dataset.dim);
        }
        // no duplicate (interval, target) pairs
        std::set<std::pair<std::size_t, std::size_t>> seen;
        for (const auto& af : variants) seen.insert({af.interval_index, af.target_index});
        CHECK(seen.size() == variants.size());
        total += variants.size();
    }
    CHECK(total > 0);
}

TEST_CASE("augmentation count matches the window arithmetic") {
    const auto& f = fixture();
    const AttributeBank& ab = f.bank.attributes[0];
    // pick a sample whose estimate falls inside exactly one window, then the
    // variant count is the number of targets outside that window
    for (std::size_t i = 0; i < f.corpus.dataset.samples.size(); ++i) {
        const auto& x = f.corpus.dataset.samples[i].features;
        const double estimate = predict_attribute(ab.regressor, x);
        const auto hits = containing_intervals(ab.grid, estimate);
        if (hits.size() != 1) continue;
        std::size_t outside = 0;
        for (double t : ab.grid.targets)
            if (!ab.grid.intervals[hits[0]].contains(t)) ++outside;
        CHECK(augment(f.bank, x).size() == outside);
        return;
    }
    FAIL("no sample with a single covering window");
}

TEST_CASE("bank evaluation aggregates per class") {
    const auto& f = fixture();
    const auto test_idx = indices_with_split(f.corpus.dataset, Split::Test);
    FeatureDataset testset = subset_dataset(f.corpus.dataset, test_idx);
    BankEvalReport report = evaluate_bank(f.bank, "depth", testset);
    CHECK(report.attribute == "depth");
    CHECK(report.applications > 0);
    CHECK(report.rows.size() == 5);  // unseen classes have test samples too
    for (const auto& row : report.rows) {
        CHECK(row.applications > 0);
        CHECK(std::isfinite(row.median_target_error));
        CHECK(row.mean_rho >= -1.0);
        CHECK(row.mean_rho <= 1.0);
    }
}

TEST_CASE("bank training is scheduling independent") {
    const auto& f = fixture();
    const auto train_idx = indices_with_split(f.corpus.dataset, Split::Train);
    FeatureDataset train_pool = subset_dataset(f.corpus.dataset, train_idx);
    SynthTrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 64;
    cfg.seed = 5;
    SynthesisBank serial = train_bank(train_pool, {f.grid}, {f.gamma}, cfg, 1);
    SynthesisBank threaded = train_bank(train_pool, {f.grid}, {f.gamma}, cfg, 4);
    REQUIRE(serial.attributes[0].functions.size() == threaded.attributes[0].functions.size());
    const auto& x = f.corpus.dataset.samples[0].features;
    for (std::size_t i = 0; i < serial.attributes[0].functions.size(); ++i) {
        const auto& fa = serial.attributes[0].functions[i];
        const auto& fb = threaded.attributes[0].functions[i];
        CHECK(fa.interval_index == fb.interval_index);
        CHECK(fa.target_index == fb.target_index);
        CHECK(synthesize(fa, x) == synthesize(fb, x));
    }
}

TEST_CASE("bank training validates its wiring") {
    const auto& f = fixture();
    SynthTrainConfig cfg;
    IntervalGrid wrong = f.grid;
    wrong.attribute = "pose";
    CHECK_THROWS_AS(train_bank(f.corpus.dataset, {wrong}, {f.gamma}, cfg), std::invalid_argument);
    CHECK_THROWS_AS(train_bank(f.corpus.dataset, {}, {}, cfg), std::invalid_argument);
}
