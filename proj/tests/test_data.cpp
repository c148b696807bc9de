#include <catch2/catch_amalgamated.hpp>

#include <aga/dataset_io.hpp>
#include <aga/matrix.hpp>
#include <aga/synthetic.hpp>

#include <cstdio>
#include <filesystem>

using namespace aga;
using Catch::Matchers::WithinAbs;

namespace {

SyntheticSpec small_spec() {
    SyntheticSpec spec;
    spec.n_classes = 6;
    spec.n_seen = 3;
    spec.dim = 16;
    spec.samples_per_class = 40;
    spec.seed = 7;
    return spec;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("aga_test_" + name);
}

}  // namespace

TEST_CASE("synthetic corpus is deterministic per seed") {
    SyntheticCorpus a = generate_synthetic(small_spec());
    SyntheticCorpus b = generate_synthetic(small_spec());
    REQUIRE(a.dataset.samples.size() == b.dataset.samples.size());
    for (std::size_t i = 0; i < a.dataset.samples.size(); ++i) {
        CHECK(a.dataset.samples[i].features == b.dataset.samples[i].features);
        CHECK(a.dataset.samples[i].attributes == b.dataset.samples[i].attributes);
    }
    SyntheticSpec other = small_spec();
    other.seed = 8;
    SyntheticCorpus c = generate_synthetic(other);
    CHECK(a.dataset.samples[0].features != c.dataset.samples[0].features);
}

TEST_CASE("noise-free features equal the oracle's clean model and stay positive") {
    SyntheticSpec spec = small_spec();
    spec.noise_rel = 0.0;
    SyntheticCorpus corpus = generate_synthetic(spec);
    for (const auto& s : corpus.dataset.samples) {
        const auto clean = corpus.oracle.clean_feature(s.class_label, s.attributes);
        CHECK(s.features == clean);
        for (double f : s.features) CHECK(f > 0.0);
    }
}

TEST_CASE("oracle recovers attributes of generated samples exactly") {
    SyntheticCorpus corpus = generate_synthetic(small_spec());
    for (std::size_t i = 0; i < corpus.dataset.samples.size(); i += 17) {
        const auto& s = corpus.dataset.samples[i];
        for (std::size_t a = 0; a < s.attributes.size(); ++a)
            CHECK(corpus.oracle.true_attribute(s.features, a) == s.attributes[a]);
    }
}

TEST_CASE("oracle inverts unseen noise-free features by least squares") {
    SyntheticSpec spec = small_spec();
    spec.noise_rel = 0.0;
    SyntheticCorpus corpus = generate_synthetic(spec);
    const std::vector<double> attrs{3.25, 1.9};
    for (const auto& label : corpus.oracle.class_labels()) {
        const auto x = corpus.oracle.clean_feature(label, attrs);
        CHECK_THAT(corpus.oracle.true_attribute(x, 0), WithinAbs(attrs[0], 1e-9));
        CHECK_THAT(corpus.oracle.true_attribute(x, 1), WithinAbs(attrs[1], 1e-9));
    }
}

TEST_CASE("classes are nearest-neighbour separable at default noise") {
    SyntheticCorpus corpus = generate_synthetic(small_spec());
    const auto& samples = corpus.dataset.samples;
    std::size_t correct = 0, total = 0;
    for (std::size_t i = 0; i < samples.size(); i += 5) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < samples.size(); ++j) {
            if (j == i) continue;
            const double d = squared_distance(samples[i].features, samples[j].features);
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        correct += samples[best_j].class_label == samples[i].class_label;
        ++total;
    }
    CHECK(static_cast<double>(correct) / static_cast<double>(total) >= 0.99);
}

TEST_CASE("seen classes carry train/test splits, unseen classes are all test") {
    SyntheticCorpus corpus = generate_synthetic(small_spec());
    std::size_t seen_train = 0, seen_test = 0;
    for (const auto& s : corpus.dataset.samples) {
        if (corpus.oracle.seen_class(s.class_label)) {
            (s.split == Split::Train ? seen_train : seen_test) += 1;
        } else {
            CHECK(s.split == Split::Test);
        }
    }
    CHECK(seen_train == 3 * 32);  // train_fraction 0.8 of 40 per class
    CHECK(seen_test == 3 * 8);
}

TEST_CASE("spec validation rejects bad shapes") {
    SyntheticSpec spec = small_spec();
    spec.n_seen = 9;
    CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
    spec = small_spec();
    spec.dim = 4;
    CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
    spec = small_spec();
    spec.attributes[0].max_value = spec.attributes[0].min_value;
    CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
    spec = small_spec();
    spec.train_fraction = 1.0;
    CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
}

TEST_CASE("binary dataset round trip is byte exact") {
    SyntheticCorpus corpus = generate_synthetic(small_spec());
    const auto path = temp_path("roundtrip.agad");
    save_dataset(corpus.dataset, path.string());
    FeatureDataset loaded = load_dataset(path.string());
    CHECK(loaded.dim == corpus.dataset.dim);
    CHECK(loaded.attribute_names == corpus.dataset.attribute_names);
    REQUIRE(loaded.samples.size() == corpus.dataset.samples.size());
    for (std::size_t i = 0; i < loaded.samples.size(); ++i) {
        CHECK(loaded.samples[i].features == corpus.dataset.samples[i].features);
        CHECK(loaded.samples[i].attributes == corpus.dataset.samples[i].attributes);
        CHECK(loaded.samples[i].class_label == corpus.dataset.samples[i].class_label);
    }
    // re-encoding the loaded dataset reproduces the file bit for bit
    CHECK(encode_dataset(loaded) == io::read_file(path.string()));
    std::filesystem::remove(path);
}

TEST_CASE("csv dataset round trip preserves every double exactly") {
    SyntheticCorpus corpus = generate_synthetic(small_spec());
    const auto path = temp_path("roundtrip.csv");
    save_dataset(corpus.dataset, path.string(), DatasetFormat::Csv);
    FeatureDataset loaded = load_dataset(path.string());
    REQUIRE(loaded.samples.size() == corpus.dataset.samples.size());
    CHECK(loaded.attribute_names == corpus.dataset.attribute_names);
    for (std::size_t i = 0; i < loaded.samples.size(); ++i) {
        CHECK(loaded.samples[i].features == corpus.dataset.samples[i].features);
        CHECK(loaded.samples[i].attributes == corpus.dataset.samples[i].attributes);
    }
    std::filesystem::remove(path);
}

TEST_CASE("dataset loaders reject malformed input") {
    const auto path = temp_path("bad_input");
    io::write_file(path.string(), "AGAX junk");
    CHECK_THROWS_WITH(load_dataset(path.string()), Catch::Matchers::ContainsSubstring("header"));

    io::write_file(path.string(), "class,depth,f0\nchair,1.0,-3.5\n");
    CHECK_THROWS_WITH(load_dataset(path.string()),
                      Catch::Matchers::ContainsSubstring("negative or non-finite feature"));

    io::write_file(path.string(), "class,depth,f0\nchair,1.0\n");
    CHECK_THROWS_WITH(load_dataset(path.string()), Catch::Matchers::ContainsSubstring("row 2"));

    io::write_file(path.string(), "class,depth,f0\nchair,oops,1.0\n");
    CHECK_THROWS_WITH(load_dataset(path.string()),
                      Catch::Matchers::ContainsSubstring("cannot parse"));

    // binary truncation reports the failing offset
    SyntheticCorpus corpus = generate_synthetic(small_spec());
    std::string bytes = encode_dataset(corpus.dataset);
    io::write_file(path.string(), bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_WITH(load_dataset(path.string()),
                      Catch::Matchers::ContainsSubstring("unexpected end of file"));

    std::string wrong_version = bytes;
    wrong_version[4] = 9;
    io::write_file(path.string(), wrong_version);
    CHECK_THROWS_WITH(load_dataset(path.string()),
                      Catch::Matchers::ContainsSubstring("unsupported dataset version"));

    std::filesystem::remove(path);
}
