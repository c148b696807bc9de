#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace aga {

enum class AttributeResponse { Linear, Sqrt };

struct SyntheticAttribute {
    std::string name;
    double min_value = 0.0;
    double max_value = 1.0;
};

struct SyntheticSpec {
    std::size_t n_classes = 20;
    std::size_t n_seen = 10;           // first n_seen classes carry Train/Test splits
    std::size_t dim = 64;
    std::size_t samples_per_class = 300;
    // depth in meters, pose in radians: both attributes live at O(1) scale so
    // the same training configuration behaves comparably on each
    std::vector<SyntheticAttribute> attributes = {{"depth", 0.2, 7.5},
                                                  {"pose", 0.0, std::numbers::pi}};
    double noise_rel = 0.05;           // noise vector norm relative to mean direction norm
    double class_offset = 0.35;        // scale of per-class mean offsets around 1.5
    double identity_jitter = 0.5;      // per-sample identity spread, fraction of the offset norm
    double shared_direction_frac = 0.75;
    std::size_t subspace_dim = 0;      // identity subspace rank; 0 picks min(max(2, dim/16), n_seen)
    double train_fraction = 0.8;       // per seen class
    AttributeResponse response = AttributeResponse::Linear;
    std::uint64_t seed = 1;
};

inline void validate_spec(const SyntheticSpec& spec) {
    if (spec.n_classes < 2) throw std::invalid_argument("synthetic: needs at least two classes");
    if (spec.n_seen == 0 || spec.n_seen > spec.n_classes)
        throw std::invalid_argument("synthetic: n_seen must be in [1, n_classes]");
    if (spec.dim < 8) throw std::invalid_argument("synthetic: dim must be at least 8");
    if (spec.samples_per_class < 2) throw std::invalid_argument("synthetic: needs >= 2 samples per class");
    if (spec.attributes.empty()) throw std::invalid_argument("synthetic: needs at least one attribute");
    for (const auto& attr : spec.attributes) {
        if (attr.name.empty()) throw std::invalid_argument("synthetic: empty attribute name");
        if (!(attr.max_value > attr.min_value) || attr.min_value < 0.0)
            throw std::invalid_argument("synthetic: attribute '" + attr.name +
                                        "' needs a non-negative range with max > min");
    }
    if (spec.noise_rel < 0.0) throw std::invalid_argument("synthetic: noise_rel must be >= 0");
    if (spec.class_offset <= 0.0 || spec.class_offset >= 1.0)
        throw std::invalid_argument("synthetic: class_offset outside (0,1)");
    if (spec.identity_jitter < 0.0)
        throw std::invalid_argument("synthetic: identity_jitter must be >= 0");
    if (spec.shared_direction_frac < 0.0 || spec.shared_direction_frac > 1.0)
        throw std::invalid_argument("synthetic: shared_direction_frac outside [0,1]");
    if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0)
        throw std::invalid_argument("synthetic: train_fraction outside (0,1)");
}

// Ground truth behind a generated corpus. Features are
//   max(0, class_mean + identity jitter + sum_a response(s_a) * direction[class][a] + noise)
// with class means in [1,2]^dim and direction entries small enough that the
// clean value never clips. clean_feature reports the jitter-free feature at
// the class mean — the canonical appearance of the class at those attribute
// values.
class SyntheticOracle {
public:
    SyntheticOracle() = default;

    SyntheticOracle(SyntheticSpec spec, std::vector<std::string> labels,
                    std::vector<std::vector<double>> class_means,
                    std::vector<std::vector<std::vector<double>>> directions)
        : spec_(std::move(spec)),
          labels_(std::move(labels)),
          class_means_(std::move(class_means)),
          directions_(std::move(directions)) {}

    const SyntheticSpec& spec() const { return spec_; }
    const std::vector<std::string>& class_labels() const { return labels_; }

    bool seen_class(const std::string& label) const { return class_index(label) < spec_.n_seen; }

    std::size_t class_index(const std::string& label) const {
        for (std::size_t c = 0; c < labels_.size(); ++c)
            if (labels_[c] == label) return c;
        throw std::invalid_argument("synthetic oracle: unknown class '" + label + "'");
    }

    double response(std::size_t attr, double value) const {
        const auto& a = spec_.attributes[attr];
        if (value < a.min_value || value > a.max_value)
            throw std::invalid_argument("synthetic oracle: attribute value outside range");
        const double g = value / a.max_value;
        return spec_.response == AttributeResponse::Sqrt ? std::sqrt(g) : g;
    }

    double inverse_response(std::size_t attr, double g) const {
        const auto& a = spec_.attributes[attr];
        double value = spec_.response == AttributeResponse::Sqrt ? g * g * a.max_value : g * a.max_value;
        return std::clamp(value, a.min_value, a.max_value);
    }

    // Noise-free feature for a class at the given attribute values.
    std::vector<double> clean_feature(const std::string& label,
                                      std::span<const double> attribute_values) const {
        const std::size_t c = class_index(label);
        if (attribute_values.size() != spec_.attributes.size())
            throw std::invalid_argument("synthetic oracle: wrong attribute count");
        std::vector<double> x = class_means_[c];
        for (std::size_t a = 0; a < attribute_values.size(); ++a) {
            const double g = response(a, attribute_values[a]);
            for (std::size_t j = 0; j < x.size(); ++j) x[j] += g * directions_[c][a][j];
        }
        for (double& v : x) v = std::max(0.0, v);
        return x;
    }

    // Ground-truth attribute value behind a feature vector. Exact lookup for
    // vectors the generator emitted; otherwise inverts the generative model by
    // least squares against each class and picks the best-fitting class.
    double true_attribute(std::span<const double> x, std::size_t attr) const {
        if (attr >= spec_.attributes.size())
            throw std::invalid_argument("synthetic oracle: attribute index out of range");
        if (x.size() != spec_.dim) throw std::invalid_argument("synthetic oracle: wrong feature dimension");
        const auto it = recorded_.find(key_of(x));
        if (it != recorded_.end()) return it->second[attr];

        double best_residual = std::numeric_limits<double>::infinity();
        double best_value = spec_.attributes[attr].min_value;
        for (std::size_t c = 0; c < labels_.size(); ++c) {
            auto [residual, coeffs] = fit_class(x, c);
            if (residual < best_residual) {
                best_residual = residual;
                best_value = inverse_response(attr, coeffs[attr]);
            }
        }
        return best_value;
    }

    void record(std::span<const double> features, std::span<const double> attribute_values) {
        recorded_[key_of(features)] = std::vector<double>(attribute_values.begin(), attribute_values.end());
    }

private:
    static std::string key_of(std::span<const double> x) {
        return {reinterpret_cast<const char*>(x.data()), x.size() * sizeof(double)};
    }

    // Least-squares fit of (x - mean_c) onto the class's direction vectors;
    // returns the residual norm^2 and the per-attribute coefficients.
    std::pair<double, std::vector<double>> fit_class(std::span<const double> x, std::size_t c) const {
        const std::size_t k = spec_.attributes.size();
        Matrix ata(k, k);
        std::vector<double> atb(k, 0.0);
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b < k; ++b) {
                double sum = 0.0;
                for (std::size_t j = 0; j < spec_.dim; ++j)
                    sum += directions_[c][a][j] * directions_[c][b][j];
                ata(a, b) = sum;
            }
            double sum = 0.0;
            for (std::size_t j = 0; j < spec_.dim; ++j)
                sum += directions_[c][a][j] * (x[j] - class_means_[c][j]);
            atb[a] = sum;
        }
        std::vector<double> coeffs = solve_spd(ata, atb);
        double residual = 0.0;
        for (std::size_t j = 0; j < spec_.dim; ++j) {
            double fit = class_means_[c][j];
            for (std::size_t a = 0; a < k; ++a) fit += coeffs[a] * directions_[c][a][j];
            const double d = x[j] - fit;
            residual += d * d;
        }
        return {residual, std::move(coeffs)};
    }

    // Gaussian elimination with partial pivoting; systems here are tiny
    // (one row per attribute).
    static std::vector<double> solve_spd(Matrix a, std::vector<double> b) {
        const std::size_t n = b.size();
        for (std::size_t col = 0; col < n; ++col) {
            std::size_t pivot = col;
            for (std::size_t r = col + 1; r < n; ++r)
                if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
            if (std::abs(a(pivot, col)) < 1e-12)
                throw std::runtime_error("synthetic oracle: degenerate direction system");
            if (pivot != col) {
                for (std::size_t cc = 0; cc < n; ++cc) std::swap(a(col, cc), a(pivot, cc));
                std::swap(b[col], b[pivot]);
            }
            for (std::size_t r = col + 1; r < n; ++r) {
                const double f = a(r, col) / a(col, col);
                for (std::size_t cc = col; cc < n; ++cc) a(r, cc) -= f * a(col, cc);
                b[r] -= f * b[col];
            }
        }
        std::vector<double> x(n, 0.0);
        for (std::size_t r = n; r-- > 0;) {
            double sum = b[r];
            for (std::size_t cc = r + 1; cc < n; ++cc) sum -= a(r, cc) * x[cc];
            x[r] = sum / a(r, r);
        }
        return x;
    }

    SyntheticSpec spec_;
    std::vector<std::string> labels_;
    std::vector<std::vector<double>> class_means_;
    std::vector<std::vector<std::vector<double>>> directions_;  // [class][attribute][dim]
    std::unordered_map<std::string, std::vector<double>> recorded_;
};

struct SyntheticCorpus {
    FeatureDataset dataset;  // seen classes carry Train/Test splits, unseen are all Test
    SyntheticOracle oracle;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

// Removes the component of v along dir (no-op when dir is zero).
inline void project_out(std::vector<double>& v, const std::vector<double>& dir) {
    const double denom = dot(dir, dir);
    if (denom <= 0.0) return;
    const double coeff = dot(v, dir) / denom;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= coeff * dir[i];
}

}  // namespace detail

// Deterministic synthetic corpus with class-conditional attribute structure.
// Per-class directions blend a shared per-attribute direction with per-class
// jitter so attribute geometry transfers across classes. Class identity
// (mean offsets) lives in a shared low-dimensional subspace orthogonal to the
// shared directions, while each class's direction jitter gets fresh dimensions
// orthogonal to both: identity and attribute variation never mix, so an
// attribute readout fit on the training classes carries no per-class bias and
// translates to new classes, mirroring how novel objects decompose over
// familiar visual components. Per-sample identity jitter spreads each class
// into a cloud inside that subspace, so models meet the region between and
// around class means during training instead of ten isolated points — the
// within-category appearance variation that keeps real feature extractors
// from keying on exact class positions.
inline SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
    validate_spec(spec);
    Rng rng(derive_seed(spec.seed, 0xa6a));

    const std::size_t n_attrs = spec.attributes.size();
    // direction entries sized so attribute displacement dominates noise and
    // reconstruction blur while staying below the class means; the per-class
    // rejection loop below guarantees clean features never hit the zero clip
    const double dir_bound = 1.2 / static_cast<double>(n_attrs);

    std::vector<std::vector<double>> shared(n_attrs, std::vector<double>(spec.dim));
    for (auto& dir : shared)
        for (double& v : dir) v = rng.uniform(-dir_bound, dir_bound);
    for (std::size_t a = 1; a < n_attrs; ++a)
        for (std::size_t b = 0; b < a; ++b) detail::project_out(shared[a], shared[b]);

    std::vector<double> shared_norm(n_attrs);
    for (std::size_t a = 0; a < n_attrs; ++a)
        shared_norm[a] = std::sqrt(detail::dot(shared[a], shared[a]));

    // orthonormal identity subspace, orthogonal to every shared direction
    // kept small relative to n_seen so the training classes cover the
    // identity distribution densely enough for transfer to new classes
    const std::size_t subspace =
        spec.subspace_dim != 0
            ? spec.subspace_dim
            : std::min(std::max<std::size_t>(2, spec.dim / 16), std::max<std::size_t>(1, spec.n_seen));
    if (subspace + n_attrs > spec.dim)
        throw std::invalid_argument("synthetic: subspace_dim + attribute count exceeds dim");
    std::vector<std::vector<double>> basis(subspace, std::vector<double>(spec.dim));
    for (std::size_t k = 0; k < subspace; ++k) {
        auto& b = basis[k];
        double norm = 0.0;
        for (std::size_t attempt = 0; attempt < 64 && norm <= 1e-6; ++attempt) {
            for (double& v : b) v = rng.normal(0.0, 1.0);
            for (const auto& dir : shared) detail::project_out(b, dir);
            for (std::size_t p = 0; p < k; ++p) detail::project_out(b, basis[p]);
            norm = std::sqrt(detail::dot(b, b));
        }
        if (norm <= 1e-6) throw std::runtime_error("synthetic: degenerate identity subspace");
        for (double& v : b) v /= norm;
    }

    std::vector<std::string> labels(spec.n_classes);
    std::vector<std::vector<double>> means(spec.n_classes, std::vector<double>(spec.dim));
    std::vector<std::vector<std::vector<double>>> directions(
        spec.n_classes, std::vector<std::vector<double>>(n_attrs, std::vector<double>(spec.dim)));

    // matches the norm of an entrywise U(-class_offset, class_offset) vector
    const double offset_norm = spec.class_offset * std::sqrt(static_cast<double>(spec.dim) / 3.0);

    auto response_of = [&](std::size_t a, double value) {
        const double g = value / spec.attributes[a].max_value;
        return spec.response == AttributeResponse::Sqrt ? std::sqrt(g) : g;
    };
    // min over the attribute box of every clean-feature entry; the response is
    // monotone, so corners cover the box (skipped past 10 attributes where the
    // corner count explodes — the zero-clip then simply may engage)
    auto clean_stays_positive = [&](std::size_t c) {
        if (n_attrs > 10) return true;
        for (std::size_t corner = 0; corner < (std::size_t{1} << n_attrs); ++corner) {
            for (std::size_t j = 0; j < spec.dim; ++j) {
                double v = means[c][j];
                for (std::size_t a = 0; a < n_attrs; ++a) {
                    const double value = (corner >> a) & 1 ? spec.attributes[a].max_value
                                                           : spec.attributes[a].min_value;
                    v += response_of(a, value) * directions[c][a][j];
                }
                if (v <= 0.0) return false;
            }
        }
        return true;
    };

    // Gaussian coordinates, not rescaled to a fixed norm: identity vectors of
    // new classes then fall inside the cloud the training classes span, so
    // models interpolate rather than extrapolate to them.
    auto draw_in_subspace = [&](double target_norm) {
        const double coord_sigma = target_norm / std::sqrt(static_cast<double>(subspace));
        std::vector<double> coords(subspace);
        for (double& v : coords) v = rng.normal(0.0, coord_sigma);
        std::vector<double> out(spec.dim, 0.0);
        for (std::size_t k = 0; k < subspace; ++k)
            for (std::size_t j = 0; j < spec.dim; ++j) out[j] += coords[k] * basis[k][j];
        return out;
    };

    // Direction jitter lives outside both the shared directions and the
    // identity subspace. Distinct classes then jitter along nearly orthogonal
    // directions, so no attribute readout can pool them, and the class means
    // stay the only identity signal.
    auto draw_direction_jitter = [&](double target_norm) {
        std::vector<double> out(spec.dim);
        double norm = 0.0;
        for (std::size_t attempt = 0; attempt < 64 && norm <= 1e-6; ++attempt) {
            for (double& v : out) v = rng.normal(0.0, 1.0);
            for (const auto& dir : shared) detail::project_out(out, dir);
            for (const auto& b : basis) detail::project_out(out, b);
            norm = std::sqrt(detail::dot(out, out));
        }
        if (norm <= 1e-6) throw std::runtime_error("synthetic: degenerate direction jitter");
        for (double& v : out) v *= target_norm / norm;
        return out;
    };

    for (std::size_t c = 0; c < spec.n_classes; ++c) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "class%02zu", c);
        labels[c] = buf;

        // classes i and j stay nearest-neighbour distinguishable only if their
        // mean offsets are not angularly coincident in the identity subspace
        const double min_sep2 = 0.25 * offset_norm * offset_norm;
        bool ok = false;
        for (std::size_t attempt = 0; attempt < 64 && !ok; ++attempt) {
            const auto offset = draw_in_subspace(offset_norm);
            bool separated = true;
            for (std::size_t p = 0; p < c && separated; ++p) {
                double d2 = 0.0;
                for (std::size_t j = 0; j < spec.dim; ++j) {
                    const double diff = 1.5 + offset[j] - means[p][j];
                    d2 += diff * diff;
                }
                separated = d2 >= min_sep2;
            }
            if (!separated) continue;
            for (std::size_t j = 0; j < spec.dim; ++j) means[c][j] = 1.5 + offset[j];

            for (std::size_t a = 0; a < n_attrs; ++a) {
                const auto jitter = draw_direction_jitter(shared_norm[a]);
                for (std::size_t j = 0; j < spec.dim; ++j)
                    directions[c][a][j] = spec.shared_direction_frac * shared[a][j] +
                                          (1.0 - spec.shared_direction_frac) * jitter[j];
            }
            ok = clean_stays_positive(c);
        }
        if (!ok)
            throw std::runtime_error("synthetic: could not place class " + labels[c] +
                                     " (needs positive clean features and separation from "
                                     "earlier classes); raise dim or subspace_dim, or lower "
                                     "n_classes or direction scales");
    }

    SyntheticCorpus corpus;
    corpus.oracle = SyntheticOracle(spec, labels, means, directions);
    corpus.dataset.dim = spec.dim;
    for (const auto& attr : spec.attributes) corpus.dataset.attribute_names.push_back(attr.name);
    corpus.dataset.provenance = "synthetic(seed=" + std::to_string(spec.seed) + ")";

    const std::size_t train_per_class =
        static_cast<std::size_t>(static_cast<double>(spec.samples_per_class) * spec.train_fraction);

    for (std::size_t c = 0; c < spec.n_classes; ++c) {
        double mean_dir_norm = 0.0;
        for (std::size_t a = 0; a < n_attrs; ++a) {
            double norm2 = 0.0;
            for (double v : directions[c][a]) norm2 += v * v;
            mean_dir_norm += std::sqrt(norm2);
        }
        mean_dir_norm /= static_cast<double>(n_attrs);
        // noise_rel controls the expected noise NORM relative to the direction
        // norm, hence the sqrt(dim) split across entries
        const double sigma = spec.noise_rel * mean_dir_norm / std::sqrt(static_cast<double>(spec.dim));

        for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
            AttributeSample sample;
            sample.class_label = labels[c];
            sample.attributes.resize(n_attrs);
            for (std::size_t a = 0; a < n_attrs; ++a)
                sample.attributes[a] =
                    rng.uniform(spec.attributes[a].min_value, spec.attributes[a].max_value);
            sample.features = corpus.oracle.clean_feature(labels[c], sample.attributes);
            // per-sample identity spread: samples of a class form a cloud in
            // the identity subspace rather than a point, the way instances of
            // one object category vary in appearance
            if (spec.identity_jitter > 0.0) {
                const auto wobble = draw_in_subspace(spec.identity_jitter * offset_norm);
                for (std::size_t j = 0; j < spec.dim; ++j)
                    sample.features[j] += wobble[j];
            }
            if (sigma > 0.0)
                for (double& f : sample.features) f += rng.normal(0.0, sigma);
            for (double& f : sample.features) f = std::max(0.0, f);
            const bool seen = c < spec.n_seen;
            sample.split = (seen && s < train_per_class) ? Split::Train : Split::Test;
            corpus.oracle.record(sample.features, sample.attributes);
            corpus.dataset.samples.push_back(std::move(sample));
        }
    }
    validate_dataset(corpus.dataset);
    return corpus;
}

}  // namespace aga
