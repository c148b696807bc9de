#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aga {

enum class Split { Train, Test };

// One instance: a non-negative feature vector plus one value per dataset
// attribute (aligned with FeatureDataset::attribute_names).
struct AttributeSample {
    std::string class_label;
    std::vector<double> attributes;
    std::vector<double> features;
    Split split = Split::Train;
};

struct FeatureDataset {
    std::size_t dim = 0;
    std::vector<std::string> attribute_names;
    std::vector<AttributeSample> samples;
    std::string provenance;

    std::size_t attribute_index(const std::string& name) const {
        for (std::size_t i = 0; i < attribute_names.size(); ++i)
            if (attribute_names[i] == name) return i;
        throw std::invalid_argument("dataset has no attribute named '" + name + "'");
    }
};

inline void validate_dataset(const FeatureDataset& ds) {
    if (ds.dim == 0) throw std::invalid_argument("dataset: feature dimension must be positive");
    if (ds.attribute_names.empty()) throw std::invalid_argument("dataset: needs at least one attribute");
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const AttributeSample& s = ds.samples[i];
        if (s.features.size() != ds.dim)
            throw std::invalid_argument("dataset: sample " + std::to_string(i) +
                                        " has wrong feature dimension");
        if (s.attributes.size() != ds.attribute_names.size())
            throw std::invalid_argument("dataset: sample " + std::to_string(i) +
                                        " has wrong attribute count");
        if (s.class_label.empty())
            throw std::invalid_argument("dataset: sample " + std::to_string(i) + " has empty class label");
        for (double f : s.features)
            if (!std::isfinite(f) || f < 0.0)
                throw std::invalid_argument("dataset: sample " + std::to_string(i) +
                                            " has a negative or non-finite feature");
        for (double a : s.attributes)
            if (!std::isfinite(a))
                throw std::invalid_argument("dataset: sample " + std::to_string(i) +
                                            " has a non-finite attribute value");
    }
}

// Class label -> sample indices, labels in sorted order.
inline std::map<std::string, std::vector<std::size_t>> by_class(const FeatureDataset& ds) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) groups[ds.samples[i].class_label].push_back(i);
    return groups;
}

inline std::vector<std::size_t> indices_with_split(const FeatureDataset& ds, Split split) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        if (ds.samples[i].split == split) out.push_back(i);
    return out;
}

inline std::vector<std::size_t> all_indices(const FeatureDataset& ds) {
    std::vector<std::size_t> out(ds.samples.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
    return out;
}

inline FeatureDataset subset_dataset(const FeatureDataset& ds, std::span<const std::size_t> indices) {
    FeatureDataset out;
    out.dim = ds.dim;
    out.attribute_names = ds.attribute_names;
    out.provenance = ds.provenance;
    out.samples.reserve(indices.size());
    for (std::size_t idx : indices) {
        if (idx >= ds.samples.size()) throw std::invalid_argument("subset_dataset: index out of range");
        out.samples.push_back(ds.samples[idx]);
    }
    return out;
}

}  // namespace aga
