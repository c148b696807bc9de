#pragma once

#include <aga/dataset_io.hpp>
#include <aga/interval_grid.hpp>
#include <aga/network.hpp>
#include <aga/regressor.hpp>
#include <aga/svm.hpp>
#include <aga/synthesis.hpp>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace aga {

namespace io {

inline std::uint32_t crc32(std::string_view bytes) {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = c & 1 ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (unsigned char b : bytes) crc = table[(crc ^ b) & 0xffu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

inline void put_network(std::string& out, const Network& net) {
    put_u32(out, static_cast<std::uint32_t>(net.input_dim));
    put_u32(out, static_cast<std::uint32_t>(net.layers.size()));
    for (const Layer& layer : net.layers) {
        put_u32(out, static_cast<std::uint32_t>(layer.index()));
        if (const auto* lin = std::get_if<LinearLayer>(&layer)) {
            put_u32(out, static_cast<std::uint32_t>(lin->in_dim()));
            put_u32(out, static_cast<std::uint32_t>(lin->out_dim()));
            for (double w : lin->weight.data) put_f64(out, w);
            for (double b : lin->bias) put_f64(out, b);
        } else if (const auto* bn = std::get_if<BatchNormLayer>(&layer)) {
            put_u32(out, static_cast<std::uint32_t>(bn->dim()));
            for (double v : bn->scale) put_f64(out, v);
            for (double v : bn->shift) put_f64(out, v);
            for (double v : bn->running_mean) put_f64(out, v);
            for (double v : bn->running_var) put_f64(out, v);
            put_f64(out, bn->epsilon);
            put_f64(out, bn->momentum);
        } else if (const auto* elu = std::get_if<EluLayer>(&layer)) {
            put_f64(out, elu->alpha);
        } else if (const auto* drop = std::get_if<DropoutLayer>(&layer)) {
            put_f64(out, drop->rate);
        }
    }
}

inline Network get_network(ByteReader& r) {
    Network net;
    net.input_dim = r.u32();
    const std::uint32_t n_layers = r.u32();
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        const std::uint32_t kind = r.u32();
        switch (kind) {
            case 0: {
                LinearLayer lin;
                const std::uint32_t in = r.u32(), out = r.u32();
                lin.weight = Matrix(in, out);
                for (double& w : lin.weight.data) w = r.f64();
                lin.bias.resize(out);
                for (double& b : lin.bias) b = r.f64();
                net.layers.emplace_back(std::move(lin));
                break;
            }
            case 1: {
                BatchNormLayer bn(r.u32());
                for (double& v : bn.scale) v = r.f64();
                for (double& v : bn.shift) v = r.f64();
                for (double& v : bn.running_mean) v = r.f64();
                for (double& v : bn.running_var) v = r.f64();
                bn.epsilon = r.f64();
                bn.momentum = r.f64();
                net.layers.emplace_back(std::move(bn));
                break;
            }
            case 2:
                net.layers.emplace_back(ReluLayer{});
                break;
            case 3: {
                EluLayer elu;
                elu.alpha = r.f64();
                net.layers.emplace_back(elu);
                break;
            }
            case 4: {
                DropoutLayer drop;
                drop.rate = r.f64();
                net.layers.emplace_back(drop);
                break;
            }
            default:
                throw std::runtime_error("unknown layer kind " + std::to_string(kind) +
                                         " at offset " + std::to_string(r.position()));
        }
    }
    validate_network(net);
    return net;
}

inline void put_f64_list(std::string& out, const std::vector<double>& values) {
    put_u64(out, values.size());
    for (double v : values) put_f64(out, v);
}

inline std::vector<double> get_f64_list(ByteReader& r) {
    std::vector<double> values(r.u64());
    for (double& v : values) v = r.f64();
    return values;
}

}  // namespace io

inline constexpr char kModelMagic[4] = {'A', 'G', 'A', '1'};
inline constexpr std::uint32_t kModelVersion = 1;

// Everything a trained pipeline persists. Archives carry inference state;
// run provenance (trial counts, corpus spec, ...) lives in run reports.
struct ModelArchive {
    std::vector<AttributeRegressor> regressors;
    std::vector<EncoderDecoder> synthesis_functions;
    std::vector<LinearSvmModel> svms;
    std::vector<IntervalGrid> grids;
};

namespace io {

inline constexpr std::uint32_t kRecordRegressor = 1;
inline constexpr std::uint32_t kRecordSynthesis = 2;
inline constexpr std::uint32_t kRecordSvm = 3;
inline constexpr std::uint32_t kRecordGrid = 4;

}  // namespace io

inline std::string encode_model(const ModelArchive& archive) {
    std::string payload;
    io::put_u32(payload, kModelVersion);
    io::put_u64(payload, archive.regressors.size() + archive.synthesis_functions.size() +
                             archive.svms.size() + archive.grids.size());

    for (const AttributeRegressor& reg : archive.regressors) {
        io::put_u32(payload, io::kRecordRegressor);
        io::put_str(payload, reg.attribute);
        io::put_u64(payload, reg.config.epochs);
        io::put_u64(payload, reg.config.batch_size);
        io::put_f64(payload, reg.config.learning_rate);
        io::put_u64(payload, reg.config.hidden);
        io::put_f64(payload, reg.config.weight_decay);
        io::put_u64(payload, reg.config.seed);
        io::put_network(payload, reg.network);
        io::put_f64_list(payload, reg.epoch_losses);
    }
    for (const EncoderDecoder& fn : archive.synthesis_functions) {
        io::put_u32(payload, io::kRecordSynthesis);
        io::put_str(payload, fn.attribute);
        io::put_u64(payload, fn.interval_index);
        io::put_f64(payload, fn.lo);
        io::put_f64(payload, fn.hi);
        io::put_u64(payload, fn.target_index);
        io::put_f64(payload, fn.target);
        io::put_f64(payload, fn.lambda);
        io::put_network(payload, fn.network);
        io::put_f64_list(payload, fn.epoch_losses);
    }
    for (const LinearSvmModel& svm : archive.svms) {
        io::put_u32(payload, io::kRecordSvm);
        io::put_u64(payload, svm.classes.size());
        for (const auto& label : svm.classes) io::put_str(payload, label);
        io::put_u64(payload, svm.weights.cols);
        for (double w : svm.weights.data) io::put_f64(payload, w);
        for (double b : svm.biases) io::put_f64(payload, b);
        io::put_f64(payload, svm.cost);
    }
    for (const IntervalGrid& grid : archive.grids) {
        io::put_u32(payload, io::kRecordGrid);
        io::put_str(payload, grid.attribute);
        io::put_u64(payload, grid.intervals.size());
        for (const Interval& iv : grid.intervals) {
            io::put_f64(payload, iv.lo);
            io::put_f64(payload, iv.hi);
        }
        io::put_f64_list(payload, grid.targets);
        io::put_f64(payload, grid.range_min);
        io::put_f64(payload, grid.range_max);
    }

    std::string out(kModelMagic, 4);
    out += payload;
    io::put_u32(out, io::crc32(payload));
    return out;
}

inline ModelArchive decode_model(const std::string& bytes, const std::string& origin) {
    if (bytes.size() < 4 || bytes.compare(0, 4, kModelMagic, 4) != 0)
        throw std::runtime_error(origin + ": not a model archive (bad magic)");
    if (bytes.size() < 8) throw std::runtime_error(origin + ": truncated model archive");

    const std::string payload = bytes.substr(4, bytes.size() - 8);
    std::uint32_t stored = 0;
    for (int i = 3; i >= 0; --i)
        stored = (stored << 8) | static_cast<unsigned char>(bytes[bytes.size() - 4 + i]);
    const std::uint32_t computed = io::crc32(payload);
    if (stored != computed)
        throw std::runtime_error(origin + ": checksum mismatch (stored " + std::to_string(stored) +
                                 ", computed " + std::to_string(computed) + ")");

    io::ByteReader r(payload, origin);
    const std::uint32_t version = r.u32();
    if (version != kModelVersion)
        throw std::runtime_error(origin + ": unsupported model archive version " +
                                 std::to_string(version));

    ModelArchive archive;
    const std::uint64_t n_records = r.u64();
    for (std::uint64_t rec = 0; rec < n_records; ++rec) {
        const std::uint32_t kind = r.u32();
        if (kind == io::kRecordRegressor) {
            AttributeRegressor reg;
            reg.attribute = r.str();
            reg.config.epochs = r.u64();
            reg.config.batch_size = r.u64();
            reg.config.learning_rate = r.f64();
            reg.config.hidden = r.u64();
            reg.config.weight_decay = r.f64();
            reg.config.seed = r.u64();
            reg.network = io::get_network(r);
            reg.epoch_losses = io::get_f64_list(r);
            archive.regressors.push_back(std::move(reg));
        } else if (kind == io::kRecordSynthesis) {
            EncoderDecoder fn;
            fn.attribute = r.str();
            fn.interval_index = r.u64();
            fn.lo = r.f64();
            fn.hi = r.f64();
            fn.target_index = r.u64();
            fn.target = r.f64();
            fn.lambda = r.f64();
            fn.network = io::get_network(r);
            fn.epoch_losses = io::get_f64_list(r);
            archive.synthesis_functions.push_back(std::move(fn));
        } else if (kind == io::kRecordSvm) {
            LinearSvmModel svm;
            const std::uint64_t n_classes = r.u64();
            for (std::uint64_t c = 0; c < n_classes; ++c) svm.classes.push_back(r.str());
            const std::uint64_t dim = r.u64();
            svm.weights = Matrix(n_classes, dim);
            for (double& w : svm.weights.data) w = r.f64();
            svm.biases.resize(n_classes);
            for (double& b : svm.biases) b = r.f64();
            svm.cost = r.f64();
            archive.svms.push_back(std::move(svm));
        } else if (kind == io::kRecordGrid) {
            IntervalGrid grid;
            grid.attribute = r.str();
            grid.intervals.resize(r.u64());
            for (Interval& iv : grid.intervals) {
                iv.lo = r.f64();
                iv.hi = r.f64();
            }
            grid.targets = io::get_f64_list(r);
            grid.range_min = r.f64();
            grid.range_max = r.f64();
            archive.grids.push_back(std::move(grid));
        } else {
            throw std::runtime_error(origin + ": unknown record kind " + std::to_string(kind) +
                                     " at offset " + std::to_string(r.position()));
        }
    }
    if (r.remaining() != 0)
        throw std::runtime_error(origin + ": trailing bytes after records");
    return archive;
}

inline void save_model(const ModelArchive& archive, const std::string& path) {
    io::write_file(path, encode_model(archive));
}

inline ModelArchive load_model(const std::string& path) {
    return decode_model(io::read_file(path), path);
}

// A synthesis bank flattens into one regressor + one grid per attribute and
// the (attribute, interval, target)-keyed functions.
inline ModelArchive bank_to_archive(const SynthesisBank& bank) {
    ModelArchive archive;
    for (const AttributeBank& ab : bank.attributes) {
        archive.regressors.push_back(ab.regressor);
        archive.grids.push_back(ab.grid);
        for (const EncoderDecoder& fn : ab.functions) archive.synthesis_functions.push_back(fn);
    }
    return archive;
}

// Rebuilds the bank from an archive holding exactly one regressor and one
// grid per attribute. training_classes is inference-irrelevant provenance
// and is not archived; it comes back empty.
inline SynthesisBank bank_from_archive(const ModelArchive& archive) {
    SynthesisBank bank;
    for (std::size_t i = 0; i < archive.regressors.size(); ++i) {
        const AttributeRegressor& reg = archive.regressors[i];
        AttributeBank ab;
        ab.attribute = reg.attribute;
        ab.regressor = reg;
        bool found = false;
        for (const IntervalGrid& grid : archive.grids)
            if (grid.attribute == ab.attribute) {
                ab.grid = grid;
                found = true;
                break;
            }
        if (!found)
            throw std::runtime_error("bank_from_archive: no grid for attribute '" + ab.attribute +
                                     "'");
        for (const EncoderDecoder& fn : archive.synthesis_functions)
            if (fn.attribute == ab.attribute) ab.functions.push_back(fn);
        bank.attributes.push_back(std::move(ab));
    }
    if (bank.attributes.empty()) throw std::runtime_error("bank_from_archive: no regressor records");
    return bank;
}

}  // namespace aga
