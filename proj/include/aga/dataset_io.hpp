#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace aga {

namespace io {

inline void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_u64(out, bits);
}

inline void put_str(std::string& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

// Sequential reader with offset-aware truncation errors.
class ByteReader {
public:
    ByteReader(std::string bytes, std::string origin)
        : bytes_(std::move(bytes)), origin_(std::move(origin)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes_[pos_ + i]);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes_[pos_ + i]);
        pos_ += 8;
        return v;
    }

    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }

    std::string str() {
        const std::uint32_t len = u32();
        need(len);
        std::string s = bytes_.substr(pos_, len);
        pos_ += len;
        return s;
    }

    std::string raw(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) {
        if (bytes_.size() - pos_ < n)
            throw std::runtime_error(origin_ + ": unexpected end of file at offset " +
                                     std::to_string(pos_));
    }

    std::string bytes_;
    std::string origin_;
    std::size_t pos_ = 0;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw std::runtime_error("read error on '" + path + "'");
    return std::move(buf).str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw std::runtime_error("write error on '" + path + "'");
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& token, const std::string& context) {
    if (token.empty()) throw std::runtime_error(context + ": empty numeric field");
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size())
        throw std::runtime_error(context + ": cannot parse number '" + token + "'");
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

}  // namespace io

inline constexpr char kDatasetMagic[4] = {'A', 'G', 'A', 'D'};
inline constexpr std::uint32_t kDatasetVersion = 1;

enum class DatasetFormat { Csv, Binary };

inline std::string encode_dataset(const FeatureDataset& ds) {
    validate_dataset(ds);
    std::string out;
    out.append(kDatasetMagic, 4);
    io::put_u32(out, kDatasetVersion);
    io::put_u32(out, static_cast<std::uint32_t>(ds.dim));
    io::put_u32(out, static_cast<std::uint32_t>(ds.attribute_names.size()));
    for (const auto& name : ds.attribute_names) io::put_str(out, name);
    io::put_str(out, ds.provenance);
    io::put_u64(out, ds.samples.size());
    for (const AttributeSample& s : ds.samples) {
        io::put_str(out, s.class_label);
        for (double a : s.attributes) io::put_f64(out, a);
        for (double f : s.features) io::put_f64(out, f);
    }
    return out;
}

inline FeatureDataset decode_dataset(std::string bytes, const std::string& origin) {
    io::ByteReader r(std::move(bytes), origin);
    if (r.raw(4) != std::string(kDatasetMagic, 4))
        throw std::runtime_error(origin + ": not a dataset file (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kDatasetVersion)
        throw std::runtime_error(origin + ": unsupported dataset version " + std::to_string(version));
    FeatureDataset ds;
    ds.dim = r.u32();
    const std::uint32_t n_attrs = r.u32();
    for (std::uint32_t i = 0; i < n_attrs; ++i) ds.attribute_names.push_back(r.str());
    ds.provenance = r.str();
    const std::uint64_t n_samples = r.u64();
    ds.samples.reserve(n_samples);
    for (std::uint64_t i = 0; i < n_samples; ++i) {
        AttributeSample s;
        s.class_label = r.str();
        s.attributes.resize(n_attrs);
        for (auto& a : s.attributes) a = r.f64();
        s.features.resize(ds.dim);
        for (auto& f : s.features) f = r.f64();
        ds.samples.push_back(std::move(s));
    }
    if (r.remaining() != 0)
        throw std::runtime_error(origin + ": trailing bytes after sample records");
    validate_dataset(ds);
    return ds;
}

inline std::string encode_dataset_csv(const FeatureDataset& ds) {
    validate_dataset(ds);
    for (const auto& name : ds.attribute_names)
        if (name.find(',') != std::string::npos || name.find('\n') != std::string::npos)
            throw std::invalid_argument("csv: attribute name '" + name + "' contains a delimiter");
    std::string out = "class";
    for (const auto& name : ds.attribute_names) out += "," + name;
    for (std::size_t j = 0; j < ds.dim; ++j) out += ",f" + std::to_string(j);
    out += "\n";
    for (const AttributeSample& s : ds.samples) {
        if (s.class_label.find(',') != std::string::npos || s.class_label.find('\n') != std::string::npos)
            throw std::invalid_argument("csv: class label '" + s.class_label + "' contains a delimiter");
        out += s.class_label;
        for (double a : s.attributes) out += "," + io::format_double(a);
        for (double f : s.features) out += "," + io::format_double(f);
        out += "\n";
    }
    return out;
}

inline FeatureDataset decode_dataset_csv(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(origin + ": empty csv file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = io::split_csv_line(line);
    if (header.empty() || header[0] != "class")
        throw std::runtime_error(origin + ": csv header must start with 'class'");
    FeatureDataset ds;
    // feature columns are the trailing run f0,f1,...; everything between
    // 'class' and f0 is an attribute column
    std::size_t f0 = 0;
    for (std::size_t i = 1; i < header.size(); ++i)
        if (header[i] == "f0") {
            f0 = i;
            break;
        }
    if (f0 == 0) throw std::runtime_error(origin + ": csv header has no f0 feature column");
    for (std::size_t i = f0; i < header.size(); ++i)
        if (header[i] != "f" + std::to_string(i - f0))
            throw std::runtime_error(origin + ": csv feature columns must run f0..fN, found '" +
                                     header[i] + "'");
    for (std::size_t i = 1; i < f0; ++i) ds.attribute_names.push_back(header[i]);
    if (ds.attribute_names.empty())
        throw std::runtime_error(origin + ": csv header has no attribute columns");
    ds.dim = header.size() - f0;
    ds.provenance = origin;

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = io::split_csv_line(line);
        if (fields.size() != header.size())
            throw std::runtime_error(origin + ": row " + std::to_string(row) + " has " +
                                     std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(header.size()));
        AttributeSample s;
        s.class_label = fields[0];
        const std::string context = origin + ": row " + std::to_string(row);
        for (std::size_t i = 1; i < f0; ++i)
            s.attributes.push_back(io::parse_double(fields[i], context));
        for (std::size_t i = f0; i < fields.size(); ++i) {
            const double f = io::parse_double(fields[i], context);
            if (!(f >= 0.0))
                throw std::runtime_error(context + ": negative or non-finite feature value '" +
                                         fields[i] + "'");
            s.features.push_back(f);
        }
        ds.samples.push_back(std::move(s));
    }
    validate_dataset(ds);
    return ds;
}

inline void save_dataset(const FeatureDataset& ds, const std::string& path,
                         DatasetFormat format = DatasetFormat::Binary) {
    io::write_file(path, format == DatasetFormat::Binary ? encode_dataset(ds)
                                                         : encode_dataset_csv(ds));
}

// Format is sniffed from the leading magic so either on-disk form loads.
inline FeatureDataset load_dataset(const std::string& path) {
    std::string bytes = io::read_file(path);
    if (bytes.size() >= 4 && bytes.compare(0, 4, kDatasetMagic, 4) == 0)
        return decode_dataset(std::move(bytes), path);
    return decode_dataset_csv(bytes, path);
}

}  // namespace aga
