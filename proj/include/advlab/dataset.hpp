#ifndef ADVLAB_DATASET_HPP
#define ADVLAB_DATASET_HPP

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "advlab/errors.hpp"
#include "advlab/rng.hpp"
#include "advlab/tensor.hpp"

namespace advlab {

/// Flat row-major (count x dim) sample storage; avoids one allocation per
/// sample for large augmented sets.
struct SampleMatrix {
    std::size_t count = 0;
    std::size_t dim = 0;
    std::vector<double> data;

    SampleMatrix() = default;
    SampleMatrix(std::size_t n, std::size_t d) : count(n), dim(d), data(n * d, 0.0) {}

    const double* row(std::size_t i) const { return data.data() + i * dim; }
    double* mutable_row(std::size_t i) { return data.data() + i * dim; }

    void append(const double* src) {
        data.insert(data.end(), src, src + dim);
        ++count;
    }

    Tensor tensor_at(std::size_t i, const std::vector<std::size_t>& shape) const {
        return Tensor(shape, std::vector<double>(row(i), row(i) + dim));
    }
};

enum class Split { Train, Test };

/// Inputs in [0,1]^n with integer class labels.
struct LabeledDataset {
    SampleMatrix inputs;
    std::vector<std::size_t> sample_shape; // e.g. (1,28,28) or (2)
    std::vector<int> labels;
    std::size_t num_classes = 0;
    Split split = Split::Train;

    std::size_t count() const { return inputs.count; }
    Tensor tensor_at(std::size_t i) const { return inputs.tensor_at(i, sample_shape); }

    void validate() const {
        if (count() == 0) throw InputError("dataset: empty");
        if (labels.size() != count()) throw InputError("dataset: label count mismatch");
        for (int y : labels)
            if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
                throw InputError("dataset: label out of range");
    }
};

enum class Provenance : std::uint8_t { Original, Gaussian, Uniform, Adversarial, Virtual };

inline const char* provenance_name(Provenance p) {
    switch (p) {
    case Provenance::Original: return "original";
    case Provenance::Gaussian: return "gaussian";
    case Provenance::Uniform: return "uniform";
    case Provenance::Adversarial: return "adversarial";
    case Provenance::Virtual: return "virtual";
    }
    return "?";
}

/// Defense output: inputs plus per-sample soft targets and provenance tags.
struct AugmentedDataset {
    SampleMatrix inputs;
    std::vector<std::size_t> sample_shape;
    SampleMatrix soft_targets; // count x num_classes, each row sums to 1
    std::vector<int> labels;   // original hard labels, kept for evaluation
    std::vector<Provenance> provenance;
    std::size_t num_classes = 0;

    std::size_t count() const { return inputs.count; }
};

inline AugmentedDataset as_augmented(const LabeledDataset& d) {
    AugmentedDataset a;
    a.inputs = d.inputs;
    a.sample_shape = d.sample_shape;
    a.labels = d.labels;
    a.num_classes = d.num_classes;
    a.soft_targets = SampleMatrix(d.count(), d.num_classes);
    for (std::size_t i = 0; i < d.count(); ++i) a.soft_targets.mutable_row(i)[d.labels[i]] = 1.0;
    a.provenance.assign(d.count(), Provenance::Original);
    return a;
}

/// Class-stratified seeded subset (per_class samples of each class, in class
/// order then draw order).
inline LabeledDataset stratified_subset(const LabeledDataset& d, std::size_t per_class,
                                        std::uint64_t seed) {
    d.validate();
    std::vector<std::vector<std::size_t>> by_class(d.num_classes);
    for (std::size_t i = 0; i < d.count(); ++i) by_class[d.labels[i]].push_back(i);
    Rng rng(derive_seed(seed, 0x5B85E7));
    LabeledDataset out;
    out.sample_shape = d.sample_shape;
    out.num_classes = d.num_classes;
    out.split = d.split;
    out.inputs = SampleMatrix(0, d.inputs.dim);
    for (std::size_t c = 0; c < d.num_classes; ++c) {
        auto& idx = by_class[c];
        if (idx.size() < per_class)
            throw InputError("stratified_subset: class " + std::to_string(c) +
                             " has too few samples");
        rng.shuffle(idx);
        for (std::size_t k = 0; k < per_class; ++k) {
            out.inputs.append(d.inputs.row(idx[k]));
            out.labels.push_back(static_cast<int>(c));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dataset container: <stem>.csv manifest + <stem>.f64 raw tensors.
// The .f64 file is little-endian: magic "ALAB", u32 version, u32 ndim,
// u64 dims[ndim] (count first), then count*prod(dims[1:]) doubles.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ofstream& f, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    f.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint32_t get_u32(std::ifstream& f) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t get_u64(std::ifstream& f) {
    unsigned char b[8];
    f.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

} // namespace detail

inline void save_tensor_blob(const std::string& path, const SampleMatrix& m,
                             const std::vector<std::size_t>& sample_shape) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open for writing: " + path);
    f.write("ALAB", 4);
    detail::put_u32(f, 1u);
    detail::put_u32(f, static_cast<std::uint32_t>(sample_shape.size() + 1));
    detail::put_u64(f, m.count);
    for (std::size_t d : sample_shape) detail::put_u64(f, d);
    static_assert(sizeof(double) == 8);
    f.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    if (!f) throw FormatError("write failed: " + path);
}

inline SampleMatrix load_tensor_blob(const std::string& path,
                                     std::vector<std::size_t>* sample_shape = nullptr) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "ALAB", 4) != 0)
        throw FormatError(path + ": bad magic at offset 0");
    std::uint32_t version = detail::get_u32(f);
    if (version != 1) throw FormatError(path + ": unsupported version");
    std::uint32_t ndim = detail::get_u32(f);
    if (ndim == 0 || ndim > 8) throw FormatError(path + ": bad rank");
    std::vector<std::size_t> dims(ndim);
    for (auto& d : dims) d = static_cast<std::size_t>(detail::get_u64(f));
    SampleMatrix m(dims[0], Tensor::numel_of({dims.begin() + 1, dims.end()}));
    f.read(reinterpret_cast<char*>(m.data.data()),
           static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    if (!f) throw FormatError(path + ": truncated payload");
    if (sample_shape) sample_shape->assign(dims.begin() + 1, dims.end());
    return m;
}

inline void save_augmented(const std::string& stem, const AugmentedDataset& a) {
    save_tensor_blob(stem + ".f64", a.inputs, a.sample_shape);
    std::ofstream csv(stem + ".csv");
    if (!csv) throw FormatError("cannot open for writing: " + stem + ".csv");
    csv << "index,label,provenance";
    for (std::size_t k = 0; k < a.num_classes; ++k) csv << ",t" << k;
    csv << "\n";
    char buf[64];
    for (std::size_t i = 0; i < a.count(); ++i) {
        csv << i << "," << a.labels[i] << "," << provenance_name(a.provenance[i]);
        for (std::size_t k = 0; k < a.num_classes; ++k) {
            std::snprintf(buf, sizeof buf, ",%.17g", a.soft_targets.row(i)[k]);
            csv << buf;
        }
        csv << "\n";
    }
}

} // namespace advlab

#endif // ADVLAB_DATASET_HPP
