#ifndef ADVLAB_IDX_IO_HPP
#define ADVLAB_IDX_IO_HPP

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "advlab/dataset.hpp"
#include "advlab/errors.hpp"

namespace advlab {

namespace detail {

inline std::uint32_t read_be32(std::ifstream& f, const std::string& path, std::size_t offset) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f)
        throw FormatError(path + ": truncated at byte offset " + std::to_string(offset));
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

} // namespace detail

/// MNIST-style IDX pair (big-endian magics 0x803 images / 0x801 labels).
/// Pixel bytes are scaled by 1/255 into [0,1]; tensors come out (1,h,w).
inline LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream fi(images_path, std::ios::binary);
    if (!fi) throw FormatError("cannot open: " + images_path);
    std::uint32_t magic = detail::read_be32(fi, images_path, 0);
    if (magic != 0x00000803u)
        throw FormatError(images_path + ": bad image magic at byte offset 0");
    std::uint32_t n = detail::read_be32(fi, images_path, 4);
    std::uint32_t rows = detail::read_be32(fi, images_path, 8);
    std::uint32_t cols = detail::read_be32(fi, images_path, 12);

    std::ifstream fl(labels_path, std::ios::binary);
    if (!fl) throw FormatError("cannot open: " + labels_path);
    std::uint32_t lmagic = detail::read_be32(fl, labels_path, 0);
    if (lmagic != 0x00000801u)
        throw FormatError(labels_path + ": bad label magic at byte offset 0");
    std::uint32_t ln = detail::read_be32(fl, labels_path, 4);
    if (n != ln)
        throw FormatError("image/label count mismatch: " + std::to_string(n) + " vs " +
                          std::to_string(ln));

    LabeledDataset d;
    d.sample_shape = {1, rows, cols};
    d.num_classes = 10;
    const std::size_t dim = static_cast<std::size_t>(rows) * cols;
    d.inputs = SampleMatrix(n, dim);
    d.labels.resize(n);

    std::vector<unsigned char> buf(dim);
    for (std::uint32_t i = 0; i < n; ++i) {
        fi.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim));
        if (!fi)
            throw FormatError(images_path + ": truncated at byte offset " +
                              std::to_string(16 + static_cast<std::size_t>(i) * dim));
        double* row = d.inputs.mutable_row(i);
        for (std::size_t k = 0; k < dim; ++k) row[k] = buf[k] / 255.0;
    }
    std::vector<unsigned char> lbuf(n);
    fl.read(reinterpret_cast<char*>(lbuf.data()), static_cast<std::streamsize>(n));
    if (!fl) throw FormatError(labels_path + ": truncated at byte offset 8");
    for (std::uint32_t i = 0; i < n; ++i) {
        if (lbuf[i] > 9)
            throw FormatError(labels_path + ": label byte " + std::to_string(int(lbuf[i])) +
                              " out of range at record " + std::to_string(i));
        d.labels[i] = lbuf[i];
    }
    return d;
}

/// CIFAR-10 binary batches: 3073-byte records, 1 label byte + 3072 pixel
/// bytes in channel-planar R,G,B order. Tensors come out (3,32,32).
inline LabeledDataset load_cifar10(const std::vector<std::string>& batch_paths) {
    constexpr std::size_t kRecord = 3073;
    constexpr std::size_t kPixels = 3072;
    LabeledDataset d;
    d.sample_shape = {3, 32, 32};
    d.num_classes = 10;
    d.inputs = SampleMatrix(0, kPixels);

    for (const auto& path : batch_paths) {
        std::ifstream f(path, std::ios::binary | std::ios::ate);
        if (!f) throw FormatError("cannot open: " + path);
        std::size_t len = static_cast<std::size_t>(f.tellg());
        if (len % kRecord != 0)
            throw FormatError(path + ": length " + std::to_string(len) +
                              " is not a multiple of 3073");
        f.seekg(0);
        std::size_t n = len / kRecord;
        std::vector<unsigned char> rec(kRecord);
        std::vector<double> px(kPixels);
        for (std::size_t i = 0; i < n; ++i) {
            f.read(reinterpret_cast<char*>(rec.data()), kRecord);
            if (!f)
                throw FormatError(path + ": truncated at byte offset " +
                                  std::to_string(i * kRecord));
            if (rec[0] > 9)
                throw FormatError(path + ": label byte " + std::to_string(int(rec[0])) +
                                  " out of range at record " + std::to_string(i));
            for (std::size_t k = 0; k < kPixels; ++k) px[k] = rec[k + 1] / 255.0;
            d.inputs.append(px.data());
            d.labels.push_back(rec[0]);
        }
    }
    if (d.count() == 0) throw FormatError("cifar10: no records loaded");
    return d;
}

} // namespace advlab

#endif // ADVLAB_IDX_IO_HPP
