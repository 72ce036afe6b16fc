#ifndef ADVLAB_IMAGE_IO_HPP
#define ADVLAB_IMAGE_IO_HPP

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "advlab/errors.hpp"
#include "advlab/tensor.hpp"

namespace advlab {

/// Lays out same-shaped (c,h,w) images in a grid with 1-pixel separators at
/// gray 128 and writes binary P5 (grayscale) or P6 (RGB).
inline void save_image_grid(const std::vector<Tensor>& images, std::size_t cols,
                            const std::string& path) {
    if (images.empty()) throw InputError("save_image_grid: no images");
    if (cols < 1) throw InputError("save_image_grid: cols must be >= 1");
    const auto shape = images[0].shape;
    if (shape.size() != 3 || (shape[0] != 1 && shape[0] != 3))
        throw InputError("save_image_grid: images must be (1,h,w) or (3,h,w)");
    for (const auto& im : images)
        if (im.shape != shape) throw InputError("save_image_grid: mixed shapes");

    const std::size_t c = shape[0], h = shape[1], w = shape[2];
    const std::size_t n = images.size();
    const std::size_t grid_cols = std::min(cols, n);
    const std::size_t grid_rows = (n + cols - 1) / cols;
    const std::size_t W = grid_cols * w + (grid_cols - 1);
    const std::size_t H = grid_rows * h + (grid_rows - 1);

    std::vector<unsigned char> pix(W * H * c, 128); // separators everywhere first
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t gr = i / cols, gc = i % cols;
        const std::size_t oy = gr * (h + 1), ox = gc * (w + 1);
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t y = 0; y < h; ++y) {
                for (std::size_t x = 0; x < w; ++x) {
                    double v = images[i].data[(ch * h + y) * w + x];
                    int b = static_cast<int>(std::lround(v * 255.0));
                    b = std::clamp(b, 0, 255);
                    pix[((oy + y) * W + (ox + x)) * c + ch] = static_cast<unsigned char>(b);
                }
            }
        }
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open for writing: " + path);
    f << (c == 1 ? "P5" : "P6") << "\n" << W << " " << H << "\n255\n";
    f.write(reinterpret_cast<const char*>(pix.data()), static_cast<std::streamsize>(pix.size()));
    if (!f) throw FormatError("write failed: " + path);
}

/// Reads binary P5/P6 with maxval 255 back into a (c,h,w) tensor in [0,1].
inline Tensor load_pnm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open: " + path);
    auto next_token = [&]() -> std::string {
        std::string tok;
        int ch;
        while ((ch = f.get()) != EOF) {
            if (ch == '#') { // comment to end of line
                while ((ch = f.get()) != EOF && ch != '\n') {}
                continue;
            }
            if (std::isspace(ch)) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(static_cast<char>(ch));
        }
        if (tok.empty()) throw FormatError(path + ": truncated header");
        return tok;
    };
    std::string magic = next_token();
    std::size_t c;
    if (magic == "P5")
        c = 1;
    else if (magic == "P6")
        c = 3;
    else
        throw FormatError(path + ": bad magic '" + magic + "' at byte offset 0");
    std::size_t w = std::stoul(next_token());
    std::size_t h = std::stoul(next_token());
    std::size_t maxval = std::stoul(next_token());
    if (maxval != 255) throw FormatError(path + ": unsupported maxval");
    std::vector<unsigned char> pix(w * h * c);
    f.read(reinterpret_cast<char*>(pix.data()), static_cast<std::streamsize>(pix.size()));
    if (!f) throw FormatError(path + ": truncated payload");
    Tensor t({c, h, w});
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                t.data[(ch * h + y) * w + x] = pix[(y * w + x) * c + ch] / 255.0;
    return t;
}

} // namespace advlab

#endif // ADVLAB_IMAGE_IO_HPP
