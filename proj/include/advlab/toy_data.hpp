#ifndef ADVLAB_TOY_DATA_HPP
#define ADVLAB_TOY_DATA_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "advlab/dataset.hpp"
#include "advlab/rng.hpp"

namespace advlab {

/// Concentric circles in the unit square: class 0 on the outer ring, class 1
/// on the inner ring, Gaussian radial noise.
inline LabeledDataset gen_circles(std::size_t n_per_class, double noise_std, std::uint64_t seed,
                                  double r_inner = 0.25, double r_outer = 0.45) {
    if (n_per_class < 1) throw InputError("gen_circles: n_per_class must be >= 1");
    LabeledDataset d;
    d.sample_shape = {2};
    d.num_classes = 2;
    d.inputs = SampleMatrix(0, 2);
    const double cx = 0.5, cy = 0.5;
    for (int cls = 0; cls < 2; ++cls) {
        const double r0 = cls == 0 ? r_outer : r_inner;
        Rng rng(derive_seed(seed, 0xC14C1E5u + static_cast<std::uint64_t>(cls)));
        for (std::size_t i = 0; i < n_per_class; ++i) {
            double angle = rng.uniform(0.0, 2.0 * M_PI);
            double r = r0 + (noise_std > 0.0 ? rng.normal(0.0, noise_std) : 0.0);
            double p[2] = {std::clamp(cx + r * std::cos(angle), 0.0, 1.0),
                           std::clamp(cy + r * std::sin(angle), 0.0, 1.0)};
            d.inputs.append(p);
            d.labels.push_back(cls);
        }
    }
    return d;
}

/// Two interleaved half-moon arcs with isotropic Gaussian jitter, laid out
/// inside the unit square. Radius 0.3 makes the classic interleave (centers
/// offset by (r, r/2)) span [0.05, 0.95] horizontally.
inline LabeledDataset gen_moons(std::size_t n_per_class, double noise_std, std::uint64_t seed,
                                double radius = 0.3) {
    if (n_per_class < 1) throw InputError("gen_moons: n_per_class must be >= 1");
    LabeledDataset d;
    d.sample_shape = {2};
    d.num_classes = 2;
    d.inputs = SampleMatrix(0, 2);
    // class 0: upper arc, class 1: lower arc shifted right and up by half a
    // radius so the moons interleave
    const double cxa = 0.5 - radius / 2, cya = 0.4;
    const double cxb = 0.5 + radius / 2, cyb = cya + radius / 2;
    for (int cls = 0; cls < 2; ++cls) {
        Rng rng(derive_seed(seed, 0x3003u + static_cast<std::uint64_t>(cls)));
        for (std::size_t i = 0; i < n_per_class; ++i) {
            double t = rng.uniform(0.0, M_PI);
            double x, y;
            if (cls == 0) {
                x = cxa + radius * std::cos(t);
                y = cya + radius * std::sin(t);
            } else {
                x = cxb + radius * std::cos(M_PI + t);
                y = cyb + radius * std::sin(M_PI + t);
            }
            if (noise_std > 0.0) {
                x += rng.normal(0.0, noise_std);
                y += rng.normal(0.0, noise_std);
            }
            double p[2] = {std::clamp(x, 0.0, 1.0), std::clamp(y, 0.0, 1.0)};
            d.inputs.append(p);
            d.labels.push_back(cls);
        }
    }
    return d;
}

namespace detail {

inline const std::array<std::array<const char*, 8>, 10>& digit_glyphs() {
    static const std::array<std::array<const char*, 8>, 10> g = {{
        {".####.", "#....#", "#....#", "#....#", "#....#", "#....#", "#....#", ".####."},
        {"...#..", "..##..", ".#.#..", "...#..", "...#..", "...#..", "...#..", ".#####"},
        {".####.", "#....#", ".....#", "....#.", "...#..", "..#...", ".#....", "######"},
        {".####.", "#....#", ".....#", "..###.", ".....#", ".....#", "#....#", ".####."},
        {"....#.", "...##.", "..#.#.", ".#..#.", "#...#.", "######", "....#.", "....#."},
        {"######", "#.....", "#.....", "#####.", ".....#", ".....#", "#....#", ".####."},
        {".####.", "#.....", "#.....", "#####.", "#....#", "#....#", "#....#", ".####."},
        {"######", ".....#", "....#.", "...#..", "..#...", "..#...", "..#...", "..#..."},
        {".####.", "#....#", "#....#", ".####.", "#....#", "#....#", "#....#", ".####."},
        {".####.", "#....#", "#....#", ".#####", ".....#", ".....#", "....#.", ".###.."},
    }};
    return g;
}

} // namespace detail

/// Deterministic 28x28 10-class digit images rendered from fixed glyph
/// bitmaps with random scale, position, slant, per-row wobble, stroke
/// dropout, stroke intensity, blur and pixel noise. Offline stand-in for
/// MNIST-style experiments when the real IDX files are not available.
inline LabeledDataset gen_digits(std::size_t n_per_class, std::uint64_t seed) {
    if (n_per_class < 1) throw InputError("gen_digits: n_per_class must be >= 1");
    constexpr std::size_t H = 28, W = 28;
    LabeledDataset d;
    d.sample_shape = {1, H, W};
    d.num_classes = 10;
    d.inputs = SampleMatrix(0, H * W);

    std::vector<double> canvas(H * W), blurred(H * W);
    for (std::size_t i = 0; i < n_per_class; ++i) {
        for (int cls = 0; cls < 10; ++cls) {
            Rng rng(derive_seed(seed, 0xD161u ^ (static_cast<std::uint64_t>(i) * 10 + cls)));
            const auto& glyph = detail::digit_glyphs()[cls];
            const int scale = rng.uniform01() < 0.5 ? 2 : 3;
            const int gh = 8 * scale, gw = 6 * scale;
            const double slant = rng.uniform(-0.3, 0.3);
            const int x0 = 3 + static_cast<int>(rng.below(static_cast<std::uint64_t>(W - gw - 6)));
            const int y0 = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(H - gh - 2)));
            const double intensity = rng.uniform(0.55, 1.0);

            std::fill(canvas.begin(), canvas.end(), 0.0);
            for (int r = 0; r < gh; ++r) {
                int shift = static_cast<int>(std::lround(slant * (r - gh / 2))) +
                            static_cast<int>(std::lround(rng.normal(0.0, 0.6)));
                for (int c = 0; c < gw; ++c) {
                    if (glyph[r / scale][c / scale] != '#') continue;
                    if (rng.uniform01() < 0.07) continue; // stroke dropout
                    int y = y0 + r, x = x0 + c + shift;
                    if (y >= 0 && y < static_cast<int>(H) && x >= 0 && x < static_cast<int>(W))
                        canvas[y * W + x] = intensity;
                }
            }
            // 3x3 binomial blur, zero padding
            for (int y = 0; y < static_cast<int>(H); ++y) {
                for (int x = 0; x < static_cast<int>(W); ++x) {
                    static const int k[3] = {1, 2, 1};
                    double s = 0.0;
                    for (int dy = -1; dy <= 1; ++dy) {
                        for (int dx = -1; dx <= 1; ++dx) {
                            int yy = y + dy, xx = x + dx;
                            if (yy < 0 || yy >= static_cast<int>(H) || xx < 0 ||
                                xx >= static_cast<int>(W))
                                continue;
                            s += k[dy + 1] * k[dx + 1] * canvas[yy * W + xx];
                        }
                    }
                    blurred[y * W + x] = s / 16.0;
                }
            }
            for (auto& v : blurred) v = std::clamp(v + rng.normal(0.0, 0.12), 0.0, 1.0);
            d.inputs.append(blurred.data());
            d.labels.push_back(cls);
        }
    }
    return d;
}

} // namespace advlab

#endif // ADVLAB_TOY_DATA_HPP
