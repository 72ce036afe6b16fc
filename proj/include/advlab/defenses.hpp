#ifndef ADVLAB_DEFENSES_HPP
#define ADVLAB_DEFENSES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "advlab/attacks.hpp"
#include "advlab/dataset.hpp"
#include "advlab/network.hpp"
#include "advlab/rng.hpp"

namespace advlab {

struct DefenseConfig {
    enum class Variant { None, Gda, UniformAug, LabelSmooth, AdvTrain, Vat, FeatureSqueeze };

    Variant variant = Variant::None;
    double sigma = 0.3;          // Gda noise std
    std::size_t n_samples = 10;  // perturbations per instance
    double smooth_weight = 0.9;  // LabelSmooth true-class mass
    double mix_alpha = 0.5;      // AdvTrain clean/adversarial weight
    double at_epsilon = 0.3;     // AdvTrain FGSM budget
    double vat_epsilon = 2.1;    // Vat perturbation radius
    double vat_xi = 10.0;
    std::size_t vat_power_iters = 1;
    double uniform_radius = 0.0; // 0 -> sigma * sqrt(3), matching Gda variance
    int bit_depth = 1;           // FeatureSqueeze bits per channel
    std::size_t filter_size = 0; // FeatureSqueeze median window (0 = off)
    std::uint64_t seed = 0;

    void validate(std::size_t num_classes) const {
        if (variant == Variant::Gda && !(sigma > 0.0))
            throw ConfigError("defense: sigma must be > 0");
        if (n_samples < 1) throw ConfigError("defense: n_samples must be >= 1");
        if (variant == Variant::LabelSmooth) {
            double lo = 1.0 / static_cast<double>(num_classes);
            if (!(smooth_weight > lo && smooth_weight <= 1.0))
                throw ConfigError("defense: smooth_weight must be in (1/m, 1]");
        }
        if (mix_alpha < 0.0 || mix_alpha > 1.0)
            throw ConfigError("defense: mix_alpha must be in [0,1]");
        if (bit_depth < 1 || bit_depth > 8)
            throw ConfigError("defense: bit_depth must be in [1,8]");
    }

    std::string tag() const {
        switch (variant) {
        case Variant::None: return "none";
        case Variant::Gda: return "gda";
        case Variant::UniformAug: return "uniform";
        case Variant::LabelSmooth: return "label-smooth";
        case Variant::AdvTrain: return "adv-train";
        case Variant::Vat: return "vat";
        case Variant::FeatureSqueeze: return "feature-squeeze";
        }
        return "?";
    }
};

namespace detail {

inline AugmentedDataset noise_augment(const LabeledDataset& data, std::size_t n_samples,
                                      Provenance prov, std::uint64_t seed, double param,
                                      bool gaussian) {
    data.validate();
    AugmentedDataset out;
    out.sample_shape = data.sample_shape;
    out.num_classes = data.num_classes;
    const std::size_t dim = data.inputs.dim;
    const std::size_t total = data.count() * (n_samples + 1);
    out.inputs = SampleMatrix(total, dim);
    out.soft_targets = SampleMatrix(total, data.num_classes);
    out.labels.resize(total);
    out.provenance.resize(total);

    std::vector<double> noisy(dim);
    std::size_t w = 0;
    for (std::size_t i = 0; i < data.count(); ++i) {
        const double* x = data.inputs.row(i);
        const int y = data.labels[i];
        std::copy(x, x + dim, out.inputs.mutable_row(w));
        out.soft_targets.mutable_row(w)[y] = 1.0;
        out.labels[w] = y;
        out.provenance[w] = Provenance::Original;
        ++w;
        Rng rng(derive_seed(seed, 0xA06 ^ (i * 2654435761ULL)));
        for (std::size_t s = 0; s < n_samples; ++s) {
            for (std::size_t k = 0; k < dim; ++k) {
                double delta = gaussian ? rng.normal(0.0, param) : rng.uniform(-param, param);
                noisy[k] = std::clamp(x[k] + delta, 0.0, 1.0);
            }
            std::copy(noisy.begin(), noisy.end(), out.inputs.mutable_row(w));
            out.soft_targets.mutable_row(w)[y] = 1.0;
            out.labels[w] = y;
            out.provenance[w] = prov;
            ++w;
        }
    }
    return out;
}

} // namespace detail

/// Originals plus n_samples Gaussian-perturbed clipped copies per instance.
inline AugmentedDataset gaussian_augment(const LabeledDataset& data, double sigma,
                                         std::size_t n_samples, std::uint64_t seed) {
    if (!(sigma > 0.0)) throw ConfigError("gaussian_augment: sigma must be > 0");
    if (n_samples < 1) throw ConfigError("gaussian_augment: n_samples must be >= 1");
    return detail::noise_augment(data, n_samples, Provenance::Gaussian, seed, sigma, true);
}

inline AugmentedDataset uniform_augment(const LabeledDataset& data, double radius,
                                        std::size_t n_samples, std::uint64_t seed) {
    if (!(radius > 0.0)) throw ConfigError("uniform_augment: radius must be > 0");
    if (n_samples < 1) throw ConfigError("uniform_augment: n_samples must be >= 1");
    return detail::noise_augment(data, n_samples, Provenance::Uniform, seed, radius, false);
}

/// Soft targets: smooth_weight on the true class, uniform remainder.
inline AugmentedDataset label_smooth(const LabeledDataset& data, double smooth_weight) {
    data.validate();
    const std::size_t m = data.num_classes;
    if (!(smooth_weight > 1.0 / static_cast<double>(m) && smooth_weight <= 1.0))
        throw ConfigError("label_smooth: weight must be in (1/m, 1]");
    AugmentedDataset out = as_augmented(data);
    const double rest = (1.0 - smooth_weight) / static_cast<double>(m - 1);
    for (std::size_t i = 0; i < out.count(); ++i) {
        double* t = out.soft_targets.mutable_row(i);
        for (std::size_t k = 0; k < m; ++k) t[k] = rest;
        t[data.labels[i]] = smooth_weight;
    }
    return out;
}

/// Clean/adversarial mixture realized by replication: the alpha split is
/// rounded to quarters, so alpha=0.5 gives one FGSM copy per original.
inline AugmentedDataset adversarial_augment(const TrainedModel& model, const LabeledDataset& data,
                                            double at_epsilon, double mix_alpha) {
    data.validate();
    if (mix_alpha < 0.0 || mix_alpha > 1.0)
        throw ConfigError("adversarial_augment: mix_alpha must be in [0,1]");
    std::size_t n_orig = static_cast<std::size_t>(std::lround(mix_alpha * 4.0));
    std::size_t n_adv = 4 - n_orig;
    std::size_t g = std::gcd(n_orig == 0 ? n_adv : n_orig, n_adv == 0 ? n_orig : n_adv);
    if (g > 0) {
        n_orig /= g;
        n_adv /= g;
    }

    AugmentedDataset out;
    out.sample_shape = data.sample_shape;
    out.num_classes = data.num_classes;
    const std::size_t dim = data.inputs.dim;
    out.inputs = SampleMatrix(0, dim);
    out.soft_targets = SampleMatrix(0, data.num_classes);

    std::vector<double> target(data.num_classes);
    for (std::size_t i = 0; i < data.count(); ++i) {
        Tensor x = data.tensor_at(i);
        const int y = data.labels[i];
        std::fill(target.begin(), target.end(), 0.0);
        target[y] = 1.0;
        for (std::size_t r = 0; r < n_orig; ++r) {
            out.inputs.append(x.data.data());
            out.soft_targets.append(target.data());
            out.labels.push_back(y);
            out.provenance.push_back(Provenance::Original);
        }
        if (n_adv > 0) {
            AttackOutcome o = fgsm(model, x, y, at_epsilon, Norm::Linf);
            for (std::size_t r = 0; r < n_adv; ++r) {
                out.inputs.append(o.x_adv.data.data());
                out.soft_targets.append(target.data());
                out.labels.push_back(y);
                out.provenance.push_back(Provenance::Adversarial);
            }
        }
    }
    return out;
}

struct VatResult {
    Tensor r;              // perturbation of L2 norm vat_epsilon
    bool degenerate = false;
};

/// Power iteration on the KL curvature: d <- normalize(grad_r KL(p(x) || p(x+xi d))),
/// returned scaled to vat_epsilon.
inline VatResult vat_perturbation(const TrainedModel& model, const Tensor& x, double vat_epsilon,
                                  double xi, std::size_t power_iters, std::uint64_t seed) {
    if (power_iters < 1) throw ConfigError("vat_perturbation: power_iters must be >= 1");
    Rng rng(derive_seed(seed, 0x7A7));
    const std::size_t n = x.numel();
    std::vector<double> d(n);
    for (auto& v : d) v = rng.normal();
    double nd = l2_norm(d);
    for (auto& v : d) v /= nd;
    const std::vector<double> d0 = d;

    const std::vector<double> p = forward(model, x).data;
    VatResult res;
    Tensor probe(x.shape);
    for (std::size_t it = 0; it < power_iters; ++it) {
        for (std::size_t i = 0; i < n; ++i) probe.data[i] = x.data[i] + xi * d[i];
        // gradient of KL(p(x) || p(x + r)) at r = xi d equals the input
        // gradient of cross-entropy against the fixed distribution p(x)
        auto lg = loss_and_input_gradient(model, probe, p);
        double ng = l2_norm(lg.grad.data);
        if (ng == 0.0) {
            res.degenerate = true;
            res.r = Tensor(x.shape);
            for (std::size_t i = 0; i < n; ++i) res.r.data[i] = vat_epsilon * d0[i];
            return res;
        }
        for (std::size_t i = 0; i < n; ++i) d[i] = lg.grad.data[i] / ng;
    }
    res.r = Tensor(x.shape);
    for (std::size_t i = 0; i < n; ++i) res.r.data[i] = vat_epsilon * d[i];
    return res;
}

/// Originals plus one virtual-adversarial copy per instance (true labels).
inline AugmentedDataset vat_augment(const TrainedModel& model, const LabeledDataset& data,
                                    double vat_epsilon, double xi, std::size_t power_iters,
                                    std::uint64_t seed) {
    data.validate();
    AugmentedDataset out;
    out.sample_shape = data.sample_shape;
    out.num_classes = data.num_classes;
    out.inputs = SampleMatrix(0, data.inputs.dim);
    out.soft_targets = SampleMatrix(0, data.num_classes);
    std::vector<double> target(data.num_classes);
    for (std::size_t i = 0; i < data.count(); ++i) {
        Tensor x = data.tensor_at(i);
        const int y = data.labels[i];
        std::fill(target.begin(), target.end(), 0.0);
        target[y] = 1.0;
        out.inputs.append(x.data.data());
        out.soft_targets.append(target.data());
        out.labels.push_back(y);
        out.provenance.push_back(Provenance::Original);

        VatResult v = vat_perturbation(model, x, vat_epsilon, xi, power_iters,
                                       derive_seed(seed, i));
        Tensor xv = x;
        for (std::size_t k = 0; k < xv.numel(); ++k)
            xv.data[k] = std::clamp(xv.data[k] + v.r.data[k], 0.0, 1.0);
        out.inputs.append(xv.data.data());
        out.soft_targets.append(target.data());
        out.labels.push_back(y);
        out.provenance.push_back(Provenance::Virtual);
    }
    return out;
}

/// round(x * (2^b - 1)) / (2^b - 1), elementwise.
inline Tensor bit_depth_squeeze(Tensor x, int bit_depth) {
    if (bit_depth < 1 || bit_depth > 8)
        throw ConfigError("bit_depth_squeeze: bit_depth must be in [1,8]");
    const double q = static_cast<double>((1 << bit_depth) - 1);
    for (double& v : x.data) v = std::round(v * q) / q;
    return x;
}

/// Median filter over each channel, symmetric reflect padding. The median is
/// the lower middle of the sorted window, so outputs are window members.
inline Tensor spatial_smooth(const Tensor& x, std::size_t filter_size) {
    if (filter_size < 2) throw ConfigError("spatial_smooth: filter_size must be >= 2");
    if (x.shape.size() != 3) throw InputError("spatial_smooth: expected (c,h,w) image");
    const std::size_t C = x.shape[0], H = x.shape[1], W = x.shape[2];
    if (filter_size > H || filter_size > W)
        throw ConfigError("spatial_smooth: window larger than image");

    auto reflect = [](std::ptrdiff_t i, std::ptrdiff_t n) {
        if (i < 0) return -i - 1;
        if (i >= n) return 2 * n - i - 1;
        return i;
    };
    const std::ptrdiff_t k = static_cast<std::ptrdiff_t>(filter_size);
    const std::ptrdiff_t lo = -(k - 1) / 2;
    Tensor out(x.shape);
    std::vector<double> window(filter_size * filter_size);
    for (std::size_t c = 0; c < C; ++c) {
        const double* plane = x.data.data() + c * H * W;
        for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(H); ++y) {
            for (std::ptrdiff_t xx = 0; xx < static_cast<std::ptrdiff_t>(W); ++xx) {
                std::size_t w = 0;
                for (std::ptrdiff_t dy = 0; dy < k; ++dy)
                    for (std::ptrdiff_t dx = 0; dx < k; ++dx) {
                        std::ptrdiff_t yy = reflect(y + lo + dy, static_cast<std::ptrdiff_t>(H));
                        std::ptrdiff_t xr = reflect(xx + lo + dx, static_cast<std::ptrdiff_t>(W));
                        window[w++] = plane[yy * W + xr];
                    }
                std::nth_element(window.begin(), window.begin() + (w - 1) / 2,
                                 window.begin() + w);
                out.data[(c * H + y) * W + xx] = window[(w - 1) / 2];
            }
        }
    }
    return out;
}

/// Hoeffding bound on the Monte-Carlo loss estimate deviating by >= t.
inline double mc_deviation_bound(double t, std::size_t n_samples, double sigma) {
    if (t < 0.0) throw ConfigError("mc_deviation_bound: t must be >= 0");
    if (n_samples < 1) throw ConfigError("mc_deviation_bound: n_samples must be >= 1");
    if (!(sigma > 0.0)) throw ConfigError("mc_deviation_bound: sigma must be > 0");
    return std::exp(-(t * t) * static_cast<double>(n_samples) / (2.0 * sigma * sigma));
}

/// Maps a defense config onto its augmented training set. AdvTrain and Vat
/// need a warm model trained on the clean data.
inline AugmentedDataset apply_defense(const LabeledDataset& data, const DefenseConfig& cfg,
                                      const TrainedModel* warm_model = nullptr) {
    cfg.validate(data.num_classes);
    switch (cfg.variant) {
    case DefenseConfig::Variant::None: return as_augmented(data);
    case DefenseConfig::Variant::Gda:
        return gaussian_augment(data, cfg.sigma, cfg.n_samples, cfg.seed);
    case DefenseConfig::Variant::UniformAug: {
        double radius = cfg.uniform_radius > 0.0 ? cfg.uniform_radius : cfg.sigma * std::sqrt(3.0);
        return uniform_augment(data, radius, cfg.n_samples, cfg.seed);
    }
    case DefenseConfig::Variant::LabelSmooth: return label_smooth(data, cfg.smooth_weight);
    case DefenseConfig::Variant::AdvTrain:
        if (!warm_model) throw ConfigError("adv-train defense needs a warm model");
        return adversarial_augment(*warm_model, data, cfg.at_epsilon, cfg.mix_alpha);
    case DefenseConfig::Variant::Vat:
        if (!warm_model) throw ConfigError("vat defense needs a warm model");
        return vat_augment(*warm_model, data, cfg.vat_epsilon, cfg.vat_xi, cfg.vat_power_iters,
                           cfg.seed);
    case DefenseConfig::Variant::FeatureSqueeze: {
        AugmentedDataset out = as_augmented(data);
        for (std::size_t i = 0; i < out.count(); ++i) {
            double* row = out.inputs.mutable_row(i);
            const double q = static_cast<double>((1 << cfg.bit_depth) - 1);
            for (std::size_t k = 0; k < out.inputs.dim; ++k)
                row[k] = std::round(row[k] * q) / q;
            if (cfg.filter_size >= 2) {
                Tensor t = out.inputs.tensor_at(i, out.sample_shape);
                Tensor s = spatial_smooth(t, cfg.filter_size);
                std::copy(s.data.begin(), s.data.end(), row);
            }
        }
        return out;
    }
    }
    throw ConfigError("unknown defense variant");
}

/// Squeezing is a deployment-time transform: models trained with
/// FeatureSqueeze see squeezed inputs at evaluation too.
inline Tensor deploy_preprocess(const Tensor& x, const DefenseConfig& cfg) {
    if (cfg.variant != DefenseConfig::Variant::FeatureSqueeze) return x;
    Tensor t = bit_depth_squeeze(x, cfg.bit_depth);
    if (cfg.filter_size >= 2) t = spatial_smooth(t, cfg.filter_size);
    return t;
}

} // namespace advlab

#endif // ADVLAB_DEFENSES_HPP
