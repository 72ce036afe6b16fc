#ifndef ADVLAB_LAYERS_HPP
#define ADVLAB_LAYERS_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "advlab/errors.hpp"
#include "advlab/tensor.hpp"

namespace advlab {

enum class ActKind { Relu, Brelu };

/// One layer of a feed-forward network. Convolutions are valid-padding,
/// stride 1; pooling windows tile with stride equal to the window (floor).
struct LayerSpec {
    enum class Kind { Dense, Conv2D, MaxPool, Activation, Softmax, IdentityShortcut };

    Kind kind = Kind::Dense;
    std::size_t units = 0;                    // Dense
    std::size_t filters = 0;                  // Conv2D
    std::size_t kernel_h = 0, kernel_w = 0;   // Conv2D
    std::size_t pool_h = 0, pool_w = 0;       // MaxPool
    ActKind act = ActKind::Relu;              // Activation
    double brelu_t = 1.0;                     // Activation (Brelu saturation)
    std::size_t from_layer = 0, to_layer = 0; // IdentityShortcut, 0-based layer indices

    static LayerSpec dense(std::size_t units) {
        LayerSpec l;
        l.kind = Kind::Dense;
        l.units = units;
        return l;
    }
    static LayerSpec conv2d(std::size_t filters, std::size_t kh, std::size_t kw) {
        LayerSpec l;
        l.kind = Kind::Conv2D;
        l.filters = filters;
        l.kernel_h = kh;
        l.kernel_w = kw;
        return l;
    }
    static LayerSpec maxpool(std::size_t ph, std::size_t pw) {
        LayerSpec l;
        l.kind = Kind::MaxPool;
        l.pool_h = ph;
        l.pool_w = pw;
        return l;
    }
    static LayerSpec relu() {
        LayerSpec l;
        l.kind = Kind::Activation;
        l.act = ActKind::Relu;
        return l;
    }
    static LayerSpec brelu(double t) {
        LayerSpec l;
        l.kind = Kind::Activation;
        l.act = ActKind::Brelu;
        l.brelu_t = t;
        return l;
    }
    static LayerSpec softmax() {
        LayerSpec l;
        l.kind = Kind::Softmax;
        return l;
    }
    /// Output = output(from_layer) + output(to_layer); both must be earlier
    /// layers with identical output shapes. to_layer is normally the layer
    /// directly before the shortcut.
    static LayerSpec shortcut(std::size_t from, std::size_t to) {
        LayerSpec l;
        l.kind = Kind::IdentityShortcut;
        l.from_layer = from;
        l.to_layer = to;
        return l;
    }

    bool parameterized() const { return kind == Kind::Dense || kind == Kind::Conv2D; }
};

/// Architecture description. validate() chains shapes from input_shape to the
/// final class vector and fills out_shapes; throws ConfigError on any break.
struct NetworkSpec {
    std::vector<std::size_t> input_shape;
    std::vector<LayerSpec> layers;
    std::size_t num_classes = 0;

    std::vector<std::vector<std::size_t>> out_shapes; // filled by validate()

    void validate() {
        if (layers.size() < 2) throw ConfigError("network: need at least one layer before softmax");
        if (num_classes < 2) throw ConfigError("network: need at least 2 classes");
        if (layers.back().kind != LayerSpec::Kind::Softmax)
            throw ConfigError("network: last layer must be softmax");
        out_shapes.assign(layers.size(), {});

        std::vector<std::size_t> cur = input_shape;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const LayerSpec& l = layers[i];
            switch (l.kind) {
            case LayerSpec::Kind::Dense: {
                if (l.units == 0) throw ConfigError("dense: zero units");
                cur = {l.units};
                break;
            }
            case LayerSpec::Kind::Conv2D: {
                if (cur.size() != 3)
                    throw ConfigError("conv2d at layer " + std::to_string(i) +
                                      ": input must be (c,h,w), got " + shape_str(cur));
                if (cur[1] < l.kernel_h || cur[2] < l.kernel_w)
                    throw ConfigError("conv2d at layer " + std::to_string(i) +
                                      ": kernel larger than input");
                cur = {l.filters, cur[1] - l.kernel_h + 1, cur[2] - l.kernel_w + 1};
                break;
            }
            case LayerSpec::Kind::MaxPool: {
                if (cur.size() != 3)
                    throw ConfigError("maxpool at layer " + std::to_string(i) +
                                      ": input must be (c,h,w)");
                if (cur[1] < l.pool_h || cur[2] < l.pool_w)
                    throw ConfigError("maxpool at layer " + std::to_string(i) +
                                      ": window larger than input");
                cur = {cur[0], cur[1] / l.pool_h, cur[2] / l.pool_w};
                break;
            }
            case LayerSpec::Kind::Activation: {
                if (l.act == ActKind::Brelu && !(l.brelu_t > 0.0))
                    throw ConfigError("brelu: threshold must be > 0");
                break;
            }
            case LayerSpec::Kind::Softmax: {
                if (i + 1 != layers.size())
                    throw ConfigError("softmax must be the last layer");
                std::size_t n = Tensor::numel_of(cur);
                if (n != num_classes)
                    throw ConfigError("softmax input has " + std::to_string(n) +
                                      " values, expected " + std::to_string(num_classes));
                cur = {num_classes};
                break;
            }
            case LayerSpec::Kind::IdentityShortcut: {
                if (l.from_layer >= i || l.to_layer >= i)
                    throw ConfigError("shortcut at layer " + std::to_string(i) +
                                      ": must reference earlier layers");
                if (out_shapes[l.from_layer] != out_shapes[l.to_layer])
                    throw ConfigError("shortcut at layer " + std::to_string(i) +
                                      ": branch shapes differ, " +
                                      shape_str(out_shapes[l.from_layer]) + " vs " +
                                      shape_str(out_shapes[l.to_layer]));
                cur = out_shapes[l.to_layer];
                break;
            }
            }
            out_shapes[i] = cur;
        }
    }

    std::size_t input_numel() const { return Tensor::numel_of(input_shape); }
};

/// Per-layer weight and bias tensors; empty for non-parameterized layers.
struct Parameters {
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;

    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& w : weights) n += w.numel();
        for (const auto& b : biases) n += b.numel();
        return n;
    }

    void set_zero() {
        for (auto& w : weights) std::fill(w.data.begin(), w.data.end(), 0.0);
        for (auto& b : biases) std::fill(b.data.begin(), b.data.end(), 0.0);
    }

    void add_scaled(const Parameters& o, double s) {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            for (std::size_t i = 0; i < weights[l].numel(); ++i)
                weights[l].data[i] += s * o.weights[l].data[i];
            for (std::size_t i = 0; i < biases[l].numel(); ++i)
                biases[l].data[i] += s * o.biases[l].data[i];
        }
    }

    void scale(double s) {
        for (auto& w : weights)
            for (double& v : w.data) v *= s;
        for (auto& b : biases)
            for (double& v : b.data) v *= s;
    }
};

/// Zero-filled gradient/velocity buffers laid out like the model parameters.
/// Slots of non-parameterized layers stay empty.
inline Parameters zeros_like(const Parameters& p) {
    Parameters z;
    z.weights.reserve(p.weights.size());
    z.biases.reserve(p.biases.size());
    for (const auto& w : p.weights)
        z.weights.emplace_back(w.data.empty() ? Tensor{} : Tensor(w.shape));
    for (const auto& b : p.biases)
        z.biases.emplace_back(b.data.empty() ? Tensor{} : Tensor(b.shape));
    return z;
}

} // namespace advlab

#endif // ADVLAB_LAYERS_HPP
