#ifndef ADVLAB_TRAIN_HPP
#define ADVLAB_TRAIN_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "advlab/dataset.hpp"
#include "advlab/network.hpp"

namespace advlab {

struct TrainConfig {
    std::size_t epochs = 5;
    std::size_t batch_size = 32;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    bool verbose = false;

    void validate() const {
        if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("train: learning rate must be > 0");
        if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
    }
};

/// Scaled uniform init in +-sqrt(6/(fan_in+fan_out)), biases zero.
inline Parameters init_parameters(const NetworkSpec& spec, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x1217));
    Parameters p;
    p.weights.resize(spec.layers.size());
    p.biases.resize(spec.layers.size());
    std::vector<std::size_t> cur = spec.input_shape;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        if (l.kind == LayerSpec::Kind::Dense) {
            std::size_t fan_in = Tensor::numel_of(cur), fan_out = l.units;
            double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            p.weights[i] = Tensor({l.units, fan_in});
            p.biases[i] = Tensor({l.units});
            for (double& w : p.weights[i].data) w = rng.uniform(-a, a);
        } else if (l.kind == LayerSpec::Kind::Conv2D) {
            std::size_t c = cur[0];
            std::size_t fan_in = c * l.kernel_h * l.kernel_w;
            std::size_t fan_out = l.filters * l.kernel_h * l.kernel_w;
            double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            p.weights[i] = Tensor({l.filters, c, l.kernel_h, l.kernel_w});
            p.biases[i] = Tensor({l.filters});
            for (double& w : p.weights[i].data) w = rng.uniform(-a, a);
        }
        cur = spec.out_shapes[i];
    }
    return p;
}

/// SGD with momentum over (input, soft-target) pairs. Deterministic for a
/// fixed seed: shuffles, init, and batch reductions are all seeded or
/// order-fixed.
inline TrainedModel train_soft(NetworkSpec spec, const SampleMatrix& inputs,
                               const SampleMatrix& targets, const TrainConfig& cfg,
                               std::vector<double>* epoch_losses = nullptr,
                               const std::string& defense_tag = "none") {
    cfg.validate();
    spec.validate();
    if (inputs.count == 0) throw InputError("train: empty dataset");
    if (inputs.count != targets.count) throw InputError("train: inputs/targets count mismatch");
    if (targets.dim != spec.num_classes) throw InputError("train: target width != classes");
    if (inputs.dim != spec.input_numel()) throw InputError("train: input width != input shape");

    TrainedModel model;
    model.spec = spec;
    model.params = init_parameters(spec, cfg.seed);
    model.meta.seed = cfg.seed;
    model.meta.epochs = cfg.epochs;
    model.meta.defense = defense_tag;

    Parameters velocity = zeros_like(model.params);
    std::vector<std::size_t> order(inputs.count);
    std::iota(order.begin(), order.end(), 0);

    std::vector<const double*> bx(cfg.batch_size), bt(cfg.batch_size);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, 0xE000 + epoch));
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < inputs.count; b += cfg.batch_size) {
            std::size_t n = std::min(cfg.batch_size, inputs.count - b);
            bx.resize(n);
            bt.resize(n);
            for (std::size_t k = 0; k < n; ++k) {
                bx[k] = inputs.row(order[b + k]);
                bt[k] = targets.row(order[b + k]);
            }
            double batch_loss = 0.0;
            Parameters grads = parameter_gradients(model, bx, bt, &batch_loss);
            loss_sum += batch_loss * static_cast<double>(n);
            for (std::size_t l = 0; l < velocity.weights.size(); ++l) {
                for (std::size_t i = 0; i < velocity.weights[l].numel(); ++i) {
                    double& v = velocity.weights[l].data[i];
                    v = cfg.momentum * v - cfg.learning_rate * grads.weights[l].data[i];
                    model.params.weights[l].data[i] += v;
                }
                for (std::size_t i = 0; i < velocity.biases[l].numel(); ++i) {
                    double& v = velocity.biases[l].data[i];
                    v = cfg.momentum * v - cfg.learning_rate * grads.biases[l].data[i];
                    model.params.biases[l].data[i] += v;
                }
            }
        }
        if (epoch_losses) epoch_losses->push_back(loss_sum / static_cast<double>(inputs.count));
        if (cfg.verbose)
            std::fprintf(stderr, "epoch %zu/%zu  mean loss %.6f\n", epoch + 1, cfg.epochs,
                         loss_sum / static_cast<double>(inputs.count));
    }
    return model;
}

/// Hard-label convenience wrapper: one-hot targets from the dataset.
inline TrainedModel train(const NetworkSpec& spec, const LabeledDataset& data,
                          const TrainConfig& cfg, std::vector<double>* epoch_losses = nullptr,
                          const std::string& defense_tag = "none") {
    SampleMatrix targets(data.count(), data.num_classes);
    for (std::size_t i = 0; i < data.count(); ++i) {
        int y = data.labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= data.num_classes)
            throw InputError("train: label out of range");
        targets.mutable_row(i)[y] = 1.0;
    }
    return train_soft(spec, data.inputs, targets, cfg, epoch_losses, defense_tag);
}

} // namespace advlab

#endif // ADVLAB_TRAIN_HPP
