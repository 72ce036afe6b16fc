#ifndef ADVLAB_PRESETS_HPP
#define ADVLAB_PRESETS_HPP

#include <string>
#include <vector>

#include "advlab/layers.hpp"

namespace advlab {

/// Named architectures. `act`/`brelu_t` select the activation used throughout
/// (the BRELU variants of the same presets).
inline NetworkSpec model_preset(const std::string& name, std::vector<std::size_t> input_shape,
                                std::size_t num_classes, ActKind act = ActKind::Relu,
                                double brelu_t = 1.0) {
    auto a = [&] { return act == ActKind::Relu ? LayerSpec::relu() : LayerSpec::brelu(brelu_t); };
    NetworkSpec s;
    s.input_shape = std::move(input_shape);
    s.num_classes = num_classes;

    if (name == "paper-cnn") {
        s.layers = {LayerSpec::conv2d(64, 8, 8),  a(), LayerSpec::conv2d(128, 6, 6), a(),
                    LayerSpec::conv2d(128, 5, 5), a(), LayerSpec::dense(num_classes),
                    LayerSpec::softmax()};
    } else if (name == "paper-resnet") {
        // identity shortcut carries the second conv block around the 1x1 stack
        s.layers = {LayerSpec::conv2d(64, 8, 8),  a(),                      // 0 1
                    LayerSpec::conv2d(128, 6, 6), a(),                      // 2 3
                    LayerSpec::conv2d(64, 1, 1),  a(),                      // 4 5
                    LayerSpec::conv2d(64, 1, 1),  a(),                      // 6 7
                    LayerSpec::conv2d(128, 1, 1), a(),                      // 8 9
                    LayerSpec::shortcut(3, 9),    LayerSpec::maxpool(3, 3), // 10 11
                    LayerSpec::dense(num_classes), LayerSpec::softmax()};
    } else if (name == "desk-cnn") {
        s.layers = {LayerSpec::conv2d(16, 5, 5), a(), LayerSpec::conv2d(32, 3, 3), a(),
                    LayerSpec::maxpool(2, 2),    LayerSpec::dense(num_classes),
                    LayerSpec::softmax()};
    } else if (name == "desk-resnet") {
        s.layers = {LayerSpec::conv2d(16, 5, 5), a(),                      // 0 1
                    LayerSpec::conv2d(32, 3, 3), a(),                      // 2 3
                    LayerSpec::conv2d(32, 1, 1), a(),                      // 4 5
                    LayerSpec::shortcut(3, 5),   LayerSpec::maxpool(2, 2), // 6 7
                    LayerSpec::dense(num_classes), LayerSpec::softmax()};
    } else if (name == "toy-dense") {
        s.layers = {LayerSpec::dense(32), a(), LayerSpec::dense(32), a(),
                    LayerSpec::dense(num_classes), LayerSpec::softmax()};
    } else {
        throw ConfigError("unknown model preset '" + name + "'");
    }
    s.validate();
    return s;
}

inline bool known_model_preset(const std::string& name) {
    return name == "paper-cnn" || name == "paper-resnet" || name == "desk-cnn" ||
           name == "desk-resnet" || name == "toy-dense";
}

} // namespace advlab

#endif // ADVLAB_PRESETS_HPP
