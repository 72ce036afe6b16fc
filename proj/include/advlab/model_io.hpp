#ifndef ADVLAB_MODEL_IO_HPP
#define ADVLAB_MODEL_IO_HPP

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "advlab/network.hpp"

namespace advlab {

// Self-describing text format, version tagged. Parameter values are written
// as C hexfloats so save/load round-trips are bit-exact.

namespace detail {

inline std::string hexd(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

inline double parse_hexd(const std::string& s, const std::string& path) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw FormatError(path + ": bad numeric literal '" + s + "'");
    return v;
}

} // namespace detail

inline void save_model(const TrainedModel& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw FormatError("cannot open for writing: " + path);
    f << "advlab-model v1\n";
    f << "classes " << m.spec.num_classes << "\n";
    f << "input " << m.spec.input_shape.size();
    for (auto d : m.spec.input_shape) f << " " << d;
    f << "\n";
    f << "layers " << m.spec.layers.size() << "\n";
    for (const auto& l : m.spec.layers) {
        switch (l.kind) {
        case LayerSpec::Kind::Dense: f << "dense " << l.units << "\n"; break;
        case LayerSpec::Kind::Conv2D:
            f << "conv2d " << l.filters << " " << l.kernel_h << " " << l.kernel_w << "\n";
            break;
        case LayerSpec::Kind::MaxPool: f << "maxpool " << l.pool_h << " " << l.pool_w << "\n"; break;
        case LayerSpec::Kind::Activation:
            if (l.act == ActKind::Relu)
                f << "relu\n";
            else
                f << "brelu " << detail::hexd(l.brelu_t) << "\n";
            break;
        case LayerSpec::Kind::Softmax: f << "softmax\n"; break;
        case LayerSpec::Kind::IdentityShortcut:
            f << "shortcut " << l.from_layer << " " << l.to_layer << "\n";
            break;
        }
    }
    std::string tag = m.meta.defense.empty() ? "none" : m.meta.defense;
    for (char& c : tag)
        if (std::isspace(static_cast<unsigned char>(c))) c = '_';
    f << "meta " << m.meta.seed << " " << m.meta.epochs << " " << tag << "\n";
    for (std::size_t i = 0; i < m.spec.layers.size(); ++i) {
        if (!m.spec.layers[i].parameterized()) continue;
        for (int which = 0; which < 2; ++which) {
            const Tensor& t = which == 0 ? m.params.weights[i] : m.params.biases[i];
            f << "tensor " << i << " " << (which == 0 ? "w" : "b") << " " << t.shape.size();
            for (auto d : t.shape) f << " " << d;
            f << "\n";
            for (std::size_t k = 0; k < t.numel(); ++k)
                f << detail::hexd(t.data[k]) << ((k + 1) % 8 == 0 ? "\n" : " ");
            if (t.numel() % 8 != 0) f << "\n";
        }
    }
    f << "end\n";
    if (!f) throw FormatError("write failed: " + path);
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FormatError("cannot open: " + path);
    std::string tok;
    auto expect = [&](const std::string& want) {
        if (!(f >> tok) || tok != want)
            throw FormatError(path + ": expected '" + want + "', got '" + tok + "'");
    };
    expect("advlab-model");
    expect("v1");
    TrainedModel m;
    expect("classes");
    f >> m.spec.num_classes;
    expect("input");
    std::size_t nd;
    f >> nd;
    m.spec.input_shape.resize(nd);
    for (auto& d : m.spec.input_shape) f >> d;
    expect("layers");
    std::size_t nl;
    f >> nl;
    for (std::size_t i = 0; i < nl; ++i) {
        if (!(f >> tok)) throw FormatError(path + ": truncated layer list");
        if (tok == "dense") {
            std::size_t u;
            f >> u;
            m.spec.layers.push_back(LayerSpec::dense(u));
        } else if (tok == "conv2d") {
            std::size_t fl, kh, kw;
            f >> fl >> kh >> kw;
            m.spec.layers.push_back(LayerSpec::conv2d(fl, kh, kw));
        } else if (tok == "maxpool") {
            std::size_t ph, pw;
            f >> ph >> pw;
            m.spec.layers.push_back(LayerSpec::maxpool(ph, pw));
        } else if (tok == "relu") {
            m.spec.layers.push_back(LayerSpec::relu());
        } else if (tok == "brelu") {
            f >> tok;
            m.spec.layers.push_back(LayerSpec::brelu(detail::parse_hexd(tok, path)));
        } else if (tok == "softmax") {
            m.spec.layers.push_back(LayerSpec::softmax());
        } else if (tok == "shortcut") {
            std::size_t a, b;
            f >> a >> b;
            m.spec.layers.push_back(LayerSpec::shortcut(a, b));
        } else {
            throw FormatError(path + ": unknown layer kind '" + tok + "'");
        }
    }
    expect("meta");
    f >> m.meta.seed >> m.meta.epochs >> m.meta.defense;
    m.spec.validate();

    m.params.weights.resize(nl);
    m.params.biases.resize(nl);
    while (f >> tok) {
        if (tok == "end") return m;
        if (tok != "tensor") throw FormatError(path + ": expected 'tensor', got '" + tok + "'");
        std::size_t layer;
        std::string which;
        std::size_t ndim;
        f >> layer >> which >> ndim;
        if (layer >= nl) throw FormatError(path + ": tensor layer index out of range");
        std::vector<std::size_t> shape(ndim);
        for (auto& d : shape) f >> d;
        Tensor t(shape);
        for (std::size_t k = 0; k < t.numel(); ++k) {
            if (!(f >> tok)) throw FormatError(path + ": truncated tensor payload");
            t.data[k] = detail::parse_hexd(tok, path);
        }
        if (which == "w")
            m.params.weights[layer] = std::move(t);
        else if (which == "b")
            m.params.biases[layer] = std::move(t);
        else
            throw FormatError(path + ": bad tensor tag '" + which + "'");
    }
    throw FormatError(path + ": missing 'end'");
}

} // namespace advlab

#endif // ADVLAB_MODEL_IO_HPP
