#ifndef ADVLAB_NETWORK_HPP
#define ADVLAB_NETWORK_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "advlab/errors.hpp"
#include "advlab/layers.hpp"
#include "advlab/parallel.hpp"
#include "advlab/rng.hpp"
#include "advlab/tensor.hpp"

namespace advlab {

struct TrainMeta {
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    std::string defense = "none";
};

/// Immutable after training; safe to evaluate from many threads.
struct TrainedModel {
    NetworkSpec spec;
    Parameters params;
    TrainMeta meta;
};

/// Standalone activation, also usable outside a network.
inline Tensor activation_apply(ActKind kind, double brelu_t, Tensor x) {
    if (kind == ActKind::Brelu && !(brelu_t > 0.0))
        throw ConfigError("brelu: threshold must be > 0");
    if (kind == ActKind::Relu) {
        for (double& v : x.data) v = v > 0.0 ? v : 0.0;
    } else {
        for (double& v : x.data) v = v < 0.0 ? 0.0 : (v < brelu_t ? v : brelu_t);
    }
    return x;
}

inline void softmax_inplace(std::vector<double>& z) {
    double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : z) v /= sum;
}

/// Cross-entropy of a probability vector against a target distribution.
inline double cross_entropy(const std::vector<double>& probs, const double* target) {
    double j = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k)
        if (target[k] != 0.0) j -= target[k] * std::log(std::max(probs[k], 1e-300));
    return j;
}

/// Reusable forward/backward workspace. acts[i] is the output of layer i;
/// pool_arg[i] keeps per-window argmax indices for MaxPool layers.
struct Trace {
    std::vector<std::vector<double>> acts;
    std::vector<std::vector<std::int32_t>> pool_arg;
    std::vector<std::vector<double>> grads;
    std::vector<double> dinput;

    void prepare(const NetworkSpec& spec) {
        acts.resize(spec.layers.size());
        pool_arg.resize(spec.layers.size());
        for (std::size_t i = 0; i < spec.layers.size(); ++i)
            acts[i].resize(Tensor::numel_of(spec.out_shapes[i]));
    }
};

namespace detail {

inline void dense_forward(const double* in, std::size_t n, const Tensor& w, const Tensor& b,
                          double* out, std::size_t u) {
    for (std::size_t j = 0; j < u; ++j) {
        const double* wr = w.data.data() + j * n;
        double s = b.data[j];
        for (std::size_t i = 0; i < n; ++i) s += wr[i] * in[i];
        out[j] = s;
    }
}

inline void conv2d_forward(const double* in, std::size_t C, std::size_t H, std::size_t W,
                           const Tensor& w, const Tensor& b, double* out, std::size_t F,
                           std::size_t KH, std::size_t KW) {
    const std::size_t OH = H - KH + 1, OW = W - KW + 1;
    for (std::size_t f = 0; f < F; ++f) {
        double* of = out + f * OH * OW;
        std::fill(of, of + OH * OW, b.data[f]);
        for (std::size_t c = 0; c < C; ++c) {
            const double* ic = in + c * H * W;
            const double* wf = w.data.data() + (f * C + c) * KH * KW;
            for (std::size_t kh = 0; kh < KH; ++kh) {
                for (std::size_t kw = 0; kw < KW; ++kw) {
                    const double wk = wf[kh * KW + kw];
                    for (std::size_t oh = 0; oh < OH; ++oh) {
                        const double* ir = ic + (oh + kh) * W + kw;
                        double* orow = of + oh * OW;
                        for (std::size_t ow = 0; ow < OW; ++ow) orow[ow] += wk * ir[ow];
                    }
                }
            }
        }
    }
}

inline void maxpool_forward(const double* in, std::size_t C, std::size_t H, std::size_t W,
                            std::size_t PH, std::size_t PW, double* out,
                            std::vector<std::int32_t>& arg) {
    const std::size_t OH = H / PH, OW = W / PW;
    arg.resize(C * OH * OW);
    for (std::size_t c = 0; c < C; ++c) {
        const double* ic = in + c * H * W;
        for (std::size_t oh = 0; oh < OH; ++oh) {
            for (std::size_t ow = 0; ow < OW; ++ow) {
                double best = -std::numeric_limits<double>::infinity();
                std::size_t best_idx = 0;
                for (std::size_t ph = 0; ph < PH; ++ph) {
                    const std::size_t row = oh * PH + ph;
                    for (std::size_t pw = 0; pw < PW; ++pw) {
                        std::size_t idx = row * W + ow * PW + pw;
                        if (ic[idx] > best) { // first max wins ties
                            best = ic[idx];
                            best_idx = idx;
                        }
                    }
                }
                out[(c * OH + oh) * OW + ow] = best;
                arg[(c * OH + oh) * OW + ow] = static_cast<std::int32_t>(c * H * W + best_idx);
            }
        }
    }
}

} // namespace detail

/// Forward pass over a flat input; fills the trace and returns it.
/// The final activation acts.back() is the class-probability vector,
/// acts[L-2] holds the pre-softmax logits.
inline void forward_trace(const NetworkSpec& spec, const Parameters& params, const double* x,
                          Trace& tr) {
    tr.prepare(spec);
    const std::size_t L = spec.layers.size();
    const double* in = x;
    std::vector<std::size_t> in_shape = spec.input_shape;
    for (std::size_t i = 0; i < L; ++i) {
        const LayerSpec& l = spec.layers[i];
        double* out = tr.acts[i].data();
        switch (l.kind) {
        case LayerSpec::Kind::Dense:
            detail::dense_forward(in, Tensor::numel_of(in_shape), params.weights[i],
                                  params.biases[i], out, l.units);
            break;
        case LayerSpec::Kind::Conv2D:
            detail::conv2d_forward(in, in_shape[0], in_shape[1], in_shape[2], params.weights[i],
                                   params.biases[i], out, l.filters, l.kernel_h, l.kernel_w);
            break;
        case LayerSpec::Kind::MaxPool:
            detail::maxpool_forward(in, in_shape[0], in_shape[1], in_shape[2], l.pool_h, l.pool_w,
                                    out, tr.pool_arg[i]);
            break;
        case LayerSpec::Kind::Activation: {
            const std::size_t n = tr.acts[i].size();
            if (l.act == ActKind::Relu) {
                for (std::size_t k = 0; k < n; ++k) out[k] = in[k] > 0.0 ? in[k] : 0.0;
            } else {
                const double t = l.brelu_t;
                for (std::size_t k = 0; k < n; ++k)
                    out[k] = in[k] < 0.0 ? 0.0 : (in[k] < t ? in[k] : t);
            }
            break;
        }
        case LayerSpec::Kind::Softmax: {
            tr.acts[i].assign(in, in + tr.acts[i].size());
            softmax_inplace(tr.acts[i]);
            break;
        }
        case LayerSpec::Kind::IdentityShortcut: {
            const auto& a = tr.acts[l.from_layer];
            const auto& b = tr.acts[l.to_layer];
            for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] + b[k];
            break;
        }
        }
        in = tr.acts[i].data();
        in_shape = spec.out_shapes[i];
    }
}

/// Reverse sweep seeded with dJ/dlogits (the gradient at the softmax input).
/// Accumulates parameter gradients into *pgrads when given; fills tr.dinput
/// with dJ/dx when want_input_grad.
inline void backward_from_logits(const NetworkSpec& spec, const Parameters& params, const double* x,
                                 Trace& tr, const std::vector<double>& dlogits,
                                 bool want_input_grad, Parameters* pgrads) {
    const std::size_t L = spec.layers.size();
    tr.grads.resize(L);
    for (std::size_t i = 0; i < L; ++i)
        tr.grads[i].assign(tr.acts[i].size(), 0.0);
    tr.dinput.assign(spec.input_numel(), 0.0);
    tr.grads[L - 2] = dlogits; // layer L-1 is softmax; seeds sit below it

    for (std::size_t i = L - 1; i-- > 0;) {
        // i runs L-2 .. 0
        const LayerSpec& l = spec.layers[i];
        const double* dout = tr.grads[i].data();
        const double* in = (i == 0) ? x : tr.acts[i - 1].data();
        const std::vector<std::size_t>& in_shape = (i == 0) ? spec.input_shape
                                                            : spec.out_shapes[i - 1];
        double* din = (i == 0) ? tr.dinput.data() : tr.grads[i - 1].data();
        const bool need_din = want_input_grad || i > 0;

        switch (l.kind) {
        case LayerSpec::Kind::Dense: {
            const std::size_t n = Tensor::numel_of(in_shape), u = l.units;
            const Tensor& w = params.weights[i];
            if (need_din) {
                for (std::size_t j = 0; j < u; ++j) {
                    const double g = dout[j];
                    if (g == 0.0) continue;
                    const double* wr = w.data.data() + j * n;
                    for (std::size_t k = 0; k < n; ++k) din[k] += g * wr[k];
                }
            }
            if (pgrads) {
                Tensor& dw = pgrads->weights[i];
                Tensor& db = pgrads->biases[i];
                for (std::size_t j = 0; j < u; ++j) {
                    const double g = dout[j];
                    db.data[j] += g;
                    if (g == 0.0) continue;
                    double* dwr = dw.data.data() + j * n;
                    for (std::size_t k = 0; k < n; ++k) dwr[k] += g * in[k];
                }
            }
            break;
        }
        case LayerSpec::Kind::Conv2D: {
            const std::size_t C = in_shape[0], H = in_shape[1], W = in_shape[2];
            const std::size_t F = l.filters, KH = l.kernel_h, KW = l.kernel_w;
            const std::size_t OH = H - KH + 1, OW = W - KW + 1;
            const Tensor& w = params.weights[i];
            if (need_din) {
                for (std::size_t f = 0; f < F; ++f) {
                    const double* df = dout + f * OH * OW;
                    for (std::size_t c = 0; c < C; ++c) {
                        double* dic = din + c * H * W;
                        const double* wf = w.data.data() + (f * C + c) * KH * KW;
                        for (std::size_t kh = 0; kh < KH; ++kh) {
                            for (std::size_t kw = 0; kw < KW; ++kw) {
                                const double wk = wf[kh * KW + kw];
                                for (std::size_t oh = 0; oh < OH; ++oh) {
                                    double* dir = dic + (oh + kh) * W + kw;
                                    const double* drow = df + oh * OW;
                                    for (std::size_t ow = 0; ow < OW; ++ow)
                                        dir[ow] += wk * drow[ow];
                                }
                            }
                        }
                    }
                }
            }
            if (pgrads) {
                Tensor& dw = pgrads->weights[i];
                Tensor& db = pgrads->biases[i];
                for (std::size_t f = 0; f < F; ++f) {
                    const double* df = dout + f * OH * OW;
                    double bsum = 0.0;
                    for (std::size_t k = 0; k < OH * OW; ++k) bsum += df[k];
                    db.data[f] += bsum;
                    for (std::size_t c = 0; c < C; ++c) {
                        const double* ic = in + c * H * W;
                        double* dwf = dw.data.data() + (f * C + c) * KH * KW;
                        for (std::size_t kh = 0; kh < KH; ++kh) {
                            for (std::size_t kw = 0; kw < KW; ++kw) {
                                double s = 0.0;
                                for (std::size_t oh = 0; oh < OH; ++oh) {
                                    const double* ir = ic + (oh + kh) * W + kw;
                                    const double* drow = df + oh * OW;
                                    for (std::size_t ow = 0; ow < OW; ++ow)
                                        s += drow[ow] * ir[ow];
                                }
                                dwf[kh * KW + kw] += s;
                            }
                        }
                    }
                }
            }
            break;
        }
        case LayerSpec::Kind::MaxPool: {
            if (need_din) {
                const auto& arg = tr.pool_arg[i];
                for (std::size_t k = 0; k < arg.size(); ++k)
                    din[static_cast<std::size_t>(arg[k])] += dout[k];
            }
            break;
        }
        case LayerSpec::Kind::Activation: {
            if (need_din) {
                const std::size_t n = tr.acts[i].size();
                if (l.act == ActKind::Relu) {
                    for (std::size_t k = 0; k < n; ++k)
                        if (in[k] > 0.0) din[k] += dout[k];
                } else {
                    const double t = l.brelu_t;
                    for (std::size_t k = 0; k < n; ++k)
                        if (in[k] > 0.0 && in[k] < t) din[k] += dout[k];
                }
            }
            break;
        }
        case LayerSpec::Kind::Softmax:
            break; // gradients are seeded below the softmax
        case LayerSpec::Kind::IdentityShortcut: {
            // both branches receive the full downstream gradient; nothing
            // flows to layer i-1 unless it is one of the branches
            auto& gfrom = tr.grads[l.from_layer];
            auto& gto = tr.grads[l.to_layer];
            for (std::size_t k = 0; k < gfrom.size(); ++k) {
                gfrom[k] += dout[k];
                gto[k] += dout[k];
            }
            break;
        }
        }
    }
}

inline void check_input(const TrainedModel& m, const Tensor& x) {
    if (x.shape != m.spec.input_shape && x.numel() != m.spec.input_numel())
        throw InputError("forward: input shape " + shape_str(x.shape) + " does not match " +
                         shape_str(m.spec.input_shape));
}

/// Class-probability vector F(x).
inline Tensor forward(const TrainedModel& m, const Tensor& x) {
    check_input(m, x);
    Trace tr;
    forward_trace(m.spec, m.params, x.data.data(), tr);
    return Tensor({m.spec.num_classes}, tr.acts.back());
}

/// Pre-softmax vector Z with softmax(Z) = forward(x).
inline Tensor logits(const TrainedModel& m, const Tensor& x) {
    check_input(m, x);
    Trace tr;
    forward_trace(m.spec, m.params, x.data.data(), tr);
    return Tensor({m.spec.num_classes}, tr.acts[tr.acts.size() - 2]);
}

inline std::size_t argmax(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i; // ties keep the lowest index
    return best;
}

inline int predict_class(const TrainedModel& m, const Tensor& x) {
    return static_cast<int>(argmax(forward(m, x).data));
}

inline std::vector<double> one_hot_target(std::size_t m, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= m)
        throw InputError("label " + std::to_string(label) + " out of range");
    std::vector<double> t(m, 0.0);
    t[static_cast<std::size_t>(label)] = 1.0;
    return t;
}

inline void check_target(const double* target, std::size_t m) {
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        if (target[k] < 0.0) throw InputError("target: negative mass");
        s += target[k];
    }
    if (std::abs(s - 1.0) > 1e-6) throw InputError("target: does not sum to 1");
}

struct LossGrad {
    double loss = 0.0;
    Tensor grad; // dJ/dx, shaped like x
};

/// Cross-entropy loss against a target distribution plus its input gradient.
inline LossGrad loss_and_input_gradient(const TrainedModel& m, const Tensor& x,
                                        const std::vector<double>& target) {
    check_input(m, x);
    if (target.size() != m.spec.num_classes) throw InputError("target: wrong length");
    check_target(target.data(), target.size());

    Trace tr;
    forward_trace(m.spec, m.params, x.data.data(), tr);
    const auto& probs = tr.acts.back();
    LossGrad out;
    out.loss = cross_entropy(probs, target.data());
    std::vector<double> dlogits(probs.size());
    for (std::size_t k = 0; k < probs.size(); ++k) dlogits[k] = probs[k] - target[k];
    backward_from_logits(m.spec, m.params, x.data.data(), tr, dlogits, true, nullptr);
    out.grad = Tensor(x.shape, tr.dinput);
    return out;
}

/// dZ_k/dx for a single logit k (seed e_k below the softmax).
inline Tensor logit_input_gradient(const TrainedModel& m, const Tensor& x, std::size_t k,
                                   Trace& tr) {
    std::vector<double> seed(m.spec.num_classes, 0.0);
    seed[k] = 1.0;
    backward_from_logits(m.spec, m.params, x.data.data(), tr, seed, true, nullptr);
    return Tensor(x.shape, tr.dinput);
}

/// d p_target / dx via the softmax Jacobian row (needs current probs).
inline Tensor prob_input_gradient(const TrainedModel& m, const Tensor& x, std::size_t target,
                                  Trace& tr) {
    const auto& p = tr.acts.back();
    std::vector<double> seed(p.size());
    for (std::size_t j = 0; j < p.size(); ++j)
        seed[j] = p[target] * ((j == target ? 1.0 : 0.0) - p[j]);
    backward_from_logits(m.spec, m.params, x.data.data(), tr, seed, true, nullptr);
    return Tensor(x.shape, tr.dinput);
}

/// Mean parameter gradient over a batch of (input, target) pairs.
/// Work is chunked deterministically; partial sums merge in chunk order, so
/// the result is bit-identical for any worker count.
inline Parameters parameter_gradients(const TrainedModel& m,
                                      const std::vector<const double*>& xs,
                                      const std::vector<const double*>& targets,
                                      double* mean_loss = nullptr) {
    if (xs.empty()) throw InputError("parameter_gradients: empty batch");
    const std::size_t kChunk = 8;
    const std::size_t n_chunks = (xs.size() + kChunk - 1) / kChunk;

    std::vector<Parameters> partial(n_chunks);
    std::vector<double> partial_loss(n_chunks, 0.0);
    parallel_chunks(xs.size(), kChunk, [&](std::size_t c, std::size_t b, std::size_t e) {
        partial[c] = zeros_like(m.params);
        Trace tr;
        for (std::size_t s = b; s < e; ++s) {
            forward_trace(m.spec, m.params, xs[s], tr);
            const auto& probs = tr.acts.back();
            partial_loss[c] += cross_entropy(probs, targets[s]);
            std::vector<double> dlogits(probs.size());
            for (std::size_t k = 0; k < probs.size(); ++k)
                dlogits[k] = probs[k] - targets[s][k];
            backward_from_logits(m.spec, m.params, xs[s], tr, dlogits, false, &partial[c]);
        }
    });

    Parameters total = zeros_like(m.params);
    double loss_sum = 0.0;
    for (std::size_t c = 0; c < n_chunks; ++c) {
        total.add_scaled(partial[c], 1.0);
        loss_sum += partial_loss[c];
    }
    total.scale(1.0 / static_cast<double>(xs.size()));
    if (mean_loss) *mean_loss = loss_sum / static_cast<double>(xs.size());
    return total;
}

} // namespace advlab

#endif // ADVLAB_NETWORK_HPP
