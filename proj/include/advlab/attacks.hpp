#ifndef ADVLAB_ATTACKS_HPP
#define ADVLAB_ATTACKS_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "advlab/dataset.hpp"
#include "advlab/image_io.hpp"
#include "advlab/network.hpp"
#include "advlab/parallel.hpp"
#include "advlab/rng.hpp"

namespace advlab {

enum class Norm { Linf, L2 };

struct AttackConfig {
    enum class Variant { Fgsm, MinimalFgsm, RandomFgsm, Jsma, DeepFool, CwL2 };

    Variant variant = Variant::Fgsm;
    double epsilon = 0.1;        // budget; grid cap for MinimalFgsm
    Norm norm = Norm::Linf;
    double alpha = 0.05;         // RandomFgsm random pre-step
    double theta = 0.1;          // JSMA per-pixel step
    double gamma = 1.0;          // JSMA max fraction of modifiable pixels
    std::size_t max_iter = 100;
    double kappa = 0.0;          // CW confidence margin (logit units)
    double epsilon_step = 0.01;  // MinimalFgsm grid step
    double overshoot = 0.02;     // DeepFool boundary escape
    double cw_lr = 0.01;
    std::size_t cw_c_steps = 9;
    double cw_c0 = 0.001;
    std::uint64_t seed = 0;

    void validate() const {
        if (epsilon < 0.0) throw ConfigError("attack: epsilon must be >= 0");
        if (max_iter < 1) throw ConfigError("attack: max_iter must be >= 1");
        if (variant == Variant::RandomFgsm && (alpha < 0.0 || alpha > epsilon))
            throw ConfigError("attack: need 0 <= alpha <= epsilon");
        if (variant == Variant::Jsma) {
            if (!(theta > 0.0)) throw ConfigError("attack: theta must be > 0");
            if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("attack: gamma must be in (0,1]");
        }
        if (variant == Variant::MinimalFgsm &&
            !(epsilon_step > 0.0 && epsilon_step <= epsilon))
            throw ConfigError("attack: need 0 < epsilon_step <= epsilon");
        if (kappa < 0.0) throw ConfigError("attack: kappa must be >= 0");
    }

    std::string variant_name() const {
        switch (variant) {
        case Variant::Fgsm: return "fgsm";
        case Variant::MinimalFgsm: return "minimal-fgsm";
        case Variant::RandomFgsm: return "random-fgsm";
        case Variant::Jsma: return "jsma";
        case Variant::DeepFool: return "deepfool";
        case Variant::CwL2: return "cw-l2";
        }
        return "?";
    }
};

/// One crafted sample. success means the model no longer predicts `label`.
struct AttackOutcome {
    Tensor x_adv;
    bool success = false;
    double epsilon_used = 0.0; // MinimalFgsm: smallest grid epsilon that flips
    std::size_t iterations = 0;
    bool degenerate = false;   // zero-gradient or equal-logit fallbacks
};

// --- FGSM family ------------------------------------------------------------

inline AttackOutcome fgsm(const TrainedModel& m, const Tensor& x, int label, double epsilon,
                          Norm norm) {
    if (epsilon < 0.0) throw ConfigError("fgsm: epsilon must be >= 0");
    AttackOutcome out;
    auto lg = loss_and_input_gradient(m, x, one_hot_target(m.spec.num_classes, label));
    out.x_adv = x;
    if (norm == Norm::Linf) {
        for (std::size_t i = 0; i < x.numel(); ++i) {
            double g = lg.grad.data[i];
            double s = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
            out.x_adv.data[i] = std::clamp(x.data[i] + epsilon * s, 0.0, 1.0);
        }
    } else {
        double n = l2_norm(lg.grad.data);
        if (n == 0.0) {
            out.success = false;
            out.degenerate = true;
            return out;
        }
        for (std::size_t i = 0; i < x.numel(); ++i)
            out.x_adv.data[i] = std::clamp(x.data[i] + epsilon * lg.grad.data[i] / n, 0.0, 1.0);
    }
    out.iterations = 1;
    out.epsilon_used = epsilon;
    out.success = predict_class(m, out.x_adv) != label;
    return out;
}

/// Grid search {0, step, 2*step, ...} <= epsilon_max, every candidate crafted
/// from the original x (the gradient is computed once there).
inline AttackOutcome minimal_fgsm(const TrainedModel& m, const Tensor& x, int label,
                                  double epsilon_step, double epsilon_max, Norm norm) {
    if (!(epsilon_step > 0.0 && epsilon_step <= epsilon_max))
        throw ConfigError("minimal_fgsm: need 0 < epsilon_step <= epsilon_max");
    auto lg = loss_and_input_gradient(m, x, one_hot_target(m.spec.num_classes, label));
    std::vector<double> dir(x.numel());
    bool zero_grad = true;
    if (norm == Norm::Linf) {
        for (std::size_t i = 0; i < x.numel(); ++i) {
            double g = lg.grad.data[i];
            dir[i] = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
            if (dir[i] != 0.0) zero_grad = false;
        }
    } else {
        double n = l2_norm(lg.grad.data);
        if (n > 0.0) {
            zero_grad = false;
            for (std::size_t i = 0; i < x.numel(); ++i) dir[i] = lg.grad.data[i] / n;
        }
    }

    AttackOutcome out;
    Tensor cand = x;
    const std::size_t kmax = static_cast<std::size_t>(std::floor(epsilon_max / epsilon_step + 1e-9));
    for (std::size_t k = 0;; ++k) {
        double eps = static_cast<double>(k) * epsilon_step;
        if (k > kmax) break;
        if (k == 0) {
            cand = x;
        } else {
            if (zero_grad) break;
            for (std::size_t i = 0; i < x.numel(); ++i)
                cand.data[i] = std::clamp(x.data[i] + eps * dir[i], 0.0, 1.0);
        }
        ++out.iterations;
        if (predict_class(m, cand) != label) {
            out.x_adv = cand;
            out.epsilon_used = eps;
            out.success = true;
            return out;
        }
    }
    // unsuccessful at the grid cap
    if (zero_grad) {
        out.x_adv = x;
        out.degenerate = true;
    } else {
        for (std::size_t i = 0; i < x.numel(); ++i)
            cand.data[i] = std::clamp(x.data[i] + epsilon_max * dir[i], 0.0, 1.0);
        out.x_adv = cand;
    }
    out.epsilon_used = epsilon_max;
    out.success = false;
    return out;
}

/// Random sign pre-step of size alpha, then FGSM with the remaining budget.
inline AttackOutcome random_fgsm(const TrainedModel& m, const Tensor& x, int label, double epsilon,
                                 double alpha, std::uint64_t seed) {
    if (alpha < 0.0 || alpha > epsilon) throw ConfigError("random_fgsm: need 0 <= alpha <= epsilon");
    Rng rng(derive_seed(seed, 0xF65D));
    Tensor x1 = x;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        double n = rng.normal();
        double s = n > 0.0 ? 1.0 : (n < 0.0 ? -1.0 : 0.0);
        x1.data[i] = std::clamp(x.data[i] + alpha * s, 0.0, 1.0);
    }
    AttackOutcome out = fgsm(m, x1, label, epsilon - alpha, Norm::Linf);
    out.epsilon_used = epsilon;
    return out;
}

// --- JSMA -------------------------------------------------------------------

/// Single-pixel saliency attack toward the most likely non-label class,
/// fixed at the first iteration.
inline AttackOutcome jsma(const TrainedModel& m, const Tensor& x, int label, double theta,
                          double gamma, std::size_t max_iter) {
    if (!(theta > 0.0)) throw ConfigError("jsma: theta must be > 0");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("jsma: gamma must be in (0,1]");

    const std::size_t n = x.numel();
    const std::size_t max_pixels =
        static_cast<std::size_t>(std::ceil(gamma * static_cast<double>(n)));

    Trace tr;
    forward_trace(m.spec, m.params, x.data.data(), tr);
    const auto& p0 = tr.acts.back();
    std::size_t target = label == 0 ? 1 : 0;
    for (std::size_t k = 0; k < p0.size(); ++k)
        if (static_cast<int>(k) != label && p0[k] > p0[target]) target = k;

    AttackOutcome out;
    out.x_adv = x;
    std::vector<char> touched(n, 0);
    std::size_t distinct = 0;

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        forward_trace(m.spec, m.params, out.x_adv.data.data(), tr);
        if (argmax(tr.acts.back()) == target) break;
        if (distinct >= max_pixels) break;
        Tensor sal = prob_input_gradient(m, out.x_adv, target, tr);
        double best = 0.0;
        std::ptrdiff_t best_i = -1;
        for (std::size_t i = 0; i < n; ++i) {
            if (out.x_adv.data[i] >= 1.0) continue; // saturated, +theta does nothing
            if (sal.data[i] > best) {
                best = sal.data[i];
                best_i = static_cast<std::ptrdiff_t>(i);
            }
        }
        if (best_i < 0) break; // no pixel with positive saliency
        out.x_adv.data[best_i] = std::min(1.0, out.x_adv.data[best_i] + theta);
        if (!touched[best_i]) {
            touched[best_i] = 1;
            ++distinct;
        }
        ++out.iterations;
    }
    out.success = predict_class(m, out.x_adv) != label;
    return out;
}

// --- DeepFool ----------------------------------------------------------------

/// Iterative nearest-linearized-boundary steps; near-minimal L2 perturbations.
inline AttackOutcome deepfool(const TrainedModel& m, const Tensor& x, int label,
                              std::size_t max_iter = 100, double overshoot = 0.02) {
    if (max_iter < 1) throw ConfigError("deepfool: max_iter must be >= 1");
    const std::size_t n = x.numel();
    const std::size_t mcls = m.spec.num_classes;

    AttackOutcome out;
    std::vector<double> r_tot(n, 0.0);
    Tensor probe = x;
    Trace tr;

    auto overshot = [&](Tensor& dst) {
        for (std::size_t i = 0; i < n; ++i) dst.data[i] = x.data[i] + (1.0 + overshoot) * r_tot[i];
    };

    for (std::size_t iter = 0;; ++iter) {
        overshot(probe);
        forward_trace(m.spec, m.params, probe.data.data(), tr);
        std::size_t pred = argmax(tr.acts.back());
        if (static_cast<int>(pred) != label) {
            out.success = true;
            out.iterations = iter;
            break;
        }
        if (iter >= max_iter) {
            out.success = false;
            out.iterations = iter;
            break;
        }

        const std::size_t cur = pred;
        std::vector<double> z = tr.acts[tr.acts.size() - 2];
        std::vector<Tensor> zgrads(mcls);
        // backward passes reuse the activations already in the trace
        for (std::size_t k = 0; k < mcls; ++k) zgrads[k] = logit_input_gradient(m, probe, k, tr);

        double best_ratio = std::numeric_limits<double>::infinity();
        std::size_t best_k = cur;
        double best_f = 0.0, best_wnorm2 = 0.0;
        for (std::size_t k = 0; k < mcls; ++k) {
            if (k == cur) continue;
            double w2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double w = zgrads[k].data[i] - zgrads[cur].data[i];
                w2 += w * w;
            }
            if (w2 == 0.0) continue;
            double f = z[k] - z[cur];
            double ratio = std::abs(f) / std::sqrt(w2);
            if (ratio < best_ratio) {
                best_ratio = ratio;
                best_k = k;
                best_f = f;
                best_wnorm2 = w2;
            }
        }
        if (best_k == cur) { // all candidate hyperplane normals vanish
            out.degenerate = true;
            out.success = false;
            out.iterations = iter;
            out.x_adv = x;
            return out;
        }
        double scale = std::abs(best_f) / best_wnorm2;
        for (std::size_t i = 0; i < n; ++i)
            r_tot[i] += scale * (zgrads[best_k].data[i] - zgrads[cur].data[i]);
    }

    overshot(probe);
    out.x_adv = clip_to_domain(probe);
    out.success = predict_class(m, out.x_adv) != label;
    return out;
}

// --- Carlini & Wagner L2 ------------------------------------------------------

/// tanh-parameterized L2 attack with a logit-margin hinge; plain gradient
/// descent inside a binary search over the trade-off constant c.
inline AttackOutcome cw_l2(const TrainedModel& m, const Tensor& x, int label, double kappa,
                           std::size_t max_iter, std::size_t c_steps, std::uint64_t /*seed*/,
                           double lr = 0.01, double c0 = 0.001) {
    if (kappa < 0.0) throw ConfigError("cw_l2: kappa must be >= 0");
    const std::size_t n = x.numel();
    const std::size_t mcls = m.spec.num_classes;

    std::vector<double> u0(n);
    for (std::size_t i = 0; i < n; ++i) {
        double xi = std::clamp(x.data[i], 1e-6, 1.0 - 1e-6);
        u0[i] = std::atanh(2.0 * xi - 1.0);
    }

    AttackOutcome out;
    out.x_adv = x;
    double best_dist = std::numeric_limits<double>::infinity();
    bool any_success = false;

    double c = c0, c_lo = 0.0, c_hi = std::numeric_limits<double>::infinity();
    Trace tr;
    Tensor cand(x.shape);
    std::vector<double> u, th(n), seed_vec(mcls);

    for (std::size_t round = 0; round < c_steps; ++round) {
        u = u0;
        bool round_success = false;
        for (std::size_t iter = 0; iter < max_iter; ++iter) {
            for (std::size_t i = 0; i < n; ++i) {
                th[i] = std::tanh(u[i]);
                cand.data[i] = (th[i] + 1.0) / 2.0;
            }
            forward_trace(m.spec, m.params, cand.data.data(), tr);
            const auto& z = tr.acts[tr.acts.size() - 2];
            std::size_t k_star = label == 0 ? 1 : 0;
            for (std::size_t k = 0; k < mcls; ++k)
                if (static_cast<int>(k) != label && z[k] > z[k_star]) k_star = k;
            const double margin = z[label] - z[k_star]; // attack wants <= -kappa

            if (margin <= -kappa) {
                double d = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double dd = cand.data[i] - x.data[i];
                    d += dd * dd;
                }
                if (d < best_dist) {
                    best_dist = d;
                    out.x_adv = cand;
                }
                any_success = round_success = true;
            }

            const bool hinge_active = margin > -kappa;
            if (hinge_active) {
                std::fill(seed_vec.begin(), seed_vec.end(), 0.0);
                seed_vec[label] = 1.0;
                seed_vec[k_star] = -1.0;
                backward_from_logits(m.spec, m.params, cand.data.data(), tr, seed_vec, true,
                                     nullptr);
            }
            for (std::size_t i = 0; i < n; ++i) {
                double g = 2.0 * (cand.data[i] - x.data[i]);
                if (hinge_active) g += c * tr.dinput[i];
                u[i] -= lr * g * (1.0 - th[i] * th[i]) / 2.0;
            }
            ++out.iterations;
        }
        if (round_success) {
            c_hi = c;
            c = (c_lo + c_hi) / 2.0;
        } else {
            c_lo = c;
            c = std::isinf(c_hi) ? c * 10.0 : (c_lo + c_hi) / 2.0;
        }
    }
    out.success = any_success && predict_class(m, out.x_adv) != label;
    if (!any_success) out.x_adv = x;
    return out;
}

// --- dispatch & batches -------------------------------------------------------

inline AttackOutcome run_attack(const TrainedModel& m, const Tensor& x, int label,
                                const AttackConfig& cfg) {
    cfg.validate();
    switch (cfg.variant) {
    case AttackConfig::Variant::Fgsm: return fgsm(m, x, label, cfg.epsilon, cfg.norm);
    case AttackConfig::Variant::MinimalFgsm:
        return minimal_fgsm(m, x, label, cfg.epsilon_step, cfg.epsilon, cfg.norm);
    case AttackConfig::Variant::RandomFgsm:
        return random_fgsm(m, x, label, cfg.epsilon, cfg.alpha, cfg.seed);
    case AttackConfig::Variant::Jsma:
        return jsma(m, x, label, cfg.theta, cfg.gamma, cfg.max_iter);
    case AttackConfig::Variant::DeepFool:
        return deepfool(m, x, label, cfg.max_iter, cfg.overshoot);
    case AttackConfig::Variant::CwL2:
        return cw_l2(m, x, label, cfg.kappa, cfg.max_iter, cfg.cw_c_steps, cfg.seed, cfg.cw_lr,
                     cfg.cw_c0);
    }
    throw ConfigError("unknown attack variant");
}

struct AdversarialBatch {
    std::vector<std::size_t> sample_shape;
    SampleMatrix originals;
    SampleMatrix adversarials;
    std::vector<int> original_labels;
    std::vector<int> predicted_before;
    std::vector<int> predicted_after;
    std::vector<char> success; // prediction changed
    std::vector<double> perturbation_l2;
    std::vector<double> perturbation_linf;
    std::vector<double> epsilon_used;
    std::vector<char> attack_success; // model no longer predicts the label

    std::size_t count() const { return originals.count; }
};

/// Crafts one adversarial per dataset sample against `craft_model`.
/// Per-sample seeds derive from (cfg.seed, index), so results are
/// independent of worker partitioning.
inline AdversarialBatch craft_batch(const TrainedModel& craft_model, const LabeledDataset& data,
                                    const AttackConfig& cfg, std::size_t limit = 0) {
    cfg.validate();
    data.validate();
    const std::size_t n = limit == 0 ? data.count() : std::min(limit, data.count());
    AdversarialBatch b;
    b.sample_shape = data.sample_shape;
    b.originals = SampleMatrix(n, data.inputs.dim);
    b.adversarials = SampleMatrix(n, data.inputs.dim);
    b.original_labels.resize(n);
    b.predicted_before.resize(n);
    b.predicted_after.resize(n);
    b.success.resize(n);
    b.attack_success.resize(n);
    b.perturbation_l2.resize(n);
    b.perturbation_linf.resize(n);
    b.epsilon_used.resize(n);

    parallel_chunks(n, 16, [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Tensor x = data.tensor_at(i);
            AttackConfig local = cfg;
            local.seed = derive_seed(cfg.seed, i);
            AttackOutcome o = run_attack(craft_model, x, data.labels[i], local);
            std::copy(x.data.begin(), x.data.end(), b.originals.mutable_row(i));
            std::copy(o.x_adv.data.begin(), o.x_adv.data.end(), b.adversarials.mutable_row(i));
            b.original_labels[i] = data.labels[i];
            b.predicted_before[i] = predict_class(craft_model, x);
            b.predicted_after[i] = predict_class(craft_model, o.x_adv);
            b.success[i] = b.predicted_before[i] != b.predicted_after[i];
            b.attack_success[i] = o.success;
            b.perturbation_l2[i] = l2_distance(x.data, o.x_adv.data);
            b.perturbation_linf[i] = linf_distance(x.data, o.x_adv.data);
            b.epsilon_used[i] = o.epsilon_used;
        }
    });
    return b;
}

/// Directory layout: manifest.csv plus lossless originals/adversarials blobs;
/// per-sample PGM/PPM images optional.
inline void save_batch(const std::string& dir, const AdversarialBatch& b, bool images = false) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    save_tensor_blob(dir + "/originals.f64", b.originals, b.sample_shape);
    save_tensor_blob(dir + "/adversarials.f64", b.adversarials, b.sample_shape);
    std::ofstream csv(dir + "/manifest.csv");
    if (!csv) throw FormatError("cannot open for writing: " + dir + "/manifest.csv");
    csv << "index,label,predicted_before,predicted_after,success,l2,linf\n";
    char buf[96];
    for (std::size_t i = 0; i < b.count(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%d,%d,%d,%d,%.9f,%.9f\n", i, b.original_labels[i],
                      b.predicted_before[i], b.predicted_after[i], b.success[i] ? 1 : 0,
                      b.perturbation_l2[i], b.perturbation_linf[i]);
        csv << buf;
    }
    if (images && b.sample_shape.size() == 3) {
        fs::create_directories(dir + "/images");
        for (std::size_t i = 0; i < b.count(); ++i) {
            char name[64];
            std::snprintf(name, sizeof name, "/images/adv_%05zu.pgm", i);
            save_image_grid({b.adversarials.tensor_at(i, b.sample_shape)}, 1, dir + name);
        }
    }
}

} // namespace advlab

#endif // ADVLAB_ATTACKS_HPP
