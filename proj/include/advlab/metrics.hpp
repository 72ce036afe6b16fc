#ifndef ADVLAB_METRICS_HPP
#define ADVLAB_METRICS_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "advlab/attacks.hpp"
#include "advlab/dataset.hpp"
#include "advlab/network.hpp"
#include "advlab/parallel.hpp"

namespace advlab {

/// Scores for one (model, attack) cell.
struct RobustnessReport {
    double accuracy = 0.0;                    // fraction in [0,1]
    std::optional<double> robustness_rho;     // absent when no attack succeeded
    std::optional<double> train_set_distance; // mean NN distance of adversarials
    double loss_sensitivity_ell = 0.0;
    std::size_t n_samples_evaluated = 0;
    std::size_t n_attack_success = 0;
    std::size_t n_excluded_misclassified = 0;
    std::size_t n_excluded_failed = 0;
};

inline double accuracy(const TrainedModel& m, const LabeledDataset& data, std::size_t limit = 0) {
    data.validate();
    const std::size_t n = limit == 0 ? data.count() : std::min(limit, data.count());
    std::vector<char> ok(n, 0);
    parallel_chunks(n, 64, [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            ok[i] = predict_class(m, data.tensor_at(i)) == data.labels[i];
    });
    std::size_t hits = 0;
    for (char c : ok) hits += c;
    return static_cast<double>(hits) / static_cast<double>(n);
}

/// Accuracy of `m` on someone else's adversarial batch (transfer evaluation).
inline double accuracy_on_batch(const TrainedModel& m, const AdversarialBatch& b) {
    if (b.count() == 0) throw InputError("accuracy_on_batch: empty batch");
    std::vector<char> ok(b.count(), 0);
    parallel_chunks(b.count(), 64, [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Tensor x = b.adversarials.tensor_at(i, b.sample_shape);
            ok[i] = predict_class(m, x) == b.original_labels[i];
        }
    });
    std::size_t hits = 0;
    for (char c : ok) hits += c;
    return static_cast<double>(hits) / static_cast<double>(b.count());
}

struct RobustnessSample {
    bool counted = false;
    double ratio = 0.0;   // ||dx||_2 / ||x||_2
    bool success = false;
    Tensor x_adv;
};

/// Empirical robustness: mean ||dx||/||x|| of the attack's minimal successful
/// perturbation over samples that were correctly classified and successfully
/// attacked. Returns per-sample details for reuse (gallery, distances).
inline std::vector<RobustnessSample> robustness_samples(const TrainedModel& m,
                                                        const LabeledDataset& data,
                                                        const AttackConfig& attack,
                                                        std::size_t limit) {
    if (attack.variant != AttackConfig::Variant::MinimalFgsm &&
        attack.variant != AttackConfig::Variant::DeepFool)
        throw ConfigError("empirical_robustness: attack must produce minimal perturbations");
    const std::size_t n = limit == 0 ? data.count() : std::min(limit, data.count());
    std::vector<RobustnessSample> out(n);
    parallel_chunks(n, 8, [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Tensor x = data.tensor_at(i);
            if (predict_class(m, x) != data.labels[i]) continue; // only correctly classified
            AttackConfig local = attack;
            local.seed = derive_seed(attack.seed, i);
            AttackOutcome o = run_attack(m, x, data.labels[i], local);
            out[i].counted = true;
            out[i].success = o.success;
            out[i].x_adv = std::move(o.x_adv);
            if (o.success) {
                double nx = l2_norm(x.data);
                out[i].ratio = nx > 0.0 ? l2_distance(x.data, out[i].x_adv.data) / nx : 0.0;
            }
        }
    });
    return out;
}

inline RobustnessReport empirical_robustness(const TrainedModel& m, const LabeledDataset& data,
                                             const AttackConfig& attack, std::size_t limit = 1000) {
    data.validate();
    auto samples = robustness_samples(m, data, attack, limit);
    RobustnessReport rep;
    double sum = 0.0;
    std::size_t n_ok = 0;
    for (const auto& s : samples) {
        ++rep.n_samples_evaluated;
        if (!s.counted) {
            ++rep.n_excluded_misclassified;
            continue;
        }
        if (!s.success) {
            ++rep.n_excluded_failed;
            continue;
        }
        ++rep.n_attack_success;
        sum += s.ratio;
        ++n_ok;
    }
    if (n_ok > 0) rep.robustness_rho = sum / static_cast<double>(n_ok);
    return rep;
}

/// Mean over adversarials of the exact nearest-neighbour L2 distance to the
/// training inputs.
inline double training_set_distance(const std::vector<const double*>& adversarials,
                                    std::size_t dim, const LabeledDataset& train) {
    if (adversarials.empty()) throw InputError("training_set_distance: no adversarials");
    train.validate();
    if (dim != train.inputs.dim)
        throw InputError("training_set_distance: dimension mismatch");
    std::vector<double> nn(adversarials.size());
    parallel_chunks(adversarials.size(), 4, [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double* a = adversarials[i];
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < train.count(); ++j) {
                const double* t = train.inputs.row(j);
                double s = 0.0;
                for (std::size_t k = 0; k < dim; ++k) {
                    double d = a[k] - t[k];
                    s += d * d;
                    if (s >= best) break;
                }
                if (s < best) best = s;
            }
            nn[i] = std::sqrt(best);
        }
    });
    double sum = 0.0;
    for (double d : nn) sum += d;
    return sum / static_cast<double>(nn.size());
}

inline double training_set_distance(const std::vector<Tensor>& adversarials,
                                    const LabeledDataset& train) {
    std::vector<const double*> ptrs;
    ptrs.reserve(adversarials.size());
    for (const auto& a : adversarials) {
        if (a.numel() != train.inputs.dim)
            throw InputError("training_set_distance: shape mismatch");
        ptrs.push_back(a.data.data());
    }
    return training_set_distance(ptrs, train.inputs.dim, train);
}

/// Local loss sensitivity: mean L2 norm of dJ/dx over the evaluation samples
/// (true-label cross-entropy).
inline double loss_sensitivity(const TrainedModel& m, const LabeledDataset& data,
                               std::size_t limit = 1000) {
    data.validate();
    const std::size_t n = limit == 0 ? data.count() : std::min(limit, data.count());
    std::vector<double> norms(n);
    parallel_chunks(n, 16, [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            auto lg = loss_and_input_gradient(m, data.tensor_at(i),
                                              one_hot_target(m.spec.num_classes, data.labels[i]));
            norms[i] = l2_norm(lg.grad.data);
        }
    });
    double sum = 0.0;
    for (double v : norms) sum += v;
    return sum / static_cast<double>(n);
}

} // namespace advlab

#endif // ADVLAB_METRICS_HPP
