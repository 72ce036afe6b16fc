#ifndef ADVLAB_HARNESS_HPP
#define ADVLAB_HARNESS_HPP

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "advlab/attacks.hpp"
#include "advlab/defenses.hpp"
#include "advlab/idx_io.hpp"
#include "advlab/image_io.hpp"
#include "advlab/metrics.hpp"
#include "advlab/model_io.hpp"
#include "advlab/plan.hpp"
#include "advlab/presets.hpp"
#include "advlab/toy_data.hpp"
#include "advlab/train.hpp"

namespace advlab {

namespace fs = std::filesystem;

struct DatasetPair {
    LabeledDataset train;
    LabeledDataset test;
    std::string source_desc;
};

inline std::string env_or(const char* name, const std::string& def) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : def;
}

inline bool mnist_files_present(const std::string& dir) {
    return fs::exists(fs::path(dir) / "train-images-idx3-ubyte") &&
           fs::exists(fs::path(dir) / "train-labels-idx1-ubyte") &&
           fs::exists(fs::path(dir) / "t10k-images-idx3-ubyte") &&
           fs::exists(fs::path(dir) / "t10k-labels-idx1-ubyte");
}

/// Dataset resolution. "auto" picks real MNIST when the IDX files exist and
/// falls back to the synthetic digits otherwise.
inline DatasetPair load_plan_dataset(const Plan& plan, std::uint64_t seed) {
    std::string name = plan.get("dataset.name", "auto");
    const std::size_t train_pc = plan.get_size("dataset.train_per_class", 1000);
    const std::size_t test_pc = plan.get_size("dataset.test_per_class", 100);
    DatasetPair out;

    if (name == "auto") {
        std::string dir = env_or("ADVLAB_MNIST_DIR", plan.get("dataset.mnist_dir", "data/mnist"));
        name = mnist_files_present(dir) ? "mnist" : "digits";
    }

    if (name == "mnist") {
        std::string dir = env_or("ADVLAB_MNIST_DIR", plan.get("dataset.mnist_dir", "data/mnist"));
        if (!mnist_files_present(dir))
            throw FormatError("mnist: IDX files not found under '" + dir +
                              "' (expected train-images-idx3-ubyte etc., pre-decompressed)");
        auto train_full = load_idx(dir + "/train-images-idx3-ubyte", dir + "/train-labels-idx1-ubyte");
        auto test_full = load_idx(dir + "/t10k-images-idx3-ubyte", dir + "/t10k-labels-idx1-ubyte");
        out.train = train_pc > 0 ? stratified_subset(train_full, train_pc, derive_seed(seed, 101))
                                 : train_full;
        out.test = test_pc > 0 ? stratified_subset(test_full, test_pc, derive_seed(seed, 102))
                               : test_full;
        out.source_desc = "mnist(dir=" + dir + ",train_pc=" + std::to_string(train_pc) +
                          ",test_pc=" + std::to_string(test_pc) + ")";
    } else if (name == "digits") {
        out.train = gen_digits(train_pc, derive_seed(seed, 103));
        out.test = gen_digits(test_pc, derive_seed(seed, 104));
        out.source_desc = "digits(train_pc=" + std::to_string(train_pc) +
                          ",test_pc=" + std::to_string(test_pc) + ")";
    } else if (name == "cifar10") {
        std::string dir = env_or("ADVLAB_CIFAR_DIR", plan.get("dataset.cifar_dir", "data/cifar10"));
        std::vector<std::string> batches;
        for (int i = 1; i <= 5; ++i)
            batches.push_back(dir + "/data_batch_" + std::to_string(i) + ".bin");
        auto train_full = load_cifar10(batches);
        auto test_full = load_cifar10({dir + "/test_batch.bin"});
        out.train = train_pc > 0 ? stratified_subset(train_full, train_pc, derive_seed(seed, 101))
                                 : train_full;
        out.test = test_pc > 0 ? stratified_subset(test_full, test_pc, derive_seed(seed, 102))
                               : test_full;
        out.source_desc = "cifar10(dir=" + dir + ")";
    } else if (name == "moons" || name == "circles") {
        const std::size_t n = plan.get_size("dataset.n_per_class", 200);
        const double noise = plan.get_num("dataset.noise", 0.05);
        if (name == "moons") {
            out.train = gen_moons(n, noise, derive_seed(seed, 105));
            out.test = gen_moons(n, noise, derive_seed(seed, 106));
        } else {
            out.train = gen_circles(n, noise, derive_seed(seed, 105));
            out.test = gen_circles(n, noise, derive_seed(seed, 106));
        }
        out.source_desc = name + "(n_per_class=" + std::to_string(n) +
                          ",noise=" + std::to_string(noise) + ")";
    } else {
        throw ConfigError("unknown dataset '" + name + "'");
    }
    out.train.split = Split::Train;
    out.test.split = Split::Test;
    return out;
}

inline std::string defense_desc(const DefenseConfig& d) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "%s;sigma=%g;n=%zu;sw=%g;ma=%g;ae=%g;ve=%g;xi=%g;pi=%zu;ur=%g;bd=%d;fs=%zu",
                  d.tag().c_str(), d.sigma, d.n_samples, d.smooth_weight, d.mix_alpha,
                  d.at_epsilon, d.vat_epsilon, d.vat_xi, d.vat_power_iters, d.uniform_radius,
                  d.bit_depth, d.filter_size);
    return buf;
}

inline std::string display_name(const DefenseConfig& d, ActKind act) {
    std::string base = d.variant == DefenseConfig::Variant::None ? "none" : d.tag();
    return base + (act == ActKind::Brelu ? "+brelu" : "+relu");
}

/// One defended model to train and evaluate: architecture activation variant
/// plus defense, with optional per-model epoch override.
struct ModelPlan {
    DefenseConfig defense;
    ActKind act = ActKind::Relu;
    double brelu_t = 1.0;
    std::string label; // row label; display_name(defense, act) when empty
};

struct HarnessRun {
    Plan plan;
    fs::path out_dir;
    std::uint64_t seed = 1;
    DatasetPair data;
    std::string model_name = "desk-cnn";
    TrainConfig base_train;
    std::size_t eval_limit = 1000;
    std::size_t sens_limit = 1000;
    bool save_batches = false;
    std::vector<std::string> artifacts;

    static HarnessRun from_plan(Plan plan, const std::string& out_override = "") {
        HarnessRun r;
        r.plan = plan;
        r.seed = static_cast<std::uint64_t>(plan.get_num("run.seed", 1));
        r.out_dir = out_override.empty() ? plan.get("run.out_dir", "out") : out_override;
        r.model_name = plan.get("model.name", "desk-cnn");
        r.base_train.epochs = plan.get_size("train.epochs", 5);
        r.base_train.batch_size = plan.get_size("train.batch_size", 32);
        r.base_train.learning_rate = plan.get_num("train.learning_rate", 0.05);
        r.base_train.seed = r.seed;
        r.eval_limit = plan.get_size("metrics.eval_limit", 1000);
        r.sens_limit = plan.get_size("metrics.sensitivity_limit", 1000);
        r.save_batches = plan.get("run.save_batches", "0") == "1";
        r.data = load_plan_dataset(plan, r.seed);
        fs::create_directories(r.out_dir);
        fs::create_directories(r.out_dir / "models");
        return r;
    }

    void note_artifact(const fs::path& p) { artifacts.push_back(p.string()); }

    std::string cache_key(const std::string& arch, const ModelPlan& mp,
                          const TrainConfig& tc) const {
        char buf[512];
        std::snprintf(buf, sizeof buf, "%s|act=%d,t=%g|%s|ep=%zu,bs=%zu,lr=%g,seed=%" PRIu64 "|%s",
                      arch.c_str(), static_cast<int>(mp.act), mp.brelu_t,
                      defense_desc(mp.defense).c_str(), tc.epochs, tc.batch_size,
                      tc.learning_rate, tc.seed, data.source_desc.c_str());
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const char* c = buf; *c; ++c) {
            h ^= static_cast<unsigned char>(*c);
            h *= 0x100000001b3ULL;
        }
        char hex[24];
        std::snprintf(hex, sizeof hex, "%016" PRIx64, h);
        return hex;
    }

    /// Trains (or loads from the on-disk cache) the defended model described
    /// by `mp`. AdvTrain/Vat warm up on an undefended model of the same
    /// architecture and seed.
    TrainedModel ensure_model(const std::string& arch, const ModelPlan& mp, TrainConfig tc) {
        fs::path file = out_dir / "models" / (cache_key(arch, mp, tc) + ".model");
        if (fs::exists(file)) return load_model(file.string());

        NetworkSpec spec = model_preset(arch, data.train.sample_shape, data.train.num_classes,
                                        mp.act, mp.brelu_t);
        const TrainedModel* warm_ptr = nullptr;
        TrainedModel warm;
        if (mp.defense.variant == DefenseConfig::Variant::AdvTrain ||
            mp.defense.variant == DefenseConfig::Variant::Vat) {
            ModelPlan clean = mp;
            clean.defense = DefenseConfig{};
            warm = ensure_model(arch, clean, tc);
            warm_ptr = &warm;
        }
        DefenseConfig dc = mp.defense;
        dc.seed = derive_seed(tc.seed, 0xDEF);
        AugmentedDataset aug = apply_defense(data.train, dc, warm_ptr);
        TrainedModel m = train_soft(spec, aug.inputs, aug.soft_targets, tc, nullptr,
                                    display_name(mp.defense, mp.act));
        save_model(m, file.string());
        return m;
    }

    TrainConfig train_config_for(const std::string& plan_prefix) const {
        TrainConfig tc = base_train;
        tc.epochs = plan.get_size(plan_prefix + ".epochs", tc.epochs);
        tc.learning_rate = plan.get_num(plan_prefix + ".learning_rate", tc.learning_rate);
        return tc;
    }

    void write_manifest(const std::string& extra = "") const {
        std::ofstream f(out_dir / "manifest.txt");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016" PRIx64, plan.hash());
        f << "plan_hash " << buf << "\n";
        f << "data_source " << data.source_desc << "\n";
        f << "craft_model_split same_split\n";
        if (!extra.empty()) f << extra;
        for (const auto& a : artifacts) f << "artifact " << a << "\n";
    }
};

inline std::vector<ModelPlan> model_plans_from(const Plan& plan) {
    std::vector<ModelPlan> out;
    for (std::size_t id : plan.indexed("defense")) {
        std::string prefix = "defense." + std::to_string(id);
        ModelPlan mp;
        mp.defense = defense_from_plan(plan, prefix);
        std::string act = plan.get(prefix + ".activation", plan.get("model.activation", "relu"));
        mp.act = act == "brelu" ? ActKind::Brelu : ActKind::Relu;
        mp.brelu_t = plan.get_num(prefix + ".brelu_t", plan.get_num("model.brelu_t", 1.0));
        mp.label = plan.get(prefix + ".label", "");
        if (mp.label.empty()) mp.label = display_name(mp.defense, mp.act);
        out.push_back(mp);
    }
    if (out.empty()) {
        ModelPlan mp;
        std::string act = plan.get("model.activation", "relu");
        mp.act = act == "brelu" ? ActKind::Brelu : ActKind::Relu;
        mp.brelu_t = plan.get_num("model.brelu_t", 1.0);
        mp.label = display_name(mp.defense, mp.act);
        out.push_back(mp);
    }
    return out;
}

inline std::vector<AttackConfig> attacks_from(const Plan& plan) {
    std::vector<AttackConfig> out;
    for (std::size_t id : plan.indexed("attack"))
        out.push_back(attack_from_plan(plan, "attack." + std::to_string(id)));
    if (out.empty()) out.push_back(AttackConfig{});
    return out;
}

inline LabeledDataset preprocessed_view(const LabeledDataset& d, const DefenseConfig& def) {
    if (def.variant != DefenseConfig::Variant::FeatureSqueeze) return d;
    LabeledDataset out = d;
    for (std::size_t i = 0; i < out.count(); ++i) {
        Tensor t = deploy_preprocess(out.tensor_at(i), def);
        std::copy(t.data.begin(), t.data.end(), out.inputs.mutable_row(i));
    }
    return out;
}

inline double eval_accuracy_on_batch(const TrainedModel& m, const DefenseConfig& def,
                                     const AdversarialBatch& b) {
    if (def.variant != DefenseConfig::Variant::FeatureSqueeze) return accuracy_on_batch(m, b);
    std::vector<char> ok(b.count(), 0);
    parallel_chunks(b.count(), 64, [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Tensor x = deploy_preprocess(b.adversarials.tensor_at(i, b.sample_shape), def);
            ok[i] = predict_class(m, x) == b.original_labels[i];
        }
    });
    std::size_t hits = 0;
    for (char c : ok) hits += c;
    return static_cast<double>(hits) / static_cast<double>(b.count());
}

struct ReportRow {
    std::string experiment;
    std::string defense;
    std::string attack;
    double epsilon = 0.0;
    std::string box; // "white" | "black"
    double accuracy_pct = 0.0;
    std::optional<double> robustness;
    std::optional<double> train_set_distance;
    double loss_sensitivity = 0.0;
    std::size_t n_evaluated = 0;
    std::size_t n_attack_success = 0;
};

inline const char* report_header() {
    return "experiment,defense,attack,epsilon,box,accuracy,robustness,train_set_distance,"
           "loss_sensitivity,n_evaluated,n_attack_success\n";
}

inline std::string report_row_csv(const ReportRow& r) {
    char buf[384];
    std::string rho = r.robustness ? [&] {
        char b[32];
        std::snprintf(b, sizeof b, "%.6f", *r.robustness);
        return std::string(b);
    }() : std::string();
    std::string dist = r.train_set_distance ? [&] {
        char b[32];
        std::snprintf(b, sizeof b, "%.6f", *r.train_set_distance);
        return std::string(b);
    }() : std::string();
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%g,%s,%.2f,%s,%s,%.6f,%zu,%zu\n",
                  r.experiment.c_str(), r.defense.c_str(), r.attack.c_str(), r.epsilon,
                  r.box.c_str(), r.accuracy_pct, rho.c_str(), dist.c_str(), r.loss_sensitivity,
                  r.n_evaluated, r.n_attack_success);
    return buf;
}

/// Defense x attack matrix. White-box cells craft on the defended model;
/// black-box cells craft on an undefended craft-model architecture that never
/// sees the defended parameters.
inline std::vector<ReportRow> run_matrix(HarnessRun& run) {
    auto plans = model_plans_from(run.plan);
    auto attacks = attacks_from(run.plan);
    const std::string craft_arch = run.plan.get("craft.model", "");
    const bool black_box = !craft_arch.empty();

    TrainedModel craft_model;
    if (black_box) {
        ModelPlan undefended;
        craft_model = run.ensure_model(craft_arch, undefended, run.train_config_for("craft"));
    }

    fs::path report_path = run.out_dir / "report.csv";
    std::ofstream csv(report_path);
    csv << report_header();
    csv.flush();
    run.note_artifact(report_path);

    std::vector<ReportRow> rows;
    std::size_t cell = 0;
    for (std::size_t di = 0; di < plans.size(); ++di) {
        const ModelPlan& mp = plans[di];
        TrainedModel model =
            run.ensure_model(run.model_name, mp, run.train_config_for("defense." + std::to_string(di)));
        LabeledDataset eval_test = preprocessed_view(run.data.test, mp.defense);
        double sens = loss_sensitivity(model, eval_test, run.sens_limit);

        for (std::size_t ai = 0; ai < attacks.size(); ++ai, ++cell) {
            AttackConfig atk = attacks[ai];
            atk.seed = derive_seed(run.seed, 0xCE11 + cell);
            const TrainedModel& crafter = black_box ? craft_model : model;
            const LabeledDataset& craft_set = black_box ? run.data.test : eval_test;

            AdversarialBatch batch = craft_batch(crafter, craft_set, atk, run.eval_limit);
            ReportRow row;
            row.experiment = "matrix";
            row.defense = mp.label;
            row.attack = atk.variant_name();
            row.epsilon = atk.epsilon;
            row.box = black_box ? "black" : "white";
            row.accuracy_pct = 100.0 * eval_accuracy_on_batch(model, mp.defense, batch);
            row.loss_sensitivity = sens;
            row.n_evaluated = batch.count();

            const bool minimal = atk.variant == AttackConfig::Variant::MinimalFgsm ||
                                 atk.variant == AttackConfig::Variant::DeepFool;
            std::vector<const double*> adv_ptrs;
            double rho_sum = 0.0;
            std::size_t rho_n = 0;
            for (std::size_t i = 0; i < batch.count(); ++i) {
                if (!batch.attack_success[i]) continue;
                ++row.n_attack_success;
                if (batch.predicted_before[i] != batch.original_labels[i]) continue;
                if (minimal) {
                    adv_ptrs.push_back(batch.adversarials.row(i));
                    std::vector<double> orig(batch.originals.row(i),
                                             batch.originals.row(i) + batch.originals.dim);
                    double nx = l2_norm(orig);
                    if (nx > 0.0) {
                        rho_sum += batch.perturbation_l2[i] / nx;
                        ++rho_n;
                    }
                }
            }
            if (minimal && rho_n > 0) {
                row.robustness = rho_sum / static_cast<double>(rho_n);
                row.train_set_distance =
                    training_set_distance(adv_ptrs, batch.originals.dim, run.data.train);
            }
            if (run.save_batches) {
                fs::path bdir = run.out_dir / ("batch_" + std::to_string(cell));
                save_batch(bdir.string(), batch);
                run.note_artifact(bdir);
            }
            csv << report_row_csv(row);
            csv.flush(); // a crash loses at most one cell
            rows.push_back(std::move(row));
        }
    }
    run.write_manifest();
    return rows;
}

/// Accuracy-vs-epsilon curves for FGSM / Random+FGSM.
inline std::vector<ReportRow> sweep_epsilon(HarnessRun& run, const std::vector<double>& epsilons) {
    auto plans = model_plans_from(run.plan);
    auto attacks = attacks_from(run.plan);
    for (const auto& a : attacks)
        if (a.variant != AttackConfig::Variant::Fgsm &&
            a.variant != AttackConfig::Variant::RandomFgsm)
            throw ConfigError("sweep: attack must be fgsm or random-fgsm");
    for (std::size_t i = 1; i < epsilons.size(); ++i)
        if (epsilons[i] <= epsilons[i - 1]) throw ConfigError("sweep: epsilon grid must increase");

    const std::string craft_arch = run.plan.get("craft.model", "");
    const bool black_box = !craft_arch.empty();
    TrainedModel craft_model;
    if (black_box) {
        ModelPlan undefended;
        craft_model = run.ensure_model(craft_arch, undefended, run.train_config_for("craft"));
    }

    fs::path path = run.out_dir / "sweep.csv";
    std::ofstream csv(path);
    csv << "defense,attack,epsilon,box,accuracy\n";
    run.note_artifact(path);

    std::vector<ReportRow> rows;
    std::size_t cell = 0;
    for (std::size_t di = 0; di < plans.size(); ++di) {
        const ModelPlan& mp = plans[di];
        TrainedModel model =
            run.ensure_model(run.model_name, mp, run.train_config_for("defense." + std::to_string(di)));
        LabeledDataset eval_test = preprocessed_view(run.data.test, mp.defense);
        for (const auto& base_atk : attacks) {
            for (double eps : epsilons) {
                AttackConfig atk = base_atk;
                atk.epsilon = eps;
                if (atk.variant == AttackConfig::Variant::RandomFgsm)
                    atk.alpha = std::min(atk.alpha, eps);
                atk.seed = derive_seed(run.seed, 0x5EE9 + cell);
                ++cell;
                ReportRow row;
                row.experiment = "sweep";
                row.defense = mp.label;
                row.attack = atk.variant_name();
                row.epsilon = eps;
                row.box = black_box ? "black" : "white";
                if (eps == 0.0) {
                    row.accuracy_pct = 100.0 * accuracy(model, eval_test, run.eval_limit);
                    row.n_evaluated = std::min(run.eval_limit, eval_test.count());
                } else {
                    const TrainedModel& crafter = black_box ? craft_model : model;
                    const LabeledDataset& craft_set = black_box ? run.data.test : eval_test;
                    AdversarialBatch b = craft_batch(crafter, craft_set, atk, run.eval_limit);
                    row.accuracy_pct = 100.0 * eval_accuracy_on_batch(model, mp.defense, b);
                    row.n_evaluated = b.count();
                }
                char buf[160];
                std::snprintf(buf, sizeof buf, "%s,%s,%g,%s,%.2f\n", row.defense.c_str(),
                              row.attack.c_str(), eps, row.box.c_str(), row.accuracy_pct);
                csv << buf;
                csv.flush();
                rows.push_back(row);
            }
        }
    }
    run.write_manifest();
    return rows;
}

struct ArchToken {
    std::string arch;
    ActKind act = ActKind::Relu;
};

inline ArchToken parse_arch_token(const std::string& tok) {
    ArchToken t;
    auto plus = tok.find('+');
    t.arch = plus == std::string::npos ? tok : tok.substr(0, plus);
    if (plus != std::string::npos) {
        std::string act = tok.substr(plus + 1);
        if (act == "brelu")
            t.act = ActKind::Brelu;
        else if (act != "relu")
            throw ConfigError("bad architecture token '" + tok + "'");
    }
    if (!known_model_preset(t.arch)) throw ConfigError("unknown model preset '" + t.arch + "'");
    return t;
}

/// Source x target FGSM transfer table; the diagonal is white-box.
inline std::vector<ReportRow> transfer_matrix(HarnessRun& run,
                                              const std::vector<std::string>& arch_tokens,
                                              double epsilon) {
    if (arch_tokens.size() < 2) throw ConfigError("transfer: need at least 2 architectures");
    std::vector<ArchToken> archs;
    for (const auto& t : arch_tokens) archs.push_back(parse_arch_token(t));

    std::vector<TrainedModel> models;
    for (const auto& at : archs) {
        ModelPlan mp;
        mp.act = at.act;
        models.push_back(run.ensure_model(at.arch, mp, run.train_config_for("train")));
    }

    fs::path path = run.out_dir / "transfer.csv";
    std::ofstream csv(path);
    csv << "crafted_on,tested_on,epsilon,box,accuracy\n";
    run.note_artifact(path);

    std::vector<ReportRow> rows;
    for (std::size_t src = 0; src < archs.size(); ++src) {
        AttackConfig atk;
        atk.variant = AttackConfig::Variant::Fgsm;
        atk.epsilon = epsilon;
        atk.seed = derive_seed(run.seed, 0x7842 + src);
        AdversarialBatch batch = craft_batch(models[src], run.data.test, atk, run.eval_limit);
        for (std::size_t dst = 0; dst < archs.size(); ++dst) {
            ReportRow row;
            row.experiment = "transfer";
            row.defense = arch_tokens[dst]; // tested on
            row.attack = arch_tokens[src];  // crafted on
            row.epsilon = epsilon;
            row.box = src == dst ? "white" : "black";
            row.accuracy_pct = 100.0 * accuracy_on_batch(models[dst], batch);
            row.n_evaluated = batch.count();
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s,%s,%g,%s,%.2f\n", arch_tokens[src].c_str(),
                          arch_tokens[dst].c_str(), epsilon, row.box.c_str(), row.accuracy_pct);
            csv << buf;
            csv.flush();
            rows.push_back(row);
        }
    }
    run.write_manifest();
    return rows;
}

// --- toy-dataset contour study ------------------------------------------------

/// Mean absolute confidence difference between 4-adjacent lattice cells;
/// lower = smoother contours.
inline double grid_roughness(const std::vector<double>& conf, std::size_t res) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t y = 0; y < res; ++y)
        for (std::size_t x = 0; x < res; ++x) {
            if (x + 1 < res) {
                sum += std::abs(conf[y * res + x] - conf[y * res + x + 1]);
                ++n;
            }
            if (y + 1 < res) {
                sum += std::abs(conf[y * res + x] - conf[(y + 1) * res + x]);
                ++n;
            }
        }
    return sum / static_cast<double>(n);
}

struct ToyGrid {
    std::string augmentation;
    std::size_t resolution = 0;
    std::vector<int> predicted;   // res*res, row-major, y outer
    std::vector<double> confidence;
    fs::path csv_path;
};

/// The five augmentations of the toy study plus the unaugmented baseline.
inline std::vector<std::string> toy_augmentations() {
    return {"none", "fgsm-l2", "vat", "jsma", "uniform", "gaussian"};
}

inline AugmentedDataset toy_augment(const LabeledDataset& data, const std::string& kind,
                                    const TrainedModel& warm, std::uint64_t seed) {
    if (kind == "none") return as_augmented(data);
    if (kind == "gaussian") return gaussian_augment(data, 0.3, 10, seed);
    if (kind == "uniform") return uniform_augment(data, 0.3 * std::sqrt(3.0), 10, seed);
    if (kind == "vat") return vat_augment(warm, data, 0.3, 10.0, 1, seed);

    // attack-crafted artificial points, one per original, true labels kept
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

        AttackOutcome o;
        if (kind == "fgsm-l2") {
            o = fgsm(warm, x, y, 0.3, Norm::L2);
        } else if (kind == "jsma") {
            o = jsma(warm, x, y, 0.1, 1.0, 20);
        } else {
            throw ConfigError("unknown toy augmentation '" + kind + "'");
        }
        out.inputs.append(o.x_adv.data.data());
        out.soft_targets.append(target.data());
        out.labels.push_back(y);
        out.provenance.push_back(Provenance::Adversarial);
    }
    return out;
}

/// Trains toy-dense on each augmented set and emits one confidence grid CSV
/// per augmentation over a res x res lattice of [0,1]^2.
inline std::vector<ToyGrid> toy_contour(HarnessRun& run, std::size_t grid_resolution,
                                        const std::vector<std::string>& augmentations) {
    if (grid_resolution < 16) throw ConfigError("toy_contour: grid_resolution must be >= 16");
    if (run.data.train.sample_shape != std::vector<std::size_t>{2})
        throw ConfigError("toy_contour: needs a 2-d toy dataset (moons or circles)");

    TrainConfig tc = run.train_config_for("train");
    ModelPlan clean;
    TrainedModel warm = run.ensure_model("toy-dense", clean, tc);

    std::vector<ToyGrid> grids;
    for (const auto& kind : augmentations) {
        AugmentedDataset aug = toy_augment(run.data.train, kind, warm, derive_seed(run.seed, 0x709));
        NetworkSpec spec = model_preset("toy-dense", {2}, run.data.train.num_classes);
        TrainedModel model = train_soft(spec, aug.inputs, aug.soft_targets, tc, nullptr, kind);

        ToyGrid g;
        g.augmentation = kind;
        g.resolution = grid_resolution;
        g.predicted.resize(grid_resolution * grid_resolution);
        g.confidence.resize(grid_resolution * grid_resolution);
        g.csv_path = run.out_dir / ("toy_" + kind + ".csv");
        std::ofstream csv(g.csv_path);
        csv << "x,y,predicted,confidence\n";
        char buf[96];
        for (std::size_t yi = 0; yi < grid_resolution; ++yi) {
            for (std::size_t xi = 0; xi < grid_resolution; ++xi) {
                double x = (xi + 0.5) / static_cast<double>(grid_resolution);
                double y = (yi + 0.5) / static_cast<double>(grid_resolution);
                Tensor pt({2}, {x, y});
                auto probs = forward(model, pt).data;
                std::size_t cls = argmax(probs);
                g.predicted[yi * grid_resolution + xi] = static_cast<int>(cls);
                g.confidence[yi * grid_resolution + xi] = probs[cls];
                std::snprintf(buf, sizeof buf, "%.6f,%.6f,%zu,%.6f\n", x, y, cls, probs[cls]);
                csv << buf;
            }
        }
        run.note_artifact(g.csv_path);
        grids.push_back(std::move(g));
    }
    run.write_manifest();
    return grids;
}

// --- minimal-perturbation gallery ----------------------------------------------

struct GalleryResult {
    std::vector<std::string> defense_labels;
    std::vector<std::vector<double>> min_epsilons; // per defense, per digit
    std::vector<fs::path> image_files;
    fs::path csv_path;
};

/// Figure-style grid: a row of originals plus one row of minimal-FGSM
/// adversarials per defense, with a CSV of per-image minimal epsilons.
inline GalleryResult minimal_perturbation_gallery(HarnessRun& run, std::size_t n_digits) {
    if (run.data.test.sample_shape.size() != 3)
        throw ConfigError("gallery: dataset must be image-shaped");
    auto plans = model_plans_from(run.plan);
    n_digits = std::min(n_digits, run.data.test.count());

    GalleryResult res;
    res.csv_path = run.out_dir / "gallery.csv";
    std::ofstream csv(res.csv_path);
    csv << "defense,index,label,min_epsilon,success\n";
    run.note_artifact(res.csv_path);

    std::vector<Tensor> originals;
    for (std::size_t i = 0; i < n_digits; ++i) originals.push_back(run.data.test.tensor_at(i));
    fs::path orig_path = run.out_dir / "gallery_originals.pgm";
    save_image_grid(originals, n_digits, orig_path.string());
    run.note_artifact(orig_path);
    res.image_files.push_back(orig_path);

    std::vector<Tensor> all_rows = originals;
    for (std::size_t di = 0; di < plans.size(); ++di) {
        const ModelPlan& mp = plans[di];
        TrainedModel model =
            run.ensure_model(run.model_name, mp, run.train_config_for("defense." + std::to_string(di)));
        std::vector<Tensor> advs;
        std::vector<double> epsl;
        for (std::size_t i = 0; i < n_digits; ++i) {
            Tensor x = run.data.test.tensor_at(i);
            auto o = minimal_fgsm(model, x, run.data.test.labels[i], 0.01, 1.0, Norm::Linf);
            advs.push_back(o.x_adv);
            epsl.push_back(o.epsilon_used);
            char buf[96];
            std::snprintf(buf, sizeof buf, "%s,%zu,%d,%.2f,%d\n", mp.label.c_str(), i,
                          run.data.test.labels[i], o.epsilon_used, o.success ? 1 : 0);
            csv << buf;
        }
        std::string fname = "gallery_" + mp.label + ".pgm";
        for (char& c : fname)
            if (c == '+' || c == ' ') c = '_';
        fs::path row_path = run.out_dir / fname;
        save_image_grid(advs, n_digits, row_path.string());
        run.note_artifact(row_path);
        res.image_files.push_back(row_path);
        all_rows.insert(all_rows.end(), advs.begin(), advs.end());
        res.defense_labels.push_back(mp.label);
        res.min_epsilons.push_back(std::move(epsl));
    }
    fs::path all_path = run.out_dir / "gallery_all.pgm";
    save_image_grid(all_rows, n_digits, all_path.string());
    run.note_artifact(all_path);
    res.image_files.push_back(all_path);
    run.write_manifest();
    return res;
}

} // namespace advlab

#endif // ADVLAB_HARNESS_HPP
