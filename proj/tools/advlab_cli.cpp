// advlab command-line harness: train models, craft attacks, apply defenses
// and reproduce the experiment families as CSV/PGM artifacts.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "advlab/harness.hpp"

using namespace advlab;

namespace {

Plan plan_from_options(const std::string& plan_file, const std::vector<std::string>& sets,
                       std::uint64_t seed_override, bool seed_given) {
    Plan plan = plan_file.empty() ? Plan{} : Plan::load(plan_file);
    for (const auto& kv : sets) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        plan.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed_given) plan.set("run.seed", std::to_string(seed_override));
    return plan;
}

std::vector<double> parse_epsilons(const std::string& csv) {
    std::vector<double> out;
    std::string cur;
    for (char c : csv + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(std::stod(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (out.empty()) throw ConfigError("empty epsilon list");
    return out;
}

std::vector<std::string> split_csv(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : csv + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"advlab: adversarial-robustness laboratory"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string plan_file, out_dir;
    std::vector<std::string> sets;
    std::uint64_t seed = 1;
    bool seed_given = false;
    int threads = 0;
    app.add_option("--plan", plan_file, "plan file (flat key = value lines)");
    app.add_option("--out-dir", out_dir, "output directory (overrides run.out_dir)");
    app.add_option("--set", sets, "override a plan key, e.g. --set train.epochs=3");
    app.add_option("--seed", seed, "seed (overrides run.seed)")->each([&](std::string) {
        seed_given = true;
    });
    app.add_option("--threads", threads, "worker threads (default: hardware)");

    auto* cmd_train = app.add_subcommand("train", "train a (possibly defended) model");
    std::string train_out = "model.model";
    cmd_train->add_option("--model-out", train_out, "output model file");

    auto* cmd_attack = app.add_subcommand("attack", "craft an adversarial batch");
    std::string attack_model, attack_out = "batch";
    bool attack_images = false;
    cmd_attack->add_option("--model", attack_model, "trained model file")->required();
    cmd_attack->add_option("--batch-out", attack_out, "output directory");
    cmd_attack->add_flag("--images", attack_images, "also dump per-sample PGM images");

    auto* cmd_defend = app.add_subcommand("defend", "emit an augmented training set");
    std::string defend_out = "augmented";
    std::string defend_warm;
    cmd_defend->add_option("--dataset-out", defend_out, "output container stem");
    cmd_defend->add_option("--warm-model", defend_warm, "warm model for adv-train/vat");

    auto* cmd_eval = app.add_subcommand("evaluate", "accuracy of a model on clean or batch data");
    std::string eval_model, eval_batch;
    cmd_eval->add_option("--model", eval_model, "trained model file")->required();
    cmd_eval->add_option("--batch", eval_batch, "adversarial batch directory (blob + manifest)");

    auto* cmd_matrix = app.add_subcommand("matrix", "defense x attack report table");
    auto* cmd_sweep = app.add_subcommand("sweep", "accuracy vs epsilon curves");
    std::string sweep_eps = "0,0.05,0.1,0.2,0.3";
    cmd_sweep->add_option("--epsilons", sweep_eps, "comma-separated increasing grid");

    auto* cmd_transfer = app.add_subcommand("transfer", "architecture transfer table");
    std::string transfer_archs = "desk-cnn+relu,desk-cnn+brelu,desk-resnet+relu,desk-resnet+brelu";
    double transfer_eps = 0.1;
    cmd_transfer->add_option("--archs", transfer_archs, "comma-separated architecture tokens");
    cmd_transfer->add_option("--epsilon", transfer_eps, "FGSM budget");

    auto* cmd_toy = app.add_subcommand("toy", "toy-dataset confidence contour grids");
    std::size_t toy_res = 64;
    std::string toy_augs;
    cmd_toy->add_option("--resolution", toy_res, "lattice resolution (>= 16)");
    cmd_toy->add_option("--augmentations", toy_augs,
                        "subset of none,fgsm-l2,vat,jsma,uniform,gaussian");

    auto* cmd_gallery = app.add_subcommand("gallery", "minimal-perturbation image grids");
    std::size_t gallery_n = 10;
    cmd_gallery->add_option("--digits", gallery_n, "number of test images");

    CLI11_PARSE(app, argc, argv);

    try {
        if (threads > 0) set_thread_count(threads);
        Plan plan = plan_from_options(plan_file, sets, seed, seed_given);

        if (cmd_train->parsed()) {
            HarnessRun run = HarnessRun::from_plan(plan, out_dir);
            auto plans = model_plans_from(run.plan);
            TrainedModel m = run.ensure_model(run.model_name, plans[0],
                                              run.train_config_for("defense.0"));
            fs::path dest = run.out_dir / train_out;
            save_model(m, dest.string());
            std::printf("model: %s\n", dest.string().c_str());
            std::printf("clean accuracy: %.2f%%\n",
                        100.0 * accuracy(m, preprocessed_view(run.data.test, plans[0].defense),
                                         run.eval_limit));
        } else if (cmd_attack->parsed()) {
            HarnessRun run = HarnessRun::from_plan(plan, out_dir);
            TrainedModel m = load_model(attack_model);
            AttackConfig atk = attacks_from(run.plan)[0];
            atk.seed = run.seed;
            AdversarialBatch b = craft_batch(m, run.data.test, atk, run.eval_limit);
            fs::path dest = run.out_dir / attack_out;
            save_batch(dest.string(), b, attack_images);
            std::size_t flips = 0;
            for (char s : b.success) flips += s;
            std::printf("batch: %s (%zu samples, %zu flips)\n", dest.string().c_str(), b.count(),
                        flips);
        } else if (cmd_defend->parsed()) {
            HarnessRun run = HarnessRun::from_plan(plan, out_dir);
            DefenseConfig def = defense_from_plan(run.plan, "defense.0");
            def.seed = derive_seed(run.seed, 0xDEF);
            TrainedModel warm;
            const TrainedModel* warm_ptr = nullptr;
            if (!defend_warm.empty()) {
                warm = load_model(defend_warm);
                warm_ptr = &warm;
            }
            AugmentedDataset aug = apply_defense(run.data.train, def, warm_ptr);
            fs::path stem = run.out_dir / defend_out;
            save_augmented(stem.string(), aug);
            std::printf("augmented: %s.{csv,f64} (%zu samples)\n", stem.string().c_str(),
                        aug.count());
        } else if (cmd_eval->parsed()) {
            HarnessRun run = HarnessRun::from_plan(plan, out_dir);
            TrainedModel m = load_model(eval_model);
            if (eval_batch.empty()) {
                std::printf("clean accuracy: %.2f%%\n",
                            100.0 * accuracy(m, run.data.test, run.eval_limit));
            } else {
                std::vector<std::size_t> shape;
                AdversarialBatch b;
                b.adversarials = load_tensor_blob(eval_batch + "/adversarials.f64", &shape);
                b.originals = load_tensor_blob(eval_batch + "/originals.f64");
                b.sample_shape = shape;
                std::ifstream mf(eval_batch + "/manifest.csv");
                if (!mf) throw FormatError("cannot open " + eval_batch + "/manifest.csv");
                std::string line;
                std::getline(mf, line); // header
                while (std::getline(mf, line)) {
                    auto c1 = line.find(',');
                    auto c2 = line.find(',', c1 + 1);
                    b.original_labels.push_back(std::stoi(line.substr(c1 + 1, c2 - c1 - 1)));
                }
                std::printf("batch accuracy: %.2f%%\n", 100.0 * accuracy_on_batch(m, b));
            }
        } else if (cmd_matrix->parsed()) {
            HarnessRun run = HarnessRun::from_plan(plan, out_dir);
            auto rows = run_matrix(run);
            std::printf("%zu rows -> %s\n", rows.size(),
                        (run.out_dir / "report.csv").string().c_str());
        } else if (cmd_sweep->parsed()) {
            HarnessRun run = HarnessRun::from_plan(plan, out_dir);
            auto rows = sweep_epsilon(run, parse_epsilons(sweep_eps));
            std::printf("%zu rows -> %s\n", rows.size(),
                        (run.out_dir / "sweep.csv").string().c_str());
        } else if (cmd_transfer->parsed()) {
            HarnessRun run = HarnessRun::from_plan(plan, out_dir);
            auto rows = transfer_matrix(run, split_csv(transfer_archs), transfer_eps);
            std::printf("%zu rows -> %s\n", rows.size(),
                        (run.out_dir / "transfer.csv").string().c_str());
        } else if (cmd_toy->parsed()) {
            HarnessRun run = HarnessRun::from_plan(plan, out_dir);
            auto augs = toy_augs.empty() ? toy_augmentations() : split_csv(toy_augs);
            auto grids = toy_contour(run, toy_res, augs);
            for (const auto& g : grids)
                std::printf("%-10s roughness %.6f -> %s\n", g.augmentation.c_str(),
                            grid_roughness(g.confidence, g.resolution), g.csv_path.string().c_str());
        } else if (cmd_gallery->parsed()) {
            HarnessRun run = HarnessRun::from_plan(plan, out_dir);
            auto res = minimal_perturbation_gallery(run, gallery_n);
            for (std::size_t d = 0; d < res.defense_labels.size(); ++d) {
                double mean = 0.0;
                for (double e : res.min_epsilons[d]) mean += e;
                mean /= static_cast<double>(res.min_epsilons[d].size());
                std::printf("%-16s mean minimal epsilon %.3f\n", res.defense_labels[d].c_str(),
                            mean);
            }
        }
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const InputError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime failure: %s\n", e.what());
        return 3;
    }
}
