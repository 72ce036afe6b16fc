#ifndef ADVLAB_PLAN_HPP
#define ADVLAB_PLAN_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "advlab/attacks.hpp"
#include "advlab/defenses.hpp"
#include "advlab/errors.hpp"

namespace advlab {

/// Flat `section.key = value` experiment description. No nesting; lines
/// starting with # are comments.
struct Plan {
    std::map<std::string, std::string> kv;

    static Plan parse_text(const std::string& text) {
        Plan p;
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            auto trim = [](std::string s) {
                auto b = s.find_first_not_of(" \t\r");
                auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
            };
            std::string t = trim(line);
            if (t.empty()) continue;
            auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError("plan line " + std::to_string(lineno) + ": expected key = value");
            std::string key = trim(t.substr(0, eq));
            std::string val = trim(t.substr(eq + 1));
            if (key.empty()) throw ConfigError("plan line " + std::to_string(lineno) + ": empty key");
            p.kv[key] = val;
        }
        return p;
    }

    static Plan load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot open plan file: " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        return parse_text(ss.str());
    }

    bool has(const std::string& key) const { return kv.count(key) > 0; }

    std::string get(const std::string& key, const std::string& def = "") const {
        auto it = kv.find(key);
        return it == kv.end() ? def : it->second;
    }

    double get_num(const std::string& key, double def) const {
        auto it = kv.find(key);
        if (it == kv.end()) return def;
        try {
            return std::stod(it->second);
        } catch (...) {
            throw ConfigError("plan key '" + key + "': bad number '" + it->second + "'");
        }
    }

    std::size_t get_size(const std::string& key, std::size_t def) const {
        double v = get_num(key, static_cast<double>(def));
        if (v < 0) throw ConfigError("plan key '" + key + "': must be non-negative");
        return static_cast<std::size_t>(v);
    }

    void set(const std::string& key, const std::string& val) { kv[key] = val; }

    /// Canonical text: sorted key = value lines (std::map keeps them sorted).
    std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
        return out;
    }

    std::uint64_t hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
        for (char c : canonical()) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    /// Indices N present as `prefix.N.*` keys, in increasing order.
    std::vector<std::size_t> indexed(const std::string& prefix) const {
        std::vector<std::size_t> ids;
        for (const auto& [k, v] : kv) {
            if (k.rfind(prefix + ".", 0) != 0) continue;
            std::string rest = k.substr(prefix.size() + 1);
            auto dot = rest.find('.');
            if (dot == std::string::npos) continue;
            try {
                std::size_t id = std::stoul(rest.substr(0, dot));
                if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
            } catch (...) {
                throw ConfigError("plan key '" + k + "': bad index");
            }
        }
        std::sort(ids.begin(), ids.end());
        return ids;
    }
};

inline Norm parse_norm(const std::string& s) {
    if (s == "linf" || s == "Linf" || s == "") return Norm::Linf;
    if (s == "l2" || s == "L2") return Norm::L2;
    throw ConfigError("unknown norm '" + s + "'");
}

inline AttackConfig::Variant parse_attack_variant(const std::string& s) {
    if (s == "fgsm") return AttackConfig::Variant::Fgsm;
    if (s == "minimal-fgsm") return AttackConfig::Variant::MinimalFgsm;
    if (s == "random-fgsm") return AttackConfig::Variant::RandomFgsm;
    if (s == "jsma") return AttackConfig::Variant::Jsma;
    if (s == "deepfool") return AttackConfig::Variant::DeepFool;
    if (s == "cw-l2") return AttackConfig::Variant::CwL2;
    throw ConfigError("unknown attack variant '" + s + "'");
}

inline DefenseConfig::Variant parse_defense_variant(const std::string& s) {
    if (s == "none") return DefenseConfig::Variant::None;
    if (s == "gda") return DefenseConfig::Variant::Gda;
    if (s == "uniform") return DefenseConfig::Variant::UniformAug;
    if (s == "label-smooth") return DefenseConfig::Variant::LabelSmooth;
    if (s == "adv-train") return DefenseConfig::Variant::AdvTrain;
    if (s == "vat") return DefenseConfig::Variant::Vat;
    if (s == "feature-squeeze") return DefenseConfig::Variant::FeatureSqueeze;
    throw ConfigError("unknown defense variant '" + s + "'");
}

inline AttackConfig attack_from_plan(const Plan& p, const std::string& prefix) {
    AttackConfig a;
    a.variant = parse_attack_variant(p.get(prefix + ".variant", "fgsm"));
    a.epsilon = p.get_num(prefix + ".epsilon", a.epsilon);
    a.norm = parse_norm(p.get(prefix + ".norm", "linf"));
    a.alpha = p.get_num(prefix + ".alpha", a.alpha);
    a.theta = p.get_num(prefix + ".theta", a.theta);
    a.gamma = p.get_num(prefix + ".gamma", a.gamma);
    a.max_iter = p.get_size(prefix + ".max_iter", a.max_iter);
    a.kappa = p.get_num(prefix + ".kappa", a.kappa);
    a.epsilon_step = p.get_num(prefix + ".epsilon_step", a.epsilon_step);
    a.overshoot = p.get_num(prefix + ".overshoot", a.overshoot);
    a.cw_lr = p.get_num(prefix + ".cw_lr", a.cw_lr);
    a.cw_c_steps = p.get_size(prefix + ".cw_c_steps", a.cw_c_steps);
    a.cw_c0 = p.get_num(prefix + ".cw_c0", a.cw_c0);
    if (a.variant == AttackConfig::Variant::MinimalFgsm && !p.has(prefix + ".epsilon"))
        a.epsilon = 1.0; // grid cap default
    a.validate();
    return a;
}

inline DefenseConfig defense_from_plan(const Plan& p, const std::string& prefix) {
    DefenseConfig d;
    d.variant = parse_defense_variant(p.get(prefix + ".variant", "none"));
    d.sigma = p.get_num(prefix + ".sigma", d.sigma);
    d.n_samples = p.get_size(prefix + ".n_samples", d.n_samples);
    d.smooth_weight = p.get_num(prefix + ".smooth_weight", d.smooth_weight);
    d.mix_alpha = p.get_num(prefix + ".mix_alpha", d.mix_alpha);
    d.at_epsilon = p.get_num(prefix + ".at_epsilon", d.at_epsilon);
    d.vat_epsilon = p.get_num(prefix + ".vat_epsilon", d.vat_epsilon);
    d.vat_xi = p.get_num(prefix + ".vat_xi", d.vat_xi);
    d.vat_power_iters = p.get_size(prefix + ".vat_power_iters", d.vat_power_iters);
    d.uniform_radius = p.get_num(prefix + ".uniform_radius", d.uniform_radius);
    d.bit_depth = static_cast<int>(p.get_num(prefix + ".bit_depth", d.bit_depth));
    d.filter_size = p.get_size(prefix + ".filter_size", d.filter_size);
    return d;
}

} // namespace advlab

#endif // ADVLAB_PLAN_HPP
