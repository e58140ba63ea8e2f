#include "ef/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include <json.hpp>

#include "ef/csv.hpp"

namespace ef {

EnsembleMode ensemble_mode_from_string(const std::string& s) {
    if (s == "discrete") return EnsembleMode::discrete;
    if (s == "convex") return EnsembleMode::convex;
    throw std::invalid_argument("unknown ensemble mode: " + s);
}

std::string to_string(EnsembleMode m) {
    return m == EnsembleMode::discrete ? "discrete" : "convex";
}

EnsemblePolicy::EnsemblePolicy(EnsembleMode mode, MlpNet high, Normalizer norm,
                               std::vector<std::shared_ptr<const CfModel>> roster)
    : mode_(mode), high_(std::move(high)), norm_(std::move(norm)), roster_(std::move(roster)) {
    if (roster_.empty()) throw std::invalid_argument("EnsemblePolicy: empty roster");
    if (high_.out_dim() != static_cast<int>(roster_.size())) {
        throw std::invalid_argument("EnsemblePolicy: head width does not match roster size");
    }
}

int EnsemblePolicy::select_model(const StateWindow& w) const {
    if (mode_ != EnsembleMode::discrete) throw std::logic_error("select_model: policy is not discrete");
    const Vec q = mlp_forward1(high_, normalized_window(norm_, w));
    if (!q.allFinite()) throw std::runtime_error("select_model: non-finite Q values");
    int best = 0;
    for (int i = 1; i < q.size(); ++i) {
        if (q[i] > q[best]) best = i;  // strict: ties keep the lowest index
    }
    return best;
}

Vec EnsemblePolicy::blend_weights(const StateWindow& w) const {
    if (mode_ != EnsembleMode::convex) throw std::logic_error("blend_weights: policy is not convex");
    const Vec logits = mlp_forward1(high_, normalized_window(norm_, w));
    if (!logits.allFinite()) throw std::runtime_error("blend_weights: non-finite logits");
    const double m = logits.maxCoeff();
    Vec e = (logits.array() - m).exp();
    return e / e.sum();
}

double EnsemblePolicy::acc(const StateWindow& w) const {
    if (mode_ == EnsembleMode::discrete) {
        return roster_[static_cast<std::size_t>(select_model(w))]->acc(w);
    }
    const Vec weights = blend_weights(w);
    double out = 0.0;
    for (std::size_t i = 0; i < roster_.size(); ++i) {
        out += weights[static_cast<Eigen::Index>(i)] * roster_[i]->acc(w);
    }
    // Each ingredient is already range-limited, so the convex combination is.
    return out;
}

void save_high_level_net(const std::string& path, const MlpNet& net, const Normalizer& norm,
                         const std::string& kind) {
    TensorFile tf;
    tf.meta.emplace_back("kind", kind);
    pack_mlp(tf, net);
    pack_normalizer(tf, norm);
    save_tensor_file(path, tf);
}

void save_policy_bundle(const std::string& manifest_path, const PolicyBundle& bundle) {
    nlohmann::json j;
    j["version"] = bundle.version;
    j["mode"] = to_string(bundle.mode);
    j["high_level"] = bundle.high_level_path;
    nlohmann::json roster = nlohmann::json::array();
    for (const auto& [name, path] : bundle.roster) {
        roster.push_back({{"name", name}, {"path", path}});
    }
    j["roster"] = roster;
    write_text_file(manifest_path, j.dump(2) + "\n");
}

PolicyBundle read_policy_bundle(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open bundle manifest: " + manifest_path);
    nlohmann::json j;
    in >> j;
    PolicyBundle b;
    b.version = j.at("version").get<int>();
    if (b.version != 1) throw std::runtime_error("unsupported bundle version");
    b.mode = ensemble_mode_from_string(j.at("mode").get<std::string>());
    b.high_level_path = j.at("high_level").get<std::string>();
    for (const auto& entry : j.at("roster")) {
        b.roster.emplace_back(entry.at("name").get<std::string>(), entry.at("path").get<std::string>());
    }
    return b;
}

std::unique_ptr<EnsemblePolicy> load_policy_bundle(const std::string& manifest_path) {
    const PolicyBundle b = read_policy_bundle(manifest_path);
    const auto dir = std::filesystem::path(manifest_path).parent_path();
    const auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (dir / fp).string();
    };
    std::vector<std::shared_ptr<const CfModel>> roster;
    for (const auto& [name, path] : b.roster) {
        (void)name;
        roster.push_back(load_model_file(resolve(path)));
    }
    const TensorFile tf = load_tensor_file(resolve(b.high_level_path));
    MlpNet high = unpack_mlp(tf);
    Normalizer norm = unpack_normalizer(tf);
    return std::make_unique<EnsemblePolicy>(b.mode, std::move(high), std::move(norm), std::move(roster));
}

}  // namespace ef
