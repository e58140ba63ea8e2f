#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ef/cf_models.hpp"
#include "ef/neural.hpp"

namespace ef {

enum class EnsembleMode { discrete, convex };

EnsembleMode ensemble_mode_from_string(const std::string& s);
std::string to_string(EnsembleMode m);

/// A trained high-level coordinator over a fixed, frozen roster of low-level
/// models. In discrete mode the network emits Q-values and exactly one model
/// acts; in convex mode softmaxed mean logits weight all of them.
class EnsemblePolicy : public CfModel {
public:
    EnsemblePolicy(EnsembleMode mode, MlpNet high, Normalizer norm,
                   std::vector<std::shared_ptr<const CfModel>> roster);

    /// Index of the acting model (0-based; ties go to the lowest index).
    int select_model(const StateWindow& w) const;

    /// Simplex weights over the roster: each >= 0, summing to 1.
    Vec blend_weights(const StateWindow& w) const;

    double acc(const StateWindow& w) const override;
    std::string kind() const override {
        return mode_ == EnsembleMode::discrete ? "ef_ddqn" : "ef_ppo";
    }

    EnsembleMode mode() const { return mode_; }
    std::size_t roster_size() const { return roster_.size(); }
    const CfModel& roster_model(std::size_t i) const { return *roster_[i]; }
    const MlpNet& high_level() const { return high_; }
    const Normalizer& normalizer() const { return norm_; }

private:
    EnsembleMode mode_;
    MlpNet high_;
    Normalizer norm_;
    std::vector<std::shared_ptr<const CfModel>> roster_;
};

/// Versioned bundle manifest: mode, roster entries (name + artifact path),
/// and the high-level weight file. Paths are stored relative to the
/// manifest's directory.
struct PolicyBundle {
    int version = 1;
    EnsembleMode mode = EnsembleMode::discrete;
    std::vector<std::pair<std::string, std::string>> roster;  // name -> path
    std::string high_level_path;
};

void save_policy_bundle(const std::string& manifest_path, const PolicyBundle& bundle);
PolicyBundle read_policy_bundle(const std::string& manifest_path);
std::unique_ptr<EnsemblePolicy> load_policy_bundle(const std::string& manifest_path);

void save_high_level_net(const std::string& path, const MlpNet& net, const Normalizer& norm,
                         const std::string& kind);

}  // namespace ef
