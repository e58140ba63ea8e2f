#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ef/calibration.hpp"
#include "ef/data.hpp"
#include "ef/env.hpp"
#include "ef/kinematics.hpp"
#include "ef/rl.hpp"

namespace ef {

/// Everything the CLI needs, mirroring each module's config struct
/// field-for-field. Built from a preset, then overlaid by an optional JSON
/// file, then by explicit flags.
struct RunConfig {
    std::string preset = "desk";
    KinematicsConfig kinematics;
    RewardConfig reward;
    SynthConfig synth;
    GaConfig ga;
    DdqnConfig ddqn;
    PpoConfig ppo;
    DdpgConfig ddpg;
    RnnTrainConfig rnn;
};

/// Full-scale configuration: the published hyperparameter tables.
RunConfig preset_paper();

/// Desk-scale configuration: the same pipeline shrunk to minutes on a
/// laptop (smaller budgets and buffers, narrower recurrent cell).
RunConfig preset_desk();

RunConfig make_config(const std::string& preset);

/// Overlays a JSON config file (sections named after the structs above;
/// unknown keys are rejected).
void apply_config_file(RunConfig& cfg, const std::string& path);

/// Applies one seed to every stage's RNG.
void set_all_seeds(RunConfig& cfg, std::uint64_t seed);

}  // namespace ef
