#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ef/cf_models.hpp"
#include "ef/data.hpp"
#include "ef/env.hpp"

namespace ef {

struct GaConfig {
    int population = 100;
    int max_generations = 100;
    int stall_generations = 100;
    double mutation_prob = 0.2;       // per-gene
    int tournament_size = 3;
    double crossover_prob = 0.9;
    double mutation_sigma_frac = 0.1; // of the bound width
    double crash_penalty = 1.0;       // per crashing event
    int elitism = 1;
    std::uint64_t seed = 1;
};

struct CalibrationResult {
    std::string model_kind;
    std::vector<double> best_params;
    double best_fitness = 0.0;
    std::vector<double> fitness_history;  // best per generation
    int crashes_at_best = 0;
    bool warning_all_crashed = false;
};

struct SimResult {
    // Index-aligned with the event; index 0 is the observed initial sample.
    // Shorter than the event when a collision cut the rollout (the collision
    // sample itself is excluded).
    std::vector<double> spacing_sim;
    std::vector<double> speed_sim;
    bool collided = false;
};

/// Closed-loop rollout of a model over one event: the recorded leader speed
/// drives the jerk-constrained kinematics with the model's commands.
SimResult simulate_model_on_event(const CfModel& model, const TimeSeriesEvent& event,
                                  const KinematicsConfig& kin = {});

/// Spacing RMSPE pooled over all simulated steps of all events plus
/// crash_penalty per collided event. Collided events contribute their
/// pre-collision steps.
double fitness(const CfModel& model, const std::vector<TimeSeriesEvent>& events,
               const KinematicsConfig& kin, double crash_penalty = 1.0);

CalibrationResult run_ga(const std::string& model_kind, const std::vector<ParamBound>& bounds,
                         const std::vector<TimeSeriesEvent>& events, const GaConfig& config,
                         const KinematicsConfig& kin = {});

}  // namespace ef
