#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ef/cf_models.hpp"
#include "ef/kinematics.hpp"

namespace ef {

inline constexpr double kSampleDt = 0.04;  // s, 25 Hz

/// One car-following episode sampled at a fixed 0.04 s interval. The three
/// series share a common length; spacing is the net gap.
struct TimeSeriesEvent {
    std::string event_id;
    double dt = kSampleDt;
    std::vector<double> lv_speed;  // m/s
    std::vector<double> fv_speed;  // m/s
    std::vector<double> spacing;   // m

    std::size_t length() const { return spacing.size(); }
    double duration() const { return static_cast<double>(length()) * dt; }
};

struct Dataset {
    std::vector<TimeSeriesEvent> train;
    std::vector<TimeSeriesEvent> validation;
    std::vector<TimeSeriesEvent> test;
    std::uint64_t split_seed = 0;
};

enum class LeaderProfile { piecewise_accel, sinusoidal, brake_pulse, mixed, constant };

LeaderProfile leader_profile_from_string(const std::string& s);
std::string to_string(LeaderProfile p);

struct SynthConfig {
    int n_events = 60;
    double duration = 20.0;  // s, must be >= 15
    LeaderProfile profile = LeaderProfile::mixed;
    ModelSpec ground_truth;      // follower behavior used to roll trajectories
    double noise_std = 0.0;      // m/s^2 Gaussian on the commanded acceleration
    std::uint64_t seed = 1;

    double base_speed_min = 16.0;  // m/s
    double base_speed_max = 27.0;  // m/s
    double pulse_floor = 8.0;      // m/s, brake_pulse minimum leader speed
    double init_gap_jitter = 0.25; // initial spacing factor drawn from [1, 1+jitter]
};

struct CsvSchema {
    std::string event_id = "event_id";
    std::string t = "t";
    std::string lv_speed = "lv_speed";
    std::string fv_speed = "fv_speed";
    std::string spacing = "spacing";
};

struct LoadResult {
    std::vector<TimeSeriesEvent> events;
    std::vector<std::string> diagnostics;  // one line per rejected event
};

/// Parses the event CSV (header `event_id,t,lv_speed,fv_speed,spacing`).
/// Rows are grouped by event_id and ordered by t; events with a non-numeric
/// cell, a sample interval deviating from 0.04 s by more than 1e-6, a
/// negative speed, or a non-positive spacing are rejected with a diagnostic.
/// A missing column fails the whole file.
LoadResult load_events(const std::string& path, const CsvSchema& schema = {});

void write_events(const std::string& path, const std::vector<TimeSeriesEvent>& events,
                  const CsvSchema& schema = {});

/// Keeps events that last at least `min_duration` seconds and never hold
/// fv_speed below `low_speed_threshold` for longer than `max_low_speed_run`
/// seconds. Idempotent.
std::vector<TimeSeriesEvent> filter_events(const std::vector<TimeSeriesEvent>& events,
                                           double min_duration = 15.0,
                                           double low_speed_threshold = 1.0,
                                           double max_low_speed_run = 5.0);

/// Deterministic shuffled split. Bucket sizes are floor(ratio*N) with the
/// remainder going to train, then validation.
Dataset split(const std::vector<TimeSeriesEvent>& events,
              double train_ratio = 0.7, double validation_ratio = 0.15,
              double test_ratio = 0.15, std::uint64_t seed = 0);

struct DerivedFields {
    std::vector<double> relative_speed;  // m/s, leader minus follower
    std::vector<double> fv_accel;        // m/s^2, central differences
};

DerivedFields derive_fields(const TimeSeriesEvent& event);

/// Rolls the configured ground-truth model through the jerk-constrained
/// kinematics behind a generated leader profile. Initial spacing starts at
/// the model's equilibrium gap (jittered); a rollout that collides is
/// retried with a wider gap, and the generator throws after 10 retries.
std::vector<TimeSeriesEvent> synthesize_events(const SynthConfig& config,
                                               const KinematicsConfig& kin = {});

}  // namespace ef
