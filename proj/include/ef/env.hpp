#pragma once

#include <string>

#include "ef/cf_models.hpp"
#include "ef/data.hpp"
#include "ef/kinematics.hpp"

namespace ef {

enum class RewardMode { speed, spacing };

RewardMode reward_mode_from_string(const std::string& s);

struct RewardConfig {
    RewardMode mode = RewardMode::speed;
    double rel_err_floor = 1e-4;
    double rel_err_ceiling = 10.0;
    double collision_penalty = 10.0;
};

enum class DoneReason { none, exhausted, collision };

struct StepResult {
    double reward = 0.0;
    bool done = false;
    DoneReason reason = DoneReason::none;
};

/// Replays one event's leader trajectory. The follower advances through the
/// jerk-constrained kinematics and each step is rewarded by the negative log
/// of the (clamped) relative discrepancy against the recorded behavior.
class Episode {
public:
    Episode(const KinematicsConfig& kin, const RewardConfig& reward)
        : kin_(kin), reward_(reward), window_(kHistorySteps) {}

    void reset(const TimeSeriesEvent& event);
    StepResult step(double acc_cmd);

    bool done() const { return reason_ != DoneReason::none; }
    DoneReason done_reason() const { return reason_; }
    const StateWindow& window() const { return window_; }
    const FollowState& state() const { return state_; }
    std::size_t cursor() const { return cursor_; }
    const TimeSeriesEvent& event() const { return *event_; }

    // Simulated series collected so far, index-aligned with the event
    // (index 0 is the observed initial sample). Steps past a collision are
    // not recorded.
    const std::vector<double>& sim_spacing() const { return sim_spacing_; }
    const std::vector<double>& sim_speed() const { return sim_speed_; }

private:
    KinematicsConfig kin_;
    RewardConfig reward_;
    const TimeSeriesEvent* event_ = nullptr;
    FollowState state_;
    ClipContext ctx_;
    StateWindow window_;
    std::size_t cursor_ = 0;
    DoneReason reason_ = DoneReason::none;
    std::vector<double> sim_spacing_;
    std::vector<double> sim_speed_;
};

/// Clamped Eq-style discrepancy reward: -ln of the relative error between
/// simulated and observed value, with the error clamped into
/// [rel_err_floor, rel_err_ceiling].
double discrepancy_reward(double sim, double obs, const RewardConfig& cfg);

}  // namespace ef
