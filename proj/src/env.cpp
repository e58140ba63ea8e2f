#include "ef/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ef {

RewardMode reward_mode_from_string(const std::string& s) {
    if (s == "speed") return RewardMode::speed;
    if (s == "spacing") return RewardMode::spacing;
    throw std::invalid_argument("unknown reward mode: " + s);
}

double discrepancy_reward(double sim, double obs, const RewardConfig& cfg) {
    const double denom = std::abs(obs);
    double rel = (denom > 0.0) ? std::abs(sim - obs) / denom : cfg.rel_err_ceiling;
    rel = std::clamp(rel, cfg.rel_err_floor, cfg.rel_err_ceiling);
    return -std::log(rel);
}

void Episode::reset(const TimeSeriesEvent& event) {
    if (event.length() < 2) throw std::invalid_argument("Episode::reset: event too short");
    event_ = &event;
    cursor_ = 0;
    reason_ = DoneReason::none;
    state_ = {event.spacing[0], event.fv_speed[0], event.lv_speed[0] - event.fv_speed[0]};
    ctx_ = ClipContext{};
    window_.fill(state_);
    sim_spacing_.assign(1, state_.spacing);
    sim_speed_.assign(1, state_.fv_speed);
}

StepResult Episode::step(double acc_cmd) {
    if (!event_) throw std::logic_error("Episode::step before reset");
    if (done()) throw std::logic_error("Episode::step on a finished episode");

    const std::size_t next = cursor_ + 1;
    auto [state, ctx] = step_jerk_constrained(state_, ctx_, acc_cmd, event_->lv_speed[next], kin_);
    state_ = state;
    ctx_ = ctx;
    cursor_ = next;
    window_.push(state_);

    StepResult r;
    if (collided(state_)) {
        reason_ = DoneReason::collision;
        r.reward = -reward_.collision_penalty;
        r.done = true;
        r.reason = reason_;
        return r;
    }
    sim_spacing_.push_back(state_.spacing);
    sim_speed_.push_back(state_.fv_speed);
    if (reward_.mode == RewardMode::speed) {
        r.reward = discrepancy_reward(state_.fv_speed, event_->fv_speed[next], reward_);
    } else {
        r.reward = discrepancy_reward(state_.spacing, event_->spacing[next], reward_);
    }
    if (next + 1 >= event_->length()) {
        reason_ = DoneReason::exhausted;
        r.done = true;
        r.reason = reason_;
    }
    return r;
}

}  // namespace ef
