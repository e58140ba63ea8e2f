#include "ef/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ef {

FollowState step_conventional(const FollowState& state, double acc, double vl_next,
                              const KinematicsConfig& cfg) {
    if (!std::isfinite(acc) || !std::isfinite(vl_next)) {
        throw std::invalid_argument("step_conventional: non-finite input");
    }
    FollowState next;
    next.fv_speed = std::max(0.0, state.fv_speed + acc * cfg.dt);
    next.rel_speed = vl_next - next.fv_speed;
    next.spacing = state.spacing + 0.5 * (state.rel_speed + next.rel_speed) * cfg.dt;
    return next;
}

std::pair<double, ClipContext> clip_jerk(double acc_cmd, const ClipContext& ctx,
                                         const KinematicsConfig& cfg) {
    if (!std::isfinite(acc_cmd)) throw std::invalid_argument("clip_jerk: non-finite command");
    ClipContext next;
    next.initialized = true;
    if (!ctx.initialized) {
        // First step of an episode: command passes through unclipped.
        next.prev_acc_clip = acc_cmd;
        return {acc_cmd, next};
    }
    const double jerk = (acc_cmd - ctx.prev_acc_clip) / cfg.dt;
    double acc_clip;
    if (jerk >= cfg.jerk_min && jerk <= cfg.jerk_max) {
        acc_clip = acc_cmd;  // clip inactive: keep the command bit-exact
    } else {
        const double clipped = std::clamp(jerk, cfg.jerk_min, cfg.jerk_max);
        acc_clip = ctx.prev_acc_clip + clipped * cfg.dt;
    }
    next.prev_acc_clip = acc_clip;
    return {acc_clip, next};
}

std::pair<FollowState, ClipContext> step_jerk_constrained(const FollowState& state,
                                                          const ClipContext& ctx,
                                                          double acc_cmd, double vl_next,
                                                          const KinematicsConfig& cfg) {
    if (!std::isfinite(acc_cmd)) {
        throw std::invalid_argument("step_jerk_constrained: non-finite command");
    }
    const double clamped = std::clamp(acc_cmd, cfg.acc_min, cfg.acc_max);
    auto [acc_clip, next_ctx] = clip_jerk(clamped, ctx, cfg);
    return {step_conventional(state, acc_clip, vl_next, cfg), next_ctx};
}

}  // namespace ef
