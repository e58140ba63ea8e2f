#pragma once

#include <utility>

namespace ef {

/// Instantaneous longitudinal state of the follower relative to its leader.
/// `spacing` is the net gap (leader rear to follower front); spacing <= 0
/// marks a collision and stepping must stop.
struct FollowState {
    double spacing = 0.0;    // m
    double fv_speed = 0.0;   // m/s, clamped at 0 (no reversing)
    double rel_speed = 0.0;  // m/s, leader speed minus follower speed
};

/// Carries the previously applied (jerk-clipped) acceleration between steps.
/// On the first step of an episode the commanded acceleration passes through
/// unclipped.
struct ClipContext {
    double prev_acc_clip = 0.0;  // m/s^2
    bool initialized = false;
};

struct KinematicsConfig {
    double dt = 0.04;        // s
    double acc_min = -4.0;   // m/s^2
    double acc_max = 4.0;    // m/s^2
    double jerk_min = -10.0; // m/s^3
    double jerk_max = 10.0;  // m/s^3
};

/// Advances one step with the given acceleration applied as-is:
///   v' = max(0, v + acc*dt)
///   dv' = vl_next - v'
///   s' = s + (dv + dv')/2 * dt
/// Throws on non-finite inputs.
FollowState step_conventional(const FollowState& state, double acc, double vl_next,
                              const KinematicsConfig& cfg);

/// Applies the jerk constraint to a commanded acceleration. The command must
/// already lie in [acc_min, acc_max]. Returns the applied acceleration and
/// the updated context.
std::pair<double, ClipContext> clip_jerk(double acc_cmd, const ClipContext& ctx,
                                         const KinematicsConfig& cfg);

/// One step of the jerk-constrained model: clamp the command into the
/// acceleration range, jerk-clip it against the previous applied value, then
/// advance the conventional kinematics with the result.
std::pair<FollowState, ClipContext> step_jerk_constrained(const FollowState& state,
                                                          const ClipContext& ctx,
                                                          double acc_cmd, double vl_next,
                                                          const KinematicsConfig& cfg);

inline bool collided(const FollowState& s) { return s.spacing <= 0.0; }

}  // namespace ef
