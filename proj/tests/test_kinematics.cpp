#include <doctest.h>

#include <cmath>

#include "ef/kinematics.hpp"
#include "ef/rng.hpp"

using namespace ef;

TEST_CASE("step_conventional at equilibrium is a fixed point") {
    KinematicsConfig cfg;
    const FollowState s{30.0, 20.0, 0.0};
    const FollowState n = step_conventional(s, 0.0, 20.0, cfg);
    CHECK(n.spacing == doctest::Approx(30.0));
    CHECK(n.fv_speed == doctest::Approx(20.0));
    CHECK(n.rel_speed == doctest::Approx(0.0));
}

TEST_CASE("step_conventional trapezoidal spacing update") {
    KinematicsConfig cfg;
    const FollowState s{30.0, 20.0, 1.0};
    const FollowState n = step_conventional(s, 0.0, 21.0, cfg);
    // spacing gains (1 + 1)/2 * 0.04
    CHECK(n.spacing == doctest::Approx(30.04).epsilon(1e-12));
    CHECK(n.rel_speed == doctest::Approx(1.0));
}

TEST_CASE("step_conventional clamps speed at zero") {
    KinematicsConfig cfg;
    const FollowState s{30.0, 0.0, 0.0};
    const FollowState n = step_conventional(s, -1.0, 0.0, cfg);
    CHECK(n.fv_speed == 0.0);
    CHECK(n.spacing == doctest::Approx(30.0));
}

TEST_CASE("step_conventional rejects non-finite input") {
    KinematicsConfig cfg;
    const FollowState s{30.0, 20.0, 0.0};
    CHECK_THROWS(step_conventional(s, std::nan(""), 20.0, cfg));
    CHECK_THROWS(step_conventional(s, 1.0, std::numeric_limits<double>::infinity(), cfg));
}

TEST_CASE("clip_jerk limits the acceleration change") {
    KinematicsConfig cfg;
    ClipContext ctx{0.0, true};
    auto [acc, next] = clip_jerk(4.0, ctx, cfg);
    // jerk 100 -> clipped to 10 -> 0 + 10*0.04
    CHECK(acc == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(next.prev_acc_clip == doctest::Approx(0.4));
}

TEST_CASE("clip_jerk passes small changes through exactly") {
    KinematicsConfig cfg;
    ClipContext ctx{1.0, true};
    auto [acc, next] = clip_jerk(1.2, ctx, cfg);
    CHECK(acc == 1.2);  // jerk 5, inside bounds
    CHECK(next.prev_acc_clip == 1.2);
}

TEST_CASE("clip_jerk first step passes the command through") {
    KinematicsConfig cfg;
    ClipContext ctx;
    auto [acc, next] = clip_jerk(-2.0, ctx, cfg);
    CHECK(acc == -2.0);
    CHECK(next.initialized);
}

TEST_CASE("step_jerk_constrained clamps out-of-range commands first") {
    KinematicsConfig cfg;
    FollowState s{30.0, 20.0, 0.0};
    ClipContext ctx{0.0, true};
    auto [next, nctx] = step_jerk_constrained(s, ctx, 8.0, 20.0, cfg);
    // clamp to 4, jerk-clip to 0.4, speed gains 0.016
    CHECK(nctx.prev_acc_clip == doctest::Approx(0.4));
    CHECK(next.fv_speed == doctest::Approx(20.016).epsilon(1e-12));
}

TEST_CASE("jerk bound and range closure over random command sequences") {
    KinematicsConfig cfg;
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        FollowState s{rng.uniform(10.0, 60.0), rng.uniform(0.0, 30.0), rng.uniform(-3.0, 3.0)};
        ClipContext ctx;
        double prev = 0.0;
        bool first = true;
        for (int t = 0; t < 400; ++t) {
            const double cmd = rng.uniform(-12.0, 12.0);  // intentionally out of range
            const double vl = std::max(0.0, s.fv_speed + s.rel_speed + rng.uniform(-0.5, 0.5));
            auto [next, nctx] = step_jerk_constrained(s, ctx, cmd, vl, cfg);
            const double applied = nctx.prev_acc_clip;
            CHECK(std::abs(applied) <= 4.0 + 1e-12);
            if (!first) {
                CHECK(std::abs(applied - prev) <= cfg.jerk_max * cfg.dt + 1e-12);
            }
            prev = applied;
            first = false;
            s = next;
            ctx = nctx;
            if (collided(s)) break;
        }
    }
}

TEST_CASE("jerk-constrained equals conventional when commands change slowly") {
    KinematicsConfig cfg;
    Rng rng(3);
    FollowState a{40.0, 22.0, 0.5};
    FollowState b = a;
    ClipContext ctx;
    double cmd = 0.0;
    for (int t = 0; t < 500; ++t) {
        // keep |cmd - prev| <= jerk_max * dt
        cmd += rng.uniform(-cfg.jerk_max * cfg.dt, cfg.jerk_max * cfg.dt);
        cmd = std::clamp(cmd, -4.0, 4.0);
        const double vl = 22.0 + std::sin(0.01 * t);
        auto [na, nctx] = step_jerk_constrained(a, ctx, cmd, vl, cfg);
        const FollowState nb = step_conventional(b, cmd, vl, cfg);
        a = na;
        ctx = nctx;
        b = nb;
        CHECK(a.spacing == doctest::Approx(b.spacing).epsilon(1e-12));
        CHECK(a.fv_speed == doctest::Approx(b.fv_speed).epsilon(1e-12));
    }
}
