#include <doctest.h>

#include <cmath>

#include "ef/data.hpp"
#include "ef/env.hpp"

using namespace ef;

namespace {

TimeSeriesEvent flat_event(std::size_t n, double lv, double fv, double gap) {
    TimeSeriesEvent ev;
    ev.event_id = "ev";
    ev.lv_speed.assign(n, lv);
    ev.fv_speed.assign(n, fv);
    ev.spacing.assign(n, gap);
    return ev;
}

ModelSpec default_idm_truth() {
    ModelSpec spec;
    spec.kind = "idm";
    spec.values = {{"a_max", 1.4},  {"v_desired", 33.3}, {"beta", 4.0},
                   {"a_comf", 1.7}, {"s_jam", 2.0},      {"t_headway", 1.2}};
    return spec;
}

}  // namespace

TEST_CASE("reset fills the window with the first sample") {
    Episode ep(KinematicsConfig{}, RewardConfig{});
    const auto ev = flat_event(100, 21.0, 20.0, 30.0);
    ep.reset(ev);
    CHECK_FALSE(ep.done());
    CHECK(ep.done_reason() == DoneReason::none);
    CHECK(ep.window().newest().spacing == 30.0);
    CHECK(ep.window().at(0).spacing == 30.0);
    CHECK(ep.window().newest().rel_speed == doctest::Approx(1.0));

    Episode ep2(KinematicsConfig{}, RewardConfig{});
    ep2.reset(ev);
    for (std::size_t i = 0; i < kHistorySteps; ++i) {
        CHECK(ep.window().at(i).spacing == ep2.window().at(i).spacing);
    }
}

TEST_CASE("exact speed tracking earns the clamp-capped reward") {
    Episode ep(KinematicsConfig{}, RewardConfig{});
    ep.reset(flat_event(50, 20.0, 20.0, 30.0));
    const StepResult r = ep.step(0.0);  // reproduces the constant observed speed
    CHECK(r.reward == doctest::Approx(-std::log(1e-4)).epsilon(1e-12));
    CHECK(r.reward == doctest::Approx(9.2103).epsilon(1e-4));
}

TEST_CASE("doubled speed gives unit relative error and zero reward") {
    TimeSeriesEvent ev = flat_event(3, 20.0, 10.0, 30.0);
    // first simulated speed is 10.16 under full throttle; observe half of it
    ev.fv_speed[1] = 5.08;
    Episode ep(KinematicsConfig{}, RewardConfig{});
    ep.reset(ev);
    const StepResult r = ep.step(4.0);
    CHECK(r.reward == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("spacing mode rewards spacing fidelity") {
    RewardConfig rc;
    rc.mode = RewardMode::spacing;
    Episode ep(KinematicsConfig{}, rc);
    ep.reset(flat_event(50, 20.0, 20.0, 30.0));
    const StepResult r = ep.step(0.0);
    CHECK(r.reward == doctest::Approx(-std::log(1e-4)).epsilon(1e-12));
}

TEST_CASE("collision terminates with the penalty reward") {
    RewardConfig rc;
    rc.collision_penalty = 10.0;
    Episode ep(KinematicsConfig{}, rc);
    ep.reset(flat_event(200, 0.0, 5.0, 0.3));  // leader parked, follower closing
    StepResult r{};
    while (!ep.done()) r = ep.step(4.0);
    CHECK(ep.done_reason() == DoneReason::collision);
    CHECK(r.reward == doctest::Approx(-10.0));
    CHECK_THROWS(ep.step(0.0));
}

TEST_CASE("rewards stay within the clamp bounds") {
    RewardConfig rc;
    Episode ep(KinematicsConfig{}, rc);
    ep.reset(flat_event(300, 22.0, 20.0, 25.0));
    while (!ep.done()) {
        const StepResult r = ep.step(ep.cursor() % 2 ? 4.0 : -4.0);
        if (ep.done_reason() == DoneReason::collision) break;
        CHECK(r.reward <= -std::log(rc.rel_err_floor) + 1e-12);
        CHECK(r.reward >= -std::log(rc.rel_err_ceiling) - 1e-12);
    }
}

TEST_CASE("replaying the recorded accelerations maximizes every reward") {
    SynthConfig cfg;
    cfg.n_events = 2;
    cfg.duration = 15.0;
    cfg.ground_truth = default_idm_truth();
    cfg.seed = 101;
    const auto events = synthesize_events(cfg);
    for (const auto& ev : events) {
        Episode ep(KinematicsConfig{}, RewardConfig{});
        ep.reset(ev);
        std::size_t steps = 0;
        while (!ep.done()) {
            const std::size_t t = ep.cursor();
            const double acc = (ev.fv_speed[t + 1] - ev.fv_speed[t]) / ev.dt;
            const StepResult r = ep.step(acc);
            CHECK(r.reward == doctest::Approx(-std::log(1e-4)).epsilon(1e-12));
            ++steps;
        }
        CHECK(ep.done_reason() == DoneReason::exhausted);
        CHECK(steps == ev.length() - 1);
    }
}

TEST_CASE("discrepancy reward clamps blow-ups from a zero observation") {
    RewardConfig rc;
    CHECK(discrepancy_reward(3.0, 0.0, rc) == doctest::Approx(-std::log(rc.rel_err_ceiling)));
    CHECK(discrepancy_reward(25.0, 20.0, rc) == doctest::Approx(-std::log(0.25)));
}
