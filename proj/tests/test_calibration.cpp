#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ef/calibration.hpp"
#include "ef/data.hpp"
#include "ef/rng.hpp"

using namespace ef;

namespace {

ModelSpec truth_spec() {
    ModelSpec spec;
    spec.kind = "idm";
    spec.values = {{"a_max", 1.4},  {"v_desired", 33.3}, {"beta", 4.0},
                   {"a_comf", 1.7}, {"s_jam", 2.0},      {"t_headway", 1.2}};
    return spec;
}

std::vector<TimeSeriesEvent> truth_events(int n, std::uint64_t seed, double duration = 16.0) {
    SynthConfig cfg;
    cfg.n_events = n;
    cfg.duration = duration;
    cfg.ground_truth = truth_spec();
    cfg.seed = seed;
    return synthesize_events(cfg);
}

TimeSeriesEvent flat_event(const std::string& id, std::size_t n, double lv, double fv, double gap) {
    TimeSeriesEvent ev;
    ev.event_id = id;
    ev.lv_speed.assign(n, lv);
    ev.fv_speed.assign(n, fv);
    ev.spacing.assign(n, gap);
    return ev;
}

}  // namespace

TEST_CASE("the generating model reproduces its own synthetic events") {
    const auto events = truth_events(3, 21);
    const auto model = make_model(truth_spec());
    for (const auto& ev : events) {
        const SimResult sim = simulate_model_on_event(*model, ev);
        CHECK_FALSE(sim.collided);
        REQUIRE(sim.spacing_sim.size() == ev.length());
        for (std::size_t i = 0; i < ev.length(); ++i) {
            CHECK(sim.spacing_sim[i] == doctest::Approx(ev.spacing[i]).epsilon(1e-6));
        }
    }
}

TEST_CASE("full braking behind an accelerating leader never collides") {
    TimeSeriesEvent ev = flat_event("accel", 400, 10.0, 20.0, 15.0);
    for (std::size_t i = 0; i < ev.length(); ++i) {
        ev.lv_speed[i] = std::min(30.0, 10.0 + 1.0 * static_cast<double>(i) * ev.dt);
    }
    const ConstAccModel brake(-4.0);
    const SimResult sim = simulate_model_on_event(brake, ev);
    CHECK_FALSE(sim.collided);
    // once the follower has stopped, spacing grows monotonically
    std::size_t stopped = 0;
    while (stopped < sim.speed_sim.size() && sim.speed_sim[stopped] > 0.0) ++stopped;
    REQUIRE(stopped < sim.speed_sim.size());
    for (std::size_t i = stopped + 1; i < sim.spacing_sim.size(); ++i) {
        CHECK(sim.spacing_sim[i] > sim.spacing_sim[i - 1]);
    }
}

TEST_CASE("full throttle behind a stopped leader collides") {
    const TimeSeriesEvent ev = flat_event("stopped", 400, 0.0, 10.0, 20.0);
    const ConstAccModel floor_it(4.0);
    const SimResult sim = simulate_model_on_event(floor_it, ev);
    CHECK(sim.collided);
    CHECK(sim.spacing_sim.size() < ev.length());
}

TEST_CASE("fitness is zero for perfect reproduction") {
    const auto events = truth_events(4, 22);
    const auto model = make_model(truth_spec());
    CHECK(fitness(*model, events, KinematicsConfig{}) < 1e-6);
}

TEST_CASE("fitness adds exactly one penalty per crashing event") {
    // Nine events that a zero-acceleration model reproduces exactly, plus one
    // that makes it crash on the first step.
    std::vector<TimeSeriesEvent> events;
    for (int i = 0; i < 9; ++i) {
        events.push_back(flat_event("ok" + std::to_string(i), 100, 20.0, 20.0, 30.0));
    }
    events.push_back(flat_event("crash", 100, 0.0, 5.0, 0.15));
    const ConstAccModel zero(0.0);
    const double f1 = fitness(zero, events, KinematicsConfig{}, 1.0);
    CHECK(f1 == doctest::Approx(1.0).epsilon(1e-12));
    const double f2 = fitness(zero, events, KinematicsConfig{}, 2.0);
    CHECK(f2 > f1);
    CHECK(f2 == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("fitness is invariant to event ordering") {
    auto events = truth_events(5, 23);
    const GippsModel model{GippsParams{}};
    const double a = fitness(model, events, KinematicsConfig{});
    std::reverse(events.begin(), events.end());
    CHECK(fitness(model, events, KinematicsConfig{}) == doctest::Approx(a).epsilon(1e-12));
}

TEST_CASE("point bounds collapse the search immediately") {
    const auto events = truth_events(2, 24);
    const auto truth = make_model(truth_spec());
    std::vector<ParamBound> bounds;
    const std::vector<double> genes{1.4, 33.3, 4.0, 1.7, 2.0, 1.2};
    const auto& names = param_bounds("idm");
    for (std::size_t i = 0; i < genes.size(); ++i) bounds.push_back({names[i].name, genes[i], genes[i]});
    GaConfig cfg;
    cfg.population = 4;
    cfg.max_generations = 1;
    const CalibrationResult r = run_ga("idm", bounds, events, cfg);
    REQUIRE(r.best_params.size() == genes.size());
    for (std::size_t i = 0; i < genes.size(); ++i) CHECK(r.best_params[i] == genes[i]);
    CHECK(r.best_fitness < 1e-6);
}

TEST_CASE("run_ga is deterministic under a seed") {
    const auto events = truth_events(2, 25);
    GaConfig cfg;
    cfg.population = 10;
    cfg.max_generations = 5;
    cfg.seed = 9;
    const CalibrationResult a = run_ga("idm", param_bounds("idm"), events, cfg);
    const CalibrationResult b = run_ga("idm", param_bounds("idm"), events, cfg);
    CHECK(a.best_fitness == b.best_fitness);
    REQUIRE(a.best_params.size() == b.best_params.size());
    for (std::size_t i = 0; i < a.best_params.size(); ++i) CHECK(a.best_params[i] == b.best_params[i]);
    CHECK(a.fitness_history == b.fitness_history);
}

TEST_CASE("best fitness never increases across generations") {
    const auto events = truth_events(2, 26);
    GaConfig cfg;
    cfg.population = 12;
    cfg.max_generations = 10;
    cfg.seed = 4;
    const CalibrationResult r = run_ga("gipps", param_bounds("gipps"), events, cfg);
    for (std::size_t g = 1; g < r.fitness_history.size(); ++g) {
        CHECK(r.fitness_history[g] <= r.fitness_history[g - 1] + 1e-15);
    }
    const auto& bounds = param_bounds("gipps");
    for (std::size_t i = 0; i < r.best_params.size(); ++i) {
        CHECK(r.best_params[i] >= bounds[i].lo);
        CHECK(r.best_params[i] <= bounds[i].hi);
    }
}

TEST_CASE("small-scale parameter recovery reaches a tight fit") {
    const auto train = truth_events(8, 27);
    GaConfig cfg;
    cfg.population = 40;
    cfg.max_generations = 40;
    cfg.stall_generations = 40;
    cfg.seed = 2;
    const CalibrationResult r = run_ga("idm", param_bounds("idm"), train, cfg);
    CHECK(r.crashes_at_best == 0);
    const auto held_out = truth_events(4, 28);
    const auto model = make_rule_model("idm", r.best_params);
    CHECK(fitness(*model, held_out, KinematicsConfig{}) < 0.05);
}
