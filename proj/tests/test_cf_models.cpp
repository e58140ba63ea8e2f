#include <doctest.h>

#include <cmath>

#include "ef/cf_models.hpp"
#include "ef/rng.hpp"

using namespace ef;

namespace {

StateWindow window_at(double spacing, double speed, double rel) {
    StateWindow w(kHistorySteps);
    w.fill({spacing, speed, rel});
    return w;
}

// Independent scalar evaluation of the follower acceleration forms, written
// out directly so the implementations are checked against a second route.
double idm_oracle(const IdmParams& p, double s, double v, double dv) {
    const double s_star =
        p.s_jam + std::max(0.0, v * p.t_headway + v * (-dv) / (2.0 * std::sqrt(p.a_max * p.a_comf)));
    const double acc =
        p.a_max * (1.0 - std::pow(v / p.v_desired, p.beta) - (s_star / s) * (s_star / s));
    return std::clamp(acc, -4.0, 4.0);
}

double fvd_oracle(const FvdParams& p, double s, double v, double dv) {
    double v_opt;
    if (s >= p.s_cut) {
        v_opt = p.v_desired;
    } else {
        v_opt = p.v_desired * (std::tanh(s / p.b_len - p.beta_form) + std::tanh(p.beta_form)) /
                (1.0 + std::tanh(p.beta_form));
    }
    return std::clamp(p.alpha * (v_opt - v) + p.lambda * dv, -4.0, 4.0);
}

double gipps_speed_oracle(const GippsParams& p, double s, double v, double vl) {
    const double v_acc =
        v + 2.5 * p.a_des * p.tau * (1.0 - v / p.v_desired) * std::sqrt(0.025 + v / p.v_desired);
    const double gap = s - (p.lv_eff_len - 5.0);
    const double disc = p.b_des * p.b_des * p.tau * p.tau +
                        p.b_des * (2.0 * gap - v * p.tau + vl * vl / p.b_hat);
    if (disc < 0.0) return v - p.b_des * p.tau;  // full braking for one horizon
    const double v_brk = -p.b_des * p.tau + std::sqrt(disc);
    return std::max(0.0, std::min(v_acc, v_brk));
}

}  // namespace

TEST_CASE("state window ordering and flattening") {
    StateWindow w(3);
    w.fill({1.0, 10.0, 0.0});
    w.push({2.0, 11.0, 0.1});
    w.push({3.0, 12.0, 0.2});
    CHECK(w.at(0).spacing == 1.0);
    CHECK(w.at(2).spacing == 3.0);
    CHECK(w.newest().fv_speed == 12.0);
    Vec f;
    w.flatten(f);
    REQUIRE(f.size() == 9);
    CHECK(f[0] == 1.0);  // oldest spacing
    CHECK(f[6] == 3.0);  // newest spacing
    CHECK(f[8] == 0.2);  // newest rel speed
    w.push({4.0, 13.0, 0.3});
    CHECK(w.at(0).spacing == 2.0);  // oldest rolled off
}

TEST_CASE("idm free-flow and standstill fixed points") {
    IdmParams p;  // table estimates
    CHECK(idm_acc(p, window_at(1e9, p.v_desired, 0.0)) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(idm_acc(p, window_at(p.s_jam, 0.0, 0.0)) == doctest::Approx(0.0));
}

TEST_CASE("idm matches the scalar oracle on table-estimate parameters") {
    IdmParams p;
    p.a_max = 0.36;
    p.v_desired = 32.91 / 3.6;  // listed in km/h
    p.beta = 2.47;
    p.a_comf = 0.55;
    p.s_jam = 2.55;
    p.t_headway = 0.60;
    const double got = idm_acc(p, window_at(10.0, 5.0, 0.0));
    CHECK(got == doctest::Approx(idm_oracle(p, 10.0, 5.0, 0.0)).epsilon(1e-12));
    // frozen value from the oracle run
    CHECK(got == doctest::Approx(0.16800).epsilon(1e-4));
}

TEST_CASE("idm rejects non-positive spacing") {
    IdmParams p;
    CHECK_THROWS(idm_acc(p, window_at(0.0, 5.0, 0.0)));
}

TEST_CASE("gipps acceleration branch when the leader is far") {
    GippsParams p;
    const double v = 0.3 * p.v_desired;
    const double got = gipps_acc(p, window_at(500.0, v, 2.0));
    const double v_next = gipps_speed_oracle(p, 500.0, v, v + 2.0);
    CHECK(got == doctest::Approx(std::clamp((v_next - v) / p.tau, -4.0, 4.0)).epsilon(1e-12));
    CHECK(got > 0.0);
}

TEST_CASE("gipps acceleration vanishes at the desired speed") {
    GippsParams p;
    CHECK(gipps_acc(p, window_at(500.0, p.v_desired, 0.0)) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("gipps brakes fully when no safe speed exists") {
    GippsParams p;  // b_des 2.30, lv_eff_len 6.96 -> margin 1.96
    const double s = (p.lv_eff_len - 5.0) + 0.5;
    const double v = 5.0;
    // leader stopped, follower closing: discriminant is negative
    const double got = gipps_acc(p, window_at(s, v, -v));
    CHECK(got == doctest::Approx(-p.b_des));
}

TEST_CASE("gipps never exceeds its own braking bound short of the clamp") {
    Rng rng(17);
    for (int i = 0; i < 2000; ++i) {
        GippsParams p;
        p.a_des = rng.uniform(0.1, 5.0);
        p.b_des = rng.uniform(0.1, 5.0);
        p.lv_eff_len = rng.uniform(5.0, 15.0);
        p.b_hat = rng.uniform(0.1, 5.0);
        p.v_desired = rng.uniform(1.0, 150.0) / 3.6;
        p.tau = rng.uniform(0.3, 3.0);
        const double spacing = rng.uniform(0.05, 120.0);
        const double v = rng.uniform(0.0, 40.0);
        const double dv = rng.uniform(-10.0, 10.0);
        const double acc = gipps_acc(p, window_at(spacing, v, dv));
        CHECK(acc >= -std::min(p.b_des, 4.0) - 1e-12);
        CHECK(acc <= 4.0 + 1e-12);
    }
}

TEST_CASE("fvd saturates at the desired speed past the cutoff") {
    FvdParams p;
    CHECK(fvd_acc(p, window_at(p.s_cut + 1.0, p.v_desired, 0.0)) == doctest::Approx(0.0));
}

TEST_CASE("fvd optimal velocity vanishes at zero gap") {
    FvdParams p;
    CHECK(fvd_optimal_velocity(p, 1e-12) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("fvd matches the scalar oracle on table-estimate parameters") {
    FvdParams p;
    p.alpha = 0.22;
    p.lambda = 2.37;
    p.v_desired = 24.0 / 3.6;
    p.b_len = 2.95;
    p.beta_form = 4.48;
    p.s_cut = 56.35;
    CHECK(fvd_acc(p, window_at(20.0, 5.0, -2.0)) ==
          doctest::Approx(fvd_oracle(p, 20.0, 5.0, -2.0)).epsilon(1e-12));
    // the strong approach term drives this case into the clamp
    CHECK(fvd_acc(p, window_at(20.0, 5.0, -2.0)) == doctest::Approx(-4.0));
    // and a case inside the range
    CHECK(fvd_acc(p, window_at(20.0, 5.0, -0.5)) ==
          doctest::Approx(fvd_oracle(p, 20.0, 5.0, -0.5)).epsilon(1e-12));
}

TEST_CASE("every model output stays within the acceleration range") {
    Rng rng(23);
    IdmParams idm;
    GippsParams gipps;
    FvdParams fvd;
    for (int i = 0; i < 3000; ++i) {
        const double s = rng.uniform(0.05, 200.0);
        const double v = rng.uniform(0.0, 45.0);
        const double dv = rng.uniform(-15.0, 15.0);
        const StateWindow w = window_at(s, v, dv);
        for (double acc : {idm_acc(idm, w), gipps_acc(gipps, w), fvd_acc(fvd, w)}) {
            CHECK(acc >= -4.0);
            CHECK(acc <= 4.0);
        }
    }
}

TEST_CASE("idm and fvd respond continuously to small input changes") {
    IdmParams idm;
    FvdParams fvd;
    const double eps = 1e-6;
    Rng rng(29);
    for (int i = 0; i < 200; ++i) {
        const double s = rng.uniform(2.0, 50.0);
        const double v = rng.uniform(0.5, 30.0);
        const double dv = rng.uniform(-5.0, 5.0);
        if (std::abs(s - fvd.s_cut) < 1.0) continue;  // stay off the saturation joint
        const double base_i = idm_acc(idm, window_at(s, v, dv));
        const double base_f = fvd_acc(fvd, window_at(s, v, dv));
        for (const auto& d :
             {std::array{eps, 0.0, 0.0}, std::array{0.0, eps, 0.0}, std::array{0.0, 0.0, eps}}) {
            CHECK(std::abs(idm_acc(idm, window_at(s + d[0], v + d[1], dv + d[2])) - base_i) < 1e-3);
            CHECK(std::abs(fvd_acc(fvd, window_at(s + d[0], v + d[1], dv + d[2])) - base_f) < 1e-3);
        }
    }
}

TEST_CASE("net policy: zero weights command zero acceleration") {
    Rng rng(31);
    NetPolicyParams p;
    p.arch = NetPolicyArch::windowed_mlp;
    p.mlp = make_mlp({75, 8, 1}, OutputAct::tanh, rng);
    for (auto& l : p.mlp.layers) {
        l.w.setZero();
        l.b.setZero();
    }
    CHECK(net_policy_acc(p, window_at(30.0, 20.0, 0.0)) == 0.0);
}

TEST_CASE("net policy saturates at the acceleration bound") {
    Rng rng(32);
    NetPolicyParams p;
    p.arch = NetPolicyArch::windowed_mlp;
    p.mlp = make_mlp({75, 4, 1}, OutputAct::tanh, rng);
    for (auto& l : p.mlp.layers) l.w.setZero();
    p.mlp.layers.back().b[0] = 50.0;  // deep tanh saturation
    CHECK(net_policy_acc(p, window_at(30.0, 20.0, 0.0)) == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("net policy calls are deterministic") {
    Rng rng(33);
    NetPolicyParams p;
    p.arch = NetPolicyArch::recurrent;
    p.lstm = make_lstm(3, 8, 1, OutputAct::tanh, rng);
    const StateWindow w = window_at(25.0, 18.0, -0.4);
    CHECK(net_policy_acc(p, w) == net_policy_acc(p, w));
}

TEST_CASE("parameter files round-trip models") {
    const std::string path = "/tmp/ef_test_idm_params.txt";
    IdmParams p;
    p.a_max = 1.25;
    p.v_desired = 31.0;
    save_params_file(path, "idm", params_to_vector(p));
    const auto model = load_model_file(path);
    CHECK(model->kind() == "idm");
    const StateWindow w = window_at(22.0, 14.0, 0.5);
    CHECK(model->acc(w) == doctest::Approx(idm_acc(p, w)));
}

TEST_CASE("equilibrium gap holds the commanded acceleration at zero") {
    IdmModel model{IdmParams{1.4, 33.3, 4.0, 1.7, 2.0, 1.2}};
    const double v = 22.0;
    const double gap = equilibrium_gap(model, v);
    CHECK(std::abs(model.acc(window_at(gap, v, 0.0))) < 1e-7);
}
