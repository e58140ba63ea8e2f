#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ef/ensemble.hpp"
#include "ef/rng.hpp"

using namespace ef;

namespace {

StateWindow window_at(double spacing, double speed, double rel) {
    StateWindow w(kHistorySteps);
    w.fill({spacing, speed, rel});
    return w;
}

// A head that ignores its input and emits fixed values.
MlpNet fixed_output_net(const std::vector<double>& values) {
    MlpNet net;
    LinearLayer l;
    l.w = Mat::Zero(static_cast<Eigen::Index>(values.size()), 75);
    l.b = Vec(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) l.b[static_cast<Eigen::Index>(i)] = values[i];
    net.layers.push_back(std::move(l));
    return net;
}

std::vector<std::shared_ptr<const CfModel>> const_roster(const std::vector<double>& accs) {
    std::vector<std::shared_ptr<const CfModel>> roster;
    for (double a : accs) roster.push_back(std::make_shared<ConstAccModel>(a));
    return roster;
}

}  // namespace

TEST_CASE("select_model takes the argmax with low-index ties") {
    const EnsemblePolicy p(EnsembleMode::discrete, fixed_output_net({0.0, 1.0, 0.0}), Normalizer{},
                           const_roster({1.0, 2.0, 3.0}));
    CHECK(p.select_model(window_at(30, 20, 0)) == 1);

    const EnsemblePolicy tie(EnsembleMode::discrete, fixed_output_net({4.0, 2.0, 4.0}), Normalizer{},
                             const_roster({1.0, 2.0, 3.0}));
    CHECK(tie.select_model(window_at(30, 20, 0)) == 0);

    const EnsemblePolicy single(EnsembleMode::discrete, fixed_output_net({0.7}), Normalizer{},
                                const_roster({1.3}));
    CHECK(single.select_model(window_at(30, 20, 0)) == 0);
    CHECK(single.acc(window_at(30, 20, 0)) == doctest::Approx(1.3));
}

TEST_CASE("argmax choice is invariant to a constant Q shift") {
    const auto w = window_at(25, 18, 0.2);
    const EnsemblePolicy a(EnsembleMode::discrete, fixed_output_net({0.3, -0.2, 0.9}), Normalizer{},
                           const_roster({0, 0, 0}));
    const EnsemblePolicy b(EnsembleMode::discrete, fixed_output_net({100.3, 99.8, 100.9}), Normalizer{},
                           const_roster({0, 0, 0}));
    CHECK(a.select_model(w) == b.select_model(w));
}

TEST_CASE("blend_weights: equal logits give equal weights") {
    const EnsemblePolicy p(EnsembleMode::convex, fixed_output_net({0.5, 0.5, 0.5, 0.5}), Normalizer{},
                           const_roster({1, 2, 3, 4}));
    const Vec w = p.blend_weights(window_at(30, 20, 0));
    for (int i = 0; i < w.size(); ++i) CHECK(w[i] == doctest::Approx(0.25));
    CHECK(std::abs(w.sum() - 1.0) < 1e-12);
}

TEST_CASE("blend_weights: a dominant logit takes nearly all the mass") {
    const EnsemblePolicy p(EnsembleMode::convex, fixed_output_net({20.0, 0.0, 0.0}), Normalizer{},
                           const_roster({1, 2, 3}));
    const Vec w = p.blend_weights(window_at(30, 20, 0));
    CHECK(w[0] > 0.999);
    CHECK(p.acc(window_at(30, 20, 0)) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("blend_weights for a single model is one") {
    const EnsemblePolicy p(EnsembleMode::convex, fixed_output_net({0.0}), Normalizer{},
                           const_roster({2.5}));
    const Vec w = p.blend_weights(window_at(30, 20, 0));
    REQUIRE(w.size() == 1);
    CHECK(w[0] == doctest::Approx(1.0));
}

TEST_CASE("convex action is a symmetric blend") {
    const EnsemblePolicy p(EnsembleMode::convex, fixed_output_net({1.0, 1.0}), Normalizer{},
                           const_roster({2.0, -2.0}));
    CHECK(p.acc(window_at(30, 20, 0)) == doctest::Approx(0.0));
}

TEST_CASE("convex action stays within the ingredients' hull") {
    Rng rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> logits(4), accs(4);
        for (int i = 0; i < 4; ++i) {
            logits[static_cast<std::size_t>(i)] = rng.uniform(-3.0, 3.0);
            accs[static_cast<std::size_t>(i)] = rng.uniform(-4.0, 4.0);
        }
        const EnsemblePolicy p(EnsembleMode::convex, fixed_output_net(logits), Normalizer{},
                               const_roster(accs));
        const auto w = window_at(rng.uniform(5, 60), rng.uniform(0, 30), rng.uniform(-3, 3));
        const double a = p.acc(w);
        CHECK(a >= *std::min_element(accs.begin(), accs.end()) - 1e-12);
        CHECK(a <= *std::max_element(accs.begin(), accs.end()) + 1e-12);
    }
}

TEST_CASE("policies evaluate deterministically") {
    Rng rng(42);
    MlpNet net = make_mlp({75, 16, 3}, OutputAct::linear, rng);
    const EnsemblePolicy p(EnsembleMode::convex, net, Normalizer{}, const_roster({1, -1, 0.5}));
    const auto w = window_at(22, 17, -0.3);
    CHECK(p.acc(w) == p.acc(w));
    CHECK((p.blend_weights(w) - p.blend_weights(w)).norm() == 0.0);
}

TEST_CASE("mode mismatches are rejected") {
    const EnsemblePolicy d(EnsembleMode::discrete, fixed_output_net({0, 1}), Normalizer{},
                           const_roster({1, 2}));
    CHECK_THROWS(d.blend_weights(window_at(30, 20, 0)));
    const EnsemblePolicy c(EnsembleMode::convex, fixed_output_net({0, 1}), Normalizer{},
                           const_roster({1, 2}));
    CHECK_THROWS(c.select_model(window_at(30, 20, 0)));
    CHECK_THROWS(EnsemblePolicy(EnsembleMode::discrete, fixed_output_net({0, 1}), Normalizer{},
                                const_roster({1, 2, 3})));
}

TEST_CASE("policy bundles round-trip through the manifest") {
    namespace fs = std::filesystem;
    const std::string dir = (fs::temp_directory_path() / "ef_bundle_test").string();
    fs::create_directories(dir);

    save_params_file(dir + "/idm.txt", "idm", params_to_vector(IdmParams{}));
    save_params_file(dir + "/const.txt", "const", {0.5});
    Rng rng(43);
    MlpNet high = make_mlp({75, 8, 2}, OutputAct::linear, rng);
    Normalizer norm;
    norm.mean << 30.0, 20.0, 0.0;
    norm.std_dev << 10.0, 5.0, 1.0;
    save_high_level_net(dir + "/high.tns", high, norm, "ef_ddqn");

    PolicyBundle bundle;
    bundle.mode = EnsembleMode::discrete;
    bundle.high_level_path = "high.tns";
    bundle.roster = {{"idm", "idm.txt"}, {"zero", "const.txt"}};
    save_policy_bundle(dir + "/bundle.json", bundle);

    const auto policy = load_policy_bundle(dir + "/bundle.json");
    CHECK(policy->mode() == EnsembleMode::discrete);
    CHECK(policy->roster_size() == 2);
    const EnsemblePolicy direct(EnsembleMode::discrete, high, norm,
                                {std::make_shared<IdmModel>(IdmParams{}),
                                 std::make_shared<ConstAccModel>(0.5)});
    const auto w = window_at(28, 19, 0.4);
    CHECK(policy->acc(w) == doctest::Approx(direct.acc(w)));

    const PolicyBundle back = read_policy_bundle(dir + "/bundle.json");
    CHECK(back.version == 1);
    CHECK(back.roster.size() == 2);
    CHECK(back.roster[0].first == "idm");
}
