#include <doctest.h>

#include <cmath>

#include "ef/neural.hpp"

using namespace ef;

namespace {

// Central finite differences over every parameter, compared against the
// analytic gradients under a scalar loss L = sum(out .* w_loss).
template <typename Net, typename Forward, typename Backward>
double max_grad_rel_error(Net& net, Forward fwd, Backward bwd, const Mat& w_loss) {
    const Mat out = fwd();
    const auto analytic = bwd((w_loss));
    auto params = param_views(net);
    const auto grads = grad_views(analytic);
    REQUIRE(params.size() == grads.size());

    double worst = 0.0;
    const double h = 1e-5;
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (Eigen::Index i = 0; i < params[p].size(); ++i) {
            const double saved = params[p][i];
            params[p][i] = saved + h;
            const double up = (fwd().array() * w_loss.array()).sum();
            params[p][i] = saved - h;
            const double dn = (fwd().array() * w_loss.array()).sum();
            params[p][i] = saved;
            const double numeric = (up - dn) / (2.0 * h);
            const double a = grads[p][i];
            const double rel = std::abs(a - numeric) / std::max(1.0, std::max(std::abs(a), std::abs(numeric)));
            worst = std::max(worst, rel);
        }
    }
    (void)out;
    return worst;
}

}  // namespace

TEST_CASE("mlp forward: zero net gives zero output") {
    Rng rng(1);
    MlpNet net = make_mlp({4, 8, 2}, OutputAct::linear, rng);
    for (auto& l : net.layers) {
        l.w.setZero();
        l.b.setZero();
    }
    const Vec out = mlp_forward1(net, Vec::Ones(4));
    CHECK(out.norm() == 0.0);
}

TEST_CASE("mlp forward is deterministic") {
    Rng rng(2);
    MlpNet net = make_mlp({5, 16, 3}, OutputAct::tanh, rng);
    Vec x(5);
    x << 0.3, -1.0, 2.0, 0.0, 0.7;
    const Vec a = mlp_forward1(net, x);
    const Vec b = mlp_forward1(net, x);
    CHECK((a - b).norm() == 0.0);
}

TEST_CASE("mlp gradient matches finite differences") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        MlpNet net = make_mlp({6, 12, 8, 3}, seed % 2 ? OutputAct::tanh : OutputAct::linear, rng);
        Mat x(2, 6);
        for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
        Mat w_loss(2, 3);
        for (int i = 0; i < w_loss.size(); ++i) w_loss.data()[i] = rng.normal();

        MlpCache cache;
        const auto fwd = [&]() { return mlp_forward(net, x, &cache); };
        const auto bwd = [&](const Mat& d) {
            mlp_forward(net, x, &cache);
            return mlp_backward(net, cache, d);
        };
        CHECK(max_grad_rel_error(net, fwd, bwd, w_loss) < 1e-4);
    }
}

TEST_CASE("mlp zero upstream gradient gives zero gradients") {
    Rng rng(5);
    MlpNet net = make_mlp({4, 6, 2}, OutputAct::linear, rng);
    Mat x = Mat::Random(3, 4);
    MlpCache cache;
    mlp_forward(net, x, &cache);
    const MlpGrads g = mlp_backward(net, cache, Mat::Zero(3, 2));
    for (const auto& l : g.layers) {
        CHECK(l.w.norm() == 0.0);
        CHECK(l.b.norm() == 0.0);
    }
}

TEST_CASE("linear net with squared loss reproduces the residual form") {
    // Single linear layer, L = (w x - y)^2: dL/dw = 2 (w x - y) x^T.
    Rng rng(6);
    MlpNet net = make_mlp({3, 1}, OutputAct::linear, rng);
    Vec x(3);
    x << 1.0, -2.0, 0.5;
    const double y = 0.7;
    MlpCache cache;
    const double out = mlp_forward(net, x.transpose(), &cache)(0, 0);
    Mat d(1, 1);
    d(0, 0) = 2.0 * (out - y);
    const MlpGrads g = mlp_backward(net, cache, d);
    const Vec expected = 2.0 * (out - y) * x;
    CHECK((g.layers[0].w.transpose() - expected).norm() < 1e-12);
}

TEST_CASE("lstm forward: zero cell outputs the head bias") {
    Rng rng(3);
    LstmNet net = make_lstm(3, 8, 1, OutputAct::linear, rng);
    net.wx.setZero();
    net.wh.setZero();
    net.b.setZero();
    net.head.w.setZero();
    net.head.b[0] = 0.25;
    std::vector<Mat> xs(25, Mat::Random(2, 3));
    const Mat out = lstm_forward(net, xs);
    CHECK(out(0, 0) == doctest::Approx(0.25));
    CHECK(out(1, 0) == doctest::Approx(0.25));
}

TEST_CASE("lstm gradient matches finite differences on a width-8 cell") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        Rng rng(100 + seed);
        LstmNet net = make_lstm(3, 8, 1, seed % 2 ? OutputAct::tanh : OutputAct::linear, rng);
        std::vector<Mat> xs;
        for (int t = 0; t < 10; ++t) {
            Mat x(2, 3);
            for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
            xs.push_back(x);
        }
        Mat w_loss(2, 1);
        w_loss << 1.3, -0.8;
        LstmCache cache;
        const auto fwd = [&]() { return lstm_forward(net, xs, &cache); };
        const auto bwd = [&](const Mat& d) {
            lstm_forward(net, xs, &cache);
            return lstm_backward(net, cache, d);
        };
        CHECK(max_grad_rel_error(net, fwd, bwd, w_loss) < 1e-4);
    }
}

TEST_CASE("lstm with constant input converges to a stable output") {
    Rng rng(9);
    LstmNet net = make_lstm(3, 8, 1, OutputAct::linear, rng);
    Mat x(1, 3);
    x << 0.2, -0.1, 0.4;
    std::vector<Mat> lengthy(200, x);
    std::vector<Mat> longer(260, x);
    const double a = lstm_forward(net, lengthy)(0, 0);
    const double b = lstm_forward(net, longer)(0, 0);
    CHECK(a == doctest::Approx(b).epsilon(1e-6));
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
    Rng rng(4);
    MlpNet net = make_mlp({3, 4, 1}, OutputAct::linear, rng);
    MlpNet before = net;
    MlpGrads g;
    for (const auto& l : net.layers) {
        g.layers.push_back({Mat::Zero(l.w.rows(), l.w.cols()), Vec::Zero(l.b.size())});
    }
    AdamState st;
    st.lr = 0.1;
    adam_step(param_views(net), grad_views(g), st);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        CHECK((net.layers[l].w - before.layers[l].w).norm() == 0.0);
    }
}

TEST_CASE("adam first step on a scalar is about -lr") {
    MlpNet net;
    net.layers.push_back({Mat::Zero(1, 1), Vec::Zero(1)});
    net.layers[0].w(0, 0) = 1.0;
    MlpGrads g;
    g.layers.push_back({Mat::Ones(1, 1), Vec::Zero(1)});
    AdamState st;
    st.lr = 0.1;
    adam_step(param_views(net), grad_views(g), st);
    // bias-corrected first step: -lr * 1 / (1 + eps)
    CHECK(net.layers[0].w(0, 0) == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("adam rejects non-finite gradients") {
    MlpNet net;
    net.layers.push_back({Mat::Zero(1, 1), Vec::Zero(1)});
    MlpGrads g;
    g.layers.push_back({Mat::Constant(1, 1, std::nan("")), Vec::Zero(1)});
    AdamState st;
    CHECK_THROWS(adam_step(param_views(net), grad_views(g), st));
}

TEST_CASE("adam trajectories are reproducible") {
    const auto run = [] {
        Rng rng(11);
        MlpNet net = make_mlp({4, 8, 2}, OutputAct::linear, rng);
        AdamState st;
        st.lr = 1e-2;
        Mat x(4, 4);
        for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
        for (int it = 0; it < 20; ++it) {
            MlpCache cache;
            const Mat out = mlp_forward(net, x, &cache);
            const MlpGrads g = mlp_backward(net, cache, out);  // L = 0.5 sum out^2
            adam_step(param_views(net), grad_views(g), st);
        }
        return net.layers[0].w.sum() + net.layers[1].w.sum();
    };
    CHECK(run() == run());
}

TEST_CASE("tensor file round-trips nets exactly") {
    Rng rng(21);
    MlpNet mlp = make_mlp({5, 7, 2}, OutputAct::tanh, rng);
    Normalizer norm;
    norm.mean << 25.0, 20.0, 0.1;
    norm.std_dev << 9.0, 4.0, 0.8;

    TensorFile tf;
    tf.meta.emplace_back("kind", "test");
    pack_mlp(tf, mlp);
    pack_normalizer(tf, norm);
    const TensorFile back = tensor_file_from_string(tensor_file_to_string(tf));
    const MlpNet mlp2 = unpack_mlp(back);
    const Normalizer norm2 = unpack_normalizer(back);
    REQUIRE(mlp2.layers.size() == mlp.layers.size());
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        CHECK((mlp.layers[l].w - mlp2.layers[l].w).norm() == 0.0);
        CHECK((mlp.layers[l].b - mlp2.layers[l].b).norm() == 0.0);
    }
    CHECK((norm.mean - norm2.mean).norm() == 0.0);

    LstmNet lstm = make_lstm(3, 6, 1, OutputAct::tanh, rng);
    TensorFile tl;
    pack_lstm(tl, lstm);
    const LstmNet lstm2 = unpack_lstm(tensor_file_from_string(tensor_file_to_string(tl)));
    CHECK((lstm.wx - lstm2.wx).norm() == 0.0);
    CHECK((lstm.wh - lstm2.wh).norm() == 0.0);
    CHECK((lstm.head.w - lstm2.head.w).norm() == 0.0);
}

TEST_CASE("tensor file rejects a bad version tag") {
    CHECK_THROWS(tensor_file_from_string("ef-tensors 9\n"));
    CHECK_THROWS(tensor_file_from_string("garbage\n"));
}
