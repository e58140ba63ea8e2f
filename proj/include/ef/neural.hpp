#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "ef/rng.hpp"

namespace ef {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Per-feature standardization of the (spacing, fv_speed, rel_speed) triple.
struct Normalizer {
    Vec mean = Vec::Zero(3);
    Vec std_dev = Vec::Ones(3);

    // Applies to a flattened window (consecutive triples), in place.
    void apply(Vec& features) const;
};

enum class OutputAct { linear, tanh };

struct LinearLayer {
    Mat w;  // out x in
    Vec b;  // out
};

/// Fully connected net with rectifier hidden units. The output activation is
/// linear for value heads and tanh where the caller squashes into an action
/// range.
struct MlpNet {
    std::vector<LinearLayer> layers;
    OutputAct out_act = OutputAct::linear;

    int in_dim() const { return static_cast<int>(layers.front().w.cols()); }
    int out_dim() const { return static_cast<int>(layers.back().w.rows()); }
};

MlpNet make_mlp(const std::vector<int>& sizes, OutputAct out_act, Rng& rng);

struct MlpCache {
    Mat input;              // B x in
    std::vector<Mat> pre;   // pre-activation per layer, B x width
    std::vector<Mat> post;  // post-activation per layer, B x width
};

struct MlpGrads {
    std::vector<LinearLayer> layers;  // same shapes as the net
    Mat d_input;                      // B x in
};

// Batched forward: X is B x in, result B x out. Cache is optional.
Mat mlp_forward(const MlpNet& net, const Mat& x, MlpCache* cache = nullptr);
Vec mlp_forward1(const MlpNet& net, const Vec& x);

// Exact gradients for the cached forward pass. d_out is B x out.
MlpGrads mlp_backward(const MlpNet& net, const MlpCache& cache, const Mat& d_out);

/// Single gated recurrent layer (input/forget/output gates plus cell
/// candidate) with a linear head read from the final hidden state.
struct LstmNet {
    Mat wx;  // 4h x in, gate rows ordered [input, forget, cell, output]
    Mat wh;  // 4h x h
    Vec b;   // 4h
    LinearLayer head;
    OutputAct out_act = OutputAct::linear;

    int in_dim() const { return static_cast<int>(wx.cols()); }
    int hidden_dim() const { return static_cast<int>(wh.cols()); }
    int out_dim() const { return static_cast<int>(head.w.rows()); }
};

LstmNet make_lstm(int in_dim, int hidden, int out_dim, OutputAct out_act, Rng& rng);

struct LstmCache {
    std::vector<Mat> x;   // T entries, B x in
    std::vector<Mat> i, f, g, o;  // gate activations per step, B x h
    std::vector<Mat> c, tc, h;    // cell, tanh(cell), hidden per step
    Mat out_pre;                  // B x out before output activation
    Mat out;                      // B x out
};

struct LstmGrads {
    Mat wx, wh;
    Vec b;
    LinearLayer head;
};

// Unrolls the cell over the sequence; xs[t] is the B x in input at step t.
Mat lstm_forward(const LstmNet& net, const std::vector<Mat>& xs, LstmCache* cache = nullptr);
LstmGrads lstm_backward(const LstmNet& net, const LstmCache& cache, const Mat& d_out);

// Flat views over a net's parameters; grads expose matching layouts so the
// optimizer can pair them positionally.
using ParamView = Eigen::Map<Eigen::ArrayXd>;
using ConstParamView = Eigen::Map<const Eigen::ArrayXd>;

std::vector<ParamView> param_views(MlpNet& net);
std::vector<ConstParamView> grad_views(const MlpGrads& grads);
std::vector<ParamView> param_views(LstmNet& net);
std::vector<ConstParamView> grad_views(const LstmGrads& grads);

/// Bias-corrected adaptive-moment optimizer state. Moment buffers are
/// allocated on first use and must keep matching the parameter layout.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long long step = 0;
    std::vector<Eigen::ArrayXd> m, v;
};

void adam_step(std::vector<ParamView> params, const std::vector<ConstParamView>& grads,
               AdamState& state);

// ---- serialization ----------------------------------------------------
//
// Self-describing text dump: version tag, string metadata, named tensors
// with shapes (row-major data), and the normalization block.

struct TensorFile {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::pair<std::string, Mat>> tensors;

    const Mat* find(const std::string& name) const;
    std::string meta_value(const std::string& key) const;  // "" when absent
};

std::string tensor_file_to_string(const TensorFile& tf);
TensorFile tensor_file_from_string(const std::string& text);
void save_tensor_file(const std::string& path, const TensorFile& tf);
TensorFile load_tensor_file(const std::string& path);

// Net <-> tensor-file converters used by checkpoints and policy files.
void pack_mlp(TensorFile& tf, const MlpNet& net);
MlpNet unpack_mlp(const TensorFile& tf);
void pack_lstm(TensorFile& tf, const LstmNet& net);
LstmNet unpack_lstm(const TensorFile& tf);
void pack_normalizer(TensorFile& tf, const Normalizer& norm);
Normalizer unpack_normalizer(const TensorFile& tf);

}  // namespace ef
