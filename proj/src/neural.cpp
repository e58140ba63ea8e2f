#include "ef/neural.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ef/csv.hpp"

namespace ef {

void Normalizer::apply(Vec& features) const {
    if (features.size() % 3 != 0) throw std::invalid_argument("Normalizer: feature count not a multiple of 3");
    for (Eigen::Index i = 0; i < features.size(); ++i) {
        const Eigen::Index f = i % 3;
        features[i] = (features[i] - mean[f]) / std_dev[f];
    }
}

namespace {

// Uniform fan-in init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void init_uniform(Mat& m, int fan_in, Rng& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            m(r, c) = rng.uniform(-s, s);
        }
    }
}

Mat apply_output_act(OutputAct act, const Mat& pre) {
    if (act == OutputAct::linear) return pre;
    return pre.array().tanh().matrix();
}

}  // namespace

MlpNet make_mlp(const std::vector<int>& sizes, OutputAct out_act, Rng& rng) {
    if (sizes.size() < 2) throw std::invalid_argument("make_mlp: need at least input and output size");
    MlpNet net;
    net.out_act = out_act;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        LinearLayer layer;
        layer.w = Mat(sizes[l + 1], sizes[l]);
        layer.b = Vec::Zero(sizes[l + 1]);
        init_uniform(layer.w, sizes[l], rng);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

Mat mlp_forward(const MlpNet& net, const Mat& x, MlpCache* cache) {
    if (x.cols() != net.in_dim()) throw std::invalid_argument("mlp_forward: input width mismatch");
    if (cache) {
        cache->input = x;
        cache->pre.clear();
        cache->post.clear();
    }
    Mat a = x;
    const std::size_t n = net.layers.size();
    for (std::size_t l = 0; l < n; ++l) {
        Mat z = a * net.layers[l].w.transpose();
        z.rowwise() += net.layers[l].b.transpose();
        Mat out;
        if (l + 1 < n) {
            out = z.array().max(0.0).matrix();  // rectifier
        } else {
            out = apply_output_act(net.out_act, z);
        }
        if (cache) {
            cache->pre.push_back(z);
            cache->post.push_back(out);
        }
        a = std::move(out);
    }
    return a;
}

Vec mlp_forward1(const MlpNet& net, const Vec& x) {
    Mat row = x.transpose();
    return mlp_forward(net, row).row(0).transpose();
}

MlpGrads mlp_backward(const MlpNet& net, const MlpCache& cache, const Mat& d_out) {
    const std::size_t n = net.layers.size();
    if (cache.pre.size() != n) throw std::invalid_argument("mlp_backward: cache/net mismatch");
    MlpGrads grads;
    grads.layers.resize(n);

    Mat dz;
    if (net.out_act == OutputAct::tanh) {
        dz = (d_out.array() * (1.0 - cache.post.back().array().square())).matrix();
    } else {
        dz = d_out;
    }
    for (std::size_t l = n; l-- > 0;) {
        const Mat& below = (l == 0) ? cache.input : cache.post[l - 1];
        grads.layers[l].w = dz.transpose() * below;
        grads.layers[l].b = dz.colwise().sum().transpose();
        Mat da = dz * net.layers[l].w;
        if (l == 0) {
            grads.d_input = std::move(da);
        } else {
            dz = (da.array() * (cache.pre[l - 1].array() > 0.0).cast<double>()).matrix();
        }
    }
    return grads;
}

LstmNet make_lstm(int in_dim, int hidden, int out_dim, OutputAct out_act, Rng& rng) {
    LstmNet net;
    net.wx = Mat(4 * hidden, in_dim);
    net.wh = Mat(4 * hidden, hidden);
    net.b = Vec::Zero(4 * hidden);
    init_uniform(net.wx, in_dim + hidden, rng);
    init_uniform(net.wh, in_dim + hidden, rng);
    net.head.w = Mat(out_dim, hidden);
    net.head.b = Vec::Zero(out_dim);
    init_uniform(net.head.w, hidden, rng);
    net.out_act = out_act;
    return net;
}

namespace {
inline Mat sigmoid(const Mat& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }
}

Mat lstm_forward(const LstmNet& net, const std::vector<Mat>& xs, LstmCache* cache) {
    if (xs.empty()) throw std::invalid_argument("lstm_forward: empty sequence");
    const int h = net.hidden_dim();
    const auto batch = xs.front().rows();
    Mat hs = Mat::Zero(batch, h);
    Mat cs = Mat::Zero(batch, h);
    if (cache) {
        cache->x.clear(); cache->i.clear(); cache->f.clear(); cache->g.clear();
        cache->o.clear(); cache->c.clear(); cache->tc.clear(); cache->h.clear();
    }
    for (const Mat& x : xs) {
        if (x.cols() != net.in_dim() || x.rows() != batch) {
            throw std::invalid_argument("lstm_forward: input shape mismatch");
        }
        Mat pre = x * net.wx.transpose() + hs * net.wh.transpose();
        pre.rowwise() += net.b.transpose();
        const Mat gi = sigmoid(pre.leftCols(h));
        const Mat gf = sigmoid(pre.middleCols(h, h));
        const Mat gg = pre.middleCols(2 * h, h).array().tanh().matrix();
        const Mat go = sigmoid(pre.rightCols(h));
        cs = (gf.array() * cs.array() + gi.array() * gg.array()).matrix();
        const Mat tc = cs.array().tanh().matrix();
        hs = (go.array() * tc.array()).matrix();
        if (cache) {
            cache->x.push_back(x);
            cache->i.push_back(gi);
            cache->f.push_back(gf);
            cache->g.push_back(gg);
            cache->o.push_back(go);
            cache->c.push_back(cs);
            cache->tc.push_back(tc);
            cache->h.push_back(hs);
        }
    }
    Mat out_pre = hs * net.head.w.transpose();
    out_pre.rowwise() += net.head.b.transpose();
    Mat out = apply_output_act(net.out_act, out_pre);
    if (cache) {
        cache->out_pre = out_pre;
        cache->out = out;
    }
    return out;
}

LstmGrads lstm_backward(const LstmNet& net, const LstmCache& cache, const Mat& d_out) {
    const int h = net.hidden_dim();
    const auto steps = cache.x.size();
    if (steps == 0) throw std::invalid_argument("lstm_backward: empty cache");
    const auto batch = cache.x.front().rows();

    LstmGrads g;
    g.wx = Mat::Zero(net.wx.rows(), net.wx.cols());
    g.wh = Mat::Zero(net.wh.rows(), net.wh.cols());
    g.b = Vec::Zero(net.b.size());
    g.head.w = Mat::Zero(net.head.w.rows(), net.head.w.cols());
    g.head.b = Vec::Zero(net.head.b.size());

    Mat d_pre_out;
    if (net.out_act == OutputAct::tanh) {
        d_pre_out = (d_out.array() * (1.0 - cache.out.array().square())).matrix();
    } else {
        d_pre_out = d_out;
    }
    g.head.w = d_pre_out.transpose() * cache.h.back();
    g.head.b = d_pre_out.colwise().sum().transpose();

    Mat dh = d_pre_out * net.head.w;
    Mat dc_next = Mat::Zero(batch, h);
    for (std::size_t t = steps; t-- > 0;) {
        const Mat& gi = cache.i[t];
        const Mat& gf = cache.f[t];
        const Mat& gg = cache.g[t];
        const Mat& go = cache.o[t];
        const Mat& tc = cache.tc[t];
        const Mat c_prev = (t == 0) ? Mat::Zero(batch, h) : cache.c[t - 1];
        const Mat h_prev = (t == 0) ? Mat::Zero(batch, h) : cache.h[t - 1];

        const Mat dc = (dc_next.array() + dh.array() * go.array() * (1.0 - tc.array().square())).matrix();
        Mat d_pre(batch, 4 * h);
        d_pre.leftCols(h) = (dc.array() * gg.array() * gi.array() * (1.0 - gi.array())).matrix();
        d_pre.middleCols(h, h) = (dc.array() * c_prev.array() * gf.array() * (1.0 - gf.array())).matrix();
        d_pre.middleCols(2 * h, h) = (dc.array() * gi.array() * (1.0 - gg.array().square())).matrix();
        d_pre.rightCols(h) = (dh.array() * tc.array() * go.array() * (1.0 - go.array())).matrix();

        g.wx += d_pre.transpose() * cache.x[t];
        g.wh += d_pre.transpose() * h_prev;
        g.b += d_pre.colwise().sum().transpose();

        dh = d_pre * net.wh;
        dc_next = (dc.array() * gf.array()).matrix();
    }
    return g;
}

std::vector<ParamView> param_views(MlpNet& net) {
    std::vector<ParamView> views;
    for (auto& layer : net.layers) {
        views.emplace_back(layer.w.data(), layer.w.size());
        views.emplace_back(layer.b.data(), layer.b.size());
    }
    return views;
}

std::vector<ConstParamView> grad_views(const MlpGrads& grads) {
    std::vector<ConstParamView> views;
    for (const auto& layer : grads.layers) {
        views.emplace_back(layer.w.data(), layer.w.size());
        views.emplace_back(layer.b.data(), layer.b.size());
    }
    return views;
}

std::vector<ParamView> param_views(LstmNet& net) {
    std::vector<ParamView> views;
    views.emplace_back(net.wx.data(), net.wx.size());
    views.emplace_back(net.wh.data(), net.wh.size());
    views.emplace_back(net.b.data(), net.b.size());
    views.emplace_back(net.head.w.data(), net.head.w.size());
    views.emplace_back(net.head.b.data(), net.head.b.size());
    return views;
}

std::vector<ConstParamView> grad_views(const LstmGrads& grads) {
    std::vector<ConstParamView> views;
    views.emplace_back(grads.wx.data(), grads.wx.size());
    views.emplace_back(grads.wh.data(), grads.wh.size());
    views.emplace_back(grads.b.data(), grads.b.size());
    views.emplace_back(grads.head.w.data(), grads.head.w.size());
    views.emplace_back(grads.head.b.data(), grads.head.b.size());
    return views;
}

void adam_step(std::vector<ParamView> params, const std::vector<ConstParamView>& grads,
               AdamState& state) {
    if (params.size() != grads.size()) throw std::invalid_argument("adam_step: param/grad count mismatch");
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.emplace_back(Eigen::ArrayXd::Zero(p.size()));
            state.v.emplace_back(Eigen::ArrayXd::Zero(p.size()));
        }
    }
    if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: state layout mismatch");
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != grads[i].size()) throw std::invalid_argument("adam_step: shape mismatch");
        if (!grads[i].isFinite().all()) throw std::runtime_error("adam_step: non-finite gradient");
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i].square();
        const Eigen::ArrayXd m_hat = state.m[i] / bc1;
        const Eigen::ArrayXd v_hat = state.v[i] / bc2;
        params[i] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
}

// ---- serialization ----------------------------------------------------

const Mat* TensorFile::find(const std::string& name) const {
    for (const auto& [n, t] : tensors) {
        if (n == name) return &t;
    }
    return nullptr;
}

std::string TensorFile::meta_value(const std::string& key) const {
    for (const auto& [k, v] : meta) {
        if (k == key) return v;
    }
    return "";
}

std::string tensor_file_to_string(const TensorFile& tf) {
    std::ostringstream out;
    out << "ef-tensors 1\n";
    for (const auto& [k, v] : tf.meta) out << "meta " << k << " " << v << "\n";
    for (const auto& [name, t] : tf.tensors) {
        out << "tensor " << name << " " << t.rows() << " " << t.cols() << "\n";
        for (Eigen::Index r = 0; r < t.rows(); ++r) {
            for (Eigen::Index c = 0; c < t.cols(); ++c) {
                if (c) out << " ";
                out << fmt_num_exact(t(r, c));
            }
            out << "\n";
        }
    }
    return out.str();
}

TensorFile tensor_file_from_string(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "ef-tensors 1") {
        throw std::runtime_error("tensor file: bad or missing version tag");
    }
    TensorFile tf;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "meta") {
            std::string k, v;
            ls >> k >> v;
            tf.meta.emplace_back(k, v);
        } else if (tag == "tensor") {
            std::string name;
            Eigen::Index rows = 0, cols = 0;
            ls >> name >> rows >> cols;
            if (name.empty() || rows < 0 || cols < 0) throw std::runtime_error("tensor file: bad tensor header");
            Mat t(rows, cols);
            for (Eigen::Index r = 0; r < rows; ++r) {
                if (!std::getline(in, line)) throw std::runtime_error("tensor file: truncated tensor " + name);
                std::istringstream row(line);
                for (Eigen::Index c = 0; c < cols; ++c) {
                    if (!(row >> t(r, c))) throw std::runtime_error("tensor file: bad value in " + name);
                }
            }
            tf.tensors.emplace_back(name, std::move(t));
        } else {
            throw std::runtime_error("tensor file: unknown tag " + tag);
        }
    }
    return tf;
}

void save_tensor_file(const std::string& path, const TensorFile& tf) {
    write_text_file(path, tensor_file_to_string(tf));
}

TensorFile load_tensor_file(const std::string& path) {
    const auto lines = read_lines(path);
    std::string text;
    for (const auto& l : lines) {
        text += l;
        text += '\n';
    }
    return tensor_file_from_string(text);
}

namespace {
std::string act_name(OutputAct act) { return act == OutputAct::tanh ? "tanh" : "linear"; }
OutputAct act_from_name(const std::string& s) {
    if (s == "tanh") return OutputAct::tanh;
    if (s == "linear" || s.empty()) return OutputAct::linear;
    throw std::runtime_error("unknown output activation: " + s);
}
}  // namespace

void pack_mlp(TensorFile& tf, const MlpNet& net) {
    tf.meta.emplace_back("arch", "mlp");
    tf.meta.emplace_back("out_act", act_name(net.out_act));
    tf.meta.emplace_back("depth", std::to_string(net.layers.size()));
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        tf.tensors.emplace_back("w" + std::to_string(l), net.layers[l].w);
        tf.tensors.emplace_back("b" + std::to_string(l), net.layers[l].b);
    }
}

MlpNet unpack_mlp(const TensorFile& tf) {
    MlpNet net;
    net.out_act = act_from_name(tf.meta_value("out_act"));
    const int depth = std::stoi(tf.meta_value("depth"));
    for (int l = 0; l < depth; ++l) {
        const Mat* w = tf.find("w" + std::to_string(l));
        const Mat* b = tf.find("b" + std::to_string(l));
        if (!w || !b) throw std::runtime_error("mlp tensors missing layer " + std::to_string(l));
        net.layers.push_back({*w, Vec(b->col(0))});
    }
    return net;
}

void pack_lstm(TensorFile& tf, const LstmNet& net) {
    tf.meta.emplace_back("arch", "lstm");
    tf.meta.emplace_back("out_act", act_name(net.out_act));
    tf.tensors.emplace_back("wx", net.wx);
    tf.tensors.emplace_back("wh", net.wh);
    tf.tensors.emplace_back("b", net.b);
    tf.tensors.emplace_back("head_w", net.head.w);
    tf.tensors.emplace_back("head_b", net.head.b);
}

LstmNet unpack_lstm(const TensorFile& tf) {
    LstmNet net;
    net.out_act = act_from_name(tf.meta_value("out_act"));
    const Mat* wx = tf.find("wx");
    const Mat* wh = tf.find("wh");
    const Mat* b = tf.find("b");
    const Mat* hw = tf.find("head_w");
    const Mat* hb = tf.find("head_b");
    if (!wx || !wh || !b || !hw || !hb) throw std::runtime_error("lstm tensors missing");
    net.wx = *wx;
    net.wh = *wh;
    net.b = b->col(0);
    net.head.w = *hw;
    net.head.b = hb->col(0);
    return net;
}

void pack_normalizer(TensorFile& tf, const Normalizer& norm) {
    tf.tensors.emplace_back("norm_mean", norm.mean);
    tf.tensors.emplace_back("norm_std", norm.std_dev);
}

Normalizer unpack_normalizer(const TensorFile& tf) {
    Normalizer norm;
    const Mat* mean = tf.find("norm_mean");
    const Mat* sd = tf.find("norm_std");
    if (!mean || !sd) throw std::runtime_error("normalization block missing");
    norm.mean = mean->col(0);
    norm.std_dev = sd->col(0);
    if (!norm.mean.allFinite() || !norm.std_dev.allFinite() || (norm.std_dev.array() <= 0.0).any()) {
        throw std::runtime_error("normalization stats invalid");
    }
    return norm;
}

}  // namespace ef
