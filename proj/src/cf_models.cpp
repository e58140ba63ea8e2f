#include "ef/cf_models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ef/csv.hpp"

namespace ef {

namespace {
// The dataset spacing is a net gap, but the Gipps braking branch is written
// in terms of the leader's effective length. The calibrated lv_eff_len keeps
// its usual meaning (vehicle length plus margin); this constant is the
// nominal physical length added back, so the slack subtracted from the gap
// is lv_eff_len - 5.
constexpr double kGippsNominalLength = 5.0;

double clamp_acc(double a) { return std::clamp(a, -kAccLimit, kAccLimit); }
}  // namespace

StateWindow::StateWindow(std::size_t history) : buf_(history) {
    if (history == 0) throw std::invalid_argument("StateWindow: history must be positive");
}

void StateWindow::fill(const FollowState& s) {
    std::fill(buf_.begin(), buf_.end(), s);
    head_ = 0;
}

void StateWindow::push(const FollowState& s) {
    buf_[head_] = s;
    head_ = (head_ + 1) % buf_.size();
}

const FollowState& StateWindow::at(std::size_t i) const {
    if (i >= buf_.size()) throw std::out_of_range("StateWindow::at");
    return buf_[(head_ + i) % buf_.size()];
}

void StateWindow::flatten(Vec& out) const {
    const auto n = buf_.size();
    out.resize(static_cast<Eigen::Index>(3 * n));
    for (std::size_t i = 0; i < n; ++i) {
        const FollowState& s = at(i);
        out[static_cast<Eigen::Index>(3 * i)] = s.spacing;
        out[static_cast<Eigen::Index>(3 * i + 1)] = s.fv_speed;
        out[static_cast<Eigen::Index>(3 * i + 2)] = s.rel_speed;
    }
}

double idm_acc(const IdmParams& p, const StateWindow& w) {
    const FollowState& s = w.newest();
    if (s.spacing <= 0.0) throw std::domain_error("idm_acc: non-positive spacing");
    const double v = s.fv_speed;
    // Approach rate toward the leader is -rel_speed under the V^l - V^f
    // convention.
    const double dynamic = v * p.t_headway + v * (-s.rel_speed) / (2.0 * std::sqrt(p.a_max * p.a_comf));
    const double s_star = p.s_jam + std::max(0.0, dynamic);
    const double free_term = std::pow(v / p.v_desired, p.beta);
    const double gap_term = s_star / s.spacing;
    return clamp_acc(p.a_max * (1.0 - free_term - gap_term * gap_term));
}

double gipps_acc(const GippsParams& p, const StateWindow& w) {
    const FollowState& s = w.newest();
    if (s.spacing <= 0.0) throw std::domain_error("gipps_acc: non-positive spacing");
    const double v = s.fv_speed;
    const double vl = v + s.rel_speed;

    // Acceleration branch: free-flow speed reachable within one reaction time.
    const double ratio = v / p.v_desired;
    const double v_accel = v + 2.5 * p.a_des * p.tau * (1.0 - ratio) * std::sqrt(0.025 + ratio);

    // Braking branch: safe speed given the leader's worst-case stop.
    const double gap = s.spacing - (p.lv_eff_len - kGippsNominalLength);
    const double bt = p.b_des * p.tau;
    const double disc = bt * bt + p.b_des * (2.0 * gap - v * p.tau + vl * vl / p.b_hat);
    if (disc < 0.0) {
        return clamp_acc(-p.b_des);  // no safe speed exists; brake fully
    }
    const double v_brake = -bt + std::sqrt(disc);

    const double v_next = std::max(0.0, std::min(v_accel, v_brake));
    const double acc = (v_next - v) / p.tau;
    return clamp_acc(std::max(acc, -p.b_des));
}

double fvd_optimal_velocity(const FvdParams& p, double spacing) {
    if (spacing >= p.s_cut) return p.v_desired;
    const double tb = std::tanh(p.beta_form);
    return p.v_desired * (std::tanh(spacing / p.b_len - p.beta_form) + tb) / (1.0 + tb);
}

double fvd_acc(const FvdParams& p, const StateWindow& w) {
    const FollowState& s = w.newest();
    return clamp_acc(p.alpha * (fvd_optimal_velocity(p, s.spacing) - s.fv_speed) + p.lambda * s.rel_speed);
}

Vec normalized_window(const Normalizer& norm, const StateWindow& w) {
    Vec features;
    w.flatten(features);
    norm.apply(features);
    return features;
}

double net_policy_acc(const NetPolicyParams& p, const StateWindow& w) {
    double raw;
    if (p.arch == NetPolicyArch::windowed_mlp) {
        const Vec features = normalized_window(p.norm, w);
        raw = mlp_forward1(p.mlp, features)[0];
    } else {
        // Re-unroll over the window each call; no hidden state is carried.
        const Vec features = normalized_window(p.norm, w);
        std::vector<Mat> xs(w.size());
        for (std::size_t t = 0; t < w.size(); ++t) {
            xs[t] = features.segment(static_cast<Eigen::Index>(3 * t), 3).transpose();
        }
        raw = lstm_forward(p.lstm, xs)(0, 0);
    }
    if (!std::isfinite(raw)) throw std::runtime_error("net_policy_acc: non-finite activation");
    // Nets use a tanh head; the scale maps the unit range onto the shared
    // acceleration range.
    return kAccLimit * raw;
}

// ---- bounds and vector codecs ------------------------------------------

const std::vector<ParamBound>& param_bounds(const std::string& kind) {
    // Speed bounds below are km/h limits converted to m/s.
    static const std::vector<ParamBound> idm = {
        {"a_max", 0.1, 5.0},   {"v_desired", 1.0 / 3.6, 150.0 / 3.6},
        {"beta", 1.0, 10.0},   {"a_comf", 0.1, 5.0},
        {"s_jam", 0.1, 10.0},  {"t_headway", 0.1, 5.0},
    };
    static const std::vector<ParamBound> gipps = {
        {"a_des", 0.1, 5.0},      {"b_des", 0.1, 5.0},
        {"lv_eff_len", 5.0, 15.0},{"b_hat", 0.1, 5.0},
        {"v_desired", 1.0 / 3.6, 150.0 / 3.6}, {"tau", 0.3, 3.0},
    };
    static const std::vector<ParamBound> fvd = {
        {"alpha", 0.05, 20.0}, {"lambda", 0.0, 3.0},
        {"v_desired", 1.0 / 3.6, 252.0 / 3.6}, {"b_len", 0.1, 100.0},
        {"beta_form", 0.1, 10.0}, {"s_cut", 10.0, 120.0},
    };
    static const std::vector<ParamBound> const_acc = {
        {"accel", -kAccLimit, kAccLimit},
    };
    if (kind == "idm") return idm;
    if (kind == "gipps") return gipps;
    if (kind == "fvd") return fvd;
    if (kind == "const") return const_acc;
    throw std::invalid_argument("unknown model kind: " + kind);
}

std::vector<double> params_to_vector(const IdmParams& p) {
    return {p.a_max, p.v_desired, p.beta, p.a_comf, p.s_jam, p.t_headway};
}
std::vector<double> params_to_vector(const GippsParams& p) {
    return {p.a_des, p.b_des, p.lv_eff_len, p.b_hat, p.v_desired, p.tau};
}
std::vector<double> params_to_vector(const FvdParams& p) {
    return {p.alpha, p.lambda, p.v_desired, p.b_len, p.beta_form, p.s_cut};
}

namespace {
void expect_size(const std::vector<double>& v, std::size_t n, const char* kind) {
    if (v.size() != n) throw std::invalid_argument(std::string(kind) + ": wrong parameter count");
}
}  // namespace

IdmParams idm_from_vector(const std::vector<double>& v) {
    expect_size(v, 6, "idm");
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
}
GippsParams gipps_from_vector(const std::vector<double>& v) {
    expect_size(v, 6, "gipps");
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
}
FvdParams fvd_from_vector(const std::vector<double>& v) {
    expect_size(v, 6, "fvd");
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

std::unique_ptr<CfModel> make_rule_model(const std::string& kind, const std::vector<double>& genes) {
    if (kind == "idm") return std::make_unique<IdmModel>(idm_from_vector(genes));
    if (kind == "gipps") return std::make_unique<GippsModel>(gipps_from_vector(genes));
    if (kind == "fvd") return std::make_unique<FvdModel>(fvd_from_vector(genes));
    if (kind == "const") {
        expect_size(genes, 1, "const");
        return std::make_unique<ConstAccModel>(genes[0]);
    }
    throw std::invalid_argument("unknown model kind: " + kind);
}

void save_params_file(const std::string& path, const std::string& kind,
                      const std::vector<double>& genes) {
    const auto& bounds = param_bounds(kind);
    if (bounds.size() != genes.size()) throw std::invalid_argument("save_params_file: gene count mismatch");
    std::ostringstream out;
    out << "# car-following model parameters (SI units: m, s)\n";
    out << "kind=" << kind << "\n";
    for (std::size_t i = 0; i < genes.size(); ++i) {
        out << bounds[i].name << "=" << fmt_num_exact(genes[i]) << "\n";
    }
    write_text_file(path, out.str());
}

namespace {
std::unique_ptr<CfModel> load_params_model(const std::vector<std::string>& lines, const std::string& path) {
    std::string kind;
    std::map<std::string, double> values;
    for (const auto& raw : lines) {
        std::string line = raw;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r')) line.pop_back();
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error(path + ": expected key=value, got '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "kind") {
            kind = val;
        } else {
            const auto num = parse_double(val);
            if (!num) throw std::runtime_error(path + ": non-numeric value for " + key);
            values[key] = *num;
        }
    }
    if (kind.empty()) throw std::runtime_error(path + ": missing kind=");
    const auto& bounds = param_bounds(kind);
    std::vector<double> genes;
    genes.reserve(bounds.size());
    for (const auto& b : bounds) {
        const auto it = values.find(b.name);
        if (it == values.end()) throw std::runtime_error(path + ": missing parameter " + b.name);
        genes.push_back(it->second);
    }
    return make_rule_model(kind, genes);
}
}  // namespace

std::unique_ptr<CfModel> load_model_file(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw std::runtime_error(path + ": empty model file");
    if (lines.front().rfind("ef-tensors", 0) == 0) {
        NetPolicyParams p = load_net_policy(path);
        const std::string kind = (p.arch == NetPolicyArch::recurrent) ? "rnn" : "ddpg";
        return std::make_unique<NetPolicyModel>(std::move(p), kind);
    }
    return load_params_model(lines, path);
}

void save_net_policy(const std::string& path, const NetPolicyParams& p, const std::string& kind) {
    TensorFile tf;
    tf.meta.emplace_back("kind", kind);
    if (p.arch == NetPolicyArch::windowed_mlp) {
        pack_mlp(tf, p.mlp);
    } else {
        pack_lstm(tf, p.lstm);
    }
    pack_normalizer(tf, p.norm);
    save_tensor_file(path, tf);
}

NetPolicyParams load_net_policy(const std::string& path) {
    const TensorFile tf = load_tensor_file(path);
    NetPolicyParams p;
    const std::string arch = tf.meta_value("arch");
    if (arch == "mlp") {
        p.arch = NetPolicyArch::windowed_mlp;
        p.mlp = unpack_mlp(tf);
    } else if (arch == "lstm") {
        p.arch = NetPolicyArch::recurrent;
        p.lstm = unpack_lstm(tf);
    } else {
        throw std::runtime_error(path + ": unknown policy architecture '" + arch + "'");
    }
    p.norm = unpack_normalizer(tf);
    return p;
}

std::unique_ptr<CfModel> make_model(const ModelSpec& spec) {
    if (!spec.params_file.empty()) return load_model_file(spec.params_file);
    const auto& bounds = param_bounds(spec.kind);
    std::vector<double> genes;
    if (spec.values.empty()) {
        // Fall back to each struct's defaults.
        if (spec.kind == "idm") genes = params_to_vector(IdmParams{});
        else if (spec.kind == "gipps") genes = params_to_vector(GippsParams{});
        else if (spec.kind == "fvd") genes = params_to_vector(FvdParams{});
        else if (spec.kind == "const") genes = {0.0};
        else throw std::invalid_argument("unknown model kind: " + spec.kind);
    } else {
        for (const auto& b : bounds) {
            const auto it = spec.values.find(b.name);
            if (it == spec.values.end()) {
                throw std::invalid_argument("ModelSpec: missing value for " + b.name);
            }
            genes.push_back(it->second);
        }
    }
    return make_rule_model(spec.kind, genes);
}

double equilibrium_gap(const CfModel& model, double speed) {
    StateWindow w(kHistorySteps);
    const auto acc_at = [&](double gap) {
        w.fill({gap, speed, 0.0});
        return model.acc(w);
    };
    double lo = 0.05, hi = 1000.0;
    double a_lo = acc_at(lo), a_hi = acc_at(hi);
    const double nominal = 2.0 + 1.6 * speed;
    // Expect braking at a tiny gap and non-braking far away; otherwise the
    // model has no spacing equilibrium at this speed.
    if (!(a_lo < 0.0 && a_hi >= 0.0)) return nominal;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double a = acc_at(mid);
        if (a < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-10) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace ef
