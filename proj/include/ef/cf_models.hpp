#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ef/kinematics.hpp"
#include "ef/neural.hpp"

namespace ef {

inline constexpr std::size_t kHistorySteps = 25;  // 1 s of state history at 25 Hz
inline constexpr double kAccLimit = 4.0;          // m/s^2, shared output range

/// Ring of the most recent follower states, oldest to newest. At episode
/// start the ring is back-filled with the initial state.
class StateWindow {
public:
    explicit StateWindow(std::size_t history = kHistorySteps);

    void fill(const FollowState& s);
    void push(const FollowState& s);

    std::size_t size() const { return buf_.size(); }
    const FollowState& newest() const { return buf_[(head_ + buf_.size() - 1) % buf_.size()]; }
    const FollowState& at(std::size_t i) const;  // 0 = oldest

    // Writes size()*3 features: (spacing, fv_speed, rel_speed) per step,
    // oldest first.
    void flatten(Vec& out) const;

private:
    std::vector<FollowState> buf_;
    std::size_t head_ = 0;  // index of the oldest entry
};

// ---- low-level model interface ----------------------------------------

class CfModel {
public:
    virtual ~CfModel() = default;
    /// Commanded acceleration, always within [-kAccLimit, kAccLimit].
    virtual double acc(const StateWindow& w) const = 0;
    virtual std::string kind() const = 0;
};

// ---- rule-based models -------------------------------------------------

struct IdmParams {
    double a_max = 0.36;       // m/s^2
    double v_desired = 9.1417; // m/s
    double beta = 2.47;        // acceleration exponent
    double a_comf = 0.55;      // m/s^2
    double s_jam = 2.55;       // m
    double t_headway = 0.60;   // s
};

struct GippsParams {
    double a_des = 0.73;       // m/s^2
    double b_des = 2.30;       // m/s^2, magnitude
    double lv_eff_len = 6.96;  // m
    double b_hat = 1.92;       // m/s^2, magnitude
    double v_desired = 6.8111; // m/s
    double tau = 1.00;         // s
};

struct FvdParams {
    double alpha = 0.22;      // 1/s
    double lambda = 2.37;     // 1/s
    double v_desired = 6.6667;// m/s
    double b_len = 2.95;      // m, interaction length
    double beta_form = 4.48;  // form factor
    double s_cut = 56.35;     // m, saturation cutoff
};

double idm_acc(const IdmParams& p, const StateWindow& w);
double gipps_acc(const GippsParams& p, const StateWindow& w);
double fvd_acc(const FvdParams& p, const StateWindow& w);

// Optimal-velocity curve used by the FVD model; 0 at zero gap, saturating at
// v_desired for gaps past s_cut.
double fvd_optimal_velocity(const FvdParams& p, double spacing);

class IdmModel : public CfModel {
public:
    explicit IdmModel(IdmParams p) : p_(p) {}
    double acc(const StateWindow& w) const override { return idm_acc(p_, w); }
    std::string kind() const override { return "idm"; }
    const IdmParams& params() const { return p_; }

private:
    IdmParams p_;
};

class GippsModel : public CfModel {
public:
    explicit GippsModel(GippsParams p) : p_(p) {}
    double acc(const StateWindow& w) const override { return gipps_acc(p_, w); }
    std::string kind() const override { return "gipps"; }
    const GippsParams& params() const { return p_; }

private:
    GippsParams p_;
};

class FvdModel : public CfModel {
public:
    explicit FvdModel(FvdParams p) : p_(p) {}
    double acc(const StateWindow& w) const override { return fvd_acc(p_, w); }
    std::string kind() const override { return "fvd"; }
    const FvdParams& params() const { return p_; }

private:
    FvdParams p_;
};

/// Fixed-acceleration model; handy as a degenerate roster member and in
/// stress tests.
class ConstAccModel : public CfModel {
public:
    explicit ConstAccModel(double a) : acc_(a) {}
    double acc(const StateWindow&) const override { return acc_; }
    std::string kind() const override { return "const"; }

private:
    double acc_;
};

// ---- learned policies --------------------------------------------------

enum class NetPolicyArch { windowed_mlp, recurrent };

/// Weights plus the normalization stats they were trained with. Output is
/// tanh-squashed and scaled to [-kAccLimit, kAccLimit].
struct NetPolicyParams {
    NetPolicyArch arch = NetPolicyArch::windowed_mlp;
    MlpNet mlp;
    LstmNet lstm;
    Normalizer norm;
};

double net_policy_acc(const NetPolicyParams& p, const StateWindow& w);

class NetPolicyModel : public CfModel {
public:
    explicit NetPolicyModel(NetPolicyParams p, std::string kind_name)
        : p_(std::move(p)), kind_(std::move(kind_name)) {}
    double acc(const StateWindow& w) const override { return net_policy_acc(p_, w); }
    std::string kind() const override { return kind_; }
    const NetPolicyParams& params() const { return p_; }

private:
    NetPolicyParams p_;
    std::string kind_;
};

// Builds the T x 3 normalized input sequence (batch of 1 per step) for the
// recurrent policy, or the flattened normalized vector for windowed nets.
Vec normalized_window(const Normalizer& norm, const StateWindow& w);

// ---- parameter vectors, bounds, files ----------------------------------

struct ParamBound {
    std::string name;
    double lo;
    double hi;
};

// Calibration search bounds per rule-based model, in the same units as the
// parameter structs (speeds converted from km/h).
const std::vector<ParamBound>& param_bounds(const std::string& kind);

std::vector<double> params_to_vector(const IdmParams& p);
std::vector<double> params_to_vector(const GippsParams& p);
std::vector<double> params_to_vector(const FvdParams& p);
IdmParams idm_from_vector(const std::vector<double>& v);
GippsParams gipps_from_vector(const std::vector<double>& v);
FvdParams fvd_from_vector(const std::vector<double>& v);

std::unique_ptr<CfModel> make_rule_model(const std::string& kind, const std::vector<double>& genes);

/// Key=value parameter file for one rule-based model (kind recorded inside).
void save_params_file(const std::string& path, const std::string& kind,
                      const std::vector<double>& genes);

/// Loads any model artifact: a key=value parameter file or a tensor dump of
/// a learned policy (sniffed from the first line).
std::unique_ptr<CfModel> load_model_file(const std::string& path);

void save_net_policy(const std::string& path, const NetPolicyParams& p, const std::string& kind);
NetPolicyParams load_net_policy(const std::string& path);

/// Ground-truth model description for the synthetic generator: a kind plus
/// either inline parameter values or a parameter file path.
struct ModelSpec {
    std::string kind = "idm";
    std::map<std::string, double> values;  // by bound name; defaults fill gaps
    std::string params_file;               // wins over `values` when set
};

std::unique_ptr<CfModel> make_model(const ModelSpec& spec);

/// Spacing at which `model` holds the given speed steady (zero commanded
/// acceleration at rel_speed 0), found by bisection. Falls back to a
/// speed-proportional gap when no equilibrium exists.
double equilibrium_gap(const CfModel& model, double speed);

}  // namespace ef
