#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ef/cf_models.hpp"
#include "ef/data.hpp"
#include "ef/env.hpp"
#include "ef/neural.hpp"
#include "ef/rng.hpp"

namespace ef {

// ---- replay ------------------------------------------------------------

template <typename Action>
struct Transition {
    Vec state;       // flattened normalized window, H*3 features
    Action action;
    double reward = 0.0;
    Vec next_state;
    bool done = false;
};

/// Ring buffer holding the most recent `capacity` transitions. Batches are
/// sampled uniformly without replacement.
template <typename Action>
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw std::invalid_argument("ReplayBuffer: zero capacity");
    }

    void push(Transition<Action> t) {
        if (buf_.size() < capacity_) {
            buf_.push_back(std::move(t));
        } else {
            buf_[next_] = std::move(t);
        }
        next_ = (next_ + 1) % capacity_;
    }

    std::size_t size() const { return buf_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition<Action>& at(std::size_t i) const { return buf_[i]; }

    std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const {
        if (batch > buf_.size()) throw std::invalid_argument("ReplayBuffer: batch larger than size");
        std::vector<std::size_t> out;
        out.reserve(batch);
        if (batch * 2 >= buf_.size()) {
            std::vector<std::size_t> idx(buf_.size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            rng.shuffle(idx);
            out.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(batch));
        } else {
            std::vector<char> used(buf_.size(), 0);
            while (out.size() < batch) {
                const std::size_t i = rng.index(buf_.size());
                if (!used[i]) {
                    used[i] = 1;
                    out.push_back(i);
                }
            }
        }
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition<Action>> buf_;
};

// ---- configs -----------------------------------------------------------

struct DdqnConfig {
    double lr = 3e-4;
    double gamma = 0.99;
    int minibatch = 4096;
    long training_start = 200000;   // env steps collected before learning
    long buffer_capacity = 1000000;
    std::vector<int> hidden{64, 32};
    int train_freq = 4;
    int target_update = 250;
    double eps_initial = 1.0;
    double eps_final = 0.25;
    double eps_decay_frac = 0.5;    // fraction of total steps to reach eps_final
    long total_steps = 1000000;
    std::uint64_t seed = 1;
};

struct PpoConfig {
    double actor_lr = 1e-3;
    double critic_lr = 1e-3;
    bool lr_decay = true;
    double gamma = 0.99;
    double gae_lambda = 0.95;
    int step_per_collect = 5000;
    int repeat = 4;
    int minibatch = 2500;
    std::vector<int> hidden{64, 32};
    double clip_eps = 0.2;
    double vf_coef = 0.25;
    double ent_coef = 0.01;
    long total_steps = 1000000;
    std::uint64_t seed = 1;
};

struct DdpgConfig {
    double gamma = 0.96;
    double lr = 1e-3;
    int batch = 256;
    long training_start = 100000;
    long buffer_capacity = 1000000;
    double tau = 0.005;  // soft target blend
    long total_steps = 1000000;
    double noise_std_initial = 0.4;  // m/s^2
    double noise_std_final = 0.0;
    std::vector<int> hidden{64, 32};
    std::uint64_t seed = 1;
};

struct RnnTrainConfig {
    int epochs = 20;
    int batch = 128;
    double lr = 1e-3;
    int lstm_width = 32;
    std::uint64_t seed = 1;
};

// ---- small pure pieces (unit-tested against oracles) ---------------------

/// Linear exploration schedule: eps_initial at step 0, exactly eps_final at
/// the decay horizon and beyond.
double epsilon_at(long step, const DdqnConfig& cfg);

/// Double-Q target: bootstrap value taken from the target net at the online
/// net's argmax action. `done` masks the bootstrap.
double ddqn_target(double reward, bool done, double gamma, const Vec& q_next_online,
                   const Vec& q_next_target);

/// The element-wise clipped policy-gradient surrogate.
double clipped_surrogate(double ratio, double advantage, double clip_eps);

/// Lambda-weighted advantage recursion over one collected segment. `dones`
/// mask both the bootstrap value and the recursion across episode ends;
/// `value_last` bootstraps the final step when the segment ended mid-episode.
std::vector<double> gae_advantages(const std::vector<double>& rewards,
                                   const std::vector<double>& values, double value_last,
                                   const std::vector<char>& dones, double gamma, double lambda);

// Pooled per-feature standardization stats over the events' observed states.
Normalizer compute_normalizer(const std::vector<TimeSeriesEvent>& events);

// ---- training logs -------------------------------------------------------

struct TrainLog {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add(std::initializer_list<double> row) { rows.emplace_back(row); }
    void write_csv(const std::string& path) const;
};

// ---- trainers ------------------------------------------------------------

struct EfDdqnResult {
    MlpNet q;            // 75 -> hidden -> k, linear
    Normalizer norm;
    TrainLog log;        // step, episode, cumulative_reward, loss, epsilon
};

EfDdqnResult train_ef_ddqn(const std::vector<TimeSeriesEvent>& events,
                           const std::vector<const CfModel*>& roster, const DdqnConfig& cfg,
                           const KinematicsConfig& kin = {}, const RewardConfig& reward = {});

struct EfPpoResult {
    MlpNet actor;        // 75 -> hidden -> k, linear means over pre-softmax logits
    Vec log_std;         // state-independent Gaussian widths
    MlpNet critic;       // 75 -> hidden -> 1
    Normalizer norm;
    TrainLog log;        // step, episode, cumulative_reward, loss, lr
};

EfPpoResult train_ef_ppo(const std::vector<TimeSeriesEvent>& events,
                         const std::vector<const CfModel*>& roster, const PpoConfig& cfg,
                         const KinematicsConfig& kin = {}, const RewardConfig& reward = {});

struct DdpgResult {
    NetPolicyParams policy;  // windowed MLP actor with normalization stats
    TrainLog log;            // step, episode, cumulative_reward, loss, noise_std
};

DdpgResult train_ddpg_lowlevel(const std::vector<TimeSeriesEvent>& events, const DdpgConfig& cfg,
                               const KinematicsConfig& kin = {}, const RewardConfig& reward = {});

struct RnnCloneResult {
    NetPolicyParams policy;  // recurrent policy with normalization stats
    TrainLog log;            // epoch, loss
};

RnnCloneResult train_rnn_cloning(const std::vector<TimeSeriesEvent>& events,
                                 const RnnTrainConfig& cfg);

}  // namespace ef
