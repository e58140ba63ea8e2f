#include "ef/rl.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ef/csv.hpp"

namespace ef {

double epsilon_at(long step, const DdqnConfig& cfg) {
    const double horizon = cfg.eps_decay_frac * static_cast<double>(cfg.total_steps);
    if (horizon <= 0.0 || step >= horizon) return cfg.eps_final;
    const double frac = static_cast<double>(step) / horizon;
    return cfg.eps_initial + (cfg.eps_final - cfg.eps_initial) * frac;
}

namespace {

int argmax_lowest(const Vec& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

Vec softmax(const Vec& z) {
    const double m = z.maxCoeff();
    Vec e = (z.array() - m).exp();
    return e / e.sum();
}

// Deterministic epoch-style pass over event indices, reshuffled at each wrap.
class EventCycler {
public:
    EventCycler(std::size_t n, Rng& rng) : rng_(&rng), order_(n) {
        for (std::size_t i = 0; i < n; ++i) order_[i] = i;
        rng_->shuffle(order_);
    }
    std::size_t next() {
        if (pos_ >= order_.size()) {
            rng_->shuffle(order_);
            pos_ = 0;
        }
        return order_[pos_++];
    }

private:
    Rng* rng_;
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
};

void soft_update(std::vector<ParamView> target, std::vector<ParamView> online, double tau) {
    for (std::size_t i = 0; i < target.size(); ++i) {
        target[i] = tau * online[i] + (1.0 - tau) * target[i];
    }
}

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw std::runtime_error(std::string(what) + ": non-finite value");
}

}  // namespace

double ddqn_target(double reward, bool done, double gamma, const Vec& q_next_online,
                   const Vec& q_next_target) {
    if (done) return reward;
    return reward + gamma * q_next_target[argmax_lowest(q_next_online)];
}

double clipped_surrogate(double ratio, double advantage, double clip_eps) {
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    return std::min(ratio * advantage, clipped * advantage);
}

std::vector<double> gae_advantages(const std::vector<double>& rewards,
                                   const std::vector<double>& values, double value_last,
                                   const std::vector<char>& dones, double gamma, double lambda) {
    const std::size_t n = rewards.size();
    if (values.size() != n || dones.size() != n) {
        throw std::invalid_argument("gae_advantages: length mismatch");
    }
    std::vector<double> adv(n, 0.0);
    double running = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        const double not_done = dones[t] ? 0.0 : 1.0;
        const double v_next = (t + 1 < n) ? values[t + 1] : value_last;
        const double delta = rewards[t] + gamma * v_next * not_done - values[t];
        running = delta + gamma * lambda * not_done * running;
        adv[t] = running;
    }
    return adv;
}

Normalizer compute_normalizer(const std::vector<TimeSeriesEvent>& events) {
    if (events.empty()) throw std::invalid_argument("compute_normalizer: no events");
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    Eigen::Vector3d sq = Eigen::Vector3d::Zero();
    long n = 0;
    for (const auto& ev : events) {
        for (std::size_t i = 0; i < ev.length(); ++i) {
            const Eigen::Vector3d x(ev.spacing[i], ev.fv_speed[i], ev.lv_speed[i] - ev.fv_speed[i]);
            sum += x;
            sq += x.cwiseProduct(x);
            ++n;
        }
    }
    Normalizer norm;
    norm.mean = sum / static_cast<double>(n);
    const Eigen::Vector3d var = sq / static_cast<double>(n) - norm.mean.cwiseProduct(norm.mean).eval();
    norm.std_dev = var.cwiseMax(0.0).cwiseSqrt().cwiseMax(1e-6);
    return norm;
}

void TrainLog::write_csv(const std::string& path) const {
    std::ostringstream out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out << ",";
        out << columns[i];
    }
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            out << fmt_num(row[i]);
        }
        out << "\n";
    }
    write_text_file(path, out.str());
}

// ---- EF-DDQN --------------------------------------------------------------

EfDdqnResult train_ef_ddqn(const std::vector<TimeSeriesEvent>& events,
                           const std::vector<const CfModel*>& roster, const DdqnConfig& cfg,
                           const KinematicsConfig& kin, const RewardConfig& reward) {
    if (events.empty()) throw std::invalid_argument("train_ef_ddqn: no events");
    if (roster.empty()) throw std::invalid_argument("train_ef_ddqn: empty roster");
    const int k = static_cast<int>(roster.size());
    const int dim = static_cast<int>(3 * kHistorySteps);

    Rng rng(cfg.seed);
    EfDdqnResult result;
    result.norm = compute_normalizer(events);
    std::vector<int> sizes{dim};
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(k);
    result.q = make_mlp(sizes, OutputAct::linear, rng);
    MlpNet target = result.q;
    AdamState adam;
    adam.lr = cfg.lr;

    ReplayBuffer<int> buffer(static_cast<std::size_t>(cfg.buffer_capacity));
    Episode env(kin, reward);
    EventCycler cycler(events.size(), rng);
    result.log.columns = {"step", "episode", "cumulative_reward", "loss", "epsilon"};

    long episode = 0;
    double cum_reward = 0.0, loss_sum = 0.0;
    long loss_n = 0;
    bool need_reset = true;
    Vec s;

    for (long step = 1; step <= cfg.total_steps; ++step) {
        if (need_reset) {
            env.reset(events[cycler.next()]);
            s = normalized_window(result.norm, env.window());
            cum_reward = 0.0;
            ++episode;
            need_reset = false;
        }
        const double eps = (step <= cfg.training_start) ? 1.0 : epsilon_at(step, cfg);
        int action;
        if (rng.bernoulli(eps)) {
            action = static_cast<int>(rng.index(static_cast<std::size_t>(k)));
        } else {
            action = argmax_lowest(mlp_forward1(result.q, s));
        }
        const double acc = roster[static_cast<std::size_t>(action)]->acc(env.window());
        const StepResult res = env.step(acc);
        Vec s2 = normalized_window(result.norm, env.window());
        buffer.push({s, action, res.reward, s2, res.done});
        cum_reward += res.reward;
        s = std::move(s2);
        if (res.done) {
            result.log.add({static_cast<double>(step), static_cast<double>(episode), cum_reward,
                            loss_n ? loss_sum / static_cast<double>(loss_n) : 0.0, eps});
            loss_sum = 0.0;
            loss_n = 0;
            need_reset = true;
        }

        if (step > cfg.training_start && step % cfg.train_freq == 0 &&
            buffer.size() >= static_cast<std::size_t>(cfg.minibatch)) {
            const int batch = cfg.minibatch;
            const auto idx = buffer.sample_indices(static_cast<std::size_t>(batch), rng);
            Mat x(batch, dim), x2(batch, dim);
            Vec rew(batch);
            std::vector<char> done(static_cast<std::size_t>(batch));
            std::vector<int> act(static_cast<std::size_t>(batch));
            for (int i = 0; i < batch; ++i) {
                const auto& t = buffer.at(idx[static_cast<std::size_t>(i)]);
                x.row(i) = t.state.transpose();
                x2.row(i) = t.next_state.transpose();
                rew[i] = t.reward;
                done[static_cast<std::size_t>(i)] = t.done;
                act[static_cast<std::size_t>(i)] = t.action;
            }
            const Mat q2_online = mlp_forward(result.q, x2);
            const Mat q2_target = mlp_forward(target, x2);
            MlpCache cache;
            const Mat qs = mlp_forward(result.q, x, &cache);
            Mat d_out = Mat::Zero(batch, k);
            double loss = 0.0;
            for (int i = 0; i < batch; ++i) {
                const Vec qo = q2_online.row(i).transpose();
                const Vec qt = q2_target.row(i).transpose();
                const double y = ddqn_target(rew[i], done[static_cast<std::size_t>(i)], cfg.gamma, qo, qt);
                const double diff = qs(i, act[static_cast<std::size_t>(i)]) - y;
                loss += diff * diff;
                d_out(i, act[static_cast<std::size_t>(i)]) = 2.0 * diff / static_cast<double>(batch);
            }
            loss /= static_cast<double>(batch);
            check_finite(loss, "train_ef_ddqn loss");
            const MlpGrads grads = mlp_backward(result.q, cache, d_out);
            adam_step(param_views(result.q), grad_views(grads), adam);
            loss_sum += loss;
            ++loss_n;
        }
        if (step % cfg.target_update == 0) target = result.q;
    }
    return result;
}

// ---- EF-PPO ---------------------------------------------------------------

namespace {

double gaussian_logp(const Vec& z, const Vec& mu, const Vec& log_std) {
    double lp = 0.0;
    for (int j = 0; j < z.size(); ++j) {
        const double sd = std::exp(log_std[j]);
        const double u = (z[j] - mu[j]) / sd;
        lp += -0.5 * u * u - log_std[j] - 0.5 * std::log(2.0 * M_PI);
    }
    return lp;
}

}  // namespace

EfPpoResult train_ef_ppo(const std::vector<TimeSeriesEvent>& events,
                         const std::vector<const CfModel*>& roster, const PpoConfig& cfg,
                         const KinematicsConfig& kin, const RewardConfig& reward) {
    if (events.empty()) throw std::invalid_argument("train_ef_ppo: no events");
    if (roster.empty()) throw std::invalid_argument("train_ef_ppo: empty roster");
    const int k = static_cast<int>(roster.size());
    const int dim = static_cast<int>(3 * kHistorySteps);

    Rng rng(cfg.seed);
    EfPpoResult result;
    result.norm = compute_normalizer(events);
    std::vector<int> actor_sizes{dim};
    actor_sizes.insert(actor_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    std::vector<int> critic_sizes = actor_sizes;
    actor_sizes.push_back(k);
    critic_sizes.push_back(1);
    result.actor = make_mlp(actor_sizes, OutputAct::linear, rng);
    result.critic = make_mlp(critic_sizes, OutputAct::linear, rng);
    result.log_std = Vec::Zero(k);

    AdamState adam_actor, adam_critic;
    adam_actor.lr = cfg.actor_lr;
    adam_critic.lr = cfg.critic_lr;

    Episode env(kin, reward);
    EventCycler cycler(events.size(), rng);
    result.log.columns = {"step", "episode", "cumulative_reward", "loss", "lr"};

    long total_done = 0;
    long episode = 0;
    double cum_reward = 0.0;
    double last_loss = 0.0;
    bool need_reset = true;
    Vec s;

    struct Sample {
        Vec s, z;
        double logp_old, reward, value;
        char done;
    };

    while (total_done < cfg.total_steps) {
        const long want = std::min<long>(cfg.step_per_collect, cfg.total_steps - total_done);
        std::vector<Sample> seg;
        seg.reserve(static_cast<std::size_t>(want));
        const double decay = cfg.lr_decay
                                 ? std::max(0.0, 1.0 - static_cast<double>(total_done) /
                                                      static_cast<double>(cfg.total_steps))
                                 : 1.0;
        for (long i = 0; i < want; ++i) {
            if (need_reset) {
                env.reset(events[cycler.next()]);
                s = normalized_window(result.norm, env.window());
                cum_reward = 0.0;
                ++episode;
                need_reset = false;
            }
            const Vec mu = mlp_forward1(result.actor, s);
            Vec z(k);
            for (int j = 0; j < k; ++j) z[j] = mu[j] + std::exp(result.log_std[j]) * rng.normal();
            const double logp = gaussian_logp(z, mu, result.log_std);
            const Vec w = softmax(z);
            double acc = 0.0;
            for (int j = 0; j < k; ++j) acc += w[j] * roster[static_cast<std::size_t>(j)]->acc(env.window());
            const StepResult res = env.step(acc);
            const double value = mlp_forward1(result.critic, s)[0];
            seg.push_back({s, z, logp, res.reward, value, static_cast<char>(res.done)});
            cum_reward += res.reward;
            if (res.done) {
                result.log.add({static_cast<double>(total_done + i + 1), static_cast<double>(episode),
                                cum_reward, last_loss, cfg.actor_lr * decay});
                need_reset = true;
            } else {
                s = normalized_window(result.norm, env.window());
            }
        }
        total_done += want;

        const std::size_t n = seg.size();
        std::vector<double> rewards(n), values(n);
        std::vector<char> dones(n);
        for (std::size_t i = 0; i < n; ++i) {
            rewards[i] = seg[i].reward;
            values[i] = seg[i].value;
            dones[i] = seg[i].done;
        }
        const double v_last = need_reset ? 0.0 : mlp_forward1(result.critic, s)[0];
        std::vector<double> adv = gae_advantages(rewards, values, v_last, dones, cfg.gamma, cfg.gae_lambda);
        std::vector<double> ret(n);
        for (std::size_t i = 0; i < n; ++i) ret[i] = adv[i] + values[i];
        // Per-collect advantage normalization.
        double mean = 0.0;
        for (double a : adv) mean += a;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double a : adv) var += (a - mean) * (a - mean);
        const double sd = std::sqrt(var / static_cast<double>(n));
        for (double& a : adv) a = (a - mean) / (sd + 1e-8);

        adam_actor.lr = cfg.actor_lr * decay;
        adam_critic.lr = cfg.critic_lr * decay;

        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        for (int rep = 0; rep < cfg.repeat; ++rep) {
            rng.shuffle(order);
            for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.minibatch)) {
                const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(cfg.minibatch), n - start);
                Mat x(count, dim);
                Mat z(count, k);
                Vec lp_old(count), a_batch(count), ret_batch(count);
                for (std::size_t i = 0; i < count; ++i) {
                    const Sample& smp = seg[order[start + i]];
                    x.row(static_cast<Eigen::Index>(i)) = smp.s.transpose();
                    z.row(static_cast<Eigen::Index>(i)) = smp.z.transpose();
                    lp_old[static_cast<Eigen::Index>(i)] = smp.logp_old;
                    a_batch[static_cast<Eigen::Index>(i)] = adv[order[start + i]];
                    ret_batch[static_cast<Eigen::Index>(i)] = ret[order[start + i]];
                }

                MlpCache actor_cache;
                const Mat mu = mlp_forward(result.actor, x, &actor_cache);
                Mat d_mu = Mat::Zero(static_cast<Eigen::Index>(count), k);
                Vec d_log_std = Vec::Zero(k);
                double surr_sum = 0.0;
                const double inv_n = 1.0 / static_cast<double>(count);
                for (std::size_t i = 0; i < count; ++i) {
                    const auto ei = static_cast<Eigen::Index>(i);
                    double lp_new = 0.0;
                    for (int j = 0; j < k; ++j) {
                        const double sd_j = std::exp(result.log_std[j]);
                        const double u = (z(ei, j) - mu(ei, j)) / sd_j;
                        lp_new += -0.5 * u * u - result.log_std[j] - 0.5 * std::log(2.0 * M_PI);
                    }
                    const double ratio = std::exp(lp_new - lp_old[ei]);
                    check_finite(ratio, "train_ef_ppo ratio");
                    const double advantage = a_batch[ei];
                    const double unclipped = ratio * advantage;
                    const double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * advantage;
                    surr_sum += std::min(unclipped, clipped);
                    // d surr / d lp_new is ratio*adv on the unclipped branch, 0 when
                    // the clipped branch is strictly active.
                    const double g = (unclipped <= clipped) ? unclipped : 0.0;
                    const double d_lp = -inv_n * g;  // minimizing -surrogate
                    for (int j = 0; j < k; ++j) {
                        const double sd_j = std::exp(result.log_std[j]);
                        const double u = (z(ei, j) - mu(ei, j)) / sd_j;
                        d_mu(ei, j) = d_lp * (u / sd_j);  // dlp/dmu = u/sd
                        d_log_std[j] += d_lp * (u * u - 1.0);
                    }
                }
                // Entropy bonus: state-independent for a diagonal Gaussian head.
                for (int j = 0; j < k; ++j) d_log_std[j] += -cfg.ent_coef;

                MlpGrads actor_grads = mlp_backward(result.actor, actor_cache, d_mu);
                auto actor_params = param_views(result.actor);
                actor_params.emplace_back(result.log_std.data(), result.log_std.size());
                auto actor_gviews = grad_views(actor_grads);
                actor_gviews.emplace_back(d_log_std.data(), d_log_std.size());
                adam_step(actor_params, actor_gviews, adam_actor);

                MlpCache critic_cache;
                const Mat v = mlp_forward(result.critic, x, &critic_cache);
                Mat d_v(static_cast<Eigen::Index>(count), 1);
                double vf_loss = 0.0;
                for (std::size_t i = 0; i < count; ++i) {
                    const auto ei = static_cast<Eigen::Index>(i);
                    const double diff = v(ei, 0) - ret_batch[ei];
                    vf_loss += diff * diff;
                    d_v(ei, 0) = cfg.vf_coef * 2.0 * diff * inv_n;
                }
                vf_loss *= inv_n;
                const MlpGrads critic_grads = mlp_backward(result.critic, critic_cache, d_v);
                adam_step(param_views(result.critic), grad_views(critic_grads), adam_critic);

                double entropy = 0.0;
                for (int j = 0; j < k; ++j) entropy += result.log_std[j] + 0.5 * std::log(2.0 * M_PI * M_E);
                last_loss = -surr_sum * inv_n + cfg.vf_coef * vf_loss - cfg.ent_coef * entropy;
                check_finite(last_loss, "train_ef_ppo loss");
            }
        }
    }
    return result;
}

// ---- DDPG low-level --------------------------------------------------------

DdpgResult train_ddpg_lowlevel(const std::vector<TimeSeriesEvent>& events, const DdpgConfig& cfg,
                               const KinematicsConfig& kin, const RewardConfig& reward) {
    if (events.empty()) throw std::invalid_argument("train_ddpg_lowlevel: no events");
    const int dim = static_cast<int>(3 * kHistorySteps);

    Rng rng(cfg.seed);
    DdpgResult result;
    result.policy.arch = NetPolicyArch::windowed_mlp;
    result.policy.norm = compute_normalizer(events);

    std::vector<int> actor_sizes{dim};
    actor_sizes.insert(actor_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    std::vector<int> critic_sizes{dim + 1};
    critic_sizes.insert(critic_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    actor_sizes.push_back(1);
    critic_sizes.push_back(1);
    MlpNet& actor = result.policy.mlp;
    actor = make_mlp(actor_sizes, OutputAct::tanh, rng);
    MlpNet critic = make_mlp(critic_sizes, OutputAct::linear, rng);
    MlpNet target_actor = actor;
    MlpNet target_critic = critic;

    AdamState adam_actor, adam_critic;
    adam_actor.lr = cfg.lr;
    adam_critic.lr = cfg.lr;

    ReplayBuffer<double> buffer(static_cast<std::size_t>(cfg.buffer_capacity));
    Episode env(kin, reward);
    EventCycler cycler(events.size(), rng);
    result.log.columns = {"step", "episode", "cumulative_reward", "loss", "noise_std"};

    long episode = 0;
    double cum_reward = 0.0, loss_sum = 0.0;
    long loss_n = 0;
    bool need_reset = true;
    Vec s;

    for (long step = 1; step <= cfg.total_steps; ++step) {
        if (need_reset) {
            env.reset(events[cycler.next()]);
            s = normalized_window(result.policy.norm, env.window());
            cum_reward = 0.0;
            ++episode;
            need_reset = false;
        }
        const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(cfg.total_steps));
        const double noise_std = cfg.noise_std_initial + (cfg.noise_std_final - cfg.noise_std_initial) * frac;
        double acc = kAccLimit * mlp_forward1(actor, s)[0];
        acc = std::clamp(acc + noise_std * rng.normal(), -kAccLimit, kAccLimit);
        const StepResult res = env.step(acc);
        Vec s2 = normalized_window(result.policy.norm, env.window());
        buffer.push({s, acc, res.reward, s2, res.done});
        cum_reward += res.reward;
        s = std::move(s2);
        if (res.done) {
            result.log.add({static_cast<double>(step), static_cast<double>(episode), cum_reward,
                            loss_n ? loss_sum / static_cast<double>(loss_n) : 0.0, noise_std});
            loss_sum = 0.0;
            loss_n = 0;
            need_reset = true;
        }

        if (step > cfg.training_start && buffer.size() >= static_cast<std::size_t>(cfg.batch)) {
            const int batch = cfg.batch;
            const auto idx = buffer.sample_indices(static_cast<std::size_t>(batch), rng);
            Mat x(batch, dim), x2(batch, dim);
            Vec rew(batch), act(batch);
            std::vector<char> done(static_cast<std::size_t>(batch));
            for (int i = 0; i < batch; ++i) {
                const auto& t = buffer.at(idx[static_cast<std::size_t>(i)]);
                x.row(i) = t.state.transpose();
                x2.row(i) = t.next_state.transpose();
                rew[i] = t.reward;
                act[i] = t.action;
                done[static_cast<std::size_t>(i)] = t.done;
            }

            // Critic regression toward the target-network bootstrap.
            Mat xa2(batch, dim + 1);
            xa2.leftCols(dim) = x2;
            xa2.col(dim) = kAccLimit * mlp_forward(target_actor, x2).col(0);
            const Vec q2 = mlp_forward(target_critic, xa2).col(0);
            Mat xa(batch, dim + 1);
            xa.leftCols(dim) = x;
            xa.col(dim) = act;
            MlpCache critic_cache;
            const Vec q = mlp_forward(critic, xa, &critic_cache).col(0);
            Mat d_q(batch, 1);
            double loss = 0.0;
            for (int i = 0; i < batch; ++i) {
                const double y = rew[i] + (done[static_cast<std::size_t>(i)] ? 0.0 : cfg.gamma * q2[i]);
                const double diff = q[i] - y;
                loss += diff * diff;
                d_q(i, 0) = 2.0 * diff / static_cast<double>(batch);
            }
            loss /= static_cast<double>(batch);
            check_finite(loss, "train_ddpg loss");
            const MlpGrads critic_grads = mlp_backward(critic, critic_cache, d_q);
            adam_step(param_views(critic), grad_views(critic_grads), adam_critic);
            loss_sum += loss;
            ++loss_n;

            // Actor ascends the critic's value at its own action.
            MlpCache actor_cache;
            const Mat u = mlp_forward(actor, x, &actor_cache);
            Mat xau(batch, dim + 1);
            xau.leftCols(dim) = x;
            xau.col(dim) = kAccLimit * u.col(0);
            MlpCache chain_cache;
            mlp_forward(critic, xau, &chain_cache);
            Mat d_q2 = Mat::Constant(batch, 1, -1.0 / static_cast<double>(batch));
            const MlpGrads chain = mlp_backward(critic, chain_cache, d_q2);
            Mat d_u = kAccLimit * chain.d_input.col(dim);
            const MlpGrads actor_grads = mlp_backward(actor, actor_cache, d_u);
            adam_step(param_views(actor), grad_views(actor_grads), adam_actor);

            soft_update(param_views(target_actor), param_views(actor), cfg.tau);
            soft_update(param_views(target_critic), param_views(critic), cfg.tau);
        }
    }
    return result;
}

// ---- recurrent behavioral cloning -------------------------------------------

RnnCloneResult train_rnn_cloning(const std::vector<TimeSeriesEvent>& events,
                                 const RnnTrainConfig& cfg) {
    if (events.empty()) throw std::invalid_argument("train_rnn_cloning: no events");
    const auto window = kHistorySteps;

    Rng rng(cfg.seed);
    RnnCloneResult result;
    result.policy.arch = NetPolicyArch::recurrent;
    result.policy.norm = compute_normalizer(events);
    result.policy.lstm = make_lstm(3, cfg.lstm_width, 1, OutputAct::tanh, rng);
    LstmNet& net = result.policy.lstm;

    // Windows over the observed states, regression target the derived
    // follower acceleration at the window's newest step.
    std::vector<Vec> features;
    std::vector<double> targets;
    for (const auto& ev : events) {
        const DerivedFields df = derive_fields(ev);
        StateWindow w(window);
        w.fill({ev.spacing[0], ev.fv_speed[0], ev.lv_speed[0] - ev.fv_speed[0]});
        for (std::size_t t = 0; t < ev.length(); ++t) {
            features.push_back(normalized_window(result.policy.norm, w));
            targets.push_back(df.fv_accel[t]);
            if (t + 1 < ev.length()) {
                w.push({ev.spacing[t + 1], ev.fv_speed[t + 1],
                        ev.lv_speed[t + 1] - ev.fv_speed[t + 1]});
            }
        }
    }

    AdamState adam;
    adam.lr = cfg.lr;
    result.log.columns = {"epoch", "loss"};
    std::vector<std::size_t> order(features.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        long batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch),
                                                            order.size() - start);
            std::vector<Mat> xs(window, Mat(count, 3));
            Vec y(count);
            for (std::size_t i = 0; i < count; ++i) {
                const Vec& f = features[order[start + i]];
                for (std::size_t t = 0; t < window; ++t) {
                    xs[t].row(static_cast<Eigen::Index>(i)) =
                        f.segment(static_cast<Eigen::Index>(3 * t), 3).transpose();
                }
                y[static_cast<Eigen::Index>(i)] = targets[order[start + i]];
            }
            LstmCache cache;
            const Mat out = lstm_forward(net, xs, &cache);
            Mat d_out(static_cast<Eigen::Index>(count), 1);
            double loss = 0.0;
            for (std::size_t i = 0; i < count; ++i) {
                const auto ei = static_cast<Eigen::Index>(i);
                const double diff = kAccLimit * out(ei, 0) - y[ei];
                loss += diff * diff;
                d_out(ei, 0) = 2.0 * diff * kAccLimit / static_cast<double>(count);
            }
            loss /= static_cast<double>(count);
            check_finite(loss, "train_rnn_cloning loss");
            const LstmGrads grads = lstm_backward(net, cache, d_out);
            adam_step(param_views(net), grad_views(grads), adam);
            epoch_loss += loss;
            ++batches;
        }
        result.log.add({static_cast<double>(epoch), epoch_loss / static_cast<double>(batches)});
    }
    return result;
}

}  // namespace ef
