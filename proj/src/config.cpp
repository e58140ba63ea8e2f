#include "ef/config.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace ef {

using nlohmann::json;

RunConfig preset_paper() {
    RunConfig cfg;
    cfg.preset = "paper";
    // Struct defaults already carry the published values; the synth block
    // stands in for the full dataset.
    cfg.synth.n_events = 400;
    cfg.synth.duration = 30.0;
    cfg.synth.ground_truth.kind = "idm";
    cfg.synth.ground_truth.values = {{"a_max", 1.4},  {"v_desired", 33.3}, {"beta", 4.0},
                                     {"a_comf", 1.7}, {"s_jam", 2.0},      {"t_headway", 1.2}};
    return cfg;
}

RunConfig preset_desk() {
    RunConfig cfg = preset_paper();
    cfg.preset = "desk";
    cfg.synth.n_events = 60;
    cfg.synth.duration = 20.0;

    cfg.ga.population = 60;
    cfg.ga.max_generations = 60;
    cfg.ga.stall_generations = 60;

    cfg.ddqn.total_steps = 60000;
    cfg.ddqn.training_start = 2000;
    cfg.ddqn.buffer_capacity = 60000;
    cfg.ddqn.minibatch = 64;

    cfg.ppo.total_steps = 60000;
    cfg.ppo.step_per_collect = 2000;
    cfg.ppo.minibatch = 500;

    cfg.ddpg.total_steps = 40000;
    cfg.ddpg.training_start = 2000;
    cfg.ddpg.buffer_capacity = 40000;
    cfg.ddpg.batch = 64;
    cfg.ddpg.noise_std_final = 0.05;

    cfg.rnn.lstm_width = 16;
    return cfg;
}

RunConfig make_config(const std::string& preset) {
    if (preset == "paper") return preset_paper();
    if (preset == "desk") return preset_desk();
    throw std::invalid_argument("unknown preset: " + preset);
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const char* k : known) {
            if (key == k) {
                ok = true;
                break;
            }
        }
        if (!ok) throw std::runtime_error("config: unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void load_kinematics(const json& j, KinematicsConfig& k) {
    reject_unknown(j, {"dt", "acc_min", "acc_max", "jerk_min", "jerk_max"}, "kinematics");
    get_if(j, "dt", k.dt);
    get_if(j, "acc_min", k.acc_min);
    get_if(j, "acc_max", k.acc_max);
    get_if(j, "jerk_min", k.jerk_min);
    get_if(j, "jerk_max", k.jerk_max);
    if (k.dt <= 0.0 || k.acc_min >= k.acc_max || k.jerk_min >= k.jerk_max) {
        throw std::runtime_error("config: invalid kinematics block");
    }
}

void load_reward(const json& j, RewardConfig& r) {
    reject_unknown(j, {"mode", "rel_err_floor", "rel_err_ceiling", "collision_penalty"}, "reward");
    if (j.contains("mode")) r.mode = reward_mode_from_string(j.at("mode").get<std::string>());
    get_if(j, "rel_err_floor", r.rel_err_floor);
    get_if(j, "rel_err_ceiling", r.rel_err_ceiling);
    get_if(j, "collision_penalty", r.collision_penalty);
    if (!(r.rel_err_floor > 0.0) || !(r.rel_err_floor < r.rel_err_ceiling)) {
        throw std::runtime_error("config: invalid reward clamp");
    }
}

void load_synth(const json& j, SynthConfig& s) {
    reject_unknown(j,
                   {"n_events", "duration", "leader_profile", "ground_truth", "noise_std", "seed",
                    "base_speed_min", "base_speed_max", "pulse_floor", "init_gap_jitter"},
                   "synth");
    get_if(j, "n_events", s.n_events);
    get_if(j, "duration", s.duration);
    if (j.contains("leader_profile")) {
        s.profile = leader_profile_from_string(j.at("leader_profile").get<std::string>());
    }
    if (j.contains("ground_truth")) {
        const json& g = j.at("ground_truth");
        reject_unknown(g, {"kind", "params", "params_file"}, "synth.ground_truth");
        s.ground_truth = ModelSpec{};
        get_if(g, "kind", s.ground_truth.kind);
        get_if(g, "params_file", s.ground_truth.params_file);
        if (g.contains("params")) {
            for (const auto& [key, value] : g.at("params").items()) {
                s.ground_truth.values[key] = value.get<double>();
            }
        }
    }
    get_if(j, "noise_std", s.noise_std);
    get_if(j, "seed", s.seed);
    get_if(j, "base_speed_min", s.base_speed_min);
    get_if(j, "base_speed_max", s.base_speed_max);
    get_if(j, "pulse_floor", s.pulse_floor);
    get_if(j, "init_gap_jitter", s.init_gap_jitter);
    if (s.duration < 15.0 || s.noise_std < 0.0) throw std::runtime_error("config: invalid synth block");
}

void load_ga(const json& j, GaConfig& g) {
    reject_unknown(j,
                   {"population", "max_generations", "stall_generations", "mutation_prob",
                    "tournament_size", "crossover_prob", "mutation_sigma_frac", "crash_penalty",
                    "elitism", "seed"},
                   "ga");
    get_if(j, "population", g.population);
    get_if(j, "max_generations", g.max_generations);
    get_if(j, "stall_generations", g.stall_generations);
    get_if(j, "mutation_prob", g.mutation_prob);
    get_if(j, "tournament_size", g.tournament_size);
    get_if(j, "crossover_prob", g.crossover_prob);
    get_if(j, "mutation_sigma_frac", g.mutation_sigma_frac);
    get_if(j, "crash_penalty", g.crash_penalty);
    get_if(j, "elitism", g.elitism);
    get_if(j, "seed", g.seed);
    if (g.population < 2 || g.mutation_prob < 0.0 || g.mutation_prob > 1.0 ||
        g.crossover_prob < 0.0 || g.crossover_prob > 1.0) {
        throw std::runtime_error("config: invalid ga block");
    }
}

void load_ddqn(const json& j, DdqnConfig& d) {
    reject_unknown(j,
                   {"lr", "gamma", "minibatch", "training_start", "buffer_capacity", "hidden",
                    "train_freq", "target_update", "eps_initial", "eps_final", "eps_decay_frac",
                    "total_steps", "seed"},
                   "ddqn");
    get_if(j, "lr", d.lr);
    get_if(j, "gamma", d.gamma);
    get_if(j, "minibatch", d.minibatch);
    get_if(j, "training_start", d.training_start);
    get_if(j, "buffer_capacity", d.buffer_capacity);
    get_if(j, "hidden", d.hidden);
    get_if(j, "train_freq", d.train_freq);
    get_if(j, "target_update", d.target_update);
    get_if(j, "eps_initial", d.eps_initial);
    get_if(j, "eps_final", d.eps_final);
    get_if(j, "eps_decay_frac", d.eps_decay_frac);
    get_if(j, "total_steps", d.total_steps);
    get_if(j, "seed", d.seed);
    if (d.eps_final < 0.0 || d.eps_final > 1.0 || d.training_start > d.buffer_capacity) {
        throw std::runtime_error("config: invalid ddqn block");
    }
}

void load_ppo(const json& j, PpoConfig& p) {
    reject_unknown(j,
                   {"actor_lr", "critic_lr", "lr_decay", "gamma", "gae_lambda", "step_per_collect",
                    "repeat", "minibatch", "hidden", "clip_eps", "vf_coef", "ent_coef",
                    "total_steps", "seed"},
                   "ppo");
    get_if(j, "actor_lr", p.actor_lr);
    get_if(j, "critic_lr", p.critic_lr);
    get_if(j, "lr_decay", p.lr_decay);
    get_if(j, "gamma", p.gamma);
    get_if(j, "gae_lambda", p.gae_lambda);
    get_if(j, "step_per_collect", p.step_per_collect);
    get_if(j, "repeat", p.repeat);
    get_if(j, "minibatch", p.minibatch);
    get_if(j, "hidden", p.hidden);
    get_if(j, "clip_eps", p.clip_eps);
    get_if(j, "vf_coef", p.vf_coef);
    get_if(j, "ent_coef", p.ent_coef);
    get_if(j, "total_steps", p.total_steps);
    get_if(j, "seed", p.seed);
    if (!(p.clip_eps > 0.0) || p.vf_coef < 0.0 || p.ent_coef < 0.0) {
        throw std::runtime_error("config: invalid ppo block");
    }
}

void load_ddpg(const json& j, DdpgConfig& d) {
    reject_unknown(j,
                   {"gamma", "lr", "batch", "training_start", "buffer_capacity", "tau",
                    "total_steps", "noise_std_initial", "noise_std_final", "hidden", "seed"},
                   "ddpg");
    get_if(j, "gamma", d.gamma);
    get_if(j, "lr", d.lr);
    get_if(j, "batch", d.batch);
    get_if(j, "training_start", d.training_start);
    get_if(j, "buffer_capacity", d.buffer_capacity);
    get_if(j, "tau", d.tau);
    get_if(j, "total_steps", d.total_steps);
    get_if(j, "noise_std_initial", d.noise_std_initial);
    get_if(j, "noise_std_final", d.noise_std_final);
    get_if(j, "hidden", d.hidden);
    get_if(j, "seed", d.seed);
    if (!(d.tau > 0.0 && d.tau <= 1.0)) throw std::runtime_error("config: invalid ddpg tau");
}

void load_rnn(const json& j, RnnTrainConfig& r) {
    reject_unknown(j, {"epochs", "batch", "lr", "lstm_width", "seed"}, "rnn");
    get_if(j, "epochs", r.epochs);
    get_if(j, "batch", r.batch);
    get_if(j, "lr", r.lr);
    get_if(j, "lstm_width", r.lstm_width);
    get_if(j, "seed", r.seed);
    if (r.epochs < 1 || r.batch < 1 || r.lstm_width < 1) {
        throw std::runtime_error("config: invalid rnn block");
    }
}

}  // namespace

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    reject_unknown(j, {"kinematics", "reward", "synth", "ga", "ddqn", "ppo", "ddpg", "rnn"}, "top level");
    if (j.contains("kinematics")) load_kinematics(j.at("kinematics"), cfg.kinematics);
    if (j.contains("reward")) load_reward(j.at("reward"), cfg.reward);
    if (j.contains("synth")) load_synth(j.at("synth"), cfg.synth);
    if (j.contains("ga")) load_ga(j.at("ga"), cfg.ga);
    if (j.contains("ddqn")) load_ddqn(j.at("ddqn"), cfg.ddqn);
    if (j.contains("ppo")) load_ppo(j.at("ppo"), cfg.ppo);
    if (j.contains("ddpg")) load_ddpg(j.at("ddpg"), cfg.ddpg);
    if (j.contains("rnn")) load_rnn(j.at("rnn"), cfg.rnn);
}

void set_all_seeds(RunConfig& cfg, std::uint64_t seed) {
    cfg.synth.seed = seed;
    cfg.ga.seed = seed;
    cfg.ddqn.seed = seed;
    cfg.ppo.seed = seed;
    cfg.ddpg.seed = seed;
    cfg.rnn.seed = seed;
}

}  // namespace ef
