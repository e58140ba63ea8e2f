#include "ef/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ef/rng.hpp"

namespace ef {

SimResult simulate_model_on_event(const CfModel& model, const TimeSeriesEvent& event,
                                  const KinematicsConfig& kin) {
    Episode ep(kin, RewardConfig{});
    ep.reset(event);
    while (!ep.done()) {
        ep.step(model.acc(ep.window()));
    }
    SimResult r;
    r.spacing_sim = ep.sim_spacing();
    r.speed_sim = ep.sim_speed();
    r.collided = (ep.done_reason() == DoneReason::collision);
    return r;
}

namespace {

struct PooledFitness {
    double value = 0.0;
    int crashes = 0;
};

PooledFitness evaluate(const CfModel& model, const std::vector<TimeSeriesEvent>& events,
                       const KinematicsConfig& kin, double crash_penalty) {
    double num = 0.0, den = 0.0;
    int crashes = 0;
    for (const auto& ev : events) {
        const SimResult sim = simulate_model_on_event(model, ev, kin);
        for (std::size_t t = 1; t < sim.spacing_sim.size(); ++t) {
            const double d = sim.spacing_sim[t] - ev.spacing[t];
            num += d * d;
            den += ev.spacing[t] * ev.spacing[t];
        }
        if (sim.collided) ++crashes;
    }
    PooledFitness f;
    f.value = (den > 0.0 ? std::sqrt(num / den) : 0.0) + crash_penalty * crashes;
    f.crashes = crashes;
    return f;
}

}  // namespace

double fitness(const CfModel& model, const std::vector<TimeSeriesEvent>& events,
               const KinematicsConfig& kin, double crash_penalty) {
    if (events.empty()) throw std::invalid_argument("fitness: no events");
    return evaluate(model, events, kin, crash_penalty).value;
}

CalibrationResult run_ga(const std::string& model_kind, const std::vector<ParamBound>& bounds,
                         const std::vector<TimeSeriesEvent>& events, const GaConfig& cfg,
                         const KinematicsConfig& kin) {
    if (events.empty()) throw std::invalid_argument("run_ga: no events");
    if (cfg.population < 2) throw std::invalid_argument("run_ga: population must be >= 2");
    const std::size_t genes = bounds.size();
    Rng rng(cfg.seed);

    const auto clamp_genes = [&](std::vector<double>& g) {
        for (std::size_t i = 0; i < genes; ++i) g[i] = std::clamp(g[i], bounds[i].lo, bounds[i].hi);
    };

    std::vector<std::vector<double>> pop(static_cast<std::size_t>(cfg.population),
                                         std::vector<double>(genes));
    for (auto& ind : pop) {
        for (std::size_t i = 0; i < genes; ++i) ind[i] = rng.uniform(bounds[i].lo, bounds[i].hi);
    }

    std::vector<double> fit(pop.size());
    std::vector<int> crashes(pop.size());
    CalibrationResult result;
    result.model_kind = model_kind;
    result.best_fitness = std::numeric_limits<double>::infinity();
    bool saw_crash_free = false;
    int stall = 0;

    const auto tournament = [&]() -> std::size_t {
        std::size_t best = rng.index(pop.size());
        for (int i = 1; i < cfg.tournament_size; ++i) {
            const std::size_t c = rng.index(pop.size());
            if (fit[c] < fit[best]) best = c;
        }
        return best;
    };

    for (int gen = 0; gen < cfg.max_generations; ++gen) {
        std::size_t gen_best = 0;
        for (std::size_t i = 0; i < pop.size(); ++i) {
            const auto model = make_rule_model(model_kind, pop[i]);
            const PooledFitness pf = evaluate(*model, events, kin, cfg.crash_penalty);
            fit[i] = pf.value;
            crashes[i] = pf.crashes;
            if (pf.crashes == 0) saw_crash_free = true;
            if (fit[i] < fit[gen_best]) gen_best = i;
        }
        if (fit[gen_best] < result.best_fitness) {
            result.best_fitness = fit[gen_best];
            result.best_params = pop[gen_best];
            result.crashes_at_best = crashes[gen_best];
            stall = 0;
        } else {
            ++stall;
        }
        result.fitness_history.push_back(result.best_fitness);
        if (stall >= cfg.stall_generations) break;
        if (gen + 1 == cfg.max_generations) break;

        std::vector<std::vector<double>> next;
        next.reserve(pop.size());
        for (int e = 0; e < cfg.elitism && next.size() < pop.size(); ++e) {
            next.push_back(result.best_params);
        }
        while (next.size() < pop.size()) {
            std::vector<double> a = pop[tournament()];
            std::vector<double> b = pop[tournament()];
            if (rng.bernoulli(cfg.crossover_prob)) {
                const double mix = rng.uniform01();
                for (std::size_t i = 0; i < genes; ++i) {
                    const double x = a[i], y = b[i];
                    a[i] = mix * x + (1.0 - mix) * y;
                    b[i] = (1.0 - mix) * x + mix * y;
                }
            }
            for (auto* child : {&a, &b}) {
                for (std::size_t i = 0; i < genes; ++i) {
                    if (rng.bernoulli(cfg.mutation_prob)) {
                        (*child)[i] += rng.normal(0.0, cfg.mutation_sigma_frac * (bounds[i].hi - bounds[i].lo));
                    }
                }
                clamp_genes(*child);
                if (next.size() < pop.size()) next.push_back(*child);
            }
        }
        pop = std::move(next);
    }

    result.warning_all_crashed = !saw_crash_free;
    return result;
}

}  // namespace ef
