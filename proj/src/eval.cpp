#include "ef/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ef/csv.hpp"
#include "ef/svg.hpp"

namespace ef {

double rmspe(const std::vector<double>& sim, const std::vector<double>& obs) {
    if (sim.size() != obs.size()) throw std::invalid_argument("rmspe: length mismatch");
    if (sim.empty()) throw std::invalid_argument("rmspe: empty series");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < sim.size(); ++i) {
        const double d = sim[i] - obs[i];
        num += d * d;
        den += obs[i] * obs[i];
    }
    if (den == 0.0) throw std::invalid_argument("rmspe: observed series is all zero");
    return std::sqrt(num / den);
}

double collision_rate(const std::vector<bool>& collided_per_event) {
    if (collided_per_event.empty()) throw std::invalid_argument("collision_rate: no events");
    long crashed = 0;
    for (bool c : collided_per_event) crashed += c ? 1 : 0;
    return static_cast<double>(crashed) / static_cast<double>(collided_per_event.size());
}

namespace {

struct MeanStd {
    double mean = 0.0;
    double std_dev = 0.0;  // population
};

MeanStd mean_std(const std::vector<double>& v) {
    MeanStd r;
    if (v.empty()) return r;
    for (double x : v) r.mean += x;
    r.mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - r.mean) * (x - r.mean);
    r.std_dev = std::sqrt(var / static_cast<double>(v.size()));
    return r;
}

// Streaming accumulator for the stats tables.
struct Accum {
    double sum = 0.0, sq = 0.0;
    long n = 0;
    void add(double x) {
        sum += x;
        sq += x * x;
        ++n;
    }
    double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
    double std_dev() const {
        if (!n) return 0.0;
        const double m = mean();
        return std::sqrt(std::max(0.0, sq / static_cast<double>(n) - m * m));
    }
};

std::string safe_name(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        if (c == '/' || c == '\\' || c == ' ') c = '_';
    }
    return out;
}

}  // namespace

EvaluationReport compare_models(const std::vector<Candidate>& candidates,
                                const std::vector<TimeSeriesEvent>& events,
                                const KinematicsConfig& kin) {
    if (candidates.empty()) throw std::invalid_argument("compare_models: no candidates");
    if (events.empty()) throw std::invalid_argument("compare_models: no events");
    EvaluationReport report;
    for (const auto& cand : candidates) {
        if (!cand.model) throw std::invalid_argument("compare_models: null model for " + cand.name);
        ModelReport mr;
        mr.name = cand.name;
        std::vector<double> sp_err, v_err;
        std::vector<bool> crashed;
        for (const auto& ev : events) {
            const SimResult sim = simulate_model_on_event(*cand.model, ev, kin);
            PerEventMetrics pm;
            pm.event_id = ev.event_id;
            pm.collided = sim.collided;
            const std::size_t n = sim.spacing_sim.size();
            if (n >= 2) {
                // Index 0 repeats the observed initial sample; score the
                // simulated steps only.
                std::vector<double> s_sim(sim.spacing_sim.begin() + 1, sim.spacing_sim.end());
                std::vector<double> s_obs(ev.spacing.begin() + 1,
                                          ev.spacing.begin() + static_cast<std::ptrdiff_t>(n));
                std::vector<double> v_sim(sim.speed_sim.begin() + 1, sim.speed_sim.end());
                std::vector<double> v_obs(ev.fv_speed.begin() + 1,
                                          ev.fv_speed.begin() + static_cast<std::ptrdiff_t>(n));
                pm.rmspe_spacing = rmspe(s_sim, s_obs);
                pm.rmspe_speed = rmspe(v_sim, v_obs);
                sp_err.push_back(pm.rmspe_spacing);
                v_err.push_back(pm.rmspe_speed);
            }
            crashed.push_back(sim.collided);
            mr.per_event.push_back(std::move(pm));
        }
        const MeanStd sp = mean_std(sp_err);
        const MeanStd vv = mean_std(v_err);
        mr.rmspe_spacing_mean = sp.mean;
        mr.rmspe_spacing_std = sp.std_dev;
        mr.rmspe_speed_mean = vv.mean;
        mr.rmspe_speed_std = vv.std_dev;
        mr.collision_rate = collision_rate(crashed);
        report.models.push_back(std::move(mr));
    }
    return report;
}

SelectionStats selection_stats(const EnsemblePolicy& policy,
                               const std::vector<std::string>& roster_names,
                               const std::vector<TimeSeriesEvent>& events,
                               const KinematicsConfig& kin) {
    if (policy.mode() != EnsembleMode::discrete) {
        throw std::invalid_argument("selection_stats: policy is not discrete");
    }
    const std::size_t k = policy.roster_size();
    if (roster_names.size() != k) throw std::invalid_argument("selection_stats: name count mismatch");
    std::vector<long> count(k, 0);
    std::vector<Accum> spacing(k), lv(k), rel(k), change(k);
    long total = 0;

    Episode env(kin, RewardConfig{});
    for (const auto& ev : events) {
        env.reset(ev);
        while (!env.done()) {
            const int idx = policy.select_model(env.window());
            const FollowState& st = env.state();
            const std::size_t t = env.cursor();
            const auto ui = static_cast<std::size_t>(idx);
            ++count[ui];
            ++total;
            spacing[ui].add(st.spacing);
            lv[ui].add(st.fv_speed + st.rel_speed);
            rel[ui].add(st.rel_speed);
            if (t >= kHistorySteps) {
                const double ref = ev.lv_speed[t - kHistorySteps];
                if (ref > 1e-9) {
                    change[ui].add(100.0 * (ev.lv_speed[t] - ref) / ref);
                }
            }
            env.step(policy.roster_model(ui).acc(env.window()));
        }
    }

    SelectionStats stats;
    stats.total_steps = total;
    for (std::size_t i = 0; i < k; ++i) {
        SelectionRow row;
        row.model_name = roster_names[i];
        row.ratio_pct = total ? 100.0 * static_cast<double>(count[i]) / static_cast<double>(total) : 0.0;
        row.spacing_mean = spacing[i].mean();
        row.spacing_std = spacing[i].std_dev();
        row.lv_speed_mean = lv[i].mean();
        row.lv_speed_std = lv[i].std_dev();
        row.rel_speed_mean = rel[i].mean();
        row.rel_speed_std = rel[i].std_dev();
        row.lv_change_mean = change[i].mean();
        row.lv_change_std = change[i].std_dev();
        stats.rows.push_back(std::move(row));
    }
    return stats;
}

WeightStats weight_stats(const EnsemblePolicy& policy,
                         const std::vector<std::string>& roster_names,
                         const std::vector<TimeSeriesEvent>& events,
                         const KinematicsConfig& kin) {
    if (policy.mode() != EnsembleMode::convex) {
        throw std::invalid_argument("weight_stats: policy is not convex");
    }
    const std::size_t k = policy.roster_size();
    if (roster_names.size() != k) throw std::invalid_argument("weight_stats: name count mismatch");
    std::vector<Accum> weight(k);
    std::vector<long> primary(k, 0), dominating(k, 0);
    long total = 0;

    Episode env(kin, RewardConfig{});
    for (const auto& ev : events) {
        env.reset(ev);
        while (!env.done()) {
            const Vec w = policy.blend_weights(env.window());
            int top = 0;
            for (int j = 1; j < w.size(); ++j) {
                if (w[j] > w[top]) top = j;
            }
            ++primary[static_cast<std::size_t>(top)];
            ++total;
            double acc = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                const double wj = w[static_cast<Eigen::Index>(j)];
                weight[j].add(wj);
                if (wj > 0.5) ++dominating[j];
                acc += wj * policy.roster_model(j).acc(env.window());
            }
            env.step(acc);
        }
    }

    WeightStats stats;
    stats.total_steps = total;
    for (std::size_t i = 0; i < k; ++i) {
        WeightRow row;
        row.model_name = roster_names[i];
        row.weight_mean = weight[i].mean();
        row.weight_std = weight[i].std_dev();
        row.primary_pct = total ? 100.0 * static_cast<double>(primary[i]) / static_cast<double>(total) : 0.0;
        row.dominating_pct = total ? 100.0 * static_cast<double>(dominating[i]) / static_cast<double>(total) : 0.0;
        stats.rows.push_back(std::move(row));
    }
    return stats;
}

void write_metrics_csv(const EvaluationReport& report, const std::string& path) {
    std::ostringstream out;
    out << "model,rmspe_spacing_mean,rmspe_spacing_std,rmspe_speed_mean,rmspe_speed_std,collision_rate\n";
    for (const auto& m : report.models) {
        out << m.name << "," << fmt_num(m.rmspe_spacing_mean) << "," << fmt_num(m.rmspe_spacing_std)
            << "," << fmt_num(m.rmspe_speed_mean) << "," << fmt_num(m.rmspe_speed_std) << ","
            << fmt_num(m.collision_rate) << "\n";
    }
    write_text_file(path, out.str());
}

void write_selection_stats_csv(const SelectionStats& stats, const std::string& path) {
    std::ostringstream out;
    out << "model,ratio_pct,spacing_mean,spacing_std,lv_speed_mean,lv_speed_std,"
           "rel_speed_mean,rel_speed_std,lv_speed_change_pct_mean,lv_speed_change_pct_std\n";
    for (const auto& r : stats.rows) {
        out << r.model_name << "," << fmt_num(r.ratio_pct) << "," << fmt_num(r.spacing_mean) << ","
            << fmt_num(r.spacing_std) << "," << fmt_num(r.lv_speed_mean) << ","
            << fmt_num(r.lv_speed_std) << "," << fmt_num(r.rel_speed_mean) << ","
            << fmt_num(r.rel_speed_std) << "," << fmt_num(r.lv_change_mean) << ","
            << fmt_num(r.lv_change_std) << "\n";
    }
    write_text_file(path, out.str());
}

void write_weight_stats_csv(const WeightStats& stats, const std::string& path) {
    std::ostringstream out;
    out << "model,weight_mean,weight_std,primary_pct,dominating_pct\n";
    for (const auto& r : stats.rows) {
        out << r.model_name << "," << fmt_num(r.weight_mean) << "," << fmt_num(r.weight_std) << ","
            << fmt_num(r.primary_pct) << "," << fmt_num(r.dominating_pct) << "\n";
    }
    write_text_file(path, out.str());
}

void emit_report(const EvaluationReport& report, const std::vector<TimeSeriesEvent>& events,
                 const std::string& out_dir, const KinematicsConfig& kin,
                 const std::vector<Candidate>& candidates, const SelectionStats* selection,
                 const WeightStats* weights, const ReportOptions& options) {
    if (report.models.empty()) throw std::invalid_argument("emit_report: empty model list");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/plots");

    write_metrics_csv(report, out_dir + "/metrics.csv");

    {
        std::ostringstream out;
        out << "model,event_id,rmspe_spacing,rmspe_speed,collided\n";
        for (const auto& m : report.models) {
            for (const auto& pe : m.per_event) {
                out << m.name << "," << pe.event_id << "," << fmt_num(pe.rmspe_spacing) << ","
                    << fmt_num(pe.rmspe_speed) << "," << (pe.collided ? 1 : 0) << "\n";
            }
        }
        write_text_file(out_dir + "/per_event_metrics.csv", out.str());
    }

    std::vector<BarGroup> sp_bars, v_bars, cr_bars;
    for (const auto& m : report.models) {
        sp_bars.push_back({m.name, m.rmspe_spacing_mean, m.rmspe_spacing_std});
        v_bars.push_back({m.name, m.rmspe_speed_mean, m.rmspe_speed_std});
        cr_bars.push_back({m.name, m.collision_rate, 0.0});
    }
    write_bar_chart(out_dir + "/plots/rmspe_spacing.svg", "Spacing RMSPE (mean and std)",
                    "RMSPE", sp_bars);
    write_bar_chart(out_dir + "/plots/rmspe_speed.svg", "Speed RMSPE (mean and std)", "RMSPE",
                    v_bars);
    write_bar_chart(out_dir + "/plots/collision_rate.svg", "Collision rate", "fraction", cr_bars);

    // Per-event trajectory CSVs and a few overlay plots.
    if (!candidates.empty()) {
        for (const auto& cand : candidates) {
            fs::create_directories(out_dir + "/trajectories/" + safe_name(cand.name));
        }
        const int overlays = std::min<int>(options.max_overlay_events, static_cast<int>(events.size()));
        for (std::size_t e = 0; e < events.size(); ++e) {
            const auto& ev = events[e];
            std::vector<Series> sp_series, v_series;
            std::vector<double> t_axis(ev.length());
            for (std::size_t i = 0; i < ev.length(); ++i) t_axis[i] = static_cast<double>(i) * ev.dt;
            if (static_cast<int>(e) < overlays) {
                sp_series.push_back({"observed", t_axis, ev.spacing});
                v_series.push_back({"observed", t_axis, ev.fv_speed});
            }
            for (const auto& cand : candidates) {
                const SimResult sim = simulate_model_on_event(*cand.model, ev, kin);
                std::ostringstream out;
                out << "t,spacing_obs,spacing_sim,fv_speed_obs,fv_speed_sim\n";
                for (std::size_t i = 0; i < sim.spacing_sim.size(); ++i) {
                    out << fmt_num(static_cast<double>(i) * ev.dt) << "," << fmt_num(ev.spacing[i])
                        << "," << fmt_num(sim.spacing_sim[i]) << "," << fmt_num(ev.fv_speed[i])
                        << "," << fmt_num(sim.speed_sim[i]) << "\n";
                }
                write_text_file(out_dir + "/trajectories/" + safe_name(cand.name) + "/" +
                                    safe_name(ev.event_id) + ".csv",
                                out.str());
                if (static_cast<int>(e) < overlays) {
                    std::vector<double> t_sim(sim.spacing_sim.size());
                    for (std::size_t i = 0; i < t_sim.size(); ++i) t_sim[i] = static_cast<double>(i) * ev.dt;
                    sp_series.push_back({cand.name, t_sim, sim.spacing_sim});
                    v_series.push_back({cand.name, t_sim, sim.speed_sim});
                }
            }
            if (static_cast<int>(e) < overlays) {
                write_line_chart(out_dir + "/plots/overlay_spacing_" + safe_name(ev.event_id) + ".svg",
                                 "Spacing: " + ev.event_id, "time [s]", "spacing [m]", sp_series);
                write_line_chart(out_dir + "/plots/overlay_speed_" + safe_name(ev.event_id) + ".svg",
                                 "Follower speed: " + ev.event_id, "time [s]", "speed [m/s]", v_series);
            }
        }
    }

    if (selection) {
        write_selection_stats_csv(*selection, out_dir + "/selection_stats.csv");
        std::vector<BarGroup> bars;
        for (const auto& r : selection->rows) bars.push_back({r.model_name, r.ratio_pct, 0.0});
        write_bar_chart(out_dir + "/plots/selection_ratio.svg", "Selection ratio", "%", bars);
    }
    if (weights) {
        write_weight_stats_csv(*weights, out_dir + "/weight_stats.csv");
        std::vector<BarGroup> bars;
        for (const auto& r : weights->rows) bars.push_back({r.model_name, r.weight_mean, r.weight_std});
        write_bar_chart(out_dir + "/plots/weight_mean.svg", "Mean weight per model", "weight", bars);
    }
}

}  // namespace ef
