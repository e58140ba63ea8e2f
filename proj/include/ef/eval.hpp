#pragma once

#include <string>
#include <vector>

#include "ef/calibration.hpp"
#include "ef/cf_models.hpp"
#include "ef/data.hpp"
#include "ef/ensemble.hpp"

namespace ef {

/// Root mean square percentage error between a simulated and an observed
/// series: sqrt(sum((sim-obs)^2) / sum(obs^2)).
double rmspe(const std::vector<double>& sim, const std::vector<double>& obs);

double collision_rate(const std::vector<bool>& collided_per_event);

struct PerEventMetrics {
    std::string event_id;
    double rmspe_spacing = 0.0;
    double rmspe_speed = 0.0;
    bool collided = false;
};

struct ModelReport {
    std::string name;
    double rmspe_spacing_mean = 0.0;
    double rmspe_spacing_std = 0.0;
    double rmspe_speed_mean = 0.0;
    double rmspe_speed_std = 0.0;
    double collision_rate = 0.0;
    std::vector<PerEventMetrics> per_event;
};

struct EvaluationReport {
    std::vector<ModelReport> models;
    std::uint64_t seed = 0;
    std::string preset;
};

struct Candidate {
    std::string name;
    const CfModel* model = nullptr;
};

/// Simulates every candidate over every test event through the
/// jerk-constrained kinematics and aggregates per-event RMSPEs (mean and
/// population std across events) plus the collision rate.
EvaluationReport compare_models(const std::vector<Candidate>& candidates,
                                const std::vector<TimeSeriesEvent>& events,
                                const KinematicsConfig& kin = {});

struct SelectionRow {
    std::string model_name;
    double ratio_pct = 0.0;
    double spacing_mean = 0.0, spacing_std = 0.0;
    double lv_speed_mean = 0.0, lv_speed_std = 0.0;
    double rel_speed_mean = 0.0, rel_speed_std = 0.0;
    double lv_change_mean = 0.0, lv_change_std = 0.0;  // % over the preceding 1 s
};

struct SelectionStats {
    std::vector<SelectionRow> rows;  // roster order
    long total_steps = 0;
};

/// Rolls a discrete-mode policy over the events and aggregates the state
/// context at each selection instant. The leader-speed change is the percent
/// change over the preceding second (steps whose lookback leaves the event,
/// or whose reference speed is ~0, are excluded from that column only).
SelectionStats selection_stats(const EnsemblePolicy& policy,
                               const std::vector<std::string>& roster_names,
                               const std::vector<TimeSeriesEvent>& events,
                               const KinematicsConfig& kin = {});

struct WeightRow {
    std::string model_name;
    double weight_mean = 0.0;
    double weight_std = 0.0;
    double primary_pct = 0.0;     // share of steps with the largest weight
    double dominating_pct = 0.0;  // share of steps with weight > 0.5
};

struct WeightStats {
    std::vector<WeightRow> rows;
    long total_steps = 0;
};

WeightStats weight_stats(const EnsemblePolicy& policy,
                         const std::vector<std::string>& roster_names,
                         const std::vector<TimeSeriesEvent>& events,
                         const KinematicsConfig& kin = {});

struct ReportOptions {
    int max_overlay_events = 3;  // trajectory overlay plots emitted per run
};

/// Writes metrics.csv, per_event_metrics.csv, per-event trajectory CSVs
/// (observed vs simulated), and SVG charts under out_dir. Stats tables are
/// optional extras rendered when provided.
void emit_report(const EvaluationReport& report, const std::vector<TimeSeriesEvent>& events,
                 const std::string& out_dir, const KinematicsConfig& kin = {},
                 const std::vector<Candidate>& candidates = {},
                 const SelectionStats* selection = nullptr, const WeightStats* weights = nullptr,
                 const ReportOptions& options = {});

void write_metrics_csv(const EvaluationReport& report, const std::string& path);
void write_selection_stats_csv(const SelectionStats& stats, const std::string& path);
void write_weight_stats_csv(const WeightStats& stats, const std::string& path);

}  // namespace ef
