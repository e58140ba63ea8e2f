#include "ef/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ef/csv.hpp"
#include "ef/rng.hpp"

namespace ef {

LeaderProfile leader_profile_from_string(const std::string& s) {
    if (s == "piecewise_accel") return LeaderProfile::piecewise_accel;
    if (s == "sinusoidal") return LeaderProfile::sinusoidal;
    if (s == "brake_pulse") return LeaderProfile::brake_pulse;
    if (s == "mixed") return LeaderProfile::mixed;
    if (s == "constant") return LeaderProfile::constant;
    throw std::invalid_argument("unknown leader profile: " + s);
}

std::string to_string(LeaderProfile p) {
    switch (p) {
        case LeaderProfile::piecewise_accel: return "piecewise_accel";
        case LeaderProfile::sinusoidal: return "sinusoidal";
        case LeaderProfile::brake_pulse: return "brake_pulse";
        case LeaderProfile::mixed: return "mixed";
        case LeaderProfile::constant: return "constant";
    }
    return "?";
}

namespace {

struct RawRow {
    double t;
    double lv;
    double fv;
    double sp;
    std::size_t line_no;  // 1-based line in the file, for diagnostics
};

}  // namespace

LoadResult load_events(const std::string& path, const CsvSchema& schema) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw std::runtime_error(path + ": empty file");
    const auto header = split_csv_line(lines[0]);
    const auto col_of = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::runtime_error(path + ": missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_id = col_of(schema.event_id);
    const std::size_t c_t = col_of(schema.t);
    const std::size_t c_lv = col_of(schema.lv_speed);
    const std::size_t c_fv = col_of(schema.fv_speed);
    const std::size_t c_sp = col_of(schema.spacing);

    // Group rows by event id, keeping first-appearance order.
    std::vector<std::string> order;
    std::map<std::string, std::vector<RawRow>> groups;
    std::map<std::string, std::string> bad;  // event id -> first diagnostic

    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto cells = split_csv_line(lines[i]);
        const std::size_t want = std::max({c_id, c_t, c_lv, c_fv, c_sp}) + 1;
        if (cells.size() < want) throw std::runtime_error(path + ": row " + std::to_string(i + 1) + " has too few cells");
        const std::string id = cells[c_id];
        if (groups.find(id) == groups.end()) order.push_back(id);
        auto& rows = groups[id];
        if (bad.count(id)) continue;
        const auto t = parse_double(cells[c_t]);
        const auto lv = parse_double(cells[c_lv]);
        const auto fv = parse_double(cells[c_fv]);
        const auto sp = parse_double(cells[c_sp]);
        if (!t || !lv || !fv || !sp) {
            bad[id] = "event " + id + ": non-numeric cell at line " + std::to_string(i + 1);
            continue;
        }
        if (*lv < 0.0 || *fv < 0.0) {
            bad[id] = "event " + id + ": negative speed at line " + std::to_string(i + 1);
            continue;
        }
        if (*sp <= 0.0) {
            bad[id] = "event " + id + ": non-positive spacing at line " + std::to_string(i + 1);
            continue;
        }
        rows.push_back({*t, *lv, *fv, *sp, i + 1});
    }

    LoadResult result;
    for (const auto& id : order) {
        if (const auto it = bad.find(id); it != bad.end()) {
            result.diagnostics.push_back(it->second);
            continue;
        }
        auto rows = groups[id];
        std::stable_sort(rows.begin(), rows.end(),
                         [](const RawRow& a, const RawRow& b) { return a.t < b.t; });
        if (rows.size() < 2) {
            result.diagnostics.push_back("event " + id + ": fewer than 2 samples");
            continue;
        }
        bool ok = true;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double step = rows[i].t - rows[i - 1].t;
            if (std::abs(step - kSampleDt) > 1e-6) {
                result.diagnostics.push_back("event " + id + ": nonuniform dt " + fmt_num(step) +
                                             " at line " + std::to_string(rows[i].line_no));
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        TimeSeriesEvent ev;
        ev.event_id = id;
        ev.dt = kSampleDt;
        for (const auto& r : rows) {
            ev.lv_speed.push_back(r.lv);
            ev.fv_speed.push_back(r.fv);
            ev.spacing.push_back(r.sp);
        }
        result.events.push_back(std::move(ev));
    }
    return result;
}

void write_events(const std::string& path, const std::vector<TimeSeriesEvent>& events,
                  const CsvSchema& schema) {
    std::ostringstream out;
    out << schema.event_id << "," << schema.t << "," << schema.lv_speed << ","
        << schema.fv_speed << "," << schema.spacing << "\n";
    for (const auto& ev : events) {
        for (std::size_t i = 0; i < ev.length(); ++i) {
            out << ev.event_id << "," << fmt_num(static_cast<double>(i) * ev.dt) << ","
                << fmt_num(ev.lv_speed[i]) << "," << fmt_num(ev.fv_speed[i]) << ","
                << fmt_num(ev.spacing[i]) << "\n";
        }
    }
    write_text_file(path, out.str());
}

std::vector<TimeSeriesEvent> filter_events(const std::vector<TimeSeriesEvent>& events,
                                           double min_duration, double low_speed_threshold,
                                           double max_low_speed_run) {
    std::vector<TimeSeriesEvent> kept;
    for (const auto& ev : events) {
        if (ev.duration() < min_duration) continue;
        std::size_t run = 0;
        bool too_slow = false;
        for (double v : ev.fv_speed) {
            run = (v < low_speed_threshold) ? run + 1 : 0;
            if (static_cast<double>(run) * ev.dt > max_low_speed_run) {
                too_slow = true;
                break;
            }
        }
        if (!too_slow) kept.push_back(ev);
    }
    return kept;
}

Dataset split(const std::vector<TimeSeriesEvent>& events, double train_ratio,
              double validation_ratio, double test_ratio, std::uint64_t seed) {
    if (std::abs(train_ratio + validation_ratio + test_ratio - 1.0) > 1e-9) {
        throw std::invalid_argument("split: ratios must sum to 1");
    }
    const std::size_t n = events.size();
    if (n < 3) throw std::invalid_argument("split: need at least 3 events");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);

    std::size_t n_train = static_cast<std::size_t>(std::floor(train_ratio * static_cast<double>(n)));
    std::size_t n_val = static_cast<std::size_t>(std::floor(validation_ratio * static_cast<double>(n)));
    std::size_t n_test = static_cast<std::size_t>(std::floor(test_ratio * static_cast<double>(n)));
    // Hand the rounding remainder to train, then validation.
    std::size_t rem = n - (n_train + n_val + n_test);
    if (rem > 0) { ++n_train; --rem; }
    if (rem > 0) { ++n_val; --rem; }
    if (rem > 0) { n_test += rem; }

    Dataset ds;
    ds.split_seed = seed;
    for (std::size_t i = 0; i < n; ++i) {
        const TimeSeriesEvent& ev = events[idx[i]];
        if (i < n_train) ds.train.push_back(ev);
        else if (i < n_train + n_val) ds.validation.push_back(ev);
        else ds.test.push_back(ev);
    }
    return ds;
}

DerivedFields derive_fields(const TimeSeriesEvent& ev) {
    const std::size_t n = ev.length();
    DerivedFields out;
    out.relative_speed.resize(n);
    out.fv_accel.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.relative_speed[i] = ev.lv_speed[i] - ev.fv_speed[i];
    }
    if (n == 1) {
        out.fv_accel[0] = 0.0;
        return out;
    }
    out.fv_accel[0] = (ev.fv_speed[1] - ev.fv_speed[0]) / ev.dt;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        out.fv_accel[i] = (ev.fv_speed[i + 1] - ev.fv_speed[i - 1]) / (2.0 * ev.dt);
    }
    out.fv_accel[n - 1] = (ev.fv_speed[n - 1] - ev.fv_speed[n - 2]) / ev.dt;
    return out;
}

namespace {

std::vector<double> leader_series(LeaderProfile profile, const SynthConfig& cfg,
                                  std::size_t samples, Rng& rng) {
    std::vector<double> v(samples);
    const double base = rng.uniform(cfg.base_speed_min, cfg.base_speed_max);
    switch (profile) {
        case LeaderProfile::piecewise_accel: {
            double speed = base;
            double accel = 0.0;
            double until = 0.0;
            for (std::size_t i = 0; i < samples; ++i) {
                const double t = static_cast<double>(i) * kSampleDt;
                if (t >= until) {
                    accel = rng.uniform(-1.2, 1.2);
                    until = t + rng.uniform(2.0, 5.0);
                }
                v[i] = speed;
                speed = std::clamp(speed + accel * kSampleDt, 2.0, 40.0);
            }
            break;
        }
        case LeaderProfile::sinusoidal: {
            const double amp = rng.uniform(1.0, std::min(4.0, base - 2.0));
            const double period = rng.uniform(6.0, 14.0);
            const double phase = rng.uniform(0.0, 2.0 * M_PI);
            for (std::size_t i = 0; i < samples; ++i) {
                const double t = static_cast<double>(i) * kSampleDt;
                v[i] = base + amp * std::sin(2.0 * M_PI * t / period + phase);
            }
            break;
        }
        case LeaderProfile::brake_pulse: {
            const double floor_v = cfg.pulse_floor;
            const double decel = rng.uniform(1.0, 2.5);
            const double accel = rng.uniform(0.8, 1.6);
            const double t_brake = rng.uniform(2.0, 0.3 * cfg.duration);
            const double hold = rng.uniform(1.0, 3.0);
            double speed = std::max(base, floor_v + 2.0);
            enum { cruise, braking, holding, recover } phase = cruise;
            double hold_until = 0.0;
            for (std::size_t i = 0; i < samples; ++i) {
                const double t = static_cast<double>(i) * kSampleDt;
                v[i] = speed;
                switch (phase) {
                    case cruise:
                        if (t >= t_brake) phase = braking;
                        break;
                    case braking:
                        speed -= decel * kSampleDt;
                        if (speed <= floor_v) {
                            speed = floor_v;  // pulse floor reached exactly
                            phase = holding;
                            hold_until = t + hold;
                        }
                        break;
                    case holding:
                        if (t >= hold_until) phase = recover;
                        break;
                    case recover:
                        speed = std::min(speed + accel * kSampleDt, base);
                        break;
                }
            }
            break;
        }
        case LeaderProfile::constant:
            std::fill(v.begin(), v.end(), base);
            break;
        case LeaderProfile::mixed:
            throw std::logic_error("leader_series: mixed resolved by caller");
    }
    for (double& s : v) s = std::max(s, 0.0);
    return v;
}

// Rolls the follower model behind a fixed leader series. Returns false when
// a collision occurred.
bool roll_follower(const CfModel& model, const std::vector<double>& lv, double init_gap,
                   double noise_std, const KinematicsConfig& kin, Rng& rng,
                   std::vector<double>& fv_out, std::vector<double>& sp_out) {
    const std::size_t n = lv.size();
    fv_out.assign(n, 0.0);
    sp_out.assign(n, 0.0);
    FollowState state{init_gap, lv[0], 0.0};
    ClipContext ctx;
    StateWindow window(kHistorySteps);
    window.fill(state);
    fv_out[0] = state.fv_speed;
    sp_out[0] = state.spacing;
    for (std::size_t i = 1; i < n; ++i) {
        double cmd = model.acc(window);
        if (noise_std > 0.0) cmd += rng.normal(0.0, noise_std);
        auto [next, next_ctx] = step_jerk_constrained(state, ctx, cmd, lv[i], kin);
        state = next;
        ctx = next_ctx;
        window.push(state);
        fv_out[i] = state.fv_speed;
        sp_out[i] = state.spacing;
        if (collided(state)) return false;
    }
    return true;
}

}  // namespace

std::vector<TimeSeriesEvent> synthesize_events(const SynthConfig& cfg, const KinematicsConfig& kin) {
    if (cfg.duration < 15.0) throw std::invalid_argument("synthesize_events: duration must be >= 15 s");
    if (cfg.noise_std < 0.0) throw std::invalid_argument("synthesize_events: negative noise_std");
    const auto model = make_model(cfg.ground_truth);
    const auto samples = static_cast<std::size_t>(std::llround(cfg.duration / kSampleDt));
    Rng rng(cfg.seed);

    static const LeaderProfile cycle[] = {LeaderProfile::piecewise_accel,
                                          LeaderProfile::sinusoidal,
                                          LeaderProfile::brake_pulse};
    std::vector<TimeSeriesEvent> events;
    events.reserve(static_cast<std::size_t>(cfg.n_events));
    for (int e = 0; e < cfg.n_events; ++e) {
        const LeaderProfile profile = (cfg.profile == LeaderProfile::mixed)
                                          ? cycle[static_cast<std::size_t>(e) % 3]
                                          : cfg.profile;
        const auto lv = leader_series(profile, cfg, samples, rng);
        double gap = equilibrium_gap(*model, lv[0]) * (1.0 + cfg.init_gap_jitter * rng.uniform01());
        std::vector<double> fv, sp;
        bool ok = false;
        for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
            ok = roll_follower(*model, lv, gap, cfg.noise_std, kin, rng, fv, sp);
            if (!ok) gap *= 1.5;
        }
        if (!ok) {
            throw std::runtime_error("synthesize_events: collision persisted after 10 retries (event " +
                                     std::to_string(e) + ")");
        }
        TimeSeriesEvent ev;
        ev.event_id = "synth" + std::to_string(e);
        ev.dt = kSampleDt;
        ev.lv_speed = lv;
        ev.fv_speed = std::move(fv);
        ev.spacing = std::move(sp);
        events.push_back(std::move(ev));
    }
    return events;
}

}  // namespace ef
