// EnsembleFollower command-line pipeline: synthetic data, ingestion,
// calibration, low- and high-level training, evaluation and reporting.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "ef/calibration.hpp"
#include "ef/cf_models.hpp"
#include "ef/config.hpp"
#include "ef/csv.hpp"
#include "ef/data.hpp"
#include "ef/ensemble.hpp"
#include "ef/eval.hpp"
#include "ef/rl.hpp"

namespace fs = std::filesystem;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string preset = "desk";
    std::string out_dir = "out";
    long long seed = -1;  // <0: keep per-stage seeds from preset/config
};

ef::RunConfig resolve_config(const GlobalArgs& g) {
    ef::RunConfig cfg = ef::make_config(g.preset);
    if (!g.config_path.empty()) ef::apply_config_file(cfg, g.config_path);
    if (g.seed >= 0) ef::set_all_seeds(cfg, static_cast<std::uint64_t>(g.seed));
    return cfg;
}

std::vector<ef::TimeSeriesEvent> load_required(const std::string& path) {
    ef::LoadResult res = ef::load_events(path);
    for (const auto& d : res.diagnostics) std::cerr << "warning: " << d << "\n";
    if (res.events.empty()) throw std::runtime_error(path + ": no usable events");
    return res.events;
}

// "name=path" pairs as repeated CLI options.
std::pair<std::string, std::string> parse_named(const std::string& arg, const char* what) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size()) {
        throw std::runtime_error(std::string(what) + " expects name=path, got '" + arg + "'");
    }
    return {arg.substr(0, eq), arg.substr(eq + 1)};
}

std::unique_ptr<ef::CfModel> load_candidate(const std::string& path) {
    if (fs::path(path).extension() == ".json") return ef::load_policy_bundle(path);
    return ef::load_model_file(path);
}

std::string bundle_relative(const std::string& path, const std::string& out_dir) {
    std::error_code ec;
    const fs::path rel = fs::relative(fs::absolute(path), fs::absolute(out_dir), ec);
    if (ec || rel.empty()) return fs::absolute(path).string();
    return rel.string();
}

void write_fitness_history(const std::string& path, const ef::CalibrationResult& r) {
    std::ostringstream out;
    out << "generation,best_fitness\n";
    for (std::size_t g = 0; g < r.fitness_history.size(); ++g) {
        out << g + 1 << "," << ef::fmt_num(r.fitness_history[g]) << "\n";
    }
    ef::write_text_file(path, out.str());
}

struct RosterArgs {
    std::vector<std::string> entries;  // name=path in action-index order

    std::vector<std::pair<std::string, std::string>> parsed() const {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& e : entries) out.push_back(parse_named(e, "--model"));
        if (out.empty()) throw std::runtime_error("at least one --model name=path is required");
        return out;
    }
};

void save_bundle_and_log(const std::string& out_dir, const std::string& tag,
                         ef::EnsembleMode mode, const ef::MlpNet& net, const ef::Normalizer& norm,
                         const ef::TrainLog& log,
                         const std::vector<std::pair<std::string, std::string>>& roster) {
    const std::string net_path = out_dir + "/" + tag + "_policy.tns";
    ef::save_high_level_net(net_path, net, norm, tag);
    ef::PolicyBundle bundle;
    bundle.mode = mode;
    bundle.high_level_path = tag + "_policy.tns";
    for (const auto& [name, path] : roster) {
        bundle.roster.emplace_back(name, bundle_relative(path, out_dir));
    }
    ef::save_policy_bundle(out_dir + "/" + tag + "_bundle.json", bundle);
    log.write_csv(out_dir + "/" + tag + "_train_log.csv");
}

int run(int argc, char** argv) {
    CLI::App app{"EnsembleFollower car-following pipeline"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "JSON config file overlaying the preset");
    app.add_option("--preset", g.preset, "Configuration preset")
        ->check(CLI::IsMember({"paper", "desk"}));
    app.add_option("--seed", g.seed, "Seed applied to every stage");
    app.add_option("--out", g.out_dir, "Output directory");

    std::string input_path, train_path, test_path;
    std::string calibrate_kind;
    RosterArgs roster;
    std::vector<std::string> candidates;
    std::string bundle_path, ddqn_bundle, ppo_bundle;
    int max_overlays = 3;

    auto* synth = app.add_subcommand("synth", "Generate synthetic car-following events");
    auto* ingest = app.add_subcommand("ingest", "Validate an event CSV and write it back normalized");
    ingest->add_option("--input", input_path, "Event CSV")->required();
    auto* filter = app.add_subcommand("filter", "Drop short or low-speed events");
    filter->add_option("--input", input_path, "Event CSV")->required();
    auto* split = app.add_subcommand("split", "Shuffle and split into train/validation/test");
    split->add_option("--input", input_path, "Event CSV")->required();
    auto* calibrate = app.add_subcommand("calibrate", "GA-calibrate a rule-based model");
    calibrate->add_option("model", calibrate_kind, "Model kind")
        ->required()
        ->check(CLI::IsMember({"idm", "gipps", "fvd"}));
    calibrate->add_option("--train", train_path, "Training event CSV")->required();
    auto* train_rnn = app.add_subcommand("train-rnn", "Behavioral cloning of the recurrent policy");
    train_rnn->add_option("--train", train_path, "Training event CSV")->required();
    auto* train_ddpg = app.add_subcommand("train-ddpg", "Train the continuous low-level policy");
    train_ddpg->add_option("--train", train_path, "Training event CSV")->required();
    auto* train_ef_ddqn = app.add_subcommand("train-ef-ddqn", "Train the discrete-choice coordinator");
    train_ef_ddqn->add_option("--train", train_path, "Training event CSV")->required();
    train_ef_ddqn->add_option("--model", roster.entries, "Roster entry name=path (repeatable, ordered)")
        ->required();
    auto* train_ef_ppo = app.add_subcommand("train-ef-ppo", "Train the convex-combination coordinator");
    train_ef_ppo->add_option("--train", train_path, "Training event CSV")->required();
    train_ef_ppo->add_option("--model", roster.entries, "Roster entry name=path (repeatable, ordered)")
        ->required();
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate candidates on a test set");
    eval_cmd->add_option("--test", test_path, "Test event CSV")->required();
    eval_cmd->add_option("--candidate", candidates, "Candidate name=path (params, policy, or bundle)")
        ->required();
    auto* stats = app.add_subcommand("stats", "Selection or weight statistics of an ensemble bundle");
    stats->add_option("--test", test_path, "Test event CSV")->required();
    stats->add_option("--bundle", bundle_path, "Policy bundle manifest")->required();
    auto* report = app.add_subcommand("report", "Full evaluation report with trajectories and plots");
    report->add_option("--test", test_path, "Test event CSV")->required();
    report->add_option("--candidate", candidates, "Candidate name=path (params, policy, or bundle)")
        ->required();
    report->add_option("--ddqn-bundle", ddqn_bundle, "Discrete bundle for selection statistics");
    report->add_option("--ppo-bundle", ppo_bundle, "Convex bundle for weight statistics");
    report->add_option("--max-overlays", max_overlays, "Trajectory overlay plots to render");

    CLI11_PARSE(app, argc, argv);

    const ef::RunConfig cfg = resolve_config(g);
    fs::create_directories(g.out_dir);

    if (synth->parsed()) {
        const auto events = ef::synthesize_events(cfg.synth, cfg.kinematics);
        ef::write_events(g.out_dir + "/events.csv", events);
        std::cout << "wrote " << events.size() << " events to " << g.out_dir << "/events.csv\n";
        return 0;
    }
    if (ingest->parsed()) {
        ef::LoadResult res = ef::load_events(input_path);
        std::ostringstream diag;
        for (const auto& d : res.diagnostics) diag << d << "\n";
        ef::write_text_file(g.out_dir + "/diagnostics.txt", diag.str());
        for (const auto& d : res.diagnostics) std::cerr << "warning: " << d << "\n";
        ef::write_events(g.out_dir + "/events.csv", res.events);
        std::cout << "accepted " << res.events.size() << " events, rejected "
                  << res.diagnostics.size() << "\n";
        return 0;
    }
    if (filter->parsed()) {
        const auto events = load_required(input_path);
        const auto kept = ef::filter_events(events);
        ef::write_events(g.out_dir + "/events.csv", kept);
        std::cout << "kept " << kept.size() << " of " << events.size() << " events\n";
        return 0;
    }
    if (split->parsed()) {
        const auto events = load_required(input_path);
        const std::uint64_t seed = g.seed >= 0 ? static_cast<std::uint64_t>(g.seed) : cfg.synth.seed;
        const ef::Dataset ds = ef::split(events, 0.7, 0.15, 0.15, seed);
        ef::write_events(g.out_dir + "/train.csv", ds.train);
        ef::write_events(g.out_dir + "/validation.csv", ds.validation);
        ef::write_events(g.out_dir + "/test.csv", ds.test);
        std::cout << "split " << events.size() << " events into " << ds.train.size() << "/"
                  << ds.validation.size() << "/" << ds.test.size() << "\n";
        return 0;
    }
    if (calibrate->parsed()) {
        const auto events = load_required(train_path);
        const auto& bounds = ef::param_bounds(calibrate_kind);
        const ef::CalibrationResult r =
            ef::run_ga(calibrate_kind, bounds, events, cfg.ga, cfg.kinematics);
        if (r.warning_all_crashed) {
            std::cerr << "warning: every candidate crashed on the calibration set\n";
        }
        ef::save_params_file(g.out_dir + "/" + calibrate_kind + "_params.txt", calibrate_kind,
                             r.best_params);
        write_fitness_history(g.out_dir + "/" + calibrate_kind + "_fitness_history.csv", r);
        std::ostringstream summary;
        summary << "kind=" << calibrate_kind << "\n"
                << "best_fitness=" << ef::fmt_num(r.best_fitness) << "\n"
                << "generations=" << r.fitness_history.size() << "\n"
                << "crashes_at_best=" << r.crashes_at_best << "\n";
        ef::write_text_file(g.out_dir + "/" + calibrate_kind + "_calibration.txt", summary.str());
        std::cout << "calibrated " << calibrate_kind << ", fitness " << ef::fmt_num(r.best_fitness)
                  << "\n";
        return 0;
    }
    if (train_rnn->parsed()) {
        const auto events = load_required(train_path);
        const ef::RnnCloneResult r = ef::train_rnn_cloning(events, cfg.rnn);
        ef::save_net_policy(g.out_dir + "/rnn_policy.tns", r.policy, "rnn");
        r.log.write_csv(g.out_dir + "/rnn_train_log.csv");
        std::cout << "trained recurrent policy, final loss "
                  << ef::fmt_num(r.log.rows.back().back()) << "\n";
        return 0;
    }
    if (train_ddpg->parsed()) {
        const auto events = load_required(train_path);
        const ef::DdpgResult r = ef::train_ddpg_lowlevel(events, cfg.ddpg, cfg.kinematics, cfg.reward);
        ef::save_net_policy(g.out_dir + "/ddpg_policy.tns", r.policy, "ddpg");
        r.log.write_csv(g.out_dir + "/ddpg_train_log.csv");
        std::cout << "trained ddpg policy over " << cfg.ddpg.total_steps << " steps\n";
        return 0;
    }
    if (train_ef_ddqn->parsed() || train_ef_ppo->parsed()) {
        const auto events = load_required(train_path);
        const auto entries = roster.parsed();
        std::vector<std::unique_ptr<ef::CfModel>> owned;
        std::vector<const ef::CfModel*> models;
        for (const auto& [name, path] : entries) {
            (void)name;
            owned.push_back(ef::load_model_file(path));
            models.push_back(owned.back().get());
        }
        if (train_ef_ddqn->parsed()) {
            const ef::EfDdqnResult r =
                ef::train_ef_ddqn(events, models, cfg.ddqn, cfg.kinematics, cfg.reward);
            save_bundle_and_log(g.out_dir, "ef_ddqn", ef::EnsembleMode::discrete, r.q, r.norm,
                                r.log, entries);
            std::cout << "trained ef-ddqn over " << cfg.ddqn.total_steps << " steps\n";
        } else {
            const ef::EfPpoResult r =
                ef::train_ef_ppo(events, models, cfg.ppo, cfg.kinematics, cfg.reward);
            save_bundle_and_log(g.out_dir, "ef_ppo", ef::EnsembleMode::convex, r.actor, r.norm,
                                r.log, entries);
            // The critic is only needed to resume training; stored for completeness.
            ef::TensorFile critic;
            critic.meta.emplace_back("kind", "ef_ppo_critic");
            ef::pack_mlp(critic, r.critic);
            ef::save_tensor_file(g.out_dir + "/ef_ppo_critic.tns", critic);
            std::cout << "trained ef-ppo over " << cfg.ppo.total_steps << " steps\n";
        }
        return 0;
    }
    if (eval_cmd->parsed() || report->parsed()) {
        const auto events = load_required(test_path);
        std::vector<std::unique_ptr<ef::CfModel>> owned;
        std::vector<ef::Candidate> cands;
        for (const auto& c : candidates) {
            const auto [name, path] = parse_named(c, "--candidate");
            owned.push_back(load_candidate(path));
            cands.push_back({name, owned.back().get()});
        }
        ef::EvaluationReport rep = ef::compare_models(cands, events, cfg.kinematics);
        rep.preset = cfg.preset;
        if (eval_cmd->parsed()) {
            ef::write_metrics_csv(rep, g.out_dir + "/metrics.csv");
            std::ostringstream out;
            out << "model,event_id,rmspe_spacing,rmspe_speed,collided\n";
            for (const auto& m : rep.models) {
                for (const auto& pe : m.per_event) {
                    out << m.name << "," << pe.event_id << "," << ef::fmt_num(pe.rmspe_spacing)
                        << "," << ef::fmt_num(pe.rmspe_speed) << "," << (pe.collided ? 1 : 0)
                        << "\n";
                }
            }
            ef::write_text_file(g.out_dir + "/per_event_metrics.csv", out.str());
        } else {
            ef::SelectionStats sel;
            ef::WeightStats wst;
            const ef::SelectionStats* sel_p = nullptr;
            const ef::WeightStats* wst_p = nullptr;
            if (!ddqn_bundle.empty()) {
                const auto policy = ef::load_policy_bundle(ddqn_bundle);
                std::vector<std::string> names;
                for (const auto& [n, p] : ef::read_policy_bundle(ddqn_bundle).roster) {
                    (void)p;
                    names.push_back(n);
                }
                sel = ef::selection_stats(*policy, names, events, cfg.kinematics);
                sel_p = &sel;
            }
            if (!ppo_bundle.empty()) {
                const auto policy = ef::load_policy_bundle(ppo_bundle);
                std::vector<std::string> names;
                for (const auto& [n, p] : ef::read_policy_bundle(ppo_bundle).roster) {
                    (void)p;
                    names.push_back(n);
                }
                wst = ef::weight_stats(*policy, names, events, cfg.kinematics);
                wst_p = &wst;
            }
            ef::ReportOptions opts;
            opts.max_overlay_events = max_overlays;
            ef::emit_report(rep, events, g.out_dir, cfg.kinematics, cands, sel_p, wst_p, opts);
        }
        std::cout << "evaluated " << cands.size() << " candidates on " << events.size()
                  << " events\n";
        return 0;
    }
    if (stats->parsed()) {
        const auto events = load_required(test_path);
        const auto policy = ef::load_policy_bundle(bundle_path);
        std::vector<std::string> names;
        for (const auto& [n, p] : ef::read_policy_bundle(bundle_path).roster) {
            (void)p;
            names.push_back(n);
        }
        if (policy->mode() == ef::EnsembleMode::discrete) {
            const ef::SelectionStats s = ef::selection_stats(*policy, names, events, cfg.kinematics);
            ef::write_selection_stats_csv(s, g.out_dir + "/selection_stats.csv");
            std::cout << "selection stats over " << s.total_steps << " steps\n";
        } else {
            const ef::WeightStats s = ef::weight_stats(*policy, names, events, cfg.kinematics);
            ef::write_weight_stats_csv(s, g.out_dir + "/weight_stats.csv");
            std::cout << "weight stats over " << s.total_steps << " steps\n";
        }
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error (input): " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        std::cerr << "error (input): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error (internal): " << e.what() << "\n";
        return 3;
    }
}
