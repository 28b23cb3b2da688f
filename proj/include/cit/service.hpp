#pragma once

// Command-line surface: config file handling, the what-if conditional query,
// and the subcommands wiring the pipeline together (ingest, synth, train,
// eval, predict, whatif, ablate).

#include <cit/data.hpp>
#include <cit/metrics.hpp>
#include <cit/model.hpp>
#include <cit/synth.hpp>
#include <cit/train.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cit {

// exit codes beyond CLI parse errors; documented in the README
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitUsage = 2,
    kExitMissingFile = 3,
    kExitMalformedData = 4,
    kExitDimMismatch = 5,
    kExitDiverged = 6,
};

// --- what-if conditional scoring ------------------------------------------------

// One scene, K candidate ego plans, one frozen model.
struct WhatIfQuery {
    Instance instance; // ground-truth futures not required
    std::vector<EgoPlan> candidates;
};

// Runs the conditional forward pass once per candidate; everything except the
// plan is shared. Output order matches candidate order.
inline std::vector<PredictionSet> whatif(const ModelParams& params, const RunConfig& cfg,
                                         const WhatIfQuery& query) {
    if (query.candidates.empty()) throw std::invalid_argument("whatif: needs at least 1 candidate");
    const long rows0 = query.candidates[0].points.rows();
    const double rate0 = query.candidates[0].rate;
    for (const auto& plan : query.candidates) {
        plan.validate();
        if (plan.points.rows() != rows0 || plan.rate != rate0)
            throw std::invalid_argument("whatif: candidate horizon mismatch");
        const long expected = rate0 == 5.0 ? cfg.t_pred
                                           : static_cast<long>(cfg.t_pred / cfg.rate);
        if (plan.points.rows() != expected)
            throw std::invalid_argument("whatif: candidate horizon mismatch");
    }
    std::vector<PredictionSet> out(query.candidates.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(std::max(1, cfg.threads))
#endif
    for (size_t k = 0; k < query.candidates.size(); ++k)
        out[k] = predict(params, cfg, query.instance, query.candidates[k]);
    return out;
}

// --- key = value config files ------------------------------------------------------

class KeyValueConfig {
public:
    static KeyValueConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file: " + path);
        KeyValueConfig cfg;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": expected key = value");
            cfg.values_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        }
        return cfg;
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }
    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            return std::stod(it->second);
        } catch (const std::exception&) {
            throw std::runtime_error("config key " + key + ": not a number: " + it->second);
        }
    }
    long get_long(const std::string& key, long fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            return std::stol(it->second);
        } catch (const std::exception&) {
            throw std::runtime_error("config key " + key + ": not an integer: " + it->second);
        }
    }
    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        const std::string& v = it->second;
        if (v == "on" || v == "true" || v == "1") return true;
        if (v == "off" || v == "false" || v == "0") return false;
        throw std::runtime_error("config key " + key + ": not a boolean: " + v);
    }

    // every key consumed by run_config/scenario_config/split_spec
    void check_known_keys() const {
        static const std::vector<std::string> known = {
            "seed", "threads", "grid.length_ft", "grid.width_ft", "grid.rows", "grid.cols",
            "dims.d_model", "dims.conv_ch", "dims.d_dec", "dims.head_hidden", "dims.fcn_mid",
            "t_obs", "t_pred", "rate", "lrelu_alpha", "lr", "lr_final_frac", "batch", "epochs", "grad_clip",
            "stride", "toggles.info_c", "toggles.info_f", "toggles.icd", "toggles.iie",
            "toggles.fusion", "split.train", "split.val", "split.test", "split.seed",
            "synth.lanes", "synth.agents", "synth.scenes", "synth.frames", "synth.lane_width",
            "synth.speed_min", "synth.speed_max", "synth.decel_min", "synth.decel_max",
            "synth.react_lag_s", "synth.brake_branch_prob", "synth.fixed_brake_onset",
            "synth.brake_floor_speed", "synth.follow_gap_min", "synth.follow_gap_max",
            "synth.mix.cruise", "synth.mix.lane_change", "synth.mix.brake",
            "synth.mix.follow_react"};
        for (const auto& [key, value] : values_) {
            if (std::find(known.begin(), known.end(), key) == known.end())
                throw std::runtime_error("unknown config key: " + key);
        }
    }

private:
    std::map<std::string, std::string> values_;
};

inline RunConfig run_config_from(const KeyValueConfig& kv) {
    RunConfig cfg;
    cfg.seed = static_cast<uint64_t>(kv.get_long("seed", 0));
    cfg.threads = static_cast<int>(kv.get_long("threads", 2));
    cfg.grid.length_ft = kv.get_double("grid.length_ft", 200.0);
    cfg.grid.width_ft = kv.get_double("grid.width_ft", 35.0);
    cfg.grid.rows = static_cast<int>(kv.get_long("grid.rows", 25));
    cfg.grid.cols = static_cast<int>(kv.get_long("grid.cols", 5));
    cfg.dims.d_model = static_cast<int>(kv.get_long("dims.d_model", 64));
    cfg.dims.conv_ch = static_cast<int>(kv.get_long("dims.conv_ch", 32));
    cfg.dims.d_dec = static_cast<int>(kv.get_long("dims.d_dec", 128));
    cfg.dims.head_hidden = static_cast<int>(kv.get_long("dims.head_hidden", 64));
    cfg.dims.fcn_mid = static_cast<int>(kv.get_long("dims.fcn_mid", 128));
    cfg.t_obs = static_cast<int>(kv.get_long("t_obs", 15));
    cfg.t_pred = static_cast<int>(kv.get_long("t_pred", 25));
    cfg.rate = kv.get_double("rate", 5.0);
    cfg.lrelu_alpha = kv.get_double("lrelu_alpha", 0.1);
    cfg.lr = kv.get_double("lr", 1e-3);
    cfg.lr_final_frac = kv.get_double("lr_final_frac", 1.0);
    cfg.batch = static_cast<int>(kv.get_long("batch", 16));
    cfg.epochs = static_cast<int>(kv.get_long("epochs", 10));
    cfg.grad_clip = kv.get_double("grad_clip", 10.0);
    cfg.stride = kv.get_long("stride", 5);
    cfg.toggles.info_c = kv.get_bool("toggles.info_c", true);
    cfg.toggles.info_f = kv.get_bool("toggles.info_f", true);
    cfg.toggles.icd = icd_from_string(kv.get_string("toggles.icd", "cross"));
    cfg.toggles.iie = kv.get_bool("toggles.iie", true);
    cfg.toggles.fusion = kv.get_bool("toggles.fusion", true);
    cfg.validate();
    return cfg;
}

inline ScenarioConfig scenario_config_from(const KeyValueConfig& kv) {
    ScenarioConfig sc;
    sc.lanes = static_cast<int>(kv.get_long("synth.lanes", 3));
    sc.agents = static_cast<int>(kv.get_long("synth.agents", 3));
    sc.scenes = static_cast<int>(kv.get_long("synth.scenes", 8));
    sc.frames = static_cast<int>(kv.get_long("synth.frames", 80));
    sc.lane_width = kv.get_double("synth.lane_width", 3.7);
    sc.speed_min = kv.get_double("synth.speed_min", 20.0);
    sc.speed_max = kv.get_double("synth.speed_max", 30.0);
    sc.decel_min = kv.get_double("synth.decel_min", 2.0);
    sc.decel_max = kv.get_double("synth.decel_max", 4.0);
    sc.react_lag_s = kv.get_double("synth.react_lag_s", 0.6);
    sc.brake_branch_prob = kv.get_double("synth.brake_branch_prob", 0.5);
    sc.fixed_brake_onset = static_cast<int>(kv.get_long("synth.fixed_brake_onset", -1));
    sc.brake_floor_speed = kv.get_double("synth.brake_floor_speed", 0.0);
    sc.follow_gap_min = kv.get_double("synth.follow_gap_min", 18.0);
    sc.follow_gap_max = kv.get_double("synth.follow_gap_max", 25.0);
    sc.mix.cruise = kv.get_double("synth.mix.cruise", 0.25);
    sc.mix.lane_change = kv.get_double("synth.mix.lane_change", 0.25);
    sc.mix.brake = kv.get_double("synth.mix.brake", 0.25);
    sc.mix.follow_react = kv.get_double("synth.mix.follow_react", 0.25);
    return sc;
}

inline SplitSpec split_spec_from(const KeyValueConfig& kv, uint64_t default_seed) {
    SplitSpec spec;
    spec.train_frac = kv.get_double("split.train", 0.7);
    spec.val_frac = kv.get_double("split.val", 0.1);
    spec.test_frac = kv.get_double("split.test", 0.2);
    spec.seed = static_cast<uint64_t>(kv.get_long("split.seed", static_cast<long>(default_seed)));
    return spec;
}

// --- data plumbing shared by the subcommands ------------------------------------

namespace cli_detail {

inline void require_file(const std::string& path) {
    if (!std::filesystem::exists(path)) throw std::system_error(
        std::make_error_code(std::errc::no_such_file_or_directory), path);
}

// instance cache (JSONL) or track CSV, by content sniffing
inline std::vector<Instance> load_dataset(const std::string& path, const std::string& format,
                                          const RunConfig& cfg) {
    require_file(path);
    std::ifstream probe(path);
    std::string first;
    std::getline(probe, first);
    probe.close();
    if (!first.empty() && first[0] == '{') return load_instances(path);
    auto tracks = load_tracks(path, track_format_from_string(format));
    tracks = resample_tracks(tracks, cfg.rate);
    ExtractOptions opt;
    opt.t_obs = cfg.t_obs;
    opt.t_pred = cfg.t_pred;
    opt.stride = cfg.stride;
    opt.rate = cfg.rate;
    return extract_instances(tracks, cfg.grid, opt).instances;
}

inline std::vector<Instance> select_subset(std::vector<Instance> all, const std::string& subset,
                                           const KeyValueConfig& kv, uint64_t seed) {
    if (subset == "all") return all;
    auto split = split_dataset(all, split_spec_from(kv, seed));
    if (subset == "train") return split.train;
    if (subset == "val") return split.val;
    if (subset == "test") return split.test;
    throw std::runtime_error("unknown subset: " + subset);
}

inline nlohmann::json prediction_record(const Instance& inst, const TargetPrediction& tp, int k,
                                        double rate) {
    const ManeuverLabel m = ManeuverLabel::from_joint(k);
    nlohmann::json frames = nlohmann::json::array();
    const auto& steps = tp.trajectories[static_cast<size_t>(k)].steps;
    for (size_t f = 0; f < steps.size(); ++f) {
        frames.push_back({{"t", inst.t + static_cast<long>(f) + 1},
                          {"mu", {steps[f].mu.x(), steps[f].mu.y()}},
                          {"sigma", {steps[f].sigma.x(), steps[f].sigma.y()}},
                          {"rho", steps[f].rho}});
    }
    return {{"ego_id", inst.ego_id},
            {"t", inst.t},
            {"rate", rate},
            {"target_id", tp.target_id},
            {"maneuver", {{"lat", to_string(m.lateral)}, {"lon", to_string(m.longitudinal)}}},
            {"p_lat", tp.dist.p_lat[static_cast<int>(m.lateral)]},
            {"p_lon", tp.dist.p_lon[static_cast<int>(m.longitudinal)]},
            {"p_joint", tp.dist.p_joint(m)},
            {"frames", std::move(frames)}};
}

inline nlohmann::json prediction_set_json(const Instance& inst, const PredictionSet& preds,
                                          double rate) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& tp : preds)
        for (int k = 0; k < kManeuverCount; ++k)
            arr.push_back(prediction_record(inst, tp, k, rate));
    return arr;
}

inline std::vector<EgoPlan> load_candidates(const std::string& path) {
    require_file(path);
    std::ifstream in(path);
    nlohmann::json doc = nlohmann::json::parse(in);
    if (!doc.is_array() || doc.empty())
        throw std::runtime_error(path + ": expected a non-empty JSON array of candidate plans");
    std::vector<EgoPlan> plans;
    for (const auto& pj : doc) {
        EgoPlan plan;
        plan.rate = pj.at("rate").get<double>();
        const auto& pts = pj.at("points");
        plan.points.resize(static_cast<long>(pts.size()), 2);
        for (size_t i = 0; i < pts.size(); ++i) {
            plan.points(static_cast<long>(i), 0) = pts[i][0].get<double>();
            plan.points(static_cast<long>(i), 1) = pts[i][1].get<double>();
        }
        plans.push_back(std::move(plan));
    }
    return plans;
}

inline double parse_plan_rate(const std::string& s) {
    if (s == "1hz" || s == "1") return 1.0;
    if (s == "5hz" || s == "5") return 5.0;
    throw std::runtime_error("plan rate must be 1hz or 5hz, got: " + s);
}

} // namespace cli_detail

// Entry point behind tools/cit. Returns a process exit code.
inline int run_command(int argc, char** argv) {
    CLI::App app{"conditional multi-agent trajectory forecasting toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "key = value config file")
        ->envname("CIT_CONFIG");
    app.add_option("--set", overrides, "override a config key, e.g. --set epochs=5");

    // shared per-subcommand options
    std::string in_path, out_path, data_path, ckpt_path, format = "synthetic-native";
    std::string plan_rate_s = "5hz", subset = "all", nll_mode_s = "mixture";
    std::string candidates_path, variants_s = "variant1,variant2,variant3,variant4,variant5,full";
    long instance_index = 0;
    bool do_split = false, emit_text = false;

    auto* synth = app.add_subcommand("synth", "generate a synthetic track table");
    synth->add_option("--out", out_path, "output CSV path")->required();

    auto* ingest = app.add_subcommand("ingest", "extract an instance cache from a track table");
    ingest->add_option("--in", in_path, "input track CSV")->required();
    ingest->add_option("--format", format, "ngsim | highd | synthetic-native");
    ingest->add_option("--out", out_path, "output instance cache (JSONL)")->required();

    auto* train_cmd = app.add_subcommand("train", "train a model");
    train_cmd->add_option("--data", data_path, "track CSV or instance cache")->required();
    train_cmd->add_option("--format", format, "csv layout when --data is a track table");
    train_cmd->add_option("--out", ckpt_path, "checkpoint output path")->required();
    train_cmd->add_flag("--split", do_split, "train on the config split instead of everything");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("--data", data_path)->required();
    eval_cmd->add_option("--format", format);
    eval_cmd->add_option("--checkpoint", ckpt_path)->required();
    eval_cmd->add_option("--plan-rate", plan_rate_s, "1hz | 5hz");
    eval_cmd->add_option("--subset", subset, "all | train | val | test");
    eval_cmd->add_option("--nll-mode", nll_mode_s, "mixture | best");
    eval_cmd->add_option("--out", out_path, "report JSON path");
    eval_cmd->add_flag("--text", emit_text, "also print the aligned text table");

    auto* predict_cmd = app.add_subcommand("predict", "emit per-maneuver predictions");
    predict_cmd->add_option("--data", data_path)->required();
    predict_cmd->add_option("--format", format);
    predict_cmd->add_option("--checkpoint", ckpt_path)->required();
    predict_cmd->add_option("--plan-rate", plan_rate_s);
    predict_cmd->add_option("--subset", subset);
    predict_cmd->add_option("--out", out_path, "JSON-lines output")->required();

    auto* whatif_cmd = app.add_subcommand("whatif", "score candidate ego plans");
    whatif_cmd->add_option("--data", data_path)->required();
    whatif_cmd->add_option("--format", format);
    whatif_cmd->add_option("--checkpoint", ckpt_path)->required();
    whatif_cmd->add_option("--candidates", candidates_path, "JSON array of candidate plans")
        ->required();
    whatif_cmd->add_option("--instance", instance_index, "instance index in the dataset");
    whatif_cmd->add_option("--out", out_path, "JSON output")->required();

    auto* ablate_cmd = app.add_subcommand("ablate", "train and compare toggle variants");
    ablate_cmd->add_option("--data", data_path)->required();
    ablate_cmd->add_option("--format", format);
    ablate_cmd->add_option("--variants", variants_s, "comma-separated variant names");
    ablate_cmd->add_option("--plan-rate", plan_rate_s);
    ablate_cmd->add_option("--out", out_path, "table JSON path");
    ablate_cmd->add_flag("--text", emit_text);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    }

    try {
        KeyValueConfig kv;
        if (!config_path.empty()) {
            cli_detail::require_file(config_path);
            kv = KeyValueConfig::from_file(config_path);
        }
        for (const auto& ov : overrides) {
            const auto eq = ov.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("--set expects key=value, got: " + ov);
            kv.set(ov.substr(0, eq), ov.substr(eq + 1));
        }
        kv.check_known_keys();
        RunConfig cfg = run_config_from(kv);

        if (*synth) {
            auto tracks = generate_synthetic(scenario_config_from(kv), cfg.seed);
            save_tracks(out_path, tracks);
            std::printf("wrote %zu tracks to %s\n", tracks.size(), out_path.c_str());
            return kExitOk;
        }
        if (*ingest) {
            cli_detail::require_file(in_path);
            auto tracks = load_tracks(in_path, track_format_from_string(format));
            tracks = resample_tracks(tracks, cfg.rate);
            ExtractOptions opt{cfg.t_obs, cfg.t_pred, cfg.stride, cfg.rate};
            auto res = extract_instances(tracks, cfg.grid, opt);
            save_instances(out_path, res.instances, cfg.t_obs, cfg.t_pred, cfg.rate);
            std::printf("instances=%ld skipped_instants=%ld dropped_targets=%ld -> %s\n",
                        res.stats.instances, res.stats.skipped_instants,
                        res.stats.dropped_targets, out_path.c_str());
            return kExitOk;
        }
        if (*train_cmd) {
            auto all = cli_detail::load_dataset(data_path, format, cfg);
            std::vector<Instance> train_set = all, val_set;
            if (do_split) {
                auto split = split_dataset(all, split_spec_from(kv, cfg.seed));
                train_set = split.train;
                val_set = split.val;
            }
            auto result = train(train_set, val_set, cfg, true);
            save_checkpoint(ckpt_path, result.params, cfg, result.meta);
            std::printf("saved checkpoint to %s (best epoch %d)\n", ckpt_path.c_str(),
                        result.log.best_epoch);
            return kExitOk;
        }

        // remaining subcommands need a checkpoint
        cli_detail::require_file(ckpt_path);
        auto ck = load_checkpoint(ckpt_path);
        check_dims_match(cfg, ck.run);

        if (*eval_cmd) {
            auto set = cli_detail::select_subset(cli_detail::load_dataset(data_path, format, cfg),
                                                 subset, kv, cfg.seed);
            const double plan_rate = cli_detail::parse_plan_rate(plan_rate_s);
            const NllMode mode =
                nll_mode_s == "best" ? NllMode::best_maneuver : NllMode::mixture;
            auto rep = evaluate(ck.params, cfg, set, plan_rate, mode);
            const auto js = report_to_json(rep);
            if (!out_path.empty()) {
                std::ofstream out(out_path);
                out << js.dump(2) << '\n';
            }
            std::printf("%s\n", js.dump(2).c_str());
            if (emit_text) std::printf("%s", report_to_text(rep).c_str());
            return kExitOk;
        }
        if (*predict_cmd) {
            auto set = cli_detail::select_subset(cli_detail::load_dataset(data_path, format, cfg),
                                                 subset, kv, cfg.seed);
            const double plan_rate = cli_detail::parse_plan_rate(plan_rate_s);
            std::ofstream out(out_path);
            if (!out) throw std::runtime_error("cannot write: " + out_path);
            long records = 0;
            for (const auto& inst : set) {
                if (inst.targets.empty()) continue;
                EgoPlan plan = training_plan(inst);
                if (plan_rate == 1.0) plan = downsample_plan(plan);
                auto preds = predict(ck.params, cfg, inst, plan);
                for (const auto& tp : preds)
                    for (int k = 0; k < kManeuverCount; ++k) {
                        out << cli_detail::prediction_record(inst, tp, k, cfg.rate).dump()
                            << '\n';
                        ++records;
                    }
            }
            std::printf("wrote %ld prediction records to %s\n", records, out_path.c_str());
            return kExitOk;
        }
        if (*whatif_cmd) {
            auto set = cli_detail::load_dataset(data_path, format, cfg);
            if (instance_index < 0 || instance_index >= static_cast<long>(set.size()))
                throw std::runtime_error("instance index out of range");
            WhatIfQuery query;
            query.instance = set[static_cast<size_t>(instance_index)];
            query.candidates = cli_detail::load_candidates(candidates_path);
            auto results = whatif(ck.params, cfg, query);
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& preds : results)
                arr.push_back(cli_detail::prediction_set_json(query.instance, preds, cfg.rate));
            std::ofstream out(out_path);
            if (!out) throw std::runtime_error("cannot write: " + out_path);
            out << arr.dump(2) << '\n';
            std::printf("scored %zu candidates -> %s\n", results.size(), out_path.c_str());
            return kExitOk;
        }
        if (*ablate_cmd) {
            auto all = cli_detail::load_dataset(data_path, format, cfg);
            auto split = split_dataset(all, split_spec_from(kv, cfg.seed));
            std::vector<std::string> variants;
            std::stringstream ss(variants_s);
            std::string name;
            while (std::getline(ss, name, ',')) variants.push_back(name);
            const double plan_rate = cli_detail::parse_plan_rate(plan_rate_s);
            auto rows = ablation_suite(cfg, variants, split.train, split.val, split.test,
                                       plan_rate, true);
            if (!out_path.empty()) {
                std::ofstream out(out_path);
                out << ablation_to_json(rows).dump(2) << '\n';
            }
            std::printf("%s", ablation_to_text(rows).c_str());
            return kExitOk;
        }
        return kExitFailure;
    } catch (const std::system_error& e) {
        std::fprintf(stderr, "missing file: %s\n", e.what());
        return kExitMissingFile;
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        std::fprintf(stderr, "error: %s\n", msg.c_str());
        if (msg.find("dimension mismatch") != std::string::npos) return kExitDimMismatch;
        if (msg.find("diverged") != std::string::npos) return kExitDiverged;
        if (msg.find("malformed") != std::string::npos || msg.find("not a checkpoint") != std::string::npos ||
            msg.find("not an instance cache") != std::string::npos)
            return kExitMalformedData;
        return kExitFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }
}

} // namespace cit
