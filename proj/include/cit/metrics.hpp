#pragma once

// Per-horizon RMSE and NLL, the coarse-plan evaluation protocol and the
// ablation report harness. RMSE follows the highest-probability maneuver's
// mean; NLL defaults to the six-component mixture at each evaluated frame
// (natural log, per-frame mean), with a best-maneuver mode kept as a flag.

#include <cit/model.hpp>
#include <cit/train.hpp>

#include <json.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace cit {

enum class NllMode { mixture, best_maneuver };

inline const char* to_string(NllMode m) {
    return m == NllMode::mixture ? "mixture" : "best-maneuver";
}

struct HorizonReport {
    std::vector<double> rmse; // one per evaluated second
    double rmse_avg = 0;
    std::vector<double> nll;
    double nll_avg = 0;
    long instances = 0;
    long targets = 0;
    double plan_rate = 5.0;
    std::string nll_mode = "mixture";
    std::string nll_convention = "natural log, per-frame mean at each horizon";
};

namespace detail {

// evaluated frame indices: one per second of prediction horizon
inline std::vector<long> horizon_frames(int t_pred, double rate) {
    std::vector<long> frames;
    const long per_second = static_cast<long>(rate);
    for (long f = per_second - 1; f < t_pred; f += per_second) frames.push_back(f);
    return frames;
}

} // namespace detail

// Pooled RMSE of the argmax-probability maneuver's mean at each horizon,
// meters. `pairs` are matched prediction/instance rows.
inline std::vector<double> rmse_horizons(
    const std::vector<std::pair<const PredictionSet*, const Instance*>>& pairs, int t_pred,
    double rate) {
    const auto frames = detail::horizon_frames(t_pred, rate);
    std::vector<double> sq(frames.size(), 0.0);
    long count = 0;
    for (const auto& [preds, inst] : pairs) {
        for (const auto& tp : *preds) {
            const TargetSample* tgt = nullptr;
            for (const auto& cand : inst->targets)
                if (cand.id == tp.target_id) tgt = &cand;
            if (!tgt || tgt->future.rows() < t_pred)
                throw std::invalid_argument("rmse_horizons: missing ground truth for target");
            const auto& traj = tp.trajectories[static_cast<size_t>(tp.dist.argmax().joint_index())];
            for (size_t h = 0; h < frames.size(); ++h) {
                const Vec2 err = traj.steps[static_cast<size_t>(frames[h])].mu -
                                 Vec2(tgt->future.row(frames[h]).transpose());
                sq[h] += err.squaredNorm();
            }
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("rmse_horizons: empty evaluation set");
    std::vector<double> out(frames.size());
    for (size_t h = 0; h < frames.size(); ++h) out[h] = std::sqrt(sq[h] / count);
    return out;
}

// Mean NLL of the true position at each horizon frame under the predictive
// distribution.
inline std::vector<double> nll_horizons(
    const std::vector<std::pair<const PredictionSet*, const Instance*>>& pairs, int t_pred,
    double rate, NllMode mode = NllMode::mixture) {
    const auto frames = detail::horizon_frames(t_pred, rate);
    std::vector<double> acc(frames.size(), 0.0);
    long count = 0;
    for (const auto& [preds, inst] : pairs) {
        for (const auto& tp : *preds) {
            const TargetSample* tgt = nullptr;
            for (const auto& cand : inst->targets)
                if (cand.id == tp.target_id) tgt = &cand;
            if (!tgt || tgt->future.rows() < t_pred)
                throw std::invalid_argument("nll_horizons: missing ground truth for target");
            const auto joint = tp.dist.joint();
            for (size_t h = 0; h < frames.size(); ++h) {
                const Vec2 y = tgt->future.row(frames[h]).transpose();
                if (mode == NllMode::best_maneuver) {
                    const int k = tp.dist.argmax().joint_index();
                    acc[h] += gaussian_nll(
                        tp.trajectories[static_cast<size_t>(k)].steps[static_cast<size_t>(frames[h])], y);
                } else {
                    double mx = -std::numeric_limits<double>::infinity();
                    std::array<double, kManeuverCount> terms{};
                    for (int k = 0; k < kManeuverCount; ++k) {
                        terms[k] =
                            std::log(joint[static_cast<size_t>(k)]) -
                            gaussian_nll(tp.trajectories[static_cast<size_t>(k)]
                                             .steps[static_cast<size_t>(frames[h])],
                                         y);
                        mx = std::max(mx, terms[k]);
                    }
                    double s = 0;
                    for (double v : terms) s += std::exp(v - mx);
                    acc[h] += -(mx + std::log(s));
                }
            }
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("nll_horizons: empty evaluation set");
    for (auto& v : acc) v /= count;
    return acc;
}

// Runs the full pipeline over a frozen checkpoint at the requested plan rate
// (1 Hz downsamples the ego future to the 5-point coarse intention).
inline HorizonReport evaluate(const ModelParams& params, const RunConfig& cfg,
                              const std::vector<Instance>& test_set, double plan_rate = 5.0,
                              NllMode mode = NllMode::mixture) {
    cfg.validate();
    if (plan_rate != 5.0 && plan_rate != 1.0)
        throw std::invalid_argument("evaluate: plan rate must be 1 or 5 Hz");
    std::vector<PredictionSet> preds;
    std::vector<std::pair<const PredictionSet*, const Instance*>> pairs;
    preds.reserve(test_set.size());
    long instances = 0, targets = 0;
    for (const auto& inst : test_set) {
        if (inst.targets.empty()) continue;
        EgoPlan plan = training_plan(inst);
        if (plan_rate == 1.0) plan = downsample_plan(plan);
        preds.push_back(predict(params, cfg, inst, plan));
        ++instances;
        targets += static_cast<long>(inst.targets.size());
    }
    size_t pi = 0;
    for (const auto& inst : test_set) {
        if (inst.targets.empty()) continue;
        pairs.push_back({&preds[pi++], &inst});
    }
    HorizonReport rep;
    rep.rmse = rmse_horizons(pairs, cfg.t_pred, cfg.rate);
    rep.nll = nll_horizons(pairs, cfg.t_pred, cfg.rate, mode);
    rep.rmse_avg = 0;
    rep.nll_avg = 0;
    for (double v : rep.rmse) rep.rmse_avg += v;
    for (double v : rep.nll) rep.nll_avg += v;
    rep.rmse_avg /= static_cast<double>(rep.rmse.size());
    rep.nll_avg /= static_cast<double>(rep.nll.size());
    rep.instances = instances;
    rep.targets = targets;
    rep.plan_rate = plan_rate;
    rep.nll_mode = to_string(mode);
    return rep;
}

inline nlohmann::json report_to_json(const HorizonReport& rep) {
    return {{"rmse", rep.rmse},
            {"rmse_avg", rep.rmse_avg},
            {"nll", rep.nll},
            {"nll_avg", rep.nll_avg},
            {"instances", rep.instances},
            {"targets", rep.targets},
            {"plan_rate_hz", rep.plan_rate},
            {"nll_mode", rep.nll_mode},
            {"nll_convention", rep.nll_convention},
            {"units", "meters"}};
}

inline std::string report_to_text(const HorizonReport& rep) {
    std::ostringstream os;
    os << "horizon  ";
    for (size_t h = 0; h < rep.rmse.size(); ++h)
        os << (h + 1) << "s        ";
    os << "avg\n";
    os << "rmse/nll ";
    auto cell = [&](double a, double b) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.2f/%.2f ", a, b);
        os << buf;
    };
    for (size_t h = 0; h < rep.rmse.size(); ++h) cell(rep.rmse[h], rep.nll[h]);
    cell(rep.rmse_avg, rep.nll_avg);
    os << "\n";
    return os.str();
}

// --- ablation harness -----------------------------------------------------------

struct AblationRow {
    std::string name;
    Toggles toggles;
    HorizonReport report;
};

// Trains and evaluates each variant with a shared seed and data; one row per
// toggle set, in the order given.
inline std::vector<AblationRow> ablation_suite(const RunConfig& base,
                                               const std::vector<std::string>& variants,
                                               const std::vector<Instance>& train_set,
                                               const std::vector<Instance>& val_set,
                                               const std::vector<Instance>& test_set,
                                               double plan_rate = 1.0, bool verbose = false) {
    std::vector<AblationRow> rows;
    for (const auto& name : variants) {
        RunConfig cfg = base;
        cfg.toggles = variant_toggles(name);
        auto trained = train(train_set, val_set, cfg, verbose);
        AblationRow row;
        row.name = name;
        row.toggles = cfg.toggles;
        row.report = evaluate(trained.params, cfg, test_set, plan_rate);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string ablation_to_text(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << "method    info(c) info(f) ICD    IIE  Fusion ";
    if (!rows.empty())
        for (size_t h = 0; h < rows[0].report.rmse.size(); ++h) os << (h + 1) << "s        ";
    os << "avg\n";
    for (const auto& row : rows) {
        char head[80];
        std::snprintf(head, sizeof(head), "%-9s %-7s %-7s %-6s %-4s %-6s ", row.name.c_str(),
                      row.toggles.info_c ? "x" : "-", row.toggles.info_f ? "x" : "-",
                      to_string(row.toggles.icd), row.toggles.iie ? "x" : "-",
                      row.toggles.fusion ? "x" : "-");
        os << head;
        auto cell = [&](double a, double b) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.2f/%.2f ", a, b);
            os << buf;
        };
        for (size_t h = 0; h < row.report.rmse.size(); ++h)
            cell(row.report.rmse[h], row.report.nll[h]);
        cell(row.report.rmse_avg, row.report.nll_avg);
        os << "\n";
    }
    return os.str();
}

inline nlohmann::json ablation_to_json(const std::vector<AblationRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : rows) {
        arr.push_back({{"name", row.name},
                       {"toggles",
                        {{"info_c", row.toggles.info_c},
                         {"info_f", row.toggles.info_f},
                         {"icd", to_string(row.toggles.icd)},
                         {"iie", row.toggles.iie},
                         {"fusion", row.toggles.fusion}}},
                       {"report", report_to_json(row.report)}});
    }
    return arr;
}

} // namespace cit
