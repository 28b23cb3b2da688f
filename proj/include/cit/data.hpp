#pragma once

// Track ingestion, resampling, instance extraction, maneuver labeling and
// dataset splitting. Raw tables arrive in one of three CSV layouts; inside
// this module everything is meters at the working rate.

#include <cit/types.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace cit {

// Raw per-agent time series. Frames are absolute indices at source_rate.
struct AgentTrack {
    int64_t agent_id = 0;
    std::vector<long> frames;
    Mat positions; // [N x 2] meters
    std::vector<int> lane_ids;
    double source_rate = 5.0;

    long size() const { return static_cast<long>(frames.size()); }
    void validate() const {
        if (frames.size() != static_cast<size_t>(positions.rows()) ||
            frames.size() != lane_ids.size())
            throw std::invalid_argument("AgentTrack: field length mismatch");
        for (size_t i = 1; i < frames.size(); ++i)
            if (frames[i] <= frames[i - 1])
                throw std::invalid_argument("AgentTrack: non-monotonic frames for agent " +
                                            std::to_string(agent_id));
    }
    std::optional<long> index_of_frame(long frame) const {
        auto it = std::lower_bound(frames.begin(), frames.end(), frame);
        if (it == frames.end() || *it != frame) return std::nullopt;
        return static_cast<long>(it - frames.begin());
    }
    // travel direction at index i: +1 toward positive x, from the latest step
    double travel_sign(long i) const {
        if (i <= 0) i = 1;
        const double dx = positions(i, 0) - positions(i - 1, 0);
        return dx < 0 ? -1.0 : 1.0;
    }
};

enum class TrackFormat { ngsim, highd, synthetic_native };

inline TrackFormat track_format_from_string(const std::string& s) {
    if (s == "ngsim") return TrackFormat::ngsim;
    if (s == "highd") return TrackFormat::highd;
    if (s == "synthetic-native" || s == "synthetic_native") return TrackFormat::synthetic_native;
    throw std::invalid_argument("unknown track format tag: " + s);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s, int line_no, const std::string& col) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("malformed value '" + s + "' at line " +
                                 std::to_string(line_no) + ", column " + col);
    }
}

inline long parse_long(const std::string& s, int line_no, const std::string& col) {
    try {
        size_t pos = 0;
        long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("malformed value '" + s + "' at line " +
                                 std::to_string(line_no) + ", column " + col);
    }
}

struct ColumnLayout {
    std::array<std::string, 5> names; // id, frame, a, b, lane
    bool feet = false;
    bool swap_axes = false; // source stores (lateral, longitudinal)
    double rate = 5.0;
};

inline ColumnLayout layout_for(TrackFormat fmt) {
    switch (fmt) {
        case TrackFormat::ngsim:
            // Local_X is lateral, Local_Y longitudinal, both feet
            return {{"Vehicle_ID", "Frame_ID", "Local_X", "Local_Y", "Lane_ID"}, true, true, 10.0};
        case TrackFormat::highd:
            return {{"id", "frame", "x", "y", "laneId"}, false, false, 25.0};
        case TrackFormat::synthetic_native:
            return {{"id", "frame", "x_m", "y_m", "lane"}, false, false, 5.0};
    }
    throw std::invalid_argument("unknown track format");
}

} // namespace detail

// Loads a track table. One AgentTrack per vehicle id, positions in meters,
// sorted by agent id.
inline std::vector<AgentTrack> load_tracks(const std::string& path, TrackFormat fmt) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open track file: " + path);
    const auto layout = detail::layout_for(fmt);

    std::string line;
    if (!std::getline(in, line)) return {}; // empty file -> empty collection

    // header row: locate the five required columns
    auto header = detail::split_csv_line(line);
    std::array<int, 5> col{-1, -1, -1, -1, -1};
    for (size_t i = 0; i < header.size(); ++i)
        for (int k = 0; k < 5; ++k)
            if (header[i] == layout.names[k]) col[k] = static_cast<int>(i);
    for (int k = 0; k < 5; ++k)
        if (col[k] < 0)
            throw std::runtime_error(path + ": missing column '" + layout.names[k] + "'");

    struct Row {
        long frame;
        double x, y;
        int lane;
    };
    std::map<int64_t, std::vector<Row>> by_agent;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto f = detail::split_csv_line(line);
        if (f.size() < header.size())
            throw std::runtime_error("malformed row at line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(header.size()) + " columns");
        const int64_t id = detail::parse_long(f[col[0]], line_no, layout.names[0]);
        Row r;
        r.frame = detail::parse_long(f[col[1]], line_no, layout.names[1]);
        double a = detail::parse_double(f[col[2]], line_no, layout.names[2]);
        double b = detail::parse_double(f[col[3]], line_no, layout.names[3]);
        if (layout.feet) {
            a = convert_units(a, LengthUnit::feet);
            b = convert_units(b, LengthUnit::feet);
        }
        r.x = layout.swap_axes ? b : a;
        r.y = layout.swap_axes ? a : b;
        r.lane = static_cast<int>(detail::parse_long(f[col[4]], line_no, layout.names[4]));
        by_agent[id].push_back(r);
    }

    std::vector<AgentTrack> tracks;
    tracks.reserve(by_agent.size());
    for (auto& [id, rows] : by_agent) {
        AgentTrack tr;
        tr.agent_id = id;
        tr.source_rate = layout.rate;
        tr.frames.reserve(rows.size());
        tr.positions.resize(static_cast<long>(rows.size()), 2);
        tr.lane_ids.reserve(rows.size());
        for (size_t i = 0; i < rows.size(); ++i) {
            tr.frames.push_back(rows[i].frame);
            tr.positions(static_cast<long>(i), 0) = rows[i].x;
            tr.positions(static_cast<long>(i), 1) = rows[i].y;
            tr.lane_ids.push_back(rows[i].lane);
        }
        tr.validate();
        tracks.push_back(std::move(tr));
    }
    return tracks;
}

// Writes tracks in the synthetic-native layout. Doubles round-trip exactly.
inline void save_tracks(const std::string& path, const std::vector<AgentTrack>& tracks) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write track file: " + path);
    out << "id,frame,x_m,y_m,lane\n";
    char buf[64];
    for (const auto& tr : tracks) {
        for (long i = 0; i < tr.size(); ++i) {
            out << tr.agent_id << ',' << tr.frames[i] << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", tr.positions(i, 0));
            out << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", tr.positions(i, 1));
            out << buf << ',' << tr.lane_ids[i] << '\n';
        }
    }
}

// Frame decimation down to target_rate; keeps every (source/target)-th frame.
inline std::vector<AgentTrack> resample_tracks(const std::vector<AgentTrack>& tracks,
                                               double target_rate = 5.0) {
    std::vector<AgentTrack> out;
    out.reserve(tracks.size());
    for (const auto& tr : tracks) {
        if (tr.source_rate < target_rate)
            throw std::invalid_argument("resample_tracks: source rate below target");
        const double ratio = tr.source_rate / target_rate;
        const long k = static_cast<long>(std::llround(ratio));
        if (std::abs(ratio - static_cast<double>(k)) > 1e-9)
            throw std::invalid_argument("resample_tracks: non-integer rate ratio");
        if (k == 1) {
            out.push_back(tr);
            out.back().source_rate = target_rate;
            continue;
        }
        AgentTrack r;
        r.agent_id = tr.agent_id;
        r.source_rate = target_rate;
        const long n = (tr.size() + k - 1) / k;
        r.positions.resize(n, 2);
        r.frames.reserve(n);
        r.lane_ids.reserve(n);
        for (long i = 0, j = 0; i < tr.size(); i += k, ++j) {
            r.frames.push_back(tr.frames[i]);
            r.positions.row(j) = tr.positions.row(i);
            r.lane_ids.push_back(tr.lane_ids[i]);
        }
        out.push_back(std::move(r));
    }
    return out;
}

// Auto-label from lane ids and speeds around the prediction instant. Lateral
// compares the lane at the future horizon (falling back to the history start)
// with the lane at t; direction follows the travel-aligned y displacement.
// Longitudinal flags a brake when mean future speed < 0.8x the speed at t.
inline ManeuverLabel label_maneuver(const AgentTrack& track, long t, int t_obs, int t_pred) {
    auto idx = track.index_of_frame(t);
    if (!idx) throw std::invalid_argument("label_maneuver: frame not in track");
    const long i = *idx;
    if (i < t_obs - 1 || i + t_pred >= track.size() || i < 1)
        throw std::invalid_argument("label_maneuver: insufficient window around t");

    ManeuverLabel label;
    const double flip = track.travel_sign(i);
    const int lane_now = track.lane_ids[i];
    const int lane_fut = track.lane_ids[i + t_pred];
    const int lane_past = track.lane_ids[i - t_obs + 1];
    if (lane_fut != lane_now) {
        const double dy = flip * (track.positions(i + t_pred, 1) - track.positions(i, 1));
        label.lateral = dy > 0 ? LatManeuver::left : LatManeuver::right;
    } else if (lane_past != lane_now) {
        const double dy = flip * (track.positions(i, 1) - track.positions(i - t_obs + 1, 1));
        label.lateral = dy > 0 ? LatManeuver::left : LatManeuver::right;
    }

    const double rate = track.source_rate;
    const double speed_now = (track.positions.row(i) - track.positions.row(i - 1)).norm() * rate;
    double mean_speed = 0;
    for (long k = 1; k <= t_pred; ++k)
        mean_speed += (track.positions.row(i + k) - track.positions.row(i + k - 1)).norm() * rate;
    mean_speed /= t_pred;
    if (mean_speed < 0.8 * speed_now) label.longitudinal = LonManeuver::brake;
    return label;
}

struct NeighborSample {
    int64_t id = 0;
    Mat history; // [T_obs x 2] absolute meters
};

struct TargetSample {
    int64_t id = 0;
    Mat history;         // [T_obs x 2]
    Mat future;          // [T_pred x 2]; may be empty in prediction-only scenes
    ManeuverLabel label;
    std::vector<NeighborSample> neighbors;

    Vec2 position_at_t() const { return history.row(history.rows() - 1).transpose(); }
};

// One ego-centric training/evaluation sample at prediction instant t.
struct Instance {
    int64_t ego_id = 0;
    long t = 0;
    double rate = 5.0;
    Mat ego_history; // [T_obs x 2]
    Mat ego_future;  // [T_pred x 2]; doubles as the training-time plan
    std::vector<TargetSample> targets;

    Vec2 ego_position_at_t() const { return ego_history.row(ego_history.rows() - 1).transpose(); }
    double ego_travel_sign() const {
        const long n = ego_history.rows();
        const double dx = ego_history(n - 1, 0) - ego_history(n - 2, 0);
        return dx < 0 ? -1.0 : 1.0;
    }
};

struct ExtractStats {
    long instances = 0;
    long skipped_instants = 0; // candidate instants without complete ego windows
    long dropped_targets = 0;  // in-area agents lacking a full history or future
};

struct ExtractOptions {
    int t_obs = 15;
    int t_pred = 25;
    long stride = 5; // frames between prediction instants (1 per second at 5 Hz)
    double rate = 5.0;
};

struct ExtractResult {
    std::vector<Instance> instances;
    ExtractStats stats;
};

namespace detail {

// contiguous window check: frames spaced by exactly one resampled step
inline bool window_contiguous(const AgentTrack& tr, long i0, long i1, long step) {
    for (long i = i0 + 1; i <= i1; ++i)
        if (tr.frames[i] - tr.frames[i - 1] != step) return false;
    return true;
}

inline long frame_step(const AgentTrack& tr) {
    long step = std::numeric_limits<long>::max();
    for (size_t i = 1; i < tr.frames.size(); ++i)
        step = std::min(step, tr.frames[i] - tr.frames[i - 1]);
    return step == std::numeric_limits<long>::max() ? 1 : step;
}

} // namespace detail

// Walks every candidate ego agent and every prediction instant on the stride.
// Targets are the agents inside the ego-centric area with complete history
// and future; each target carries its own in-area neighbor histories.
inline ExtractResult extract_instances(const std::vector<AgentTrack>& tracks,
                                       const GridSpec& grid, const ExtractOptions& opt) {
    grid.validate();
    ExtractResult res;
    for (const auto& tr : tracks)
        if (std::abs(tr.source_rate - opt.rate) > 1e-9)
            throw std::invalid_argument("extract_instances: tracks not at working rate");

    long step = 1;
    for (const auto& tr : tracks)
        if (tr.size() >= 2) step = std::max(step, detail::frame_step(tr));

    for (const auto& ego : tracks) {
        const long first_q = opt.t_obs - 1;
        for (long i = first_q; i < ego.size(); ++i) {
            if ((ego.frames[i] - ego.frames[first_q]) % (opt.stride * step) != 0) continue;
            if (i + opt.t_pred >= ego.size() ||
                !detail::window_contiguous(ego, i - opt.t_obs + 1, i + opt.t_pred, step)) {
                ++res.stats.skipped_instants;
                continue;
            }
            const long t = ego.frames[i];
            Instance inst;
            inst.ego_id = ego.agent_id;
            inst.t = t;
            inst.rate = opt.rate;
            inst.ego_history = ego.positions.middleRows(i - opt.t_obs + 1, opt.t_obs);
            inst.ego_future = ego.positions.middleRows(i + 1, opt.t_pred);

            AgentFrame ego_frame{ego.positions.row(i).transpose(), ego.travel_sign(i)};
            for (const auto& other : tracks) {
                if (other.agent_id == ego.agent_id) continue;
                auto oj = other.index_of_frame(t);
                if (!oj) continue;
                const long j = *oj;
                Vec2 rel = ego_frame.to_local(other.positions.row(j).transpose());
                if (!grid_cell_of(rel, grid)) continue;
                const bool complete =
                    j >= opt.t_obs - 1 && j + opt.t_pred < other.size() &&
                    detail::window_contiguous(other, j - opt.t_obs + 1, j + opt.t_pred, step);
                if (!complete) {
                    ++res.stats.dropped_targets;
                    continue;
                }
                TargetSample tgt;
                tgt.id = other.agent_id;
                tgt.history = other.positions.middleRows(j - opt.t_obs + 1, opt.t_obs);
                tgt.future = other.positions.middleRows(j + 1, opt.t_pred);
                tgt.label = label_maneuver(other, t, opt.t_obs, opt.t_pred);

                AgentFrame tgt_frame{other.positions.row(j).transpose(), other.travel_sign(j)};
                for (const auto& nbr : tracks) {
                    if (nbr.agent_id == other.agent_id) continue;
                    auto nk = nbr.index_of_frame(t);
                    if (!nk) continue;
                    const long k = *nk;
                    Vec2 nrel = tgt_frame.to_local(nbr.positions.row(k).transpose());
                    if (!grid_cell_of(nrel, grid)) continue;
                    if (k < opt.t_obs - 1 ||
                        !detail::window_contiguous(nbr, k - opt.t_obs + 1, k, step))
                        continue;
                    tgt.neighbors.push_back(
                        {nbr.agent_id, nbr.positions.middleRows(k - opt.t_obs + 1, opt.t_obs)});
                }
                inst.targets.push_back(std::move(tgt));
            }
            res.instances.push_back(std::move(inst));
            ++res.stats.instances;
        }
    }
    return res;
}

// Keeps the points one to five seconds out: a 25-point 5 Hz plan becomes the
// 5-point 1 Hz coarse intention.
inline EgoPlan downsample_plan(const EgoPlan& plan, double out_rate = 1.0) {
    plan.validate();
    if (out_rate != 1.0) throw std::invalid_argument("downsample_plan: output rate must be 1 Hz");
    if (plan.rate != 5.0 || plan.points.rows() != 25)
        throw std::invalid_argument("downsample_plan: expects a 25-point 5 Hz plan");
    EgoPlan out;
    out.rate = 1.0;
    out.points.resize(5, 2);
    for (int k = 0; k < 5; ++k) out.points.row(k) = plan.points.row(5 * k + 4);
    return out;
}

struct SplitSpec {
    double train_frac = 0.7;
    double val_frac = 0.1;
    double test_frac = 0.2;
    uint64_t seed = 0;

    void validate() const {
        if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
            throw std::invalid_argument("SplitSpec: fractions must sum to 1");
    }
};

struct DatasetSplit {
    std::vector<Instance> train, val, test;
};

// Deterministic partition by ego agent id, so no agent's instances straddle
// splits.
inline DatasetSplit split_dataset(const std::vector<Instance>& instances, const SplitSpec& spec) {
    spec.validate();
    std::vector<int64_t> ids;
    for (const auto& inst : instances) ids.push_back(inst.ego_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    std::mt19937_64 rng(spec.seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    const long n = static_cast<long>(ids.size());
    const long n_train = std::lround(spec.train_frac * n);
    const long n_val = std::lround(spec.val_frac * n);

    std::unordered_map<int64_t, int> bucket;
    for (long i = 0; i < n; ++i) bucket[ids[i]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);

    DatasetSplit out;
    for (const auto& inst : instances) {
        switch (bucket.at(inst.ego_id)) {
            case 0: out.train.push_back(inst); break;
            case 1: out.val.push_back(inst); break;
            default: out.test.push_back(inst); break;
        }
    }
    return out;
}

// --- instance cache -----------------------------------------------------------
// JSON-lines file: a self-describing header record, then one record per
// Instance.

inline constexpr const char* kInstanceCacheFormat = "cit-instances";
inline constexpr int kInstanceCacheVersion = 1;

namespace detail {

inline nlohmann::json points_to_json(const Mat& m) {
    nlohmann::json arr = nlohmann::json::array();
    for (long i = 0; i < m.rows(); ++i) arr.push_back({m(i, 0), m(i, 1)});
    return arr;
}

inline Mat points_from_json(const nlohmann::json& arr) {
    Mat m(static_cast<long>(arr.size()), 2);
    for (size_t i = 0; i < arr.size(); ++i) {
        m(static_cast<long>(i), 0) = arr[i][0].get<double>();
        m(static_cast<long>(i), 1) = arr[i][1].get<double>();
    }
    return m;
}

} // namespace detail

inline void save_instances(const std::string& path, const std::vector<Instance>& instances,
                           int t_obs, int t_pred, double rate) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write instance cache: " + path);
    nlohmann::json header{{"format", kInstanceCacheFormat},
                          {"version", kInstanceCacheVersion},
                          {"t_obs", t_obs},
                          {"t_pred", t_pred},
                          {"rate", rate}};
    out << header.dump() << '\n';
    for (const auto& inst : instances) {
        nlohmann::json targets = nlohmann::json::array();
        for (const auto& tgt : inst.targets) {
            nlohmann::json nbrs = nlohmann::json::array();
            for (const auto& nbr : tgt.neighbors)
                nbrs.push_back({{"id", nbr.id}, {"history", detail::points_to_json(nbr.history)}});
            targets.push_back({{"id", tgt.id},
                               {"history", detail::points_to_json(tgt.history)},
                               {"future", detail::points_to_json(tgt.future)},
                               {"lat", to_string(tgt.label.lateral)},
                               {"lon", to_string(tgt.label.longitudinal)},
                               {"neighbors", std::move(nbrs)}});
        }
        nlohmann::json rec{{"ego_id", inst.ego_id},
                           {"t", inst.t},
                           {"rate", inst.rate},
                           {"ego_history", detail::points_to_json(inst.ego_history)},
                           {"ego_future", detail::points_to_json(inst.ego_future)},
                           {"targets", std::move(targets)}};
        out << rec.dump() << '\n';
    }
}

inline std::vector<Instance> load_instances(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open instance cache: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty instance cache");
    nlohmann::json header = nlohmann::json::parse(line);
    if (header.value("format", "") != kInstanceCacheFormat)
        throw std::runtime_error(path + ": not an instance cache");
    if (header.value("version", -1) != kInstanceCacheVersion)
        throw std::runtime_error(path + ": unsupported cache version");

    std::vector<Instance> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json rec = nlohmann::json::parse(line);
        Instance inst;
        inst.ego_id = rec.at("ego_id").get<int64_t>();
        inst.t = rec.at("t").get<long>();
        inst.rate = rec.at("rate").get<double>();
        inst.ego_history = detail::points_from_json(rec.at("ego_history"));
        inst.ego_future = detail::points_from_json(rec.at("ego_future"));
        for (const auto& tj : rec.at("targets")) {
            TargetSample tgt;
            tgt.id = tj.at("id").get<int64_t>();
            tgt.history = detail::points_from_json(tj.at("history"));
            tgt.future = detail::points_from_json(tj.at("future"));
            tgt.label.lateral = lat_from_string(tj.at("lat").get<std::string>());
            tgt.label.longitudinal = lon_from_string(tj.at("lon").get<std::string>());
            for (const auto& nj : tj.at("neighbors"))
                tgt.neighbors.push_back(
                    {nj.at("id").get<int64_t>(), detail::points_from_json(nj.at("history"))});
            inst.targets.push_back(std::move(tgt));
        }
        out.push_back(std::move(inst));
    }
    return out;
}

} // namespace cit
