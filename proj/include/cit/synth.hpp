#pragma once

// Synthetic highway scenario generator. Produces kinematically consistent
// 5 Hz tracks over a straight multi-lane road, including a reactive
// car-following family where a follower's future depends causally on the
// leader's future — the probe used to validate conditional prediction.

#include <cit/data.hpp>
#include <cit/types.hpp>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace cit {

enum class ScenarioFamily : int { cruise = 0, lane_change = 1, brake = 2, follow_react = 3 };

struct ScenarioMix {
    double cruise = 0.25;
    double lane_change = 0.25;
    double brake = 0.25;
    double follow_react = 0.25;
};

struct ScenarioConfig {
    int lanes = 3;
    int agents = 3;  // per scene; follow_react uses the first two as leader/follower
    int scenes = 8;
    int frames = 80; // per scene at 5 Hz
    double lane_width = 3.7; // meters
    double speed_min = 20.0, speed_max = 30.0; // m/s
    double decel_min = 2.0, decel_max = 4.0;   // m/s^2
    double react_lag_s = 0.6;  // follower reaction lag
    double brake_branch_prob = 0.5; // follow_react: probability the leader brakes
    int fixed_brake_onset = -1;     // scene-local onset frame; -1 draws one
    double brake_floor_speed = 0.0; // braking releases at this speed (0 = full stop)
    double follow_gap_min = 18.0, follow_gap_max = 25.0; // leader-follower spacing
    ScenarioMix mix;

    void validate() const {
        if (lanes < 1 || agents < 1 || scenes < 1)
            throw std::invalid_argument("ScenarioConfig: lanes, agents and scenes must be positive");
        if (frames < 2) throw std::invalid_argument("ScenarioConfig: too few frames");
        const double total = mix.cruise + mix.lane_change + mix.brake + mix.follow_react;
        if (!(total > 0)) throw std::invalid_argument("ScenarioConfig: empty scenario mix");
    }
};

namespace detail {

inline double smoothstep01(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return u * u * (3.0 - 2.0 * u);
}

struct AgentScript {
    double x0 = 0, y0 = 0;
    double v0 = 25.0;
    std::vector<double> accel;   // per frame, m/s^2
    // optional lateral move
    int lc_start = -1;
    double lc_duration_s = 3.0;
    double y1 = 0;
};

// forward-integrates one scripted agent at 5 Hz
inline AgentTrack integrate(const AgentScript& s, int64_t id, long base_frame, int frames,
                            double lane_width) {
    const double dt = 0.2;
    AgentTrack tr;
    tr.agent_id = id;
    tr.source_rate = 5.0;
    tr.positions.resize(frames, 2);
    tr.frames.reserve(frames);
    tr.lane_ids.reserve(frames);
    double x = s.x0, v = s.v0;
    for (int k = 0; k < frames; ++k) {
        double y = s.y0;
        if (s.lc_start >= 0 && k >= s.lc_start) {
            const double u = (k - s.lc_start) * dt / s.lc_duration_s;
            y = s.y0 + (s.y1 - s.y0) * smoothstep01(u);
        }
        tr.frames.push_back(base_frame + k);
        tr.positions(k, 0) = x;
        tr.positions(k, 1) = y;
        tr.lane_ids.push_back(static_cast<int>(std::floor(y / lane_width)));
        const double a = k < static_cast<int>(s.accel.size()) ? s.accel[k] : 0.0;
        x += v * dt;
        v = std::max(0.0, v + a * dt);
    }
    return tr;
}

// deceleration profile: zero until onset, then `decel` until speed would
// drop below v_floor, zero afterwards
inline std::vector<double> brake_profile(int frames, int onset, double v0, double decel,
                                         double v_floor) {
    std::vector<double> a(frames, 0.0);
    double v = v0;
    for (int k = 0; k < frames; ++k) {
        if (k >= onset && v - decel * 0.2 >= v_floor) {
            a[k] = -decel;
            v -= decel * 0.2;
        }
    }
    return a;
}

} // namespace detail

// Deterministic given (cfg, seed). Scenes occupy disjoint frame ranges so
// instance extraction never mixes agents from different scenes.
inline std::vector<AgentTrack> generate_synthetic(const ScenarioConfig& cfg, uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uspeed(cfg.speed_min, cfg.speed_max);
    std::uniform_real_distribution<double> udecel(cfg.decel_min, cfg.decel_max);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::discrete_distribution<int> ufamily(
        {cfg.mix.cruise, cfg.mix.lane_change, cfg.mix.brake, cfg.mix.follow_react});

    const int lag_frames = static_cast<int>(std::lround(cfg.react_lag_s * 5.0));
    std::vector<AgentTrack> tracks;

    for (int s = 0; s < cfg.scenes; ++s) {
        const long base_frame = static_cast<long>(s) * (cfg.frames + 10);
        const int64_t base_id = static_cast<int64_t>(s) * 100;
        const auto family = static_cast<ScenarioFamily>(ufamily(rng));

        const int onset = cfg.fixed_brake_onset >= 0
                              ? cfg.fixed_brake_onset
                              : static_cast<int>(std::lround(
                                    (0.45 + 0.15 * u01(rng)) * cfg.frames));

        std::vector<detail::AgentScript> scripts(cfg.agents);
        for (int k = 0; k < cfg.agents; ++k) {
            auto& sc = scripts[k];
            sc.v0 = uspeed(rng);
            const int lane = k % cfg.lanes;
            sc.y0 = (lane + 0.5) * cfg.lane_width;
            sc.x0 = -28.0 * (k / cfg.lanes) + 6.0 * u01(rng);
            sc.accel.assign(cfg.frames, 0.0);
        }

        switch (family) {
            case ScenarioFamily::cruise:
                break;
            case ScenarioFamily::lane_change: {
                auto& sc = scripts[0];
                const int lane = 0;
                const int dest = cfg.lanes > 1 ? (lane + 1) : lane;
                sc.lc_start = std::max(2, onset - 8);
                sc.y1 = (dest + 0.5) * cfg.lane_width;
                break;
            }
            case ScenarioFamily::brake: {
                auto& sc = scripts[0];
                const double d = udecel(rng);
                const double floor = std::min(cfg.brake_floor_speed, sc.v0);
                sc.accel = detail::brake_profile(cfg.frames, onset, sc.v0, d, floor);
                break;
            }
            case ScenarioFamily::follow_react: {
                // leader (agent 0) ahead, follower (agent 1) behind in lane 0;
                // the follower mirrors the leader's deceleration after a lag
                auto& leader = scripts[0];
                leader.y0 = 0.5 * cfg.lane_width;
                leader.x0 = 0.0;
                if (u01(rng) < cfg.brake_branch_prob) {
                    const double d = udecel(rng);
                    const double floor = std::min(cfg.brake_floor_speed, leader.v0);
                    leader.accel = detail::brake_profile(cfg.frames, onset, leader.v0, d, floor);
                }
                if (cfg.agents >= 2) {
                    auto& follower = scripts[1];
                    follower.y0 = leader.y0;
                    follower.x0 = leader.x0 - (cfg.follow_gap_min +
                                               (cfg.follow_gap_max - cfg.follow_gap_min) *
                                                   u01(rng));
                    follower.v0 = leader.v0;
                    follower.accel.assign(cfg.frames, 0.0);
                    for (int k = 0; k < cfg.frames; ++k)
                        if (k >= lag_frames) follower.accel[k] = leader.accel[k - lag_frames];
                }
                for (int k = 2; k < cfg.agents; ++k) {
                    const int lane = 1 + (k - 2) % std::max(1, cfg.lanes - 1);
                    scripts[k].y0 = (lane % cfg.lanes + 0.5) * cfg.lane_width;
                    scripts[k].x0 = -20.0 * (k - 1);
                }
                break;
            }
        }

        for (int k = 0; k < cfg.agents; ++k)
            tracks.push_back(detail::integrate(scripts[k], base_id + k, base_frame, cfg.frames,
                                               cfg.lane_width));
    }
    return tracks;
}

} // namespace cit
