#include <gtest/gtest.h>

#include <cit/data.hpp>
#include <cit/synth.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace cit;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    auto path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

AgentTrack straight_track(int64_t id, long n, double v_mps, double y, int lane,
                          double rate = 5.0, double x0 = 0.0) {
    AgentTrack tr;
    tr.agent_id = id;
    tr.source_rate = rate;
    tr.positions.resize(n, 2);
    for (long i = 0; i < n; ++i) {
        tr.frames.push_back(i);
        tr.positions(i, 0) = x0 + v_mps * i / rate;
        tr.positions(i, 1) = y;
        tr.lane_ids.push_back(lane);
    }
    return tr;
}

TEST(LoadTracks, NgsimLayoutConvertsFeetAndSwapsAxes) {
    // Local_X lateral / Local_Y longitudinal, both feet
    auto path = write_temp("ngsim_fixture.csv",
                           "Vehicle_ID,Frame_ID,Local_X,Local_Y,Lane_ID\n"
                           "7,100,10,0,2\n"
                           "7,101,10,5,2\n"
                           "7,102,10,10,2\n");
    auto tracks = load_tracks(path, TrackFormat::ngsim);
    ASSERT_EQ(tracks.size(), 1u);
    const auto& tr = tracks[0];
    EXPECT_EQ(tr.agent_id, 7);
    EXPECT_DOUBLE_EQ(tr.source_rate, 10.0);
    EXPECT_DOUBLE_EQ(tr.positions(1, 0), 5 * 0.3048);  // longitudinal from Local_Y
    EXPECT_DOUBLE_EQ(tr.positions(1, 1), 10 * 0.3048); // lateral from Local_X
    EXPECT_EQ(tr.lane_ids[2], 2);
}

TEST(LoadTracks, EmptyFileGivesEmptyCollection) {
    auto path = write_temp("empty.csv", "");
    EXPECT_TRUE(load_tracks(path, TrackFormat::highd).empty());
}

TEST(LoadTracks, NonMonotonicFramesNameTheAgent) {
    auto path = write_temp("nonmono.csv",
                           "id,frame,x,y,laneId\n"
                           "3,10,0,0,1\n"
                           "3,9,1,0,1\n");
    try {
        load_tracks(path, TrackFormat::highd);
        FAIL() << "expected an error";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);
    }
}

TEST(LoadTracks, MalformedRowNamesLineAndColumn) {
    auto path = write_temp("badrow.csv",
                           "id,frame,x,y,laneId\n"
                           "1,5,0.0,0.0,1\n"
                           "1,6,zzz,0.0,1\n");
    try {
        load_tracks(path, TrackFormat::highd);
        FAIL() << "expected an error";
    } catch (const std::runtime_error& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("column x"), std::string::npos) << msg;
    }
}

TEST(LoadTracks, UnknownFormatTag) {
    EXPECT_THROW(track_format_from_string("waymo"), std::invalid_argument);
}

TEST(Resample, DecimationByTwoAndFive) {
    auto t10 = straight_track(1, 30, 10.0, 0.0, 0, 10.0);
    auto r = resample_tracks({t10}, 5.0);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].size(), 15);
    EXPECT_DOUBLE_EQ(r[0].source_rate, 5.0);
    EXPECT_DOUBLE_EQ(r[0].positions(1, 0), t10.positions(2, 0));
    EXPECT_EQ(r[0].frames[1], 2);

    auto t25 = straight_track(2, 50, 10.0, 0.0, 0, 25.0);
    auto r25 = resample_tracks({t25}, 5.0);
    EXPECT_EQ(r25[0].size(), 10);
    EXPECT_EQ(r25[0].frames[1], 5);
}

TEST(Resample, IdentityAndErrors) {
    auto t5 = straight_track(1, 10, 10.0, 0.0, 0, 5.0);
    auto r = resample_tracks({t5}, 5.0);
    EXPECT_EQ(r[0].positions, t5.positions);

    auto t12 = straight_track(1, 10, 10.0, 0.0, 0, 12.0);
    EXPECT_THROW(resample_tracks({t12}, 5.0), std::invalid_argument);
    auto t2 = straight_track(1, 10, 10.0, 0.0, 0, 2.0);
    EXPECT_THROW(resample_tracks({t2}, 5.0), std::invalid_argument);
}

TEST(LabelManeuver, ConstantTrackIsKeepNormal) {
    auto tr = straight_track(1, 60, 25.0, 1.85, 0);
    auto label = label_maneuver(tr, 20, 15, 25);
    EXPECT_EQ(label.lateral, LatManeuver::keep);
    EXPECT_EQ(label.longitudinal, LonManeuver::normal);
}

TEST(LabelManeuver, LeftLaneChangeByFutureLane) {
    // lane id 3 -> 2 with leftward (positive y) motion inside the future window
    AgentTrack tr = straight_track(1, 60, 25.0, 3.5 * 3.7, 3);
    for (long i = 30; i < 60; ++i) {
        const double u = std::min(1.0, (i - 30) / 15.0);
        tr.positions(i, 1) = 3.5 * 3.7 + u * 3.7; // moving toward higher y
        tr.lane_ids[i] = static_cast<int>(tr.positions(i, 1) / 3.7);
    }
    // relabel lanes so ids decrease while y increases, like NGSIM numbering
    for (long i = 0; i < 60; ++i) tr.lane_ids[i] = 6 - tr.lane_ids[i];
    ASSERT_EQ(tr.lane_ids[20], 3);
    ASSERT_EQ(tr.lane_ids[58], 2);
    auto label = label_maneuver(tr, 25, 15, 25);
    EXPECT_EQ(label.lateral, LatManeuver::left);
}

TEST(LabelManeuver, RecentPastLaneChangeCounts) {
    // change completed just before t: future lane equals lane at t, but the
    // history window begins in another lane
    AgentTrack tr = straight_track(1, 60, 25.0, 0.5 * 3.7, 0);
    for (long i = 0; i < 18; ++i) {
        tr.positions(i, 1) = 1.5 * 3.7;
        tr.lane_ids[i] = 1;
    }
    auto label = label_maneuver(tr, 20, 15, 25);
    EXPECT_EQ(label.lateral, LatManeuver::right); // moved toward smaller y
}

TEST(LabelManeuver, BrakeThresholdArithmetic) {
    // 20 m/s at t, then 12 m/s mean: 12 < 0.8 * 20 = 16 -> brake
    AgentTrack tr;
    tr.agent_id = 1;
    tr.source_rate = 5.0;
    const long n = 60;
    tr.positions.resize(n, 2);
    double x = 0;
    for (long i = 0; i < n; ++i) {
        tr.frames.push_back(i);
        tr.positions(i, 0) = x;
        tr.positions(i, 1) = 0;
        tr.lane_ids.push_back(0);
        x += (i < 20 ? 4.0 : 2.4); // 20 m/s before t=20, 12 m/s after
    }
    auto label = label_maneuver(tr, 20, 15, 25);
    EXPECT_EQ(label.longitudinal, LonManeuver::brake);
    EXPECT_THROW(label_maneuver(tr, 50, 15, 25), std::invalid_argument);
}

TEST(DownsamplePlan, KeepsOneToFiveSecondPoints) {
    EgoPlan plan;
    plan.rate = 5.0;
    plan.points.resize(25, 2);
    for (int k = 0; k < 25; ++k) {
        plan.points(k, 0) = 10.0 * (k + 1) * 0.2; // 10 m/s straight
        plan.points(k, 1) = 0;
    }
    auto coarse = downsample_plan(plan);
    ASSERT_EQ(coarse.points.rows(), 5);
    EXPECT_DOUBLE_EQ(coarse.rate, 1.0);
    for (int k = 0; k < 5; ++k) EXPECT_DOUBLE_EQ(coarse.points(k, 0), 10.0 * (k + 1));

    EgoPlan constant;
    constant.rate = 5.0;
    constant.points = Mat::Ones(25, 2);
    auto c = downsample_plan(constant);
    EXPECT_EQ(c.points, Mat::Ones(5, 2));

    EgoPlan wrong;
    wrong.rate = 5.0;
    wrong.points = Mat::Zero(20, 2);
    EXPECT_THROW(downsample_plan(wrong), std::invalid_argument);
}

TEST(Extract, IsolatedEgoYieldsTargetlessInstances) {
    auto ego = straight_track(1, 60, 25.0, 1.85, 0);
    auto res = extract_instances({ego}, GridSpec{}, {});
    ASSERT_GT(res.instances.size(), 0u);
    for (const auto& inst : res.instances) {
        EXPECT_EQ(inst.targets.size(), 0u);
        EXPECT_EQ(inst.ego_history.rows(), 15);
        EXPECT_EQ(inst.ego_future.rows(), 25);
    }
}

TEST(Extract, FollowerBecomesTargetWithEgoAsNeighbor) {
    auto ego = straight_track(1, 60, 25.0, 1.85, 0);
    auto follower = straight_track(2, 60, 25.0, 1.85, 0, 5.0, -20.0);
    auto res = extract_instances({ego, follower}, GridSpec{}, {});
    bool checked = false;
    for (const auto& inst : res.instances) {
        if (inst.ego_id != 1) continue;
        ASSERT_EQ(inst.targets.size(), 1u);
        const auto& tgt = inst.targets[0];
        EXPECT_EQ(tgt.id, 2);
        ASSERT_EQ(tgt.neighbors.size(), 1u);
        EXPECT_EQ(tgt.neighbors[0].id, 1);
        // the neighbor sample carries the ego history window
        EXPECT_EQ(tgt.neighbors[0].history, inst.ego_history);
        checked = true;
    }
    EXPECT_TRUE(checked);
}

TEST(Extract, TruncatedFutureExcludesTarget) {
    auto ego = straight_track(1, 60, 25.0, 1.85, 0);
    auto partial = straight_track(2, 30, 25.0, 1.85, 0, 5.0, -15.0); // ends early
    auto res = extract_instances({ego, partial}, GridSpec{}, {});
    for (const auto& inst : res.instances) {
        if (inst.ego_id != 1) continue;
        for (const auto& tgt : inst.targets) EXPECT_NE(tgt.id, 2);
    }
    EXPECT_GT(res.stats.dropped_targets, 0);
}

TEST(Extract, TranslationInvariance) {
    auto a = straight_track(1, 60, 25.0, 1.85, 0);
    auto b = straight_track(2, 60, 24.0, 5.55, 1, 5.0, -12.0);
    auto res1 = extract_instances({a, b}, GridSpec{}, {});
    const Vec2 shift(123.0, -7.0);
    a.positions.rowwise() += shift.transpose();
    b.positions.rowwise() += shift.transpose();
    auto res2 = extract_instances({a, b}, GridSpec{}, {});
    ASSERT_EQ(res1.instances.size(), res2.instances.size());
    for (size_t i = 0; i < res1.instances.size(); ++i) {
        ASSERT_EQ(res1.instances[i].targets.size(), res2.instances[i].targets.size());
        for (size_t j = 0; j < res1.instances[i].targets.size(); ++j)
            EXPECT_EQ(res1.instances[i].targets[j].id, res2.instances[i].targets[j].id);
    }
}

TEST(Extract, RejectsWrongRate) {
    auto t10 = straight_track(1, 60, 25.0, 0.0, 0, 10.0);
    EXPECT_THROW(extract_instances({t10}, GridSpec{}, {}), std::invalid_argument);
}

TEST(Synthetic, DegenerateCruiseSceneIsStraight) {
    ScenarioConfig cfg;
    cfg.agents = 1;
    cfg.scenes = 1;
    cfg.frames = 60;
    cfg.mix = {1.0, 0.0, 0.0, 0.0};
    auto tracks = generate_synthetic(cfg, 3);
    ASSERT_EQ(tracks.size(), 1u);
    const auto& tr = tracks[0];
    EXPECT_EQ(tr.size(), 60);
    const double dx = tr.positions(1, 0) - tr.positions(0, 0);
    for (long i = 1; i < tr.size(); ++i) {
        EXPECT_NEAR(tr.positions(i, 0) - tr.positions(i - 1, 0), dx, 1e-12);
        EXPECT_DOUBLE_EQ(tr.positions(i, 1), tr.positions(0, 1));
    }
}

TEST(Synthetic, DeterministicGivenSeed) {
    ScenarioConfig cfg;
    cfg.scenes = 4;
    auto a = generate_synthetic(cfg, 11);
    auto b = generate_synthetic(cfg, 11);
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].agent_id, b[i].agent_id);
        EXPECT_EQ(a[i].positions, b[i].positions);
    }
    auto c = generate_synthetic(cfg, 12);
    bool any_diff = false;
    for (size_t i = 0; i < a.size() && !any_diff; ++i)
        any_diff = a[i].positions != c[i].positions;
    EXPECT_TRUE(any_diff);
}

TEST(Synthetic, ReactiveFollowerLagsLeaderByThreeFrames) {
    ScenarioConfig cfg;
    cfg.agents = 2;
    cfg.scenes = 1;
    cfg.frames = 70;
    cfg.mix = {0.0, 0.0, 0.0, 1.0};
    cfg.brake_branch_prob = 1.0; // force the braking branch
    cfg.fixed_brake_onset = 30;
    auto tracks = generate_synthetic(cfg, 5);
    ASSERT_EQ(tracks.size(), 2u);
    const auto& leader = tracks[0];
    const auto& follower = tracks[1];
    auto speed = [](const AgentTrack& tr, long i) {
        return (tr.positions.row(i + 1) - tr.positions.row(i)).norm() * 5.0;
    };
    auto first_drop = [&](const AgentTrack& tr) {
        for (long i = 1; i + 1 < tr.size(); ++i)
            if (speed(tr, i) < speed(tr, i - 1) - 1e-9) return i;
        return -1L;
    };
    const long leader_drop = first_drop(leader);
    const long follower_drop = first_drop(follower);
    ASSERT_GT(leader_drop, 0);
    EXPECT_EQ(follower_drop - leader_drop, 3);
}

TEST(Synthetic, InvalidConfigRejected) {
    ScenarioConfig cfg;
    cfg.lanes = 0;
    EXPECT_THROW(generate_synthetic(cfg, 0), std::invalid_argument);
    cfg.lanes = 2;
    cfg.agents = 0;
    EXPECT_THROW(generate_synthetic(cfg, 0), std::invalid_argument);
}

TEST(Synthetic, SaveLoadRoundTripIsBitExact) {
    ScenarioConfig cfg;
    cfg.scenes = 3;
    auto tracks = generate_synthetic(cfg, 21);
    auto path = (std::filesystem::temp_directory_path() / "synth_roundtrip.csv").string();
    save_tracks(path, tracks);
    auto loaded = load_tracks(path, TrackFormat::synthetic_native);
    ASSERT_EQ(loaded.size(), tracks.size());
    for (size_t i = 0; i < tracks.size(); ++i) {
        EXPECT_EQ(loaded[i].agent_id, tracks[i].agent_id);
        EXPECT_EQ(loaded[i].frames, tracks[i].frames);
        EXPECT_EQ(loaded[i].lane_ids, tracks[i].lane_ids);
        ASSERT_EQ(loaded[i].positions.rows(), tracks[i].positions.rows());
        for (long r = 0; r < tracks[i].positions.rows(); ++r) {
            EXPECT_EQ(loaded[i].positions(r, 0), tracks[i].positions(r, 0));
            EXPECT_EQ(loaded[i].positions(r, 1), tracks[i].positions(r, 1));
        }
    }
}

TEST(Synthetic, LabelDistributionTracksMix) {
    ScenarioConfig cfg;
    cfg.scenes = 24;
    cfg.agents = 2;
    cfg.frames = 70;
    cfg.mix = {0.3, 0.3, 0.4, 0.0};
    auto tracks = generate_synthetic(cfg, 9);
    auto res = extract_instances(tracks, GridSpec{}, {});
    int lat_changes = 0, brakes = 0, total = 0;
    for (const auto& inst : res.instances)
        for (const auto& tgt : inst.targets) {
            ++total;
            lat_changes += tgt.label.lateral != LatManeuver::keep;
            brakes += tgt.label.longitudinal == LonManeuver::brake;
        }
    ASSERT_GT(total, 0);
    EXPECT_GT(lat_changes, 0);
    EXPECT_GT(brakes, 0);
}

TEST(Split, FractionArithmeticAndDeterminism) {
    std::vector<Instance> instances;
    for (int id = 0; id < 10; ++id)
        for (int k = 0; k < 3; ++k) {
            Instance inst;
            inst.ego_id = id;
            inst.t = k;
            inst.ego_history = Mat::Zero(15, 2);
            inst.ego_future = Mat::Zero(25, 2);
            instances.push_back(inst);
        }
    SplitSpec spec;
    spec.seed = 77;
    auto s1 = split_dataset(instances, spec);
    auto ids_of = [](const std::vector<Instance>& v) {
        std::set<int64_t> s;
        for (const auto& i : v) s.insert(i.ego_id);
        return s;
    };
    EXPECT_EQ(ids_of(s1.train).size(), 7u);
    EXPECT_EQ(ids_of(s1.val).size(), 1u);
    EXPECT_EQ(ids_of(s1.test).size(), 2u);

    auto s2 = split_dataset(instances, spec);
    EXPECT_EQ(ids_of(s1.train), ids_of(s2.train));
    EXPECT_EQ(ids_of(s1.test), ids_of(s2.test));

    // disjointness
    for (int64_t id : ids_of(s1.train)) {
        EXPECT_EQ(ids_of(s1.val).count(id), 0u);
        EXPECT_EQ(ids_of(s1.test).count(id), 0u);
    }
    SplitSpec bad;
    bad.train_frac = 0.5;
    EXPECT_THROW(split_dataset(instances, bad), std::invalid_argument);
}

TEST(InstanceCache, RoundTrip) {
    ScenarioConfig cfg;
    cfg.scenes = 2;
    cfg.agents = 2;
    cfg.mix = {0.5, 0.0, 0.0, 0.5};
    auto tracks = generate_synthetic(cfg, 31);
    auto res = extract_instances(tracks, GridSpec{}, {});
    ASSERT_GT(res.instances.size(), 0u);
    auto path = (std::filesystem::temp_directory_path() / "instances.jsonl").string();
    save_instances(path, res.instances, 15, 25, 5.0);
    auto loaded = load_instances(path);
    ASSERT_EQ(loaded.size(), res.instances.size());
    for (size_t i = 0; i < loaded.size(); ++i) {
        EXPECT_EQ(loaded[i].ego_id, res.instances[i].ego_id);
        EXPECT_EQ(loaded[i].t, res.instances[i].t);
        EXPECT_EQ(loaded[i].ego_history, res.instances[i].ego_history);
        EXPECT_EQ(loaded[i].ego_future, res.instances[i].ego_future);
        ASSERT_EQ(loaded[i].targets.size(), res.instances[i].targets.size());
        for (size_t j = 0; j < loaded[i].targets.size(); ++j) {
            EXPECT_EQ(loaded[i].targets[j].label, res.instances[i].targets[j].label);
            EXPECT_EQ(loaded[i].targets[j].future, res.instances[i].targets[j].future);
            EXPECT_EQ(loaded[i].targets[j].neighbors.size(),
                      res.instances[i].targets[j].neighbors.size());
        }
    }
    // header is self-describing
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    EXPECT_NE(first.find("cit-instances"), std::string::npos);
    EXPECT_NE(first.find("version"), std::string::npos);
}

} // namespace
