#include <gtest/gtest.h>

#include <cit/decoder.hpp>

#include "testutil.hpp"

using namespace cit;
using cit::testutil::check_grads;
using cit::testutil::random_mat;
using cit::testutil::weighted_sum;

namespace {

// independent density oracle through the explicit covariance matrix,
// evaluated in extended precision so the comparison tolerance is meaningful
double nll_covariance_oracle(const GaussianStep& s, const Vec2& y) {
    const long double sx = s.sigma.x(), sy = s.sigma.y(), rho = s.rho;
    const long double c00 = sx * sx, c11 = sy * sy, c01 = rho * sx * sy;
    const long double det = c00 * c11 - c01 * c01;
    // inverse of the 2x2 covariance
    const long double i00 = c11 / det, i11 = c00 / det, i01 = -c01 / det;
    const long double dx = y.x() - s.mu.x(), dy = y.y() - s.mu.y();
    const long double quad = dx * dx * i00 + 2.0L * dx * dy * i01 + dy * dy * i11;
    const long double log_density =
        -0.5L * quad - std::log(2.0L * static_cast<long double>(M_PI) * std::sqrt(det));
    return static_cast<double>(-log_density);
}

TEST(GaussianNll, ClosedFormAtModeAndUnitStep) {
    GaussianStep s;
    EXPECT_NEAR(gaussian_nll(s, Vec2(0, 0)), std::log(2 * M_PI), 1e-12);
    EXPECT_NEAR(gaussian_nll(s, Vec2(1, 0)), std::log(2 * M_PI) + 0.5, 1e-12);
}

TEST(GaussianNll, MatchesCovarianceOracleOverFuzz) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> upos(-10, 10), usig(0.2, 4.0), urho(-0.95, 0.95);
    for (int i = 0; i < 1000; ++i) {
        GaussianStep s;
        s.mu = Vec2(upos(rng), upos(rng));
        s.sigma = Vec2(usig(rng), usig(rng));
        s.rho = urho(rng);
        Vec2 y(upos(rng), upos(rng));
        const double mine = gaussian_nll(s, y);
        const double oracle = nll_covariance_oracle(s, y);
        EXPECT_NEAR(mine, oracle, 1e-9 * std::max(1.0, std::abs(oracle)));
    }
}

TEST(GaussianNll, TranslationInvariance) {
    std::mt19937_64 rng(18);
    GaussianStep s;
    s.mu = Vec2(1.0, -2.0);
    s.sigma = Vec2(0.7, 1.3);
    s.rho = 0.4;
    Vec2 y(2.0, 0.5), shift(13.0, -4.0);
    GaussianStep s2 = s;
    s2.mu += shift;
    EXPECT_DOUBLE_EQ(gaussian_nll(s, y), gaussian_nll(s2, y + shift));
}

TEST(GaussianNll, RejectsInvalidSteps) {
    GaussianStep s;
    s.sigma = Vec2(0.0, 1.0);
    EXPECT_THROW(gaussian_nll(s, Vec2(0, 0)), std::invalid_argument);
    s.sigma = Vec2(1.0, 1.0);
    s.rho = 1.0;
    EXPECT_THROW(gaussian_nll(s, Vec2(0, 0)), std::invalid_argument);
}

TEST(Posterior, DegenerateMixtureReducesToTrajectoryLikelihood) {
    TargetPrediction tp;
    tp.target_id = 1;
    tp.dist.p_lat << 1.0, 0.0, 0.0;
    tp.dist.p_lon << 1.0, 0.0;
    Mat future = Mat::Zero(3, 2);
    for (auto& traj : tp.trajectories) traj.steps.resize(3);
    const double expect = trajectory_log_likelihood(tp.trajectories[0], future);
    // log(0) components vanish in the mixture; use tiny probabilities instead
    tp.dist.p_lat << 1.0 - 2e-15, 1e-15, 1e-15;
    tp.dist.p_lon << 1.0 - 1e-15, 1e-15;
    const double post = posterior({tp}, {{1, future}});
    EXPECT_NEAR(post, expect, 1e-9);
}

TEST(Posterior, IndependentTargetsMultiply) {
    std::mt19937_64 rng(19);
    TargetPrediction tp;
    tp.target_id = 1;
    Mat future(2, 2);
    future << 0.3, -0.4, 1.0, 0.2;
    for (auto& traj : tp.trajectories) {
        traj.steps.resize(2);
        for (auto& st : traj.steps) {
            st.mu = Vec2(testutil::random_mat(1, 1, rng)(0, 0), 0.1);
            st.sigma = Vec2(1.2, 0.8);
            st.rho = 0.1;
        }
    }
    TargetPrediction tp2 = tp;
    tp2.target_id = 2;
    const double single = posterior({tp}, {{1, future}});
    const double both = posterior({tp, tp2}, {{1, future}, {2, future}});
    EXPECT_NEAR(both, 2 * single, 1e-9);
    EXPECT_THROW(posterior({tp}, {{5, future}}), std::invalid_argument);
}

TEST(Posterior, MatchesBruteForceMixtureOracle) {
    std::mt19937_64 rng(20);
    std::uniform_real_distribution<double> u(-1.5, 1.5), usig(0.4, 2.0), urho(-0.8, 0.8);
    TargetPrediction tp;
    tp.target_id = 9;
    tp.dist.p_lat << 0.5, 0.3, 0.2;
    tp.dist.p_lon << 0.6, 0.4;
    const int T = 4;
    Mat future(T, 2);
    for (long k = 0; k < T; ++k) future.row(k) << u(rng), u(rng);
    for (auto& traj : tp.trajectories) {
        traj.steps.resize(T);
        for (auto& st : traj.steps) {
            st.mu = Vec2(u(rng), u(rng));
            st.sigma = Vec2(usig(rng), usig(rng));
            st.rho = urho(rng);
        }
    }
    // brute force in linear space with long double
    long double mix = 0;
    const auto joint = tp.dist.joint();
    for (int k = 0; k < kManeuverCount; ++k) {
        long double lk = 1.0L;
        for (long f = 0; f < T; ++f)
            lk *= std::exp((long double)-gaussian_nll(tp.trajectories[k].steps[f],
                                                      future.row(f).transpose()));
        mix += (long double)joint[k] * lk;
    }
    const double expected = static_cast<double>(std::log(mix));
    EXPECT_NEAR(posterior({tp}, {{9, future}}), expected, 1e-9 * std::max(1.0, std::abs(expected)));
}

TEST(Assemble, GeometryOracleAndOrderIndependence) {
    GridSpec spec;
    ad::Tape t;
    std::mt19937_64 rng(21);
    Mat za = random_mat(1, 8, rng), zb = random_mat(1, 8, rng);
    const Vec2 ahead(8 * 0.3048, 0.0); // 8 ft ahead
    const Vec2 behind(-12.0, 1.0);
    auto s1 = assemble(t, {{t.constant(za), ahead, 1}, {t.constant(zb), behind, 2}}, spec, 8);
    auto s2 = assemble(t, {{t.constant(zb), behind, 2}, {t.constant(za), ahead, 1}}, spec, 8);
    EXPECT_EQ(t.val(s1.grid), t.val(s2.grid));
    const int cell = s1.target_cells.at(1);
    EXPECT_GT(cell / spec.cols, spec.rows / 2); // forward half
    EXPECT_EQ(t.val(s1.grid).row(cell), za.row(0));

    auto empty = assemble(t, {}, spec, 8);
    EXPECT_TRUE(t.val(empty.grid).isZero(0));

    EXPECT_THROW(assemble(t, {{t.constant(za), Vec2(500.0, 0.0), 1}}, spec, 8),
                 std::invalid_argument);
}

TEST(Refine, ZeroParamsGiveZeroOutput) {
    GridSpec spec{200, 35, 5, 3};
    const int Z = 6, mid = 4;
    FcnParams p;
    p.l1_w = Mat::Zero(9 * Z, mid);
    p.l1_b = Mat::Zero(1, mid);
    p.l2_w = Mat::Zero(9 * mid, mid);
    p.l2_b = Mat::Zero(1, mid);
    p.l3_w = Mat::Zero(9 * mid, Z);
    p.l3_b = Mat::Zero(1, Z);
    ad::Tape t;
    std::mt19937_64 rng(22);
    auto out = refine(t, t.constant(random_mat(spec.cells(), Z, rng)), bind(t, p), spec, 0.1);
    EXPECT_TRUE(t.val(out).isZero(0));
}

TEST(Refine, ReceptiveFieldIsThreeCells) {
    GridSpec spec; // 25 x 5
    const int Z = 4, mid = 4;
    auto p = init_fcn_params(Z, mid, 23);
    std::mt19937_64 rng(24);
    Mat base = random_mat(spec.cells(), Z, rng);

    auto run = [&](const Mat& grid) {
        ad::Tape t;
        return Mat(t.val(refine(t, t.constant(grid), bind(t, p), spec, 0.1)));
    };
    Mat y0 = run(base);
    // perturb a cell 4 rows away from the probe cell (12,2): outside radius 3
    Mat far = base;
    far.row(17 * spec.cols + 2).setConstant(9.0);
    Mat y1 = run(far);
    EXPECT_EQ(y0.row(12 * spec.cols + 2), y1.row(12 * spec.cols + 2));
    // a cell 3 rows away is inside the receptive field
    Mat near = base;
    near.row(15 * spec.cols + 2).setConstant(9.0);
    Mat y2 = run(near);
    EXPECT_NE(y0.row(12 * spec.cols + 2), y2.row(12 * spec.cols + 2));
}

TEST(Refine, DistantTargetsDecouple) {
    GridSpec spec;
    const int Z = 4, mid = 4;
    auto p = init_fcn_params(Z, mid, 25);
    std::mt19937_64 rng(26);
    Mat za = random_mat(1, Z, rng), zb = random_mat(1, Z, rng);
    auto read = [&](const std::vector<std::pair<Mat, Vec2>>& targets, const Vec2& probe) {
        ad::Tape t;
        std::vector<ScatterEntry> es;
        int64_t id = 1;
        for (const auto& [z, pos] : targets) es.push_back({t.constant(z), pos, id++});
        auto s = assemble(t, es, spec, Z);
        auto refined = refine(t, s.grid, bind(t, p), spec, 0.1);
        const int cell = grid_cell_of(probe, spec)->flat(spec);
        return Mat(t.val(refined).row(cell));
    };
    const Vec2 pa(-25.0, 0.0), pb(25.0, 0.0); // ~20 cells apart, radius is 3
    Mat with_both = read({{za, pa}, {zb, pb}}, pa);
    Mat alone = read({{za, pa}}, pa);
    EXPECT_EQ(with_both, alone);
}

TEST(ManeuverHead, ZeroWeightsGiveUniformDistributions) {
    ad::Tape t;
    ManeuverHeadParams p;
    const int Z = 10, hid = 6;
    p.lat_w1 = Mat::Zero(Z, hid);
    p.lat_b1 = Mat::Zero(1, hid);
    p.lat_w2 = Mat::Zero(hid, 3);
    p.lat_b2 = Mat::Zero(1, 3);
    p.lon_w1 = Mat::Zero(Z, hid);
    p.lon_b1 = Mat::Zero(1, hid);
    p.lon_w2 = Mat::Zero(hid, 2);
    p.lon_b2 = Mat::Zero(1, 2);
    std::mt19937_64 rng(27);
    auto logits = maneuver_logits(t, t.constant(random_mat(1, Z, rng)), bind(t, p), 0.1);
    auto dist = maneuver_distribution(t, logits);
    for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(dist.p_lat[i], 1.0 / 3);
    for (int i = 0; i < 2; ++i) EXPECT_DOUBLE_EQ(dist.p_lon[i], 0.5);
    for (double pj : dist.joint()) EXPECT_NEAR(pj, 1.0 / 6, 1e-12);
}

TEST(ManeuverHead, JointSimplexAndArgmaxStructure) {
    std::mt19937_64 rng(28);
    const int Z = 12, hid = 8;
    auto p = init_head_params(Z, hid, 29);
    for (int trial = 0; trial < 100; ++trial) {
        ad::Tape t;
        auto logits = maneuver_logits(t, t.constant(random_mat(1, Z, rng, 3.0)), bind(t, p), 0.1);
        auto dist = maneuver_distribution(t, logits);
        double sum = 0;
        for (double pj : dist.joint()) sum += pj;
        EXPECT_NEAR(sum, 1.0, 1e-6);
        EXPECT_NEAR(dist.p_lat.sum(), 1.0, 1e-6);
        EXPECT_NEAR(dist.p_lon.sum(), 1.0, 1e-6);
        auto am = dist.argmax();
        const auto joint = dist.joint();
        const int best =
            std::max_element(joint.begin(), joint.end()) - joint.begin();
        EXPECT_EQ(am.joint_index(), best);
    }
}

TEST(Decode, ZeroParamsGiveIdentityLinks) {
    // raw outputs all zero: mu stays at last_pos, sigma = exp(0) = 1, rho = 0
    const int Z = 6, H = 4;
    DecoderParams p;
    p.wx = Mat::Zero(Z + 5, 4 * H);
    p.wh = Mat::Zero(H, 4 * H);
    p.b = Mat::Zero(1, 4 * H);
    p.out_w = Mat::Zero(H, 5);
    p.out_b = Mat::Zero(1, 5);
    ad::Tape t;
    std::mt19937_64 rng(30);
    const Vec2 last(3.0, -1.0);
    auto seq = decode(t, t.constant(random_mat(1, Z, rng)), {}, last, bind(t, p), 7);
    auto traj = to_trajectory(t, seq);
    ASSERT_EQ(traj.steps.size(), 7u);
    for (const auto& st : traj.steps) {
        EXPECT_EQ(st.mu, last);
        EXPECT_DOUBLE_EQ(st.sigma.x(), 1.0);
        EXPECT_DOUBLE_EQ(st.sigma.y(), 1.0);
        EXPECT_DOUBLE_EQ(st.rho, 0.0);
    }
}

TEST(Decode, LinkRangesAndCumulativeContract) {
    std::mt19937_64 rng(31);
    const int Z = 8, H = 6, T = 9;
    auto p = init_decoder_params(Z, H, 32);
    // exaggerate output weights so raw values are large
    p.out_w *= 20.0;
    ad::Tape t;
    const Vec2 last(1.0, 2.0);
    auto seq = decode(t, t.constant(random_mat(1, Z, rng, 2.0)),
                      {LatManeuver::left, LonManeuver::brake}, last, bind(t, p), T);
    auto traj = to_trajectory(t, seq);
    const Mat& raw = t.val(seq.raw);
    Vec2 prev = last;
    for (long k = 0; k < T; ++k) {
        const auto& st = traj.steps[k];
        EXPECT_GT(st.sigma.x(), 0.0);
        EXPECT_GT(st.sigma.y(), 0.0);
        EXPECT_LT(std::abs(st.rho), 1.0);
        // cumulative-mean contract: mu_k - mu_{k-1} is the decoded displacement
        EXPECT_NEAR(st.mu.x() - prev.x(), kDecoderStepScale * raw(k, 0), 1e-12);
        EXPECT_NEAR(st.mu.y() - prev.y(), kDecoderStepScale * raw(k, 1), 1e-12);
        prev = st.mu;
    }
}

TEST(Decode, GradientsThroughNllMatchFiniteDifferences) {
    std::mt19937_64 rng(33);
    const int Z = 4, H = 3, T = 4;
    auto p = init_decoder_params(Z, H, 34);
    Mat zfeat = random_mat(1, Z, rng);
    Mat future = random_mat(T, 2, rng, 2.0);
    check_grads(
        [&](ad::Tape& t, std::vector<ad::Var>& v) {
            DecoderVars dv{v[1], v[2], v[3], v[4], v[5]};
            auto seq = decode(t, v[0], {LatManeuver::keep, LonManeuver::normal}, Vec2(0.5, -0.5),
                              dv, T);
            return t.sum_all(gaussian_nll_seq(t, seq, future));
        },
        {zfeat, p.wx, p.wh, p.b, p.out_w, p.out_b}, 1e-6, 1e-4);
}

TEST(Decode, NllSeqAgreesWithScalarOracle) {
    std::mt19937_64 rng(35);
    const int Z = 5, H = 4, T = 6;
    auto p = init_decoder_params(Z, H, 36);
    ad::Tape t;
    Mat future = random_mat(T, 2, rng, 3.0);
    auto seq = decode(t, t.constant(random_mat(1, Z, rng)),
                      {LatManeuver::right, LonManeuver::normal}, Vec2(0, 0), bind(t, p), T);
    ad::Var nll = gaussian_nll_seq(t, seq, future);
    auto traj = to_trajectory(t, seq);
    for (long k = 0; k < T; ++k)
        EXPECT_NEAR(t.val(nll)(k, 0), gaussian_nll(traj.steps[k], future.row(k).transpose()),
                    1e-12);
}

} // namespace
