#include <gtest/gtest.h>

#include <cit/graphs.hpp>

#include "testutil.hpp"

using namespace cit;
using cit::testutil::check_grads;
using cit::testutil::random_mat;
using cit::testutil::weighted_sum;

namespace {

Encoding rand_encoding(long d, std::mt19937_64& rng) {
    return {random_mat(1, d, rng).row(0)};
}

TEST(Scatter, EmptyListGivesZeroTensor) {
    auto st = scatter({}, GridSpec{}, 16);
    EXPECT_EQ(st.grid.rows(), 125);
    EXPECT_TRUE((st.grid.array() == 0).all());
    for (auto o : st.occupancy) EXPECT_EQ(o, 0);
}

TEST(Scatter, AheadAgentLandsInForwardHalf) {
    std::mt19937_64 rng(1);
    GridSpec spec;
    auto enc = rand_encoding(16, rng);
    auto st = scatter({{enc, Vec2(16.0, 0.0)}}, spec);
    auto cell = grid_cell_of(Vec2(16.0, 0.0), spec);
    ASSERT_TRUE(cell);
    EXPECT_GT(cell->row, spec.rows / 2);
    int occupied = 0;
    for (int i = 0; i < spec.cells(); ++i) occupied += st.occupancy[i];
    EXPECT_EQ(occupied, 1);
    EXPECT_EQ(st.grid.row(cell->flat(spec)), enc.vec);
}

TEST(Scatter, CollisionKeepsNearerAgentAndDropsOutside) {
    std::mt19937_64 rng(2);
    GridSpec spec;
    auto near = rand_encoding(8, rng);
    auto far = rand_encoding(8, rng);
    auto outside = rand_encoding(8, rng);
    // same cell: offsets within one 8ft x 7ft cell of the center
    auto st = scatter({{far, Vec2(0.9, 0.2)}, {near, Vec2(0.1, 0.0)}, {outside, Vec2(90.0, 0.0)}},
                      spec);
    // two agents share the center cell, the out-of-grid one is dropped
    int occupied = 0;
    for (int i = 0; i < spec.cells(); ++i) occupied += st.occupancy[i];
    EXPECT_EQ(occupied, 1);
    auto center = grid_cell_of(Vec2(0.1, 0.0), spec);
    ASSERT_TRUE(center);
    EXPECT_EQ(st.grid.row(center->flat(spec)), near.vec);
}

TEST(BuildGraph, ShapeContract) {
    std::mt19937_64 rng(3);
    GridSpec spec;
    const int D = 64;
    auto params = init_pool_params(D, "current", 7);
    auto tar = rand_encoding(D, rng);
    auto social = scatter({{rand_encoding(D, rng), Vec2(10.0, 1.0)},
                           {rand_encoding(D, rng), Vec2(-6.0, -1.5)}},
                          spec);
    auto graph = build_graph(tar, social, params, spec);
    EXPECT_EQ(graph.tensor.rows(), 125);
    EXPECT_EQ(graph.tensor.cols(), 65);
    EXPECT_TRUE(graph.tensor.allFinite());
    // occupancy channel mirrors the social tensor
    for (int i = 0; i < spec.cells(); ++i)
        EXPECT_DOUBLE_EQ(graph.tensor(i, 64), social.occupancy[i] ? 1.0 : 0.0);
}

TEST(BuildGraph, ZeroParamsZeroFeatures) {
    GridSpec spec{200, 35, 5, 3};
    const int D = 8;
    PoolParams p;
    p.c1_w = Mat::Zero(9 * D, D);
    p.c1_b = Mat::Zero(1, D);
    p.c2_w = Mat::Zero(9 * D, D);
    p.c2_b = Mat::Zero(1, D);
    p.fuse_w = Mat::Zero(2 * D, D);
    p.fuse_b = Mat::Zero(1, D);
    SocialTensor social{Mat::Zero(spec.cells(), D), std::vector<uint8_t>(spec.cells(), 0)};
    Encoding tar{RowVec::Zero(D)};
    auto graph = build_graph(tar, social, p, spec);
    EXPECT_TRUE((graph.tensor.array() == 0).all());
}

TEST(BuildGraph, MaskingInvariant) {
    // perturbing out-of-grid agents or zero-occupancy cells changes nothing
    std::mt19937_64 rng(4);
    GridSpec spec;
    const int D = 16;
    auto params = init_pool_params(D, "current", 9);
    auto tar = rand_encoding(D, rng);
    auto inside = rand_encoding(D, rng);
    auto outside = rand_encoding(D, rng);

    auto g1 = build_graph(tar, scatter({{inside, Vec2(5.0, 0.0)}, {outside, Vec2(500.0, 0.0)}},
                                       spec),
                          params, spec);
    auto perturbed = outside;
    perturbed.vec.array() += 3.0;
    auto g2 = build_graph(tar, scatter({{inside, Vec2(5.0, 0.0)}, {perturbed, Vec2(500.0, 0.0)}},
                                       spec),
                          params, spec);
    EXPECT_EQ(g1.tensor, g2.tensor);

    // hand-built tensor with junk in an unoccupied cell
    auto social = scatter({{inside, Vec2(5.0, 0.0)}}, spec);
    auto dirty = social;
    dirty.grid.row(3).setConstant(42.0); // occupancy[3] == 0
    auto g3 = build_graph(tar, social, params, spec);
    auto g4 = build_graph(tar, dirty, params, spec);
    EXPECT_EQ(g3.tensor, g4.tensor);
}

TEST(BuildGraph, TargetOnlyGraphIsValid) {
    std::mt19937_64 rng(5);
    GridSpec spec;
    const int D = 16;
    auto params = init_pool_params(D, "current", 10);
    auto graph = build_graph(rand_encoding(D, rng), scatter({}, spec, D), params, spec);
    EXPECT_EQ(graph.tensor.rows(), 125);
    EXPECT_EQ(graph.tensor.cols(), 17);
    EXPECT_TRUE(graph.tensor.allFinite());
}

TEST(BuildGraph, TranslationInvarianceOfComposition) {
    // identical scenes up to global translation produce identical graphs:
    // relative positions are unchanged, so scatter and pooling agree
    std::mt19937_64 rng(6);
    GridSpec spec;
    const int D = 12;
    auto params = init_pool_params(D, "current", 11);
    auto tar = rand_encoding(D, rng);
    auto nbr = rand_encoding(D, rng);
    Vec2 rel(7.0, 2.0);
    auto g1 = build_graph(tar, scatter({{nbr, rel}}, spec), params, spec);
    auto g2 = build_graph(tar, scatter({{nbr, rel}}, spec), params, spec);
    EXPECT_EQ(g1.tensor, g2.tensor);
}

TEST(BuildGraph, GradientsThroughScatterAndPooling) {
    std::mt19937_64 rng(7);
    GridSpec spec{200, 35, 5, 3};
    const int D = 4;
    auto params = init_pool_params(D, "current", 12);
    Mat tar = random_mat(1, D, rng);
    Mat nbr1 = random_mat(1, D, rng);
    Mat nbr2 = random_mat(1, D, rng);
    check_grads(
        [&](ad::Tape& t, std::vector<ad::Var>& v) {
            std::mt19937_64 wrng(55);
            PoolVars pv{v[3], v[4], v[5], v[6], v[7], v[8]};
            auto st = scatter(t,
                              {{v[0], Vec2(0.0, 0.0), 0},
                               {v[1], Vec2(10.0, 2.0), 1},
                               {v[2], Vec2(-12.0, -2.0), 2}},
                              spec, D);
            auto g = build_graph(t, v[0], st, pv, spec, 0.1);
            return weighted_sum(t, g.tensor, wrng);
        },
        {tar, nbr1, nbr2, params.c1_w, params.c1_b, params.c2_w, params.c2_b, params.fuse_w,
         params.fuse_b},
        1e-6, 1e-4);
}

} // namespace
