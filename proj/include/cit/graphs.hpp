#pragma once

// Intention graph construction: agent encodings scattered into an
// agent-centric social tensor, convolutional social pooling over the grid,
// fusion with the target's own encoding, and an occupancy channel carried
// alongside the features. One graph per time domain (current: neighbor
// histories; future: the ego plan).

#include <cit/autodiff.hpp>
#include <cit/encoder.hpp>
#include <cit/init.hpp>
#include <cit/types.hpp>

#include <map>
#include <vector>

namespace cit {

// One encoding to be placed on a grid, at a position relative to the
// grid-center agent (meters, travel-aligned).
struct ScatterEntry {
    ad::Var encoding; // [1 x D]
    Vec2 relpos;
    int64_t id = 0;
};

struct SocialTensorVar {
    ad::Var grid;                   // [H*W x D]; unoccupied rows exactly zero
    std::vector<uint8_t> occupancy; // H*W
};

// Eager counterpart used by tests and probes.
struct SocialTensor {
    Mat grid;
    std::vector<uint8_t> occupancy;
};

// Cell collisions keep the agent nearest the grid center (ties: lowest id);
// agents outside the grid are dropped.
inline SocialTensorVar scatter(ad::Tape& t, const std::vector<ScatterEntry>& entries,
                               const GridSpec& grid, long dim) {
    grid.validate();
    struct Winner {
        double dist2;
        int64_t id;
        ad::Var enc;
    };
    std::map<int, Winner> cells;
    for (const auto& e : entries) {
        if (t.val(e.encoding).rows() != 1 || t.val(e.encoding).cols() != dim)
            throw std::invalid_argument("scatter: encoding is not [1 x dim]");
        auto cell = grid_cell_of(e.relpos, grid);
        if (!cell) continue;
        const double d2 = e.relpos.squaredNorm();
        const int flat = cell->flat(grid);
        auto it = cells.find(flat);
        if (it == cells.end() || d2 < it->second.dist2 ||
            (d2 == it->second.dist2 && e.id < it->second.id))
            cells[flat] = {d2, e.id, e.encoding};
    }
    SocialTensorVar out;
    out.occupancy.assign(grid.cells(), 0);
    std::vector<std::pair<ad::Var, int>> placed;
    for (const auto& [flat, w] : cells) {
        placed.push_back({w.enc, flat});
        out.occupancy[flat] = 1;
    }
    if (placed.empty()) {
        out.grid = t.constant(Mat::Zero(grid.cells(), dim));
    } else {
        out.grid = t.scatter_rows(placed, grid.cells(), static_cast<int>(dim));
    }
    return out;
}

// Convolutional social pooling parameters for one time domain.
struct PoolParams {
    Mat c1_w, c1_b;     // 3x3 conv, D -> D
    Mat c2_w, c2_b;     // 3x3 conv, D -> D
    Mat fuse_w, fuse_b; // 1x1 conv, [pooled ++ target encoding] (2D) -> D

    template <class F>
    void visit(const std::string& prefix, F&& f) {
        f(prefix + ".c1_w", c1_w);
        f(prefix + ".c1_b", c1_b);
        f(prefix + ".c2_w", c2_w);
        f(prefix + ".c2_b", c2_b);
        f(prefix + ".fuse_w", fuse_w);
        f(prefix + ".fuse_b", fuse_b);
    }
};

inline PoolParams init_pool_params(int dim, const std::string& domain, uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, "pool." + domain));
    PoolParams p;
    p.c1_w = he_uniform(9 * dim, dim, 9 * dim, rng);
    p.c1_b = fanin_uniform(1, dim, 9 * dim, rng);
    p.c2_w = he_uniform(9 * dim, dim, 9 * dim, rng);
    p.c2_b = fanin_uniform(1, dim, 9 * dim, rng);
    p.fuse_w = he_uniform(2 * dim, dim, 2 * dim, rng);
    p.fuse_b = fanin_uniform(1, dim, 2 * dim, rng);
    return p;
}

struct PoolVars {
    ad::Var c1_w, c1_b, c2_w, c2_b, fuse_w, fuse_b;
};

inline PoolVars bind(ad::Tape& t, const PoolParams& p) {
    return {t.leaf_ref(p.c1_w), t.leaf_ref(p.c1_b), t.leaf_ref(p.c2_w),
            t.leaf_ref(p.c2_b), t.leaf_ref(p.fuse_w), t.leaf_ref(p.fuse_b)};
}

struct IntentionGraphVar {
    ad::Var tensor;                 // [H*W x (D+1)], channel D is the occupancy mask
    std::vector<uint8_t> occupancy; // carried for probes
};

// conv/pool stack over the social tensor, 1x1 fusion with the broadcast
// target encoding, occupancy appended as the final channel
inline IntentionGraphVar build_graph(ad::Tape& t, ad::Var target_enc,
                                     const SocialTensorVar& social, const PoolVars& p,
                                     const GridSpec& grid, double alpha) {
    const int H = grid.rows, W = grid.cols;
    if (t.val(social.grid).rows() != grid.cells())
        throw std::invalid_argument("build_graph: social tensor row count != grid cells");
    if (t.val(target_enc).rows() != 1 || t.val(target_enc).cols() != t.val(social.grid).cols())
        throw std::invalid_argument("build_graph: target encoding dimension mismatch");
    ad::Var h1 = t.leaky_relu(ad::grid_conv3x3(t, social.grid, p.c1_w, p.c1_b, H, W), alpha);
    ad::Var h2 = t.leaky_relu(ad::grid_conv3x3(t, h1, p.c2_w, p.c2_b, H, W), alpha);
    ad::Var pooled = t.maxpool2x1(h2, H, W);
    ad::Var tar = t.gather_rows(target_enc, std::vector<int>(grid.cells(), 0));
    ad::Var fused = t.leaky_relu(t.affine(t.concat_cols({pooled, tar}), p.fuse_w, p.fuse_b), alpha);
    Mat occ(grid.cells(), 1);
    for (int i = 0; i < grid.cells(); ++i) occ(i, 0) = social.occupancy[i];
    IntentionGraphVar out;
    out.tensor = t.concat_cols({fused, t.constant(occ)});
    out.occupancy = social.occupancy;
    return out;
}

inline IntentionGraphVar build_current_graph(ad::Tape& t, ad::Var target_enc,
                                             const std::vector<ScatterEntry>& neighbors,
                                             const PoolVars& p, const GridSpec& grid,
                                             double alpha) {
    const long dim = t.val(target_enc).cols();
    return build_graph(t, target_enc, scatter(t, neighbors, grid, dim), p, grid, alpha);
}

inline IntentionGraphVar build_future_graph(ad::Tape& t, ad::Var target_enc,
                                            ad::Var ego_plan_enc, const Vec2& ego_relpos,
                                            const PoolVars& p, const GridSpec& grid,
                                            double alpha) {
    const long dim = t.val(target_enc).cols();
    return build_graph(t, target_enc, scatter(t, {{ego_plan_enc, ego_relpos, 0}}, grid, dim), p,
                       grid, alpha);
}

// --- eager wrappers --------------------------------------------------------

struct IntentionGraph {
    Mat tensor; // [H*W x (D+1)]
};

inline SocialTensor scatter(const std::vector<std::pair<Encoding, Vec2>>& entries,
                            const GridSpec& grid, long dim = -1) {
    ad::Tape t;
    std::vector<ScatterEntry> es;
    int64_t id = 0;
    for (const auto& [enc, pos] : entries) {
        if (dim < 0) dim = enc.dim();
        es.push_back({t.constant(enc.vec), pos, id++});
    }
    if (dim < 0) throw std::invalid_argument("scatter: dim required for an empty entry list");
    auto st = scatter(t, es, grid, dim);
    return {t.val(st.grid), st.occupancy};
}

inline IntentionGraph build_graph(const Encoding& target_enc, const SocialTensor& social,
                                  const PoolParams& params, const GridSpec& grid,
                                  double alpha = 0.1) {
    ad::Tape t;
    // zero out rows the occupancy mask marks empty, so hand-built tensors
    // satisfy the masking invariant too
    Mat masked = social.grid;
    for (int i = 0; i < grid.cells(); ++i)
        if (!social.occupancy[static_cast<size_t>(i)]) masked.row(i).setZero();
    SocialTensorVar st{t.constant(masked), social.occupancy};
    auto g = build_graph(t, t.constant(target_enc.vec), st, bind(t, params), grid, alpha);
    return {t.val(g.tensor)};
}

} // namespace cit
