#pragma once

// Cross-domain fusion: bidirectional cross-attention between the two
// intention graphs, learned per-domain influence weights over the low-level
// graphs, and assembly of the final per-target intention vector.

#include <cit/autodiff.hpp>
#include <cit/graphs.hpp>
#include <cit/init.hpp>
#include <cit/types.hpp>

#include <string>
#include <vector>

namespace cit {

// Row r of the flat matrix corresponds to grid cell (r / W, r % W); graphs
// are stored in exactly this layout, so flattening is a checked copy.
struct FlatIntentionMatrix {
    Mat mat; // [H*W x (D+1)]
};

inline FlatIntentionMatrix flatten_graph(const IntentionGraph& graph, const GridSpec& grid) {
    if (graph.tensor.rows() != grid.cells())
        throw std::invalid_argument("flatten_graph: tensor rows != grid cells");
    return {graph.tensor};
}

inline IntentionGraph unflatten_graph(const FlatIntentionMatrix& flat, const GridSpec& grid) {
    if (flat.mat.rows() != grid.cells())
        throw std::invalid_argument("unflatten_graph: row count != grid cells");
    return {flat.mat};
}

// Single-head scaled dot-product attention with a row-wise fully connected
// output map; one parameter set per direction.
struct AttentionParams {
    Mat wq, wk, wv; // [(D+1) x D']
    Mat fc_w;       // [D' x D']
    Mat fc_b;       // [1 x D']

    int out_dim() const { return static_cast<int>(wq.cols()); }

    template <class F>
    void visit(const std::string& prefix, F&& f) {
        f(prefix + ".wq", wq);
        f(prefix + ".wk", wk);
        f(prefix + ".wv", wv);
        f(prefix + ".fc_w", fc_w);
        f(prefix + ".fc_b", fc_b);
    }
};

inline AttentionParams init_attention_params(int in_dim, int out_dim, const std::string& name,
                                             uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, "attention." + name));
    AttentionParams p;
    p.wq = he_uniform(in_dim, out_dim, in_dim, rng);
    p.wk = he_uniform(in_dim, out_dim, in_dim, rng);
    p.wv = he_uniform(in_dim, out_dim, in_dim, rng);
    p.fc_w = he_uniform(out_dim, out_dim, out_dim, rng);
    p.fc_b = fanin_uniform(1, out_dim, out_dim, rng);
    return p;
}

struct AttentionVars {
    ad::Var wq, wk, wv, fc_w, fc_b;
};

inline AttentionVars bind(ad::Tape& t, const AttentionParams& p) {
    return {t.leaf_ref(p.wq), t.leaf_ref(p.wk), t.leaf_ref(p.wv), t.leaf_ref(p.fc_w),
            t.leaf_ref(p.fc_b)};
}

struct CrossAttendResult {
    ad::Var out;     // [rows(Mq) x D']
    ad::Var weights; // [rows(Mq) x rows(Mkv)], rows sum to 1
};

// queries from Mq, keys and values from Mkv
inline CrossAttendResult cross_attend(ad::Tape& t, ad::Var mq, ad::Var mkv,
                                      const AttentionVars& p, double alpha) {
    if (t.val(mq).cols() != t.val(p.wq).rows() || t.val(mkv).cols() != t.val(p.wk).rows())
        throw std::invalid_argument("cross_attend: input width does not match projections");
    ad::Var q = t.matmul(mq, p.wq);
    ad::Var k = t.matmul(mkv, p.wk);
    ad::Var v = t.matmul(mkv, p.wv);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(t.val(p.wq).cols()));
    ad::Var scores = t.scale(t.matmul(q, t.transpose(k)), inv_sqrt_d);
    ad::Var weights = t.softmax_rows(scores);
    ad::Var attended = t.matmul(weights, v);
    ad::Var out = t.leaky_relu(t.affine(attended, p.fc_w, p.fc_b), alpha);
    return {out, weights};
}

struct AttendedMatrix {
    Mat mat; // [rows x D']
};

inline AttendedMatrix cross_attend(const FlatIntentionMatrix& mq, const FlatIntentionMatrix& mkv,
                                   const AttentionParams& params, double alpha = 0.1) {
    ad::Tape t;
    auto res = cross_attend(t, t.constant(mq.mat), t.constant(mkv.mat), bind(t, params), alpha);
    return {t.val(res.out)};
}

// mean over cells of each attended matrix, current domain first
inline ad::Var fuse_cross(ad::Tape& t, ad::Var attended_current, ad::Var attended_future) {
    return t.concat_cols({t.mean_rows(attended_current), t.mean_rows(attended_future)});
}

inline RowVec fuse_cross(const AttendedMatrix& current, const AttendedMatrix& future) {
    ad::Tape t;
    return t.val(fuse_cross(t, t.constant(current.mat), t.constant(future.mat))).row(0);
}

// Influence evaluation: both domains share one context map and one scorer,
// so identical graphs provably split the weights evenly.
struct InfluenceParams {
    Mat ctx_w;   // [(5*(D+1) + D) x D]
    Mat ctx_b;   // [1 x D]
    Mat score_w; // [D x 1]
    Mat score_b; // [1 x 1]

    template <class F>
    void visit(const std::string& prefix, F&& f) {
        f(prefix + ".ctx_w", ctx_w);
        f(prefix + ".ctx_b", ctx_b);
        f(prefix + ".score_w", score_w);
        f(prefix + ".score_b", score_b);
    }
};

inline InfluenceParams init_influence_params(int dim, uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, "influence"));
    const int in = 5 * (dim + 1) + dim;
    InfluenceParams p;
    p.ctx_w = he_uniform(in, dim, in, rng);
    p.ctx_b = fanin_uniform(1, dim, in, rng);
    p.score_w = he_uniform(dim, 1, dim, rng);
    p.score_b = fanin_uniform(1, 1, dim, rng);
    return p;
}

struct InfluenceVars {
    ad::Var ctx_w, ctx_b, score_w, score_b;
};

inline InfluenceVars bind(ad::Tape& t, const InfluenceParams& p) {
    return {t.leaf_ref(p.ctx_w), t.leaf_ref(p.ctx_b), t.leaf_ref(p.score_w),
            t.leaf_ref(p.score_b)};
}

// splits H grid rows into five nearly equal blocks spanning all columns
inline std::vector<std::pair<int, int>> influence_pool_ranges(const GridSpec& grid) {
    std::vector<std::pair<int, int>> ranges;
    const int blocks = std::min(5, grid.rows);
    int lo = 0;
    for (int b = 0; b < blocks; ++b) {
        const int hi = grid.rows * (b + 1) / blocks;
        ranges.push_back({lo * grid.cols, hi * grid.cols});
        lo = hi;
    }
    // fewer than five row blocks: repeat the last so the flat width is fixed
    while (ranges.size() < 5) ranges.push_back(ranges.back());
    return ranges;
}

// context vector and scalar logit for one domain
inline std::pair<ad::Var, ad::Var> influence_context(ad::Tape& t, ad::Var graph,
                                                     ad::Var target_enc, const InfluenceVars& p,
                                                     const GridSpec& grid, double alpha) {
    ad::Var pooled = t.block_rowmax(graph, influence_pool_ranges(grid));
    ad::Var flat = t.flatten_to_row(pooled);
    ad::Var ctx = t.leaky_relu(t.affine(t.concat_cols({flat, target_enc}), p.ctx_w, p.ctx_b),
                               alpha);
    ad::Var logit = t.affine(ctx, p.score_w, p.score_b);
    return {ctx, logit};
}

struct InfluenceResult {
    ad::Var weights;  // [1 x 2], sums to 1
    ad::Var combined; // [1 x 2D]: [beta1 * ctx_current ++ beta2 * ctx_future]
};

inline InfluenceResult influence_weights(ad::Tape& t, ad::Var current_graph,
                                         ad::Var future_graph, ad::Var target_enc,
                                         const InfluenceVars& p, const GridSpec& grid,
                                         double alpha) {
    auto [ctx_c, logit_c] = influence_context(t, current_graph, target_enc, p, grid, alpha);
    auto [ctx_f, logit_f] = influence_context(t, future_graph, target_enc, p, grid, alpha);
    ad::Var weights = t.softmax_rows(t.concat_cols({logit_c, logit_f}));
    ad::Var b1 = t.slice_cols(weights, 0, 1);
    ad::Var b2 = t.slice_cols(weights, 1, 1);
    ad::Var combined = t.concat_cols({t.cmul_scalar(ctx_c, b1), t.cmul_scalar(ctx_f, b2)});
    return {weights, combined};
}

struct InfluenceOutput {
    double beta1 = 0, beta2 = 0;
    RowVec combined;
};

inline InfluenceOutput influence_weights(const IntentionGraph& current,
                                         const IntentionGraph& future, const Encoding& target_enc,
                                         const InfluenceParams& params, const GridSpec& grid,
                                         double alpha = 0.1) {
    ad::Tape t;
    auto res = influence_weights(t, t.constant(current.tensor), t.constant(future.tensor),
                                 t.constant(target_enc.vec), bind(t, params), grid, alpha);
    return {t.val(res.weights)(0, 0), t.val(res.weights)(0, 1), t.val(res.combined).row(0)};
}

// Z = I ++ G
inline ad::Var intention_vector(ad::Tape& t, ad::Var interaction, ad::Var influence) {
    return t.concat_cols({interaction, influence});
}

// Final per-target representation and its two halves.
struct IntentionVector {
    RowVec interaction; // cross-domain half (I)
    RowVec influence;   // weighted low-level half (G)
    RowVec fused;       // Z
};

} // namespace cit
