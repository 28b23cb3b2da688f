#pragma once

// Ego-centric intention fusion and maneuver-conditioned decoding: targets'
// intention vectors scattered into an ego grid, a fully convolutional
// refinement stack, lateral/longitudinal maneuver heads, and an LSTM decoder
// emitting per-frame bivariate Gaussians via cumulative displacements.

#include <cit/autodiff.hpp>
#include <cit/fusion.hpp>
#include <cit/init.hpp>
#include <cit/types.hpp>

#include <array>
#include <map>
#include <string>
#include <vector>

namespace cit {

// --- Gaussian output types ------------------------------------------------

struct GaussianStep {
    Vec2 mu = Vec2::Zero();    // meters
    Vec2 sigma = Vec2::Ones(); // > 0
    double rho = 0.0;          // in (-1, 1)

    void validate() const {
        if (!(sigma.x() > 0) || !(sigma.y() > 0))
            throw std::invalid_argument("GaussianStep: sigma must be positive");
        if (!(std::abs(rho) < 1.0))
            throw std::invalid_argument("GaussianStep: |rho| must be < 1");
        if (!mu.allFinite()) throw std::invalid_argument("GaussianStep: non-finite mean");
    }
};

struct GaussianTrajectory {
    std::vector<GaussianStep> steps; // T_pred entries
};

struct ManeuverDistribution {
    Eigen::Vector3d p_lat = Eigen::Vector3d::Constant(1.0 / 3);
    Eigen::Vector2d p_lon = Eigen::Vector2d::Constant(0.5);

    double p_joint(const ManeuverLabel& m) const {
        return p_lat[static_cast<int>(m.lateral)] * p_lon[static_cast<int>(m.longitudinal)];
    }
    std::array<double, kManeuverCount> joint() const {
        std::array<double, kManeuverCount> out{};
        for (int k = 0; k < kManeuverCount; ++k) out[k] = p_joint(ManeuverLabel::from_joint(k));
        return out;
    }
    ManeuverLabel argmax() const {
        int lat = 0, lon = 0;
        p_lat.maxCoeff(&lat);
        p_lon.maxCoeff(&lon);
        return {static_cast<LatManeuver>(lat), static_cast<LonManeuver>(lon)};
    }
};

// Per-target output: maneuver probabilities plus one Gaussian trajectory per
// maneuver class.
struct TargetPrediction {
    int64_t target_id = 0;
    ManeuverDistribution dist;
    std::array<GaussianTrajectory, kManeuverCount> trajectories;
};

using PredictionSet = std::vector<TargetPrediction>;

// Negative log-density of a bivariate Gaussian at y.
inline double gaussian_nll(const GaussianStep& step, const Vec2& y) {
    step.validate();
    const double dx = y.x() - step.mu.x();
    const double dy = y.y() - step.mu.y();
    const double sx = step.sigma.x(), sy = step.sigma.y(), rho = step.rho;
    const double one_m_r2 = 1.0 - rho * rho;
    const double z = dx * dx / (sx * sx) - 2.0 * rho * dx * dy / (sx * sy) + dy * dy / (sy * sy);
    return std::log(2.0 * M_PI * sx * sy * std::sqrt(one_m_r2)) + z / (2.0 * one_m_r2);
}

// log-likelihood of one trajectory under one maneuver's Gaussian sequence
inline double trajectory_log_likelihood(const GaussianTrajectory& traj, const Mat& future) {
    if (static_cast<long>(traj.steps.size()) != future.rows())
        throw std::invalid_argument("trajectory_log_likelihood: length mismatch");
    double ll = 0;
    for (long k = 0; k < future.rows(); ++k)
        ll -= gaussian_nll(traj.steps[static_cast<size_t>(k)], future.row(k).transpose());
    return ll;
}

// Joint log-posterior over targets, Eq-8 style: per target a 6-component
// mixture over maneuvers, computed in log space with max-shift.
inline double posterior(const PredictionSet& preds, const std::map<int64_t, Mat>& futures) {
    double total = 0;
    for (const auto& tp : preds) {
        auto it = futures.find(tp.target_id);
        if (it == futures.end())
            throw std::invalid_argument("posterior: missing future for target " +
                                        std::to_string(tp.target_id));
        std::array<double, kManeuverCount> terms{};
        const auto joint = tp.dist.joint();
        for (int k = 0; k < kManeuverCount; ++k)
            terms[k] = std::log(joint[k]) +
                       trajectory_log_likelihood(tp.trajectories[static_cast<size_t>(k)],
                                                 it->second);
        const double mx = *std::max_element(terms.begin(), terms.end());
        double acc = 0;
        for (double v : terms) acc += std::exp(v - mx);
        total += mx + std::log(acc);
    }
    return total;
}

// --- social intention tensor -------------------------------------------------

struct SocialIntentionTensorVar {
    ad::Var grid;                      // [H*W x dimZ]
    std::map<int64_t, int> target_cells; // target id -> flat cell
};

// Scatters per-target intention vectors into the ego-centric grid. Collisions
// keep the target nearest the ego (ties: lowest id); every target still reads
// its own cell afterwards.
inline SocialIntentionTensorVar assemble(ad::Tape& t,
                                         const std::vector<ScatterEntry>& intentions,
                                         const GridSpec& grid, long dim) {
    SocialIntentionTensorVar out;
    auto st = scatter(t, intentions, grid, dim);
    out.grid = st.grid;
    for (const auto& e : intentions) {
        auto cell = grid_cell_of(e.relpos, grid);
        if (!cell)
            throw std::invalid_argument("assemble: target outside the ego-centric area");
        out.target_cells[e.id] = cell->flat(grid);
    }
    return out;
}

// --- refinement stack -----------------------------------------------------------

struct FcnParams {
    Mat l1_w, l1_b; // 3x3, dimZ -> mid
    Mat l2_w, l2_b; // 3x3, mid -> mid
    Mat l3_w, l3_b; // 3x3, mid -> dimZ

    template <class F>
    void visit(const std::string& prefix, F&& f) {
        f(prefix + ".l1_w", l1_w);
        f(prefix + ".l1_b", l1_b);
        f(prefix + ".l2_w", l2_w);
        f(prefix + ".l2_b", l2_b);
        f(prefix + ".l3_w", l3_w);
        f(prefix + ".l3_b", l3_b);
    }
};

inline FcnParams init_fcn_params(int dim_z, int mid, uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, "fcn"));
    FcnParams p;
    p.l1_w = he_uniform(9 * dim_z, mid, 9 * dim_z, rng);
    p.l1_b = fanin_uniform(1, mid, 9 * dim_z, rng);
    p.l2_w = he_uniform(9 * mid, mid, 9 * mid, rng);
    p.l2_b = fanin_uniform(1, mid, 9 * mid, rng);
    p.l3_w = he_uniform(9 * mid, dim_z, 9 * mid, rng);
    p.l3_b = fanin_uniform(1, dim_z, 9 * mid, rng);
    return p;
}

struct FcnVars {
    ad::Var l1_w, l1_b, l2_w, l2_b, l3_w, l3_b;
};

inline FcnVars bind(ad::Tape& t, const FcnParams& p) {
    return {t.leaf_ref(p.l1_w), t.leaf_ref(p.l1_b), t.leaf_ref(p.l2_w),
            t.leaf_ref(p.l2_b), t.leaf_ref(p.l3_w), t.leaf_ref(p.l3_b)};
}

// three same-padding 3x3 conv layers; receptive field radius 3 cells
inline ad::Var refine(ad::Tape& t, ad::Var grid, const FcnVars& p, const GridSpec& spec,
                      double alpha) {
    const int H = spec.rows, W = spec.cols;
    ad::Var h1 = t.leaky_relu(ad::grid_conv3x3(t, grid, p.l1_w, p.l1_b, H, W), alpha);
    ad::Var h2 = t.leaky_relu(ad::grid_conv3x3(t, h1, p.l2_w, p.l2_b, H, W), alpha);
    return t.leaky_relu(ad::grid_conv3x3(t, h2, p.l3_w, p.l3_b, H, W), alpha);
}

// --- maneuver heads ----------------------------------------------------------------

struct ManeuverHeadParams {
    Mat lat_w1, lat_b1; // dimZ -> hidden
    Mat lat_w2, lat_b2; // hidden -> 3
    Mat lon_w1, lon_b1;
    Mat lon_w2, lon_b2; // hidden -> 2

    template <class F>
    void visit(const std::string& prefix, F&& f) {
        f(prefix + ".lat_w1", lat_w1);
        f(prefix + ".lat_b1", lat_b1);
        f(prefix + ".lat_w2", lat_w2);
        f(prefix + ".lat_b2", lat_b2);
        f(prefix + ".lon_w1", lon_w1);
        f(prefix + ".lon_b1", lon_b1);
        f(prefix + ".lon_w2", lon_w2);
        f(prefix + ".lon_b2", lon_b2);
    }
};

inline ManeuverHeadParams init_head_params(int dim_z, int hidden, uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, "maneuver_head"));
    ManeuverHeadParams p;
    p.lat_w1 = he_uniform(dim_z, hidden, dim_z, rng);
    p.lat_b1 = fanin_uniform(1, hidden, dim_z, rng);
    p.lat_w2 = he_uniform(hidden, kLatCount, hidden, rng);
    p.lat_b2 = fanin_uniform(1, kLatCount, hidden, rng);
    p.lon_w1 = he_uniform(dim_z, hidden, dim_z, rng);
    p.lon_b1 = fanin_uniform(1, hidden, dim_z, rng);
    p.lon_w2 = he_uniform(hidden, kLonCount, hidden, rng);
    p.lon_b2 = fanin_uniform(1, kLonCount, hidden, rng);
    return p;
}

struct ManeuverHeadVars {
    ad::Var lat_w1, lat_b1, lat_w2, lat_b2, lon_w1, lon_b1, lon_w2, lon_b2;
};

inline ManeuverHeadVars bind(ad::Tape& t, const ManeuverHeadParams& p) {
    return {t.leaf_ref(p.lat_w1), t.leaf_ref(p.lat_b1), t.leaf_ref(p.lat_w2),
            t.leaf_ref(p.lat_b2), t.leaf_ref(p.lon_w1), t.leaf_ref(p.lon_b1),
            t.leaf_ref(p.lon_w2), t.leaf_ref(p.lon_b2)};
}

struct ManeuverLogits {
    ad::Var lat; // [1 x 3]
    ad::Var lon; // [1 x 2]
};

inline ManeuverLogits maneuver_logits(ad::Tape& t, ad::Var refined, const ManeuverHeadVars& p,
                                      double alpha) {
    ad::Var hl = t.leaky_relu(t.affine(refined, p.lat_w1, p.lat_b1), alpha);
    ad::Var hn = t.leaky_relu(t.affine(refined, p.lon_w1, p.lon_b1), alpha);
    return {t.affine(hl, p.lat_w2, p.lat_b2), t.affine(hn, p.lon_w2, p.lon_b2)};
}

inline ManeuverDistribution maneuver_distribution(ad::Tape& t, const ManeuverLogits& logits) {
    ManeuverDistribution d;
    ad::Var pl = t.softmax_rows(logits.lat);
    ad::Var pn = t.softmax_rows(logits.lon);
    for (int i = 0; i < kLatCount; ++i) d.p_lat[i] = t.val(pl)(0, i);
    for (int i = 0; i < kLonCount; ++i) d.p_lon[i] = t.val(pn)(0, i);
    return d;
}

// --- gaussian decoder ----------------------------------------------------------------

inline constexpr double kSigmaFloor = 1e-3; // meters

// Raw per-frame displacement outputs are decoded in 4 m units so the
// bounded recurrent head covers highway-speed steps without rescaling its
// weight rows by an order of magnitude first.
inline constexpr double kDecoderStepScale = 4.0;

struct DecoderParams {
    Mat wx;           // [(dimZ + 5) x 4*state]
    Mat wh;           // [state x 4*state]
    Mat b;            // [1 x 4*state]
    Mat out_w, out_b; // state -> 5 raw outputs per frame

    int state() const { return static_cast<int>(wh.rows()); }

    template <class F>
    void visit(const std::string& prefix, F&& f) {
        f(prefix + ".wx", wx);
        f(prefix + ".wh", wh);
        f(prefix + ".b", b);
        f(prefix + ".out_w", out_w);
        f(prefix + ".out_b", out_b);
    }
};

inline DecoderParams init_decoder_params(int dim_z, int state, uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, "decoder"));
    const int in = dim_z + kLatCount + kLonCount;
    DecoderParams p;
    p.wx = fanin_uniform(in, 4 * state, in, rng);
    p.wh = fanin_uniform(state, 4 * state, state, rng);
    p.b = fanin_uniform(1, 4 * state, in, rng);
    p.b.middleCols(state, state).setOnes(); // forget gate bias
    p.out_w = he_uniform(state, 5, state, rng);
    p.out_b = fanin_uniform(1, 5, state, rng);
    return p;
}

struct DecoderVars {
    ad::Var wx, wh, b, out_w, out_b;
};

inline DecoderVars bind(ad::Tape& t, const DecoderParams& p) {
    return {t.leaf_ref(p.wx), t.leaf_ref(p.wh), t.leaf_ref(p.b), t.leaf_ref(p.out_w),
            t.leaf_ref(p.out_b)};
}

struct GaussianSeqVar {
    ad::Var mu;    // [T x 2]; cumulative displacements from last_pos
    ad::Var sigma; // [T x 2]; exp link, floored
    ad::Var rho;   // [T x 1]; tanh link
    ad::Var raw;   // [T x 5] pre-link decoder outputs
};

// The intention feature concatenated with the maneuver one-hots drives the
// decoder LSTM as a constant input at every step; raw 5-tuples map to
// (dmu_x, dmu_y, log sigma_x, log sigma_y, atanh rho).
inline GaussianSeqVar decode(ad::Tape& t, ad::Var refined, const ManeuverLabel& maneuver,
                             const Vec2& last_pos, const DecoderVars& p, int t_pred) {
    Mat onehot = Mat::Zero(1, kLatCount + kLonCount);
    onehot(0, static_cast<int>(maneuver.lateral)) = 1.0;
    onehot(0, kLatCount + static_cast<int>(maneuver.longitudinal)) = 1.0;
    ad::Var input = t.concat_cols({refined, t.constant(onehot)});
    if (t.val(input).cols() != t.val(p.wx).rows())
        throw std::invalid_argument("decode: input width does not match decoder weights");

    // the input is constant across steps; its transform is computed once
    ad::Var xw = t.add_rowvec(t.matmul(input, p.wx), p.b);
    const long H = t.val(p.wh).rows();
    ad::LstmState s{t.constant(Mat::Zero(1, H)), t.constant(Mat::Zero(1, H))};
    std::vector<ad::Var> raws;
    raws.reserve(t_pred);
    for (int k = 0; k < t_pred; ++k) {
        ad::Var gates = t.add(xw, t.matmul(s.h, p.wh));
        ad::Var gi = t.sigmoid_v(t.slice_cols(gates, 0, H));
        ad::Var gf = t.sigmoid_v(t.slice_cols(gates, H, H));
        ad::Var gg = t.tanh_v(t.slice_cols(gates, 2 * H, H));
        ad::Var go = t.sigmoid_v(t.slice_cols(gates, 3 * H, H));
        s.c = t.add(t.cmul(gf, s.c), t.cmul(gi, gg));
        s.h = t.cmul(go, t.tanh_v(s.c));
        raws.push_back(t.affine(s.h, p.out_w, p.out_b));
    }
    ad::Var raw = t.concat_rows(raws); // [T x 5]
    GaussianSeqVar out;
    Mat lp(1, 2);
    lp << last_pos.x(), last_pos.y();
    out.mu = t.add_rowvec(t.cumsum_rows(t.scale(t.slice_cols(raw, 0, 2), kDecoderStepScale)),
                          t.constant(lp));
    out.sigma = t.cmax(t.exp_v(t.slice_cols(raw, 2, 2)), kSigmaFloor);
    out.rho = t.tanh_v(t.slice_cols(raw, 4, 1));
    out.raw = raw;
    return out;
}

inline GaussianTrajectory to_trajectory(const ad::Tape& t, const GaussianSeqVar& seq) {
    const Mat& mu = t.val(seq.mu);
    const Mat& sigma = t.val(seq.sigma);
    const Mat& rho = t.val(seq.rho);
    GaussianTrajectory out;
    out.steps.resize(mu.rows());
    for (long k = 0; k < mu.rows(); ++k) {
        out.steps[k].mu = mu.row(k).transpose();
        out.steps[k].sigma = sigma.row(k).transpose();
        out.steps[k].rho = rho(k, 0);
    }
    return out;
}

// per-frame negative log-likelihood column [T x 1] of `future` (constant)
// under the decoded Gaussian sequence
inline ad::Var gaussian_nll_seq(ad::Tape& t, const GaussianSeqVar& seq, const Mat& future) {
    if (future.rows() != t.val(seq.mu).rows())
        throw std::invalid_argument("gaussian_nll_seq: horizon mismatch");
    ad::Var d = t.sub(t.constant(future), seq.mu);
    ad::Var zx = t.cdiv(t.slice_cols(d, 0, 1), t.slice_cols(seq.sigma, 0, 1));
    ad::Var zy = t.cdiv(t.slice_cols(d, 1, 1), t.slice_cols(seq.sigma, 1, 1));
    ad::Var rho2 = t.cmul(seq.rho, seq.rho);
    ad::Var one_m_r2 = t.add_scalar(t.scale(rho2, -1.0), 1.0);
    ad::Var quad = t.add(t.sub(t.cmul(zx, zx), t.scale(t.cmul(seq.rho, t.cmul(zx, zy)), 2.0)),
                         t.cmul(zy, zy));
    ad::Var log_sx = t.log_v(t.slice_cols(seq.sigma, 0, 1));
    ad::Var log_sy = t.log_v(t.slice_cols(seq.sigma, 1, 1));
    ad::Var log_det = t.add(t.add(log_sx, log_sy), t.scale(t.log_v(one_m_r2), 0.5));
    ad::Var nll = t.add(t.add_scalar(log_det, std::log(2.0 * M_PI)),
                        t.cdiv(quad, t.scale(one_m_r2, 2.0)));
    return nll;
}

} // namespace cit
