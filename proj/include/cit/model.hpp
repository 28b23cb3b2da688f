#pragma once

// Full model assembly: parameter groups for every stage, the per-instance
// conditional forward pass with ablation toggles, prediction extraction and
// the versioned binary checkpoint format.

#include <cit/data.hpp>
#include <cit/decoder.hpp>
#include <cit/encoder.hpp>
#include <cit/fusion.hpp>
#include <cit/graphs.hpp>
#include <cit/types.hpp>

#include <json.hpp>

#include <bit>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cit {

enum class IcdMode { off, self, cross };

inline const char* to_string(IcdMode m) {
    switch (m) {
        case IcdMode::off: return "off";
        case IcdMode::self: return "self";
        case IcdMode::cross: return "cross";
    }
    throw std::invalid_argument("bad IcdMode");
}
inline IcdMode icd_from_string(const std::string& s) {
    if (s == "off") return IcdMode::off;
    if (s == "self") return IcdMode::self;
    if (s == "cross") return IcdMode::cross;
    throw std::invalid_argument("unknown icd mode: " + s);
}

// Ablation toggles; the defaults are the full model.
struct Toggles {
    bool info_c = true;   // neighbor histories in the current time domain
    bool info_f = true;   // ego plan in the future time domain
    IcdMode icd = IcdMode::cross;
    bool iie = true;      // influence evaluation
    bool fusion = true;   // ego-grid FCN refinement

    bool operator==(const Toggles&) const = default;
};

// Named ablation variants in the conventional ordering: variant1 is the
// history-only baseline, variant4 swaps cross- for self-attention at equal
// parameter count, variant5 drops only the influence stage.
inline Toggles variant_toggles(const std::string& name) {
    if (name == "variant1") return {false, false, IcdMode::off, false, false};
    if (name == "variant2") return {true, false, IcdMode::off, false, true};
    if (name == "variant3") return {false, true, IcdMode::off, false, true};
    if (name == "variant4") return {true, true, IcdMode::self, false, true};
    if (name == "variant5") return {true, true, IcdMode::cross, false, true};
    if (name == "full") return {};
    throw std::invalid_argument("unknown variant: " + name);
}

struct ModelDims {
    int d_model = 64;     // encoder state / graph feature width
    int conv_ch = 32;     // 1D conv channels
    int d_dec = 128;      // decoder state
    int head_hidden = 64; // maneuver head hidden width
    int fcn_mid = 128;    // refinement stack middle width

    bool operator==(const ModelDims&) const = default;
};

struct RunConfig {
    GridSpec grid;
    ModelDims dims;
    Toggles toggles;
    int t_obs = 15;
    int t_pred = 25;
    double rate = 5.0;
    double lrelu_alpha = 0.1;
    // training
    double lr = 1e-3;
    double lr_final_frac = 1.0; // linear decay to lr * frac over the epochs
    int batch = 16;
    int epochs = 10;
    double grad_clip = 10.0;
    uint64_t seed = 0;
    int threads = 2;
    long stride = 5;

    double lr_at(int epoch) const {
        if (epochs <= 1) return lr;
        const double u = static_cast<double>(epoch) / (epochs - 1);
        return lr * (1.0 - (1.0 - lr_final_frac) * u);
    }

    int domain_count() const { return (toggles.info_c ? 1 : 0) + (toggles.info_f ? 1 : 0); }

    // width of the cross-domain interaction half (I)
    int interaction_dim() const {
        if (domain_count() == 0) return dims.d_model; // bare target encoding
        const int per_domain = toggles.icd == IcdMode::off ? dims.d_model + 1 : dims.d_model;
        return domain_count() * per_domain;
    }
    // width of the full intention vector (Z)
    int intention_dim() const {
        return interaction_dim() + (toggles.iie ? 2 * dims.d_model : 0);
    }

    void validate() const {
        grid.validate();
        if (t_obs < 2 || t_pred < 1) throw std::invalid_argument("RunConfig: bad horizons");
        if (toggles.icd != IcdMode::off && domain_count() < 2)
            throw std::invalid_argument("RunConfig: icd needs both time domains enabled");
        if (toggles.iie && domain_count() < 2)
            throw std::invalid_argument("RunConfig: iie needs both time domains enabled");
        if (dims.d_model < 1 || dims.conv_ch < 1 || dims.d_dec < 1)
            throw std::invalid_argument("RunConfig: bad dims");
        if (batch < 1 || threads < 1) throw std::invalid_argument("RunConfig: bad batch/threads");
    }
};

// All learnable state. Optional groups exist only when the toggles use them.
struct ModelParams {
    std::optional<EncoderParams> enc_tar, enc_ego, enc_nbr;
    std::optional<PoolParams> pool_c, pool_f;
    std::optional<AttentionParams> attn_a, attn_b; // cross: c->f / f->c queries; self: per domain
    std::optional<InfluenceParams> influence;
    std::optional<FcnParams> fcn;
    ManeuverHeadParams head;
    DecoderParams dec;

    template <class F>
    void visit(F&& f) {
        if (enc_tar) enc_tar->visit("enc_tar", f);
        if (enc_ego) enc_ego->visit("enc_ego", f);
        if (enc_nbr) enc_nbr->visit("enc_nbr", f);
        if (pool_c) pool_c->visit("pool_c", f);
        if (pool_f) pool_f->visit("pool_f", f);
        if (attn_a) attn_a->visit("attn_a", f);
        if (attn_b) attn_b->visit("attn_b", f);
        if (influence) influence->visit("influence", f);
        if (fcn) fcn->visit("fcn", f);
        head.visit("head", f);
        dec.visit("dec", f);
    }

    std::vector<std::pair<std::string, Mat*>> fields() {
        std::vector<std::pair<std::string, Mat*>> out;
        visit([&](const std::string& name, Mat& m) { out.push_back({name, &m}); });
        return out;
    }

    long parameter_count() {
        long n = 0;
        visit([&](const std::string&, Mat& m) { n += m.size(); });
        return n;
    }
};

inline ModelParams init_model(const RunConfig& cfg) {
    cfg.validate();
    const auto& d = cfg.dims;
    const uint64_t seed = cfg.seed;
    ModelParams p;
    p.enc_tar = init_encoder_params(d.conv_ch, d.d_model, AgentRole::target, seed);
    if (cfg.toggles.info_f) p.enc_ego = init_encoder_params(d.conv_ch, d.d_model, AgentRole::ego, seed);
    if (cfg.toggles.info_c)
        p.enc_nbr = init_encoder_params(d.conv_ch, d.d_model, AgentRole::neighbor, seed);
    if (cfg.toggles.info_c) p.pool_c = init_pool_params(d.d_model, "current", seed);
    if (cfg.toggles.info_f) p.pool_f = init_pool_params(d.d_model, "future", seed);
    if (cfg.toggles.icd != IcdMode::off) {
        p.attn_a = init_attention_params(d.d_model + 1, d.d_model, "a", seed);
        p.attn_b = init_attention_params(d.d_model + 1, d.d_model, "b", seed);
    }
    if (cfg.toggles.iie) p.influence = init_influence_params(d.d_model, seed);
    if (cfg.toggles.fusion) p.fcn = init_fcn_params(cfg.intention_dim(), d.fcn_mid, seed);
    p.head = init_head_params(cfg.intention_dim(), d.head_hidden, seed);
    p.dec = init_decoder_params(cfg.intention_dim(), d.d_dec, seed);
    return p;
}

inline ModelParams zeros_like(ModelParams params) {
    params.visit([](const std::string&, Mat& m) { m.setZero(); });
    return params;
}

struct ModelVars {
    std::optional<EncoderVars> enc_tar, enc_ego, enc_nbr;
    std::optional<PoolVars> pool_c, pool_f;
    std::optional<AttentionVars> attn_a, attn_b;
    std::optional<InfluenceVars> influence;
    std::optional<FcnVars> fcn;
    ManeuverHeadVars head;
    DecoderVars dec;
};

inline ModelVars bind_model(ad::Tape& t, const ModelParams& p) {
    ModelVars v;
    if (p.enc_tar) v.enc_tar = bind(t, *p.enc_tar);
    if (p.enc_ego) v.enc_ego = bind(t, *p.enc_ego);
    if (p.enc_nbr) v.enc_nbr = bind(t, *p.enc_nbr);
    if (p.pool_c) v.pool_c = bind(t, *p.pool_c);
    if (p.pool_f) v.pool_f = bind(t, *p.pool_f);
    if (p.attn_a) v.attn_a = bind(t, *p.attn_a);
    if (p.attn_b) v.attn_b = bind(t, *p.attn_b);
    if (p.influence) v.influence = bind(t, *p.influence);
    if (p.fcn) v.fcn = bind(t, *p.fcn);
    v.head = bind(t, p.head);
    v.dec = bind(t, p.dec);
    return v;
}

// gradient extraction, group by group
namespace detail {

inline void acc(const ad::Tape& t, ad::Var v, Mat& g) { g += t.grad_of(v); }

inline void accumulate(const ad::Tape& t, const EncoderVars& v, EncoderParams& g) {
    acc(t, v.conv_w, g.conv_w);
    acc(t, v.conv_b, g.conv_b);
    acc(t, v.lstm_wx, g.lstm_wx);
    acc(t, v.lstm_wh, g.lstm_wh);
    acc(t, v.lstm_b, g.lstm_b);
}
inline void accumulate(const ad::Tape& t, const PoolVars& v, PoolParams& g) {
    acc(t, v.c1_w, g.c1_w);
    acc(t, v.c1_b, g.c1_b);
    acc(t, v.c2_w, g.c2_w);
    acc(t, v.c2_b, g.c2_b);
    acc(t, v.fuse_w, g.fuse_w);
    acc(t, v.fuse_b, g.fuse_b);
}
inline void accumulate(const ad::Tape& t, const AttentionVars& v, AttentionParams& g) {
    acc(t, v.wq, g.wq);
    acc(t, v.wk, g.wk);
    acc(t, v.wv, g.wv);
    acc(t, v.fc_w, g.fc_w);
    acc(t, v.fc_b, g.fc_b);
}
inline void accumulate(const ad::Tape& t, const InfluenceVars& v, InfluenceParams& g) {
    acc(t, v.ctx_w, g.ctx_w);
    acc(t, v.ctx_b, g.ctx_b);
    acc(t, v.score_w, g.score_w);
    acc(t, v.score_b, g.score_b);
}
inline void accumulate(const ad::Tape& t, const FcnVars& v, FcnParams& g) {
    acc(t, v.l1_w, g.l1_w);
    acc(t, v.l1_b, g.l1_b);
    acc(t, v.l2_w, g.l2_w);
    acc(t, v.l2_b, g.l2_b);
    acc(t, v.l3_w, g.l3_w);
    acc(t, v.l3_b, g.l3_b);
}
inline void accumulate(const ad::Tape& t, const ManeuverHeadVars& v, ManeuverHeadParams& g) {
    acc(t, v.lat_w1, g.lat_w1);
    acc(t, v.lat_b1, g.lat_b1);
    acc(t, v.lat_w2, g.lat_w2);
    acc(t, v.lat_b2, g.lat_b2);
    acc(t, v.lon_w1, g.lon_w1);
    acc(t, v.lon_b1, g.lon_b1);
    acc(t, v.lon_w2, g.lon_w2);
    acc(t, v.lon_b2, g.lon_b2);
}
inline void accumulate(const ad::Tape& t, const DecoderVars& v, DecoderParams& g) {
    acc(t, v.wx, g.wx);
    acc(t, v.wh, g.wh);
    acc(t, v.b, g.b);
    acc(t, v.out_w, g.out_w);
    acc(t, v.out_b, g.out_b);
}

} // namespace detail

inline void accumulate_grads(const ad::Tape& t, const ModelVars& v, ModelParams& g) {
    if (v.enc_tar) detail::accumulate(t, *v.enc_tar, *g.enc_tar);
    if (v.enc_ego) detail::accumulate(t, *v.enc_ego, *g.enc_ego);
    if (v.enc_nbr) detail::accumulate(t, *v.enc_nbr, *g.enc_nbr);
    if (v.pool_c) detail::accumulate(t, *v.pool_c, *g.pool_c);
    if (v.pool_f) detail::accumulate(t, *v.pool_f, *g.pool_f);
    if (v.attn_a) detail::accumulate(t, *v.attn_a, *g.attn_a);
    if (v.attn_b) detail::accumulate(t, *v.attn_b, *g.attn_b);
    if (v.influence) detail::accumulate(t, *v.influence, *g.influence);
    if (v.fcn) detail::accumulate(t, *v.fcn, *g.fcn);
    detail::accumulate(t, v.head, g.head);
    detail::accumulate(t, v.dec, g.dec);
}

// --- forward pass -----------------------------------------------------------

// The training-time conditioning plan: the ego's actual future at the
// working rate.
inline EgoPlan training_plan(const Instance& inst) {
    return EgoPlan{inst.ego_future, inst.rate};
}

enum class DecodeSet { true_only, all };

struct TargetForward {
    int64_t target_id = 0;
    AgentFrame frame; // target-centric travel-aligned frame of the outputs
    ad::Var lat_logits, lon_logits;
    std::array<std::optional<GaussianSeqVar>, kManeuverCount> decoded;
};

// optional diagnostics captured during a forward pass
struct ForwardProbe {
    std::vector<Mat> current_graphs, future_graphs; // per target, [HW x (D+1)]
    std::vector<Mat> attn_a, attn_b;                // row-stochastic weights
    std::vector<Eigen::Vector2d> betas;
    Mat social_grid; // ego-centric intention tensor
};

inline std::vector<TargetForward> forward_instance(ad::Tape& t, const ModelVars& v,
                                                   const Instance& inst, const EgoPlan& plan,
                                                   const RunConfig& cfg,
                                                   DecodeSet decode_set,
                                                   ForwardProbe* probe = nullptr) {
    const auto& tg = cfg.toggles;
    const double alpha = cfg.lrelu_alpha;
    const Vec2 ego_pos = inst.ego_position_at_t();
    const AgentFrame ego_frame{ego_pos, inst.ego_travel_sign()};

    if (tg.info_f) plan.validate();

    // encodings reusable across targets, keyed by (agent id, frame flip)
    std::map<std::pair<int64_t, int>, ad::Var> nbr_cache;
    std::map<int, ad::Var> plan_cache;

    struct PerTarget {
        AgentFrame frame;
        ad::Var target_enc;
        ad::Var intention; // Z
    };
    std::vector<PerTarget> per_target(inst.targets.size());

    for (size_t i = 0; i < inst.targets.size(); ++i) {
        const auto& tgt = inst.targets[i];
        const long n = tgt.history.rows();
        const double flip =
            (tgt.history(n - 1, 0) - tgt.history(n - 2, 0)) < 0 ? -1.0 : 1.0;
        AgentFrame frame{tgt.position_at_t(), flip};
        per_target[i].frame = frame;

        ad::Var tar_enc =
            encode_seq(t, t.constant(frame.rows_to_local(tgt.history)), *v.enc_tar, alpha);
        per_target[i].target_enc = tar_enc;

        std::optional<IntentionGraphVar> graph_c, graph_f;
        if (tg.info_c) {
            std::vector<ScatterEntry> entries;
            for (const auto& nbr : tgt.neighbors) {
                const auto key = std::make_pair(nbr.id, static_cast<int>(flip));
                auto it = nbr_cache.find(key);
                if (it == nbr_cache.end()) {
                    AgentFrame nf{nbr.history.row(nbr.history.rows() - 1).transpose(), flip};
                    ad::Var enc = encode_seq(t, t.constant(nf.rows_to_local(nbr.history)),
                                             *v.enc_nbr, alpha);
                    it = nbr_cache.emplace(key, enc).first;
                }
                const Vec2 rel =
                    frame.to_local(nbr.history.row(nbr.history.rows() - 1).transpose());
                entries.push_back({it->second, rel, nbr.id});
            }
            graph_c = build_current_graph(t, tar_enc, entries, *v.pool_c, cfg.grid, alpha);
            if (probe) probe->current_graphs.push_back(t.val(graph_c->tensor));
        }
        if (tg.info_f) {
            const int fkey = static_cast<int>(flip);
            auto it = plan_cache.find(fkey);
            if (it == plan_cache.end()) {
                AgentFrame pf{ego_pos, flip};
                ad::Var enc = encode_seq(t, t.constant(pf.rows_to_local(plan.points)),
                                         *v.enc_ego, alpha);
                it = plan_cache.emplace(fkey, enc).first;
            }
            graph_f = build_future_graph(t, tar_enc, it->second, frame.to_local(ego_pos),
                                         *v.pool_f, cfg.grid, alpha);
            if (probe) probe->future_graphs.push_back(t.val(graph_f->tensor));
        }

        // cross-domain interaction half
        ad::Var interaction;
        if (graph_c && graph_f) {
            if (tg.icd == IcdMode::cross) {
                auto ac = cross_attend(t, graph_c->tensor, graph_f->tensor, *v.attn_a, alpha);
                auto af = cross_attend(t, graph_f->tensor, graph_c->tensor, *v.attn_b, alpha);
                interaction = fuse_cross(t, ac.out, af.out);
                if (probe) {
                    probe->attn_a.push_back(t.val(ac.weights));
                    probe->attn_b.push_back(t.val(af.weights));
                }
            } else if (tg.icd == IcdMode::self) {
                auto ac = cross_attend(t, graph_c->tensor, graph_c->tensor, *v.attn_a, alpha);
                auto af = cross_attend(t, graph_f->tensor, graph_f->tensor, *v.attn_b, alpha);
                interaction = fuse_cross(t, ac.out, af.out);
                if (probe) {
                    probe->attn_a.push_back(t.val(ac.weights));
                    probe->attn_b.push_back(t.val(af.weights));
                }
            } else {
                interaction = fuse_cross(t, graph_c->tensor, graph_f->tensor);
            }
        } else if (graph_c) {
            interaction = t.mean_rows(graph_c->tensor);
        } else if (graph_f) {
            interaction = t.mean_rows(graph_f->tensor);
        } else {
            interaction = tar_enc; // history-only baseline
        }

        if (tg.iie) {
            auto infl = influence_weights(t, graph_c->tensor, graph_f->tensor, tar_enc,
                                          *v.influence, cfg.grid, alpha);
            per_target[i].intention = intention_vector(t, interaction, infl.combined);
            if (probe)
                probe->betas.push_back(
                    Eigen::Vector2d(t.val(infl.weights)(0, 0), t.val(infl.weights)(0, 1)));
        } else {
            per_target[i].intention = interaction;
        }
    }

    // ego-centric fusion
    std::map<int64_t, ad::Var> refined; // per target id
    if (tg.fusion && !inst.targets.empty()) {
        std::vector<ScatterEntry> entries;
        for (size_t i = 0; i < inst.targets.size(); ++i)
            entries.push_back({per_target[i].intention,
                               ego_frame.to_local(inst.targets[i].position_at_t()),
                               inst.targets[i].id});
        auto social = assemble(t, entries, cfg.grid, cfg.intention_dim());
        ad::Var grid = refine(t, social.grid, *v.fcn, cfg.grid, alpha);
        if (probe) probe->social_grid = t.val(social.grid);
        for (size_t i = 0; i < inst.targets.size(); ++i)
            refined[inst.targets[i].id] =
                t.slice_rows(grid, social.target_cells.at(inst.targets[i].id), 1);
    } else {
        for (size_t i = 0; i < inst.targets.size(); ++i)
            refined[inst.targets[i].id] = per_target[i].intention;
    }

    std::vector<TargetForward> out(inst.targets.size());
    for (size_t i = 0; i < inst.targets.size(); ++i) {
        const auto& tgt = inst.targets[i];
        TargetForward& tf = out[i];
        tf.target_id = tgt.id;
        tf.frame = per_target[i].frame;
        ad::Var z = refined.at(tgt.id);
        auto logits = maneuver_logits(t, z, v.head, alpha);
        tf.lat_logits = logits.lat;
        tf.lon_logits = logits.lon;
        if (decode_set == DecodeSet::all) {
            for (int k = 0; k < kManeuverCount; ++k)
                tf.decoded[k] =
                    decode(t, z, ManeuverLabel::from_joint(k), Vec2::Zero(), v.dec, cfg.t_pred);
        } else {
            const int k = tgt.label.joint_index();
            tf.decoded[k] =
                decode(t, z, tgt.label, Vec2::Zero(), v.dec, cfg.t_pred);
        }
    }
    return out;
}

// Eager prediction with all six maneuvers decoded; means are converted back
// to global coordinates.
inline PredictionSet predict(const ModelParams& params, const RunConfig& cfg,
                             const Instance& inst, const EgoPlan& plan,
                             ForwardProbe* probe = nullptr) {
    ad::Tape t;
    ModelVars v = bind_model(t, params);
    auto fwd = forward_instance(t, v, inst, plan, cfg, DecodeSet::all, probe);
    PredictionSet out;
    for (const auto& tf : fwd) {
        TargetPrediction tp;
        tp.target_id = tf.target_id;
        tp.dist = maneuver_distribution(t, {tf.lat_logits, tf.lon_logits});
        for (int k = 0; k < kManeuverCount; ++k) {
            GaussianTrajectory traj = to_trajectory(t, *tf.decoded[k]);
            for (auto& st : traj.steps) st.mu = tf.frame.to_global(st.mu);
            tp.trajectories[k] = std::move(traj);
        }
        out.push_back(std::move(tp));
    }
    return out;
}

// --- checkpoint file ----------------------------------------------------------
// Layout (little-endian):
//   8-byte magic "CITCKPT1"
//   u32 header length, UTF-8 JSON header (format, dims, toggles, metadata)
//   per parameter matrix, in visit order:
//     u32 name length, name bytes, u64 rows, u64 cols, rows*cols doubles

inline constexpr char kCheckpointMagic[8] = {'C', 'I', 'T', 'C', 'K', 'P', 'T', '1'};

struct CheckpointMeta {
    int epochs_trained = 0;
    double best_val_loss = std::numeric_limits<double>::quiet_NaN();
    double final_train_loss = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

inline nlohmann::json config_to_json(const RunConfig& cfg) {
    return {
        {"grid",
         {{"length_ft", cfg.grid.length_ft},
          {"width_ft", cfg.grid.width_ft},
          {"rows", cfg.grid.rows},
          {"cols", cfg.grid.cols}}},
        {"dims",
         {{"d_model", cfg.dims.d_model},
          {"conv_ch", cfg.dims.conv_ch},
          {"d_dec", cfg.dims.d_dec},
          {"head_hidden", cfg.dims.head_hidden},
          {"fcn_mid", cfg.dims.fcn_mid}}},
        {"toggles",
         {{"info_c", cfg.toggles.info_c},
          {"info_f", cfg.toggles.info_f},
          {"icd", to_string(cfg.toggles.icd)},
          {"iie", cfg.toggles.iie},
          {"fusion", cfg.toggles.fusion}}},
        {"t_obs", cfg.t_obs},
        {"t_pred", cfg.t_pred},
        {"rate", cfg.rate},
        {"lrelu_alpha", cfg.lrelu_alpha},
        {"seed", cfg.seed},
    };
}

inline void config_from_json(const nlohmann::json& j, RunConfig& cfg) {
    const auto& g = j.at("grid");
    cfg.grid.length_ft = g.at("length_ft").get<double>();
    cfg.grid.width_ft = g.at("width_ft").get<double>();
    cfg.grid.rows = g.at("rows").get<int>();
    cfg.grid.cols = g.at("cols").get<int>();
    const auto& d = j.at("dims");
    cfg.dims.d_model = d.at("d_model").get<int>();
    cfg.dims.conv_ch = d.at("conv_ch").get<int>();
    cfg.dims.d_dec = d.at("d_dec").get<int>();
    cfg.dims.head_hidden = d.at("head_hidden").get<int>();
    cfg.dims.fcn_mid = d.at("fcn_mid").get<int>();
    const auto& tg = j.at("toggles");
    cfg.toggles.info_c = tg.at("info_c").get<bool>();
    cfg.toggles.info_f = tg.at("info_f").get<bool>();
    cfg.toggles.icd = icd_from_string(tg.at("icd").get<std::string>());
    cfg.toggles.iie = tg.at("iie").get<bool>();
    cfg.toggles.fusion = tg.at("fusion").get<bool>();
    cfg.t_obs = j.at("t_obs").get<int>();
    cfg.t_pred = j.at("t_pred").get<int>();
    cfg.rate = j.at("rate").get<double>();
    cfg.lrelu_alpha = j.at("lrelu_alpha").get<double>();
    cfg.seed = j.at("seed").get<uint64_t>();
}

template <class T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

} // namespace detail

inline void save_checkpoint(const std::string& path, ModelParams& params, const RunConfig& cfg,
                            const CheckpointMeta& meta = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(kCheckpointMagic, 8);
    nlohmann::json header{{"format", "cit-checkpoint"},
                          {"version", 1},
                          {"endianness", "little"},
                          {"run", detail::config_to_json(cfg)},
                          {"meta",
                           {{"epochs_trained", meta.epochs_trained},
                            {"best_val_loss", meta.best_val_loss},
                            {"final_train_loss", meta.final_train_loss}}}};
    const std::string hs = header.dump();
    detail::write_pod<uint32_t>(out, static_cast<uint32_t>(hs.size()));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    params.visit([&](const std::string& name, Mat& m) {
        detail::write_pod<uint32_t>(out, static_cast<uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::write_pod<uint64_t>(out, static_cast<uint64_t>(m.rows()));
        detail::write_pod<uint64_t>(out, static_cast<uint64_t>(m.cols()));
        out.write(reinterpret_cast<const char*>(m.data()),
                  static_cast<std::streamsize>(sizeof(double) * m.size()));
    });
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

struct Checkpoint {
    ModelParams params;
    RunConfig run; // model-defining fields restored from the header
    CheckpointMeta meta;
};

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw std::runtime_error(path + ": not a checkpoint file");
    const auto hlen = detail::read_pod<uint32_t>(in);
    std::string hs(hlen, '\0');
    in.read(hs.data(), hlen);
    nlohmann::json header = nlohmann::json::parse(hs);
    if (header.value("format", "") != "cit-checkpoint" || header.value("version", -1) != 1)
        throw std::runtime_error(path + ": unsupported checkpoint format");

    Checkpoint ck;
    detail::config_from_json(header.at("run"), ck.run);
    // non-finite metrics serialize as JSON null
    auto num_or_nan = [](const nlohmann::json& j) {
        return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
    };
    ck.meta.epochs_trained = header.at("meta").at("epochs_trained").get<int>();
    ck.meta.best_val_loss = num_or_nan(header.at("meta").at("best_val_loss"));
    ck.meta.final_train_loss = num_or_nan(header.at("meta").at("final_train_loss"));

    // allocate groups from the restored config, then fill by name
    ck.params = init_model(ck.run);
    auto fields = ck.params.fields();
    size_t next = 0;
    while (next < fields.size()) {
        const auto nlen = detail::read_pod<uint32_t>(in);
        std::string name(nlen, '\0');
        in.read(name.data(), nlen);
        const auto rows = detail::read_pod<uint64_t>(in);
        const auto cols = detail::read_pod<uint64_t>(in);
        if (name != fields[next].first)
            throw std::runtime_error("checkpoint: unexpected group " + name + ", wanted " +
                                     fields[next].first);
        Mat& m = *fields[next].second;
        if (static_cast<uint64_t>(m.rows()) != rows || static_cast<uint64_t>(m.cols()) != cols)
            throw std::runtime_error("checkpoint: dimension mismatch in " + name);
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(sizeof(double) * m.size()));
        if (!in) throw std::runtime_error("checkpoint: truncated tensor " + name);
        ++next;
    }
    return ck;
}

// model-defining fields must agree between a config and a checkpoint
inline void check_dims_match(const RunConfig& cfg, const RunConfig& from_ckpt) {
    if (!(cfg.grid == from_ckpt.grid) || !(cfg.dims == from_ckpt.dims) ||
        !(cfg.toggles == from_ckpt.toggles) || cfg.t_obs != from_ckpt.t_obs ||
        cfg.t_pred != from_ckpt.t_pred)
        throw std::runtime_error("config/checkpoint dimension mismatch");
}

} // namespace cit
