#pragma once

// Per-agent temporal encoder: a width-3 1D convolution lifting point
// dimension 2 to the channel width, followed by an LSTM whose final state is
// the agent encoding. Target, ego and neighbor roles carry independent
// weights.

#include <cit/autodiff.hpp>
#include <cit/init.hpp>
#include <cit/types.hpp>

#include <string>

namespace cit {

enum class AgentRole { target, ego, neighbor };

inline const char* to_string(AgentRole r) {
    switch (r) {
        case AgentRole::target: return "target";
        case AgentRole::ego: return "ego";
        case AgentRole::neighbor: return "neighbor";
    }
    throw std::invalid_argument("bad AgentRole");
}

// Relative coordinates enter the conv in grid-half-extent units (100 ft)
// rather than raw meters; highway-scale offsets otherwise saturate the
// recurrent gates at initialization.
inline constexpr double kEncoderInputScale = 1.0 / 30.48;

struct EncoderParams {
    Mat conv_w;  // [3*2 x conv_ch]
    Mat conv_b;  // [1 x conv_ch]
    Mat lstm_wx; // [conv_ch x 4*state]
    Mat lstm_wh; // [state x 4*state]
    Mat lstm_b;  // [1 x 4*state]

    int channels() const { return static_cast<int>(conv_w.cols()); }
    int state() const { return static_cast<int>(lstm_wh.rows()); }

    template <class F>
    void visit(const std::string& prefix, F&& f) {
        f(prefix + ".conv_w", conv_w);
        f(prefix + ".conv_b", conv_b);
        f(prefix + ".lstm_wx", lstm_wx);
        f(prefix + ".lstm_wh", lstm_wh);
        f(prefix + ".lstm_b", lstm_b);
    }
};

inline EncoderParams init_encoder_params(int conv_ch, int state, AgentRole role, uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, std::string("encoder.") + to_string(role)));
    EncoderParams p;
    p.conv_w = he_uniform(6, conv_ch, 6, rng);
    p.conv_b = fanin_uniform(1, conv_ch, 6, rng);
    p.lstm_wx = fanin_uniform(conv_ch, 4 * state, conv_ch, rng);
    p.lstm_wh = fanin_uniform(state, 4 * state, state, rng);
    p.lstm_b = fanin_uniform(1, 4 * state, conv_ch, rng);
    p.lstm_b.middleCols(state, state).setOnes(); // forget gate bias
    return p;
}

struct EncoderVars {
    ad::Var conv_w, conv_b, lstm_wx, lstm_wh, lstm_b;
};

inline EncoderVars bind(ad::Tape& t, const EncoderParams& p) {
    return {t.leaf_ref(p.conv_w), t.leaf_ref(p.conv_b), t.leaf_ref(p.lstm_wx),
            t.leaf_ref(p.lstm_wh), t.leaf_ref(p.lstm_b)};
}

// rel_points [T x 2], positions relative to the agent's own location at the
// prediction instant. Accepts any T >= 2, including 5-point 1 Hz plans.
inline ad::Var encode_seq(ad::Tape& t, ad::Var rel_points, const EncoderVars& p, double alpha) {
    const long T = t.val(rel_points).rows();
    if (T < 2) throw std::invalid_argument("encode: trajectory shorter than 2 points");
    if (t.val(rel_points).cols() != 2) throw std::invalid_argument("encode: expects [T x 2]");
    ad::Var scaled = t.scale(rel_points, kEncoderInputScale);
    ad::Var seq = t.leaky_relu(ad::seq_conv3(t, scaled, p.conv_w, p.conv_b), alpha);
    const long H = t.val(p.lstm_wh).rows();
    ad::LstmState s{t.constant(Mat::Zero(1, H)), t.constant(Mat::Zero(1, H))};
    for (long k = 0; k < T; ++k)
        s = ad::lstm_step(t, t.slice_rows(seq, k, 1), s, p.lstm_wx, p.lstm_wh, p.lstm_b);
    return s.h;
}

// Fixed-size agent representation.
struct Encoding {
    RowVec vec;
    long dim() const { return vec.cols(); }
};

inline Encoding encode(const Mat& rel_points, const EncoderParams& params, double alpha = 0.1) {
    if (rel_points.rows() < 2 || rel_points.cols() != 2)
        throw std::invalid_argument("encode: trajectory shorter than 2 points or malformed");
    if (!rel_points.allFinite()) throw std::invalid_argument("encode: non-finite input");
    ad::Tape t;
    ad::Var out = encode_seq(t, t.constant(rel_points), bind(t, params), alpha);
    return {t.val(out).row(0)};
}

} // namespace cit
