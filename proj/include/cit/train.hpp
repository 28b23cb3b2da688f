#pragma once

// Training: the true-maneuver objective, adaptive-moment gradient descent
// with deterministic batching, checkpoint selection on validation loss, and
// finite-difference gradient verification of the full assembled model.

#include <cit/model.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cit {

struct InstanceLoss {
    ad::Var value; // [1 x 1] sum over targets
    long targets = 0;
};

// Sum over targets of the trajectory NLL under the true maneuver plus the
// maneuver cross-entropy. The plan is the conditioning input; during
// training it is the ego's actual 25-frame future.
inline InstanceLoss instance_loss(ad::Tape& t, const ModelVars& v, const Instance& inst,
                                  const EgoPlan& plan, const RunConfig& cfg) {
    auto fwd = forward_instance(t, v, inst, plan, cfg, DecodeSet::true_only);
    InstanceLoss out;
    if (fwd.empty()) return out;
    std::vector<ad::Var> terms;
    for (size_t i = 0; i < fwd.size(); ++i) {
        const auto& tgt = inst.targets[i];
        if (tgt.future.rows() != cfg.t_pred)
            throw std::invalid_argument("instance_loss: target lacks a complete future");
        const auto& tf = fwd[i];
        const int k = tgt.label.joint_index();
        Mat local_future = tf.frame.rows_to_local(tgt.future);
        ad::Var traj_nll = t.sum_all(gaussian_nll_seq(t, *tf.decoded[k], local_future));
        ad::Var log_p_lat = t.slice_cols(t.log_softmax_row(tf.lat_logits),
                                         static_cast<int>(tgt.label.lateral), 1);
        ad::Var log_p_lon = t.slice_cols(t.log_softmax_row(tf.lon_logits),
                                         static_cast<int>(tgt.label.longitudinal), 1);
        terms.push_back(t.sub(traj_nll, t.add(log_p_lat, log_p_lon)));
        ++out.targets;
    }
    ad::Var total = terms[0];
    for (size_t i = 1; i < terms.size(); ++i) total = t.add(total, terms[i]);
    out.value = total;
    return out;
}

// Eager scalar loss for one instance (finite differences, tests).
inline double loss(const ModelParams& params, const Instance& inst, const EgoPlan& plan,
                   const RunConfig& cfg) {
    ad::Tape t;
    ModelVars v = bind_model(t, params);
    auto l = instance_loss(t, v, inst, plan, cfg);
    return l.targets == 0 ? 0.0 : t.val(l.value)(0, 0);
}

// --- optimizer -------------------------------------------------------------

struct AdamState {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step = 0;
    std::vector<Mat> m, v;

    void init(ModelParams& params) {
        for (auto& [name, mat] : params.fields()) {
            m.push_back(Mat::Zero(mat->rows(), mat->cols()));
            v.push_back(Mat::Zero(mat->rows(), mat->cols()));
        }
    }
};

// gradient-norm clipping followed by one Adam update
inline void adam_step(ModelParams& params, ModelParams& grads, AdamState& st, double lr,
                      double clip) {
    auto pf = params.fields();
    auto gf = grads.fields();
    double norm2 = 0;
    for (auto& [name, g] : gf) norm2 += g->squaredNorm();
    const double norm = std::sqrt(norm2);
    const double scale = (clip > 0 && norm > clip) ? clip / norm : 1.0;

    ++st.step;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
    for (size_t i = 0; i < pf.size(); ++i) {
        Mat g = *gf[i].second * scale;
        st.m[i] = st.beta1 * st.m[i] + (1 - st.beta1) * g;
        st.v[i] = st.beta2 * st.v[i] + (1 - st.beta2) * g.cwiseProduct(g);
        Mat mhat = st.m[i] / bc1;
        Mat vhat = st.v[i] / bc2;
        *pf[i].second -=
            lr * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + st.eps).matrix());
    }
}

// --- training loop -----------------------------------------------------------

struct TrainLog {
    std::vector<double> train_loss; // per epoch, mean per target
    std::vector<double> val_loss;
    int best_epoch = -1;
};

struct TrainResult {
    ModelParams params; // best-validation snapshot (final when no val set)
    TrainLog log;
    CheckpointMeta meta;
};

namespace detail {

// mean per-target loss over a set, no gradients
inline double dataset_loss(const ModelParams& params, const std::vector<Instance>& set,
                           const RunConfig& cfg) {
    double total = 0;
    long targets = 0;
    for (const auto& inst : set) {
        if (inst.targets.empty()) continue;
        total += loss(params, inst, training_plan(inst), cfg);
        targets += static_cast<long>(inst.targets.size());
    }
    return targets == 0 ? 0.0 : total / static_cast<double>(targets);
}

} // namespace detail

// Deterministic given (cfg.seed, data order, cfg.threads): batches are formed
// from a seeded per-epoch shuffle, per-instance gradients are computed in a
// static thread partition and merged in thread order.
inline TrainResult train(const std::vector<Instance>& train_set,
                         const std::vector<Instance>& val_set, const RunConfig& cfg,
                         bool verbose = false) {
    cfg.validate();
    if (train_set.empty()) throw std::invalid_argument("train: empty training set");

    TrainResult res;
    ModelParams params = init_model(cfg);
    AdamState adam;
    adam.init(params);

    ModelParams best = params;
    double best_val = std::numeric_limits<double>::infinity();

    std::vector<size_t> order(train_set.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    const int threads = std::max(1, cfg.threads);
    std::vector<ModelParams> partial(threads, zeros_like(params));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::mt19937_64 rng(mix_seed(cfg.seed, "epoch-order") + static_cast<uint64_t>(epoch));
        std::shuffle(order.begin(), order.end(), rng);

        double epoch_loss = 0;
        long epoch_targets = 0;
        for (size_t b0 = 0; b0 < order.size(); b0 += static_cast<size_t>(cfg.batch)) {
            const size_t b1 = std::min(order.size(), b0 + static_cast<size_t>(cfg.batch));
            std::vector<double> batch_losses(b1 - b0, 0.0);
            std::vector<long> batch_targets(b1 - b0, 0);
            for (auto& g : partial) g.visit([](const std::string&, Mat& m) { m.setZero(); });

#ifdef _OPENMP
#pragma omp parallel num_threads(threads)
#endif
            {
#ifdef _OPENMP
                const int tid = omp_get_thread_num();
#else
                const int tid = 0;
#endif
                const size_t n = b1 - b0;
                const size_t lo = n * static_cast<size_t>(tid) / threads;
                const size_t hi = n * (static_cast<size_t>(tid) + 1) / threads;
                for (size_t k = lo; k < hi; ++k) {
                    const Instance& inst = train_set[order[b0 + k]];
                    if (inst.targets.empty()) continue;
                    ad::Tape t;
                    ModelVars v = bind_model(t, params);
                    auto l = instance_loss(t, v, inst, training_plan(inst), cfg);
                    t.backward(l.value);
                    accumulate_grads(t, v, partial[tid]);
                    batch_losses[k] = t.val(l.value)(0, 0);
                    batch_targets[k] = l.targets;
                }
            }

            double batch_loss = 0;
            long targets = 0;
            for (size_t k = 0; k < batch_losses.size(); ++k) {
                batch_loss += batch_losses[k];
                targets += batch_targets[k];
            }
            if (targets == 0) continue;
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch) + " (diverged)");

            ModelParams grads = zeros_like(params);
            auto gf = grads.fields();
            for (int tid = 0; tid < threads; ++tid) {
                auto pfields = partial[tid].fields();
                for (size_t i = 0; i < gf.size(); ++i) *gf[i].second += *pfields[i].second;
            }
            const double inv = 1.0 / static_cast<double>(targets);
            for (auto& [name, g] : gf) *g *= inv;
            adam_step(params, grads, adam, cfg.lr_at(epoch), cfg.grad_clip);

            epoch_loss += batch_loss;
            epoch_targets += targets;
        }

        const double train_loss =
            epoch_targets == 0 ? 0.0 : epoch_loss / static_cast<double>(epoch_targets);
        res.log.train_loss.push_back(train_loss);

        double val_loss = train_loss;
        if (!val_set.empty()) {
            val_loss = detail::dataset_loss(params, val_set, cfg);
            if (val_loss < best_val) {
                best_val = val_loss;
                best = params;
                res.log.best_epoch = epoch;
            }
        }
        res.log.val_loss.push_back(val_loss);
        if (verbose)
            std::printf("epoch %4d  train %.6f  val %.6f\n", epoch, train_loss, val_loss);
    }

    // best-val snapshot when a validation set exists, final weights otherwise
    if (val_set.empty()) {
        best = params;
        best_val = res.log.train_loss.empty() ? best_val : res.log.train_loss.back();
        res.log.best_epoch = cfg.epochs > 0 ? cfg.epochs - 1 : 0;
    } else if (cfg.epochs == 0) {
        best = params;
        res.log.best_epoch = 0;
    }
    res.params = std::move(best);
    res.meta.epochs_trained = cfg.epochs;
    res.meta.best_val_loss = best_val;
    res.meta.final_train_loss =
        res.log.train_loss.empty() ? std::numeric_limits<double>::quiet_NaN()
                                   : res.log.train_loss.back();
    return res;
}

// --- gradient verification ----------------------------------------------------

struct GradCheckResult {
    double max_rel_error = 0;
    std::string worst_group;
};

// Compares the analytic directional derivative of the loss against central
// finite differences along a seeded random direction, per parameter matrix.
// Differences are evaluated at eps and eps/10 and the consistent estimate
// kept: a leaky-ReLU kink inside the larger step, or roundoff at the smaller
// one, corrupts only one of the two, while a wrong gradient fails both. The
// relative-error denominator is floored at the double-precision noise scale
// of the loss so vanishing directional derivatives compare absolutely.
// `corrupt_group` scales that group's analytic gradient by 1.5 as a negative
// control.
inline GradCheckResult grad_check(const ModelParams& params_in, const Instance& inst,
                                  const RunConfig& cfg, double eps = 1e-5,
                                  const std::string& corrupt_group = "") {
    ModelParams params = params_in;
    const EgoPlan plan = training_plan(inst);

    // analytic gradients
    ad::Tape t;
    ModelVars v = bind_model(t, params);
    auto l = instance_loss(t, v, inst, plan, cfg);
    if (l.targets == 0) throw std::invalid_argument("grad_check: instance has no targets");
    t.backward(l.value);
    ModelParams grads = zeros_like(params);
    accumulate_grads(t, v, grads);

    const double loss_scale = std::abs(t.val(l.value)(0, 0));
    const double denom_floor = 1e-6 * std::max(1.0, loss_scale);

    GradCheckResult res;
    auto pf = params.fields();
    auto gf = grads.fields();
    for (size_t i = 0; i < pf.size(); ++i) {
        std::mt19937_64 rng(mix_seed(0x9e3779b97f4a7c15ull, pf[i].first));
        std::normal_distribution<double> gauss(0.0, 1.0);
        Mat dir(pf[i].second->rows(), pf[i].second->cols());
        for (long r = 0; r < dir.rows(); ++r)
            for (long c = 0; c < dir.cols(); ++c) dir(r, c) = gauss(rng);
        dir /= std::max(dir.norm(), 1e-12);

        double analytic = gf[i].second->cwiseProduct(dir).sum();
        if (pf[i].first == corrupt_group) analytic *= 1.5;

        Mat saved = *pf[i].second;
        auto central_diff = [&](double h) {
            *pf[i].second = saved + h * dir;
            const double lp = loss(params, inst, plan, cfg);
            *pf[i].second = saved - h * dir;
            const double lm = loss(params, inst, plan, cfg);
            *pf[i].second = saved;
            return (lp - lm) / (2 * h);
        };
        auto rel_err = [&](double numeric) {
            return std::abs(analytic - numeric) /
                   std::max({std::abs(analytic), std::abs(numeric), denom_floor});
        };
        const double err = std::min(rel_err(central_diff(eps)), rel_err(central_diff(eps / 10)));
        if (err > res.max_rel_error) {
            res.max_rel_error = err;
            res.worst_group = pf[i].first;
        }
    }
    return res;
}

} // namespace cit
