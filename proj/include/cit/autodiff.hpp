#pragma once

// Reverse-mode automatic differentiation over Eigen double matrices.
//
// A Tape owns the computation graph for one forward pass; Var is an index
// into it. Every op records a closure that scatters the node's gradient into
// its parents, so backward() is a single reverse sweep. Grids live on the
// tape as [H*W x C] matrices (row r = cell (r / W, r % W)), which turns the
// spatial convolutions into gathers plus GEMMs.
//
// Values and gradients are double throughout; each op's backward rule is
// pinned by the finite-difference tests in tests/test_autodiff.cpp.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cit::ad {

using Mat = Eigen::MatrixXd;

struct Var {
    int32_t idx = -1;
    bool valid() const { return idx >= 0; }
};

class Tape {
    struct Node {
        Mat val;                // owned value; empty when ext is set
        const Mat* ext = nullptr;
        Mat grad;               // lazily allocated on first accumulation
        bool requires_grad = false;
        std::function<void(Tape&, const Mat&)> back; // empty for leaves
    };

public:
    // --- node construction -------------------------------------------------

    Var leaf(Mat v) { return push(std::move(v), nullptr, true, {}); }

    // References external storage (typically model parameters). The caller
    // keeps `m` alive and unmodified for the tape's lifetime.
    Var leaf_ref(const Mat& m) { return push({}, &m, true, {}); }

    // Input data that never needs a gradient.
    Var constant(Mat v) { return push(std::move(v), nullptr, false, {}); }

    // --- access -------------------------------------------------------------

    const Mat& val(Var v) const { return value(check(v)); }

    // Gradient accumulated into `v` by backward(); zeros if untouched.
    Mat grad_of(Var v) const {
        const Node& n = nodes_[check(v)];
        if (n.grad.size() == 0) return Mat::Zero(value(v.idx).rows(), value(v.idx).cols());
        return n.grad;
    }

    size_t size() const { return nodes_.size(); }

    // --- elementwise and affine ops ------------------------------------------

    Var add(Var a, Var b) {
        same_shape(a, b, "add");
        Mat out = val(a) + val(b);
        return unary_binary(std::move(out), a, b,
            [](Tape& t, const Mat& g, Var a, Var b) {
                t.add_grad(a, g);
                t.add_grad(b, g);
            });
    }

    Var sub(Var a, Var b) {
        same_shape(a, b, "sub");
        Mat out = val(a) - val(b);
        return unary_binary(std::move(out), a, b,
            [](Tape& t, const Mat& g, Var a, Var b) {
                t.add_grad(a, g);
                t.sub_grad(b, g);
            });
    }

    // a [m x n] + row vector b [1 x n] broadcast over rows
    Var add_rowvec(Var a, Var b) {
        if (val(b).rows() != 1 || val(a).cols() != val(b).cols())
            throw std::invalid_argument("add_rowvec: shape mismatch");
        Mat out = val(a).rowwise() + val(b).row(0);
        return unary_binary(std::move(out), a, b,
            [](Tape& t, const Mat& g, Var a, Var b) {
                t.add_grad(a, g);
                t.add_grad(b, g.colwise().sum());
            });
    }

    Var scale(Var a, double s) {
        Mat out = val(a) * s;
        return unary(std::move(out), a,
            [s](Tape& t, const Mat& g, Var a) { t.add_grad(a, g * s); });
    }

    Var add_scalar(Var a, double c) {
        Mat out = val(a).array() + c;
        return unary(std::move(out), a,
            [](Tape& t, const Mat& g, Var a) { t.add_grad(a, g); });
    }

    Var cmul(Var a, Var b) {
        same_shape(a, b, "cmul");
        Mat out = val(a).cwiseProduct(val(b));
        Mat av = val(a), bv = val(b);
        return push_op(std::move(out), {a, b},
            [a, b, av = std::move(av), bv = std::move(bv)](Tape& t, const Mat& g) {
                t.add_grad(a, g.cwiseProduct(bv));
                t.add_grad(b, g.cwiseProduct(av));
            });
    }

    Var cdiv(Var a, Var b) {
        same_shape(a, b, "cdiv");
        Mat out = val(a).cwiseQuotient(val(b));
        Mat bv = val(b), ov = out;
        return push_op(std::move(out), {a, b},
            [a, b, bv = std::move(bv), ov = std::move(ov)](Tape& t, const Mat& g) {
                t.add_grad(a, g.cwiseQuotient(bv));
                t.sub_grad(b, g.cwiseProduct(ov.cwiseQuotient(bv)));
            });
    }

    // scale rows of a [m x n] by the scalar node s [1 x 1]
    Var cmul_scalar(Var a, Var s) {
        if (val(s).rows() != 1 || val(s).cols() != 1)
            throw std::invalid_argument("cmul_scalar: scalar operand must be 1x1");
        const double sv = val(s)(0, 0);
        Mat out = val(a) * sv;
        Mat av = val(a);
        return push_op(std::move(out), {a, s},
            [a, s, sv, av = std::move(av)](Tape& t, const Mat& g) {
                t.add_grad(a, g * sv);
                Mat gs(1, 1);
                gs(0, 0) = g.cwiseProduct(av).sum();
                t.add_grad(s, gs);
            });
    }

    Var leaky_relu(Var a, double alpha) {
        const Mat& x = val(a);
        Mat out = x.unaryExpr([alpha](double v) { return v > 0 ? v : alpha * v; });
        Mat slope = x.unaryExpr([alpha](double v) { return v > 0 ? 1.0 : alpha; });
        return push_op(std::move(out), {a},
            [a, slope = std::move(slope)](Tape& t, const Mat& g) {
                t.add_grad(a, g.cwiseProduct(slope));
            });
    }

    Var tanh_v(Var a) {
        Mat out = val(a).array().tanh();
        Mat ov = out;
        return push_op(std::move(out), {a},
            [a, ov = std::move(ov)](Tape& t, const Mat& g) {
                t.add_grad(a, (g.array() * (1.0 - ov.array().square())).matrix());
            });
    }

    Var sigmoid_v(Var a) {
        Mat out = (1.0 / (1.0 + (-val(a)).array().exp())).matrix();
        Mat ov = out;
        return push_op(std::move(out), {a},
            [a, ov = std::move(ov)](Tape& t, const Mat& g) {
                t.add_grad(a, (g.array() * ov.array() * (1.0 - ov.array())).matrix());
            });
    }

    Var exp_v(Var a) {
        Mat out = val(a).array().exp();
        Mat ov = out;
        return push_op(std::move(out), {a},
            [a, ov = std::move(ov)](Tape& t, const Mat& g) {
                t.add_grad(a, g.cwiseProduct(ov));
            });
    }

    Var log_v(Var a) {
        Mat out = val(a).array().log();
        Mat xv = val(a);
        return push_op(std::move(out), {a},
            [a, xv = std::move(xv)](Tape& t, const Mat& g) {
                t.add_grad(a, g.cwiseQuotient(xv));
            });
    }

    Var sqrt_v(Var a) {
        Mat out = val(a).array().sqrt();
        Mat ov = out;
        return push_op(std::move(out), {a},
            [a, ov = std::move(ov)](Tape& t, const Mat& g) {
                t.add_grad(a, (g.array() / (2.0 * ov.array())).matrix());
            });
    }

    // elementwise max(x, floor); gradient 0 where floored
    Var cmax(Var a, double floor) {
        const Mat& x = val(a);
        Mat out = x.unaryExpr([floor](double v) { return v > floor ? v : floor; });
        Mat mask = x.unaryExpr([floor](double v) { return v > floor ? 1.0 : 0.0; });
        return push_op(std::move(out), {a},
            [a, mask = std::move(mask)](Tape& t, const Mat& g) {
                t.add_grad(a, g.cwiseProduct(mask));
            });
    }

    // --- linear algebra -------------------------------------------------------

    Var matmul(Var a, Var b) {
        if (val(a).cols() != val(b).rows())
            throw std::invalid_argument("matmul: inner dimension mismatch");
        Mat out = val(a) * val(b);
        Mat av = val(a), bv = val(b);
        return push_op(std::move(out), {a, b},
            [a, b, av = std::move(av), bv = std::move(bv)](Tape& t, const Mat& g) {
                t.add_grad_prod(a, g, bv.transpose());
                t.add_grad_prod(b, av.transpose(), g);
            });
    }

    Var transpose(Var a) {
        Mat out = val(a).transpose();
        return unary(std::move(out), a,
            [](Tape& t, const Mat& g, Var a) { t.add_grad(a, g.transpose()); });
    }

    // x [m x i] * w [i x o] + b [1 x o]
    Var affine(Var x, Var w, Var b) { return add_rowvec(matmul(x, w), b); }

    // --- structure ops ---------------------------------------------------------

    Var concat_rows(const std::vector<Var>& parts) {
        if (parts.empty()) throw std::invalid_argument("concat_rows: empty");
        long rows = 0, cols = val(parts[0]).cols();
        for (Var p : parts) {
            if (val(p).cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
            rows += val(p).rows();
        }
        Mat out(rows, cols);
        std::vector<long> offs(parts.size());
        long r = 0;
        for (size_t i = 0; i < parts.size(); ++i) {
            offs[i] = r;
            out.middleRows(r, val(parts[i]).rows()) = val(parts[i]);
            r += val(parts[i]).rows();
        }
        std::vector<long> sizes(parts.size());
        for (size_t i = 0; i < parts.size(); ++i) sizes[i] = val(parts[i]).rows();
        return push_op(std::move(out), parts,
            [parts, offs = std::move(offs), sizes = std::move(sizes)](Tape& t, const Mat& g) {
                for (size_t i = 0; i < parts.size(); ++i)
                    t.add_grad(parts[i], g.middleRows(offs[i], sizes[i]));
            });
    }

    Var concat_cols(const std::vector<Var>& parts) {
        if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
        long cols = 0, rows = val(parts[0]).rows();
        for (Var p : parts) {
            if (val(p).rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
            cols += val(p).cols();
        }
        Mat out(rows, cols);
        std::vector<long> offs(parts.size()), sizes(parts.size());
        long c = 0;
        for (size_t i = 0; i < parts.size(); ++i) {
            offs[i] = c;
            sizes[i] = val(parts[i]).cols();
            out.middleCols(c, sizes[i]) = val(parts[i]);
            c += sizes[i];
        }
        return push_op(std::move(out), parts,
            [parts, offs = std::move(offs), sizes = std::move(sizes)](Tape& t, const Mat& g) {
                for (size_t i = 0; i < parts.size(); ++i)
                    t.add_grad(parts[i], g.middleCols(offs[i], sizes[i]));
            });
    }

    Var slice_rows(Var a, long r0, long n) {
        if (r0 < 0 || r0 + n > val(a).rows())
            throw std::invalid_argument("slice_rows: out of range");
        Mat out = val(a).middleRows(r0, n);
        long rows = val(a).rows(), cols = val(a).cols();
        return push_op(std::move(out), {a},
            [a, r0, n, rows, cols](Tape& t, const Mat& g) {
                Mat full = Mat::Zero(rows, cols);
                full.middleRows(r0, n) = g;
                t.add_grad(a, full);
            });
    }

    Var slice_cols(Var a, long c0, long n) {
        if (c0 < 0 || c0 + n > val(a).cols())
            throw std::invalid_argument("slice_cols: out of range");
        Mat out = val(a).middleCols(c0, n);
        long rows = val(a).rows(), cols = val(a).cols();
        return push_op(std::move(out), {a},
            [a, c0, n, rows, cols](Tape& t, const Mat& g) {
                Mat full = Mat::Zero(rows, cols);
                full.middleCols(c0, n) = g;
                t.add_grad(a, full);
            });
    }

    // out.row(i) = idx[i] < 0 ? 0 : a.row(idx[i]); duplicate sources allowed
    Var gather_rows(Var a, std::vector<int> idx) {
        const Mat& x = val(a);
        Mat out = Mat::Zero(static_cast<long>(idx.size()), x.cols());
        for (size_t i = 0; i < idx.size(); ++i) {
            if (idx[i] >= x.rows()) throw std::invalid_argument("gather_rows: index out of range");
            if (idx[i] >= 0) out.row(static_cast<long>(i)) = x.row(idx[i]);
        }
        long rows = x.rows(), cols = x.cols();
        return push_op(std::move(out), {a},
            [a, idx = std::move(idx), rows, cols](Tape& t, const Mat& g) {
                Mat full = Mat::Zero(rows, cols);
                for (size_t i = 0; i < idx.size(); ++i)
                    if (idx[i] >= 0) full.row(idx[i]) += g.row(static_cast<long>(i));
                t.add_grad(a, full);
            });
    }

    // Builds [out_rows x cols] with entry rows written at distinct row slots;
    // unwritten rows stay zero.
    Var scatter_rows(const std::vector<std::pair<Var, int>>& entries, int out_rows, int cols) {
        Mat out = Mat::Zero(out_rows, cols);
        std::vector<Var> parents;
        parents.reserve(entries.size());
        for (const auto& [v, r] : entries) {
            if (val(v).rows() != 1 || val(v).cols() != cols)
                throw std::invalid_argument("scatter_rows: entries must be 1 x cols");
            if (r < 0 || r >= out_rows)
                throw std::invalid_argument("scatter_rows: row out of range");
            if (out.row(r).any())
                throw std::invalid_argument("scatter_rows: duplicate cell " + std::to_string(r));
            out.row(r) = val(v);
            parents.push_back(v);
        }
        std::vector<int> slots;
        slots.reserve(entries.size());
        for (const auto& e : entries) slots.push_back(e.second);
        return push_op(std::move(out), parents,
            [parents, slots = std::move(slots)](Tape& t, const Mat& g) {
                for (size_t i = 0; i < parents.size(); ++i)
                    t.add_grad(parents[i], g.row(slots[i]));
            });
    }

    Var mean_rows(Var a) {
        const long m = val(a).rows();
        Mat out = val(a).colwise().mean();
        return unary(std::move(out), a,
            [m](Tape& t, const Mat& g, Var a) {
                t.add_grad(a, (Mat::Ones(m, 1) * g) / static_cast<double>(m));
            });
    }

    Var sum_all(Var a) {
        Mat out(1, 1);
        out(0, 0) = val(a).sum();
        long rows = val(a).rows(), cols = val(a).cols();
        return push_op(std::move(out), {a},
            [a, rows, cols](Tape& t, const Mat& g) {
                t.add_grad(a, Mat::Constant(rows, cols, g(0, 0)));
            });
    }

    // prefix sums down the rows (used for cumulative displacement means)
    Var cumsum_rows(Var a) {
        Mat out = val(a);
        for (long r = 1; r < out.rows(); ++r) out.row(r) += out.row(r - 1);
        return unary(std::move(out), a,
            [](Tape& t, const Mat& g, Var a) {
                Mat rg = g;
                for (long r = rg.rows() - 2; r >= 0; --r) rg.row(r) += rg.row(r + 1);
                t.add_grad(a, rg);
            });
    }

    // [R x C] -> [1 x R*C], column-major order
    Var flatten_to_row(Var a) {
        const Mat& x = val(a);
        Mat out = Eigen::Map<const Mat>(x.data(), 1, x.size());
        long rows = x.rows(), cols = x.cols();
        return push_op(std::move(out), {a},
            [a, rows, cols](Tape& t, const Mat& g) {
                t.add_grad(a, Eigen::Map<const Mat>(g.data(), rows, cols));
            });
    }

    // --- softmax family ----------------------------------------------------------

    // row-wise softmax with max-shift stabilization
    Var softmax_rows(Var a) {
        const Mat& x = val(a);
        Mat out(x.rows(), x.cols());
        for (long r = 0; r < x.rows(); ++r) {
            Eigen::RowVectorXd e = (x.row(r).array() - x.row(r).maxCoeff()).exp();
            out.row(r) = e / e.sum();
        }
        Mat ov = out;
        return push_op(std::move(out), {a},
            [a, ov = std::move(ov)](Tape& t, const Mat& g) {
                Mat gx(ov.rows(), ov.cols());
                for (long r = 0; r < ov.rows(); ++r) {
                    const double dot = g.row(r).dot(ov.row(r));
                    gx.row(r) = ov.row(r).cwiseProduct((g.row(r).array() - dot).matrix());
                }
                t.add_grad(a, gx);
            });
    }

    // log softmax of a single row [1 x n]
    Var log_softmax_row(Var a) {
        if (val(a).rows() != 1) throw std::invalid_argument("log_softmax_row: expects 1 x n");
        const Mat& x = val(a);
        const double mx = x.maxCoeff();
        const double lse = mx + std::log((x.array() - mx).exp().sum());
        Mat out = x.array() - lse;
        Mat sm = out.array().exp();
        return push_op(std::move(out), {a},
            [a, sm = std::move(sm)](Tape& t, const Mat& g) {
                t.add_grad(a, g - sm * g.sum());
            });
    }

    // --- grid pooling -------------------------------------------------------------

    // stride-1 max pool over pairs of grid rows (window 2x1, same padding);
    // input/output [H*W x C]
    Var maxpool2x1(Var a, int H, int W) {
        const Mat& x = val(a);
        if (x.rows() != static_cast<long>(H) * W)
            throw std::invalid_argument("maxpool2x1: row count != H*W");
        Mat out(x.rows(), x.cols());
        std::vector<int32_t> src(static_cast<size_t>(x.rows()) * x.cols());
        for (int i = 0; i < H; ++i) {
            for (int j = 0; j < W; ++j) {
                const long r = static_cast<long>(i) * W + j;
                const long r2 = (i + 1 < H) ? r + W : -1;
                for (long c = 0; c < x.cols(); ++c) {
                    long pick = r;
                    if (r2 >= 0 && x(r2, c) > x(r, c)) pick = r2;
                    out(r, c) = x(pick, c);
                    src[static_cast<size_t>(r) * x.cols() + c] = static_cast<int32_t>(pick);
                }
            }
        }
        long rows = x.rows(), cols = x.cols();
        return push_op(std::move(out), {a},
            [a, src = std::move(src), rows, cols](Tape& t, const Mat& g) {
                Mat full = Mat::Zero(rows, cols);
                for (long r = 0; r < rows; ++r)
                    for (long c = 0; c < cols; ++c)
                        full(src[static_cast<size_t>(r) * cols + c], c) += g(r, c);
                t.add_grad(a, full);
            });
    }

    // block max over row ranges: out.row(b) = columnwise max over rows
    // [ranges[b].first, ranges[b].second)
    Var block_rowmax(Var a, const std::vector<std::pair<int, int>>& ranges) {
        const Mat& x = val(a);
        Mat out(static_cast<long>(ranges.size()), x.cols());
        std::vector<int32_t> src(ranges.size() * static_cast<size_t>(x.cols()));
        for (size_t b = 0; b < ranges.size(); ++b) {
            auto [lo, hi] = ranges[b];
            if (lo < 0 || hi > x.rows() || lo >= hi)
                throw std::invalid_argument("block_rowmax: bad range");
            for (long c = 0; c < x.cols(); ++c) {
                long pick = lo;
                for (long r = lo + 1; r < hi; ++r)
                    if (x(r, c) > x(pick, c)) pick = r;
                out(static_cast<long>(b), c) = x(pick, c);
                src[b * x.cols() + c] = static_cast<int32_t>(pick);
            }
        }
        long rows = x.rows(), cols = x.cols();
        const size_t nb = ranges.size();
        return push_op(std::move(out), {a},
            [a, src = std::move(src), rows, cols, nb](Tape& t, const Mat& g) {
                Mat full = Mat::Zero(rows, cols);
                for (size_t b = 0; b < nb; ++b)
                    for (long c = 0; c < cols; ++c)
                        full(src[b * cols + c], c) += g(static_cast<long>(b), c);
                t.add_grad(a, full);
            });
    }

    // --- backward ---------------------------------------------------------------

    // Accumulates d(root)/d(node) into every node; root must be 1x1.
    void backward(Var root) {
        const int32_t r = check(root);
        if (val(root).rows() != 1 || val(root).cols() != 1)
            throw std::invalid_argument("backward: root must be scalar");
        if (nodes_[r].grad.size() == 0) nodes_[r].grad = Mat::Ones(1, 1);
        else nodes_[r].grad.setOnes();
        for (int32_t i = r; i >= 0; --i) {
            Node& n = nodes_[i];
            if (!n.requires_grad || !n.back || n.grad.size() == 0) continue;
            n.back(*this, n.grad);
        }
    }

    void add_grad(Var v, const Mat& g) {
        Node& n = nodes_[check(v)];
        if (!n.requires_grad) return;
        if (n.grad.size() == 0) n.grad = g;
        else n.grad += g;
    }

private:
    void sub_grad(Var v, const Mat& g) {
        Node& n = nodes_[check(v)];
        if (!n.requires_grad) return;
        if (n.grad.size() == 0) n.grad = -g;
        else n.grad -= g;
    }

    // grad(v) += a * b without a temporary when possible
    void add_grad_prod(Var v, const Mat& a, const Mat& b) {
        Node& n = nodes_[check(v)];
        if (!n.requires_grad) return;
        if (n.grad.size() == 0) {
            n.grad.noalias() = a * b;
        } else {
            n.grad.noalias() += a * b;
        }
    }

    const Mat& value(int32_t i) const {
        const Node& n = nodes_[i];
        return n.ext ? *n.ext : n.val;
    }

    int32_t check(Var v) const {
        if (!v.valid() || static_cast<size_t>(v.idx) >= nodes_.size())
            throw std::invalid_argument("invalid Var");
        return v.idx;
    }

    Var push(Mat v, const Mat* ext, bool req, std::function<void(Tape&, const Mat&)> back) {
        Node n;
        n.val = std::move(v);
        n.ext = ext;
        n.requires_grad = req;
        n.back = std::move(back);
        nodes_.push_back(std::move(n));
        return Var{static_cast<int32_t>(nodes_.size() - 1)};
    }

    Var push_op(Mat out, const std::vector<Var>& parents,
                std::function<void(Tape&, const Mat&)> back) {
        bool req = false;
        for (Var p : parents) req = req || nodes_[check(p)].requires_grad;
        return push(std::move(out), nullptr, req, req ? std::move(back) : nullptr);
    }

    template <class F>
    Var unary(Mat out, Var a, F&& f) {
        return push_op(std::move(out), {a},
            [a, f = std::forward<F>(f)](Tape& t, const Mat& g) { f(t, g, a); });
    }

    template <class F>
    Var unary_binary(Mat out, Var a, Var b, F&& f) {
        return push_op(std::move(out), {a, b},
            [a, b, f = std::forward<F>(f)](Tape& t, const Mat& g) { f(t, g, a, b); });
    }

    void same_shape(Var a, Var b, const char* op) const {
        if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols())
            throw std::invalid_argument(std::string(op) + ": shape mismatch");
    }

    std::vector<Node> nodes_;
};

// One step of an LSTM cell. Gate layout along the 4H axis: input, forget,
// cell, output. x [1 x in], h/c [1 x H], wx [in x 4H], wh [H x 4H], b [1 x 4H].
struct LstmState {
    Var h, c;
};

inline LstmState lstm_step(Tape& t, Var x, LstmState s, Var wx, Var wh, Var b) {
    const long H = t.val(s.h).cols();
    Var gates = t.add_rowvec(t.add(t.matmul(x, wx), t.matmul(s.h, wh)), b);
    Var gi = t.sigmoid_v(t.slice_cols(gates, 0, H));
    Var gf = t.sigmoid_v(t.slice_cols(gates, H, H));
    Var gg = t.tanh_v(t.slice_cols(gates, 2 * H, H));
    Var go = t.sigmoid_v(t.slice_cols(gates, 3 * H, H));
    Var c = t.add(t.cmul(gf, s.c), t.cmul(gi, gg));
    Var h = t.cmul(go, t.tanh_v(c));
    return {h, c};
}

// 3x3 same-padding convolution over a grid stored as [H*W x Cin].
// w [9*Cin x Cout], b [1 x Cout]. Neighbor blocks are ordered by
// (dr, dc) in row-major over {-1,0,1}^2.
inline Var grid_conv3x3(Tape& t, Var in, Var w, Var b, int H, int W) {
    std::vector<Var> blocks;
    blocks.reserve(9);
    for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) {
                blocks.push_back(in);
                continue;
            }
            std::vector<int> idx(static_cast<size_t>(H) * W);
            for (int i = 0; i < H; ++i)
                for (int j = 0; j < W; ++j) {
                    const int si = i + dr, sj = j + dc;
                    idx[static_cast<size_t>(i) * W + j] =
                        (si < 0 || si >= H || sj < 0 || sj >= W) ? -1 : si * W + sj;
                }
            blocks.push_back(t.gather_rows(in, std::move(idx)));
        }
    }
    return t.affine(t.concat_cols(blocks), w, b);
}

// Width-3 same-padding convolution along time for a sequence [T x Cin].
// w [3*Cin x Cout], b [1 x Cout].
inline Var seq_conv3(Tape& t, Var in, Var w, Var b) {
    const long T = t.val(in).rows();
    std::vector<int> prev(T), next(T);
    for (long k = 0; k < T; ++k) {
        prev[k] = k > 0 ? static_cast<int>(k - 1) : -1;
        next[k] = k + 1 < T ? static_cast<int>(k + 1) : -1;
    }
    Var cat = t.concat_cols({t.gather_rows(in, prev), in, t.gather_rows(in, next)});
    return t.affine(cat, w, b);
}

} // namespace cit::ad
