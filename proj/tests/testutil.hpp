#pragma once

// Shared helpers for the test suites: deterministic random matrices and a
// central-difference gradient checker used as the oracle for every
// differentiable path.

#include <gtest/gtest.h>

#include <cit/autodiff.hpp>

#include <functional>
#include <random>
#include <vector>

namespace cit::testutil {

using cit::ad::Tape;
using cit::ad::Var;
using Mat = Eigen::MatrixXd;

inline Mat random_mat(long r, long c, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Mat m(r, c);
    for (long i = 0; i < r; ++i)
        for (long j = 0; j < c; ++j) m(i, j) = u(rng);
    return m;
}

// Entrywise comparison of analytic gradients against central differences.
inline void check_grads(const std::function<Var(Tape&, std::vector<Var>&)>& build,
                        std::vector<Mat> inputs, double eps = 1e-6, double tol = 1e-6) {
    auto eval = [&](const std::vector<Mat>& ins) {
        Tape t;
        std::vector<Var> vars;
        for (const Mat& m : ins) vars.push_back(t.leaf(m));
        Var out = build(t, vars);
        return t.val(out)(0, 0);
    };

    Tape t;
    std::vector<Var> vars;
    for (const Mat& m : inputs) vars.push_back(t.leaf(m));
    Var out = build(t, vars);
    t.backward(out);

    for (size_t k = 0; k < inputs.size(); ++k) {
        Mat analytic = t.grad_of(vars[k]);
        for (long i = 0; i < inputs[k].rows(); ++i) {
            for (long j = 0; j < inputs[k].cols(); ++j) {
                std::vector<Mat> plus = inputs, minus = inputs;
                plus[k](i, j) += eps;
                minus[k](i, j) -= eps;
                const double num = (eval(plus) - eval(minus)) / (2 * eps);
                const double ana = analytic(i, j);
                const double denom = std::max({std::abs(num), std::abs(ana), 1.0});
                EXPECT_NEAR(ana / denom, num / denom, tol)
                    << "input " << k << " entry (" << i << "," << j << ")";
            }
        }
    }
}

// weights the output elementwise so gradients are not uniform
inline Var weighted_sum(Tape& t, Var v, std::mt19937_64& rng) {
    Mat w = random_mat(t.val(v).rows(), t.val(v).cols(), rng);
    return t.sum_all(t.cmul(v, t.constant(w)));
}

} // namespace cit::testutil
