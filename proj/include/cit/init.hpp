#pragma once

// Deterministic parameter initialization. Each parameter group draws from its
// own stream derived from (seed, group name), so groups are independent and
// reproducible across platforms.

#include <cit/types.hpp>

#include <random>
#include <string_view>

namespace cit {

// FNV-1a; std::hash is implementation-defined, this is not
inline uint64_t mix_seed(uint64_t seed, std::string_view name) {
    uint64_t h = 14695981039346656037ull ^ seed;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

// uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; used for recurrent matrices
// and biases where conservative scale keeps the gates unsaturated
inline Mat fanin_uniform(long rows, long cols, long fan_in, std::mt19937_64& rng) {
    const double a = 1.0 / std::sqrt(static_cast<double>(std::max<long>(fan_in, 1)));
    std::uniform_real_distribution<double> u(-a, a);
    Mat m(rows, cols);
    for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j) m(i, j) = u(rng);
    return m;
}

// uniform in +-sqrt(6/fan_in); variance-preserving for the conv/FC layers
// under leaky-ReLU, so multi-stage paths keep O(1) gain at initialization
inline Mat he_uniform(long rows, long cols, long fan_in, std::mt19937_64& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(std::max<long>(fan_in, 1)));
    std::uniform_real_distribution<double> u(-a, a);
    Mat m(rows, cols);
    for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j) m(i, j) = u(rng);
    return m;
}

} // namespace cit
