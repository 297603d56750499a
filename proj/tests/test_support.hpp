#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "gwrnet/linalg.hpp"

namespace gwrnet::testing {

inline std::vector<Vector> random_points(std::size_t count, std::size_t dim, std::uint64_t seed,
                                         double lo = 0.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<Vector> out(count, Vector(dim));
    for (auto& v : out) {
        for (auto& x : v) x = u(rng);
    }
    return out;
}

// Independent exhaustive-scan oracle: squared distances, lowest index wins.
inline std::size_t brute_force_argmin(const std::vector<Vector>& weights, const Vector& x) {
    std::size_t best = 0;
    long double best_d = -1;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        long double d = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const long double diff = static_cast<long double>(x[i]) - weights[j][i];
            d += diff * diff;
        }
        if (best_d < 0 || d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

}  // namespace gwrnet::testing
