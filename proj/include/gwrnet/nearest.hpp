#pragma once

#include <cstddef>
#include <limits>

#include "gwrnet/gwr.hpp"

namespace gwrnet {

/// Best and second-best ids under `dist`, ties resolved toward the lower id.
template <class DistFn>
BmuPair two_nearest(std::size_t count, DistFn&& dist) {
    require(count >= 2, "two_nearest: need at least 2 nodes");
    BmuPair out;
    out.best_distance = std::numeric_limits<double>::infinity();
    out.second_distance = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < count; ++j) {
        const double d = dist(j);
        if (d < out.best_distance) {
            out.second = out.best;
            out.second_distance = out.best_distance;
            out.best = j;
            out.best_distance = d;
        } else if (d < out.second_distance) {
            out.second = j;
            out.second_distance = d;
        }
    }
    return out;
}

/// Lowest-id argmin of `dist` over 0..count-1.
template <class DistFn>
std::size_t nearest(std::size_t count, DistFn&& dist) {
    require(count >= 1, "nearest: empty node set");
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < count; ++j) {
        const double d = dist(j);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

}  // namespace gwrnet
