#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gwrnet {

using Vector = std::vector<double>;

/// Thrown for every contract violation on shapes, parameters and inputs.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw Error(message);
}

inline void require_dim(std::size_t got, std::size_t expected, const char* what) {
    if (got != expected) {
        throw Error(std::string(what) + ": dimensionality mismatch (got " + std::to_string(got) +
                    ", expected " + std::to_string(expected) + ")");
    }
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

inline double norm(std::span<const double> a) {
    double acc = 0.0;
    for (double v : a) acc += v * v;
    return std::sqrt(acc);
}

// w += rate * (target - w)
inline void move_towards(Vector& w, std::span<const double> target, double rate) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += rate * (target[i] - w[i]);
}

inline Vector midpoint(std::span<const double> a, std::span<const double> b) {
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] + b[i]) / 2.0;
    return out;
}

}  // namespace gwrnet
