#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gwrnet/gamma_gwr.hpp"
#include "gwrnet/gwr.hpp"

namespace gwrnet {

/// One skeleton pose. Flattening is joint-major with (x, y, z) per joint.
struct Frame {
    std::vector<std::array<double, 3>> joints;

    std::size_t joint_count() const { return joints.size(); }
    bool operator==(const Frame&) const = default;
};

struct Sequence {
    std::string id;
    std::string subject;
    std::optional<int> label;
    std::vector<Frame> frames;
};

Vector flatten(const Frame& frame);

/// Throws when any coordinate is NaN or infinite.
void require_finite(const Frame& frame);

/// Subtracts the hip joint from every joint.
Frame center_on_hips(const Frame& frame, std::size_t hip_joint);

/// Flattened hip-centered frames.
std::vector<Vector> pose_features(const Sequence& seq, std::size_t hip_joint);

/// Consecutive differences: out[t] = in[t+1] - in[t].
std::vector<Vector> motion_diff(std::span<const Vector> vectors);
std::vector<Vector> motion_diff(const Sequence& seq);

/// Stride-1 sliding window of q vectors concatenated oldest to newest.
std::vector<Vector> concat_trajectory(std::span<const Vector> vectors, std::size_t q);

/// Replaces each vector by its BMU weight.
std::vector<Vector> bmu_substitute(const GwrNetwork& net, std::span<const Vector> vectors);
/// Gamma variant: BMUs follow the context dynamics over the list in order.
std::vector<Vector> bmu_substitute(const GammaGwr& net, std::span<const Vector> vectors);

/// Largest component of a BMU weight.
double max_pool(std::span<const double> weight);

/// MAX pooling over consecutive groups of `group_size` components; the
/// output has one value per group. group_size must divide the input length.
Vector pool_groups(std::span<const double> weight, std::size_t group_size);

}  // namespace gwrnet
