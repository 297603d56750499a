#include "gwrnet/features.hpp"

#include <algorithm>
#include <cmath>

namespace gwrnet {

Vector flatten(const Frame& frame) {
    Vector out;
    out.reserve(frame.joints.size() * 3);
    for (const auto& j : frame.joints) out.insert(out.end(), j.begin(), j.end());
    return out;
}

void require_finite(const Frame& frame) {
    for (const auto& j : frame.joints) {
        for (double v : j) require(std::isfinite(v), "frame contains a missing (non-finite) joint coordinate");
    }
}

Frame center_on_hips(const Frame& frame, std::size_t hip_joint) {
    require(hip_joint < frame.joints.size(), "center_on_hips: hip joint index out of range");
    require_finite(frame);
    const auto hip = frame.joints[hip_joint];
    Frame out = frame;
    for (auto& j : out.joints) {
        for (int c = 0; c < 3; ++c) j[c] -= hip[c];
    }
    return out;
}

std::vector<Vector> pose_features(const Sequence& seq, std::size_t hip_joint) {
    std::vector<Vector> out;
    out.reserve(seq.frames.size());
    for (const auto& f : seq.frames) out.push_back(flatten(center_on_hips(f, hip_joint)));
    return out;
}

std::vector<Vector> motion_diff(std::span<const Vector> vectors) {
    require(vectors.size() >= 2, "motion_diff: need at least 2 frames");
    std::vector<Vector> out;
    out.reserve(vectors.size() - 1);
    for (std::size_t t = 0; t + 1 < vectors.size(); ++t) {
        require_dim(vectors[t + 1].size(), vectors[t].size(), "motion_diff");
        Vector d(vectors[t].size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = vectors[t + 1][i] - vectors[t][i];
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<Vector> motion_diff(const Sequence& seq) {
    std::vector<Vector> flat;
    flat.reserve(seq.frames.size());
    for (const auto& f : seq.frames) {
        require_finite(f);
        flat.push_back(flatten(f));
    }
    return motion_diff(flat);
}

std::vector<Vector> concat_trajectory(std::span<const Vector> vectors, std::size_t q) {
    require(q >= 1, "concat_trajectory: window must be >= 1");
    require(vectors.size() >= q, "concat_trajectory: fewer vectors than the window");
    std::vector<Vector> out;
    out.reserve(vectors.size() - q + 1);
    for (std::size_t t = 0; t + q <= vectors.size(); ++t) {
        Vector v;
        for (std::size_t k = 0; k < q; ++k) v.insert(v.end(), vectors[t + k].begin(), vectors[t + k].end());
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<Vector> bmu_substitute(const GwrNetwork& net, std::span<const Vector> vectors) {
    require(net.steps() > 0, "bmu_substitute: network is untrained");
    std::vector<Vector> out;
    out.reserve(vectors.size());
    for (const auto& x : vectors) out.push_back(net.node(net.find_bmus(x).best).weight);
    return out;
}

std::vector<Vector> bmu_substitute(const GammaGwr& net, std::span<const Vector> vectors) {
    require(net.steps() > 0, "bmu_substitute: network is untrained");
    std::vector<Vector> out;
    out.reserve(vectors.size());
    GlobalContext ctx = net.fresh_context();
    for (const auto& x : vectors) out.push_back(net.node(net.infer_step(ctx, x).bmu).weight);
    return out;
}

double max_pool(std::span<const double> weight) {
    require(!weight.empty(), "max_pool: empty vector");
    return *std::max_element(weight.begin(), weight.end());
}

Vector pool_groups(std::span<const double> weight, std::size_t group_size) {
    require(group_size >= 1, "pool_groups: group size must be >= 1");
    require(!weight.empty() && weight.size() % group_size == 0,
            "pool_groups: group size must divide the vector length");
    Vector out;
    out.reserve(weight.size() / group_size);
    for (std::size_t g = 0; g < weight.size(); g += group_size) out.push_back(max_pool(weight.subspan(g, group_size)));
    return out;
}

}  // namespace gwrnet
