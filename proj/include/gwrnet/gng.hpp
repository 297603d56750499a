#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gwrnet/gwr.hpp"

namespace gwrnet {

/// Growing Neural Gas baseline: grows by one node every `lambda` steps
/// regardless of how well the input is matched.
struct GngParams {
    double eps_b = 0.1;
    double eps_n = 0.01;
    int max_edge_age = 50;
    std::size_t lambda = 100;
    double split_error_decay = 0.5;  // error scaling of the two nodes around an insertion
    double error_decay = 0.0005;     // global per-step error decay
    std::size_t max_nodes = kUnboundedNodes;

    void validate() const;
};

struct GngNode {
    Vector weight;
    double error = 0.0;
};

class GrowingNeuralGas {
public:
    GrowingNeuralGas(std::size_t dim, GngParams params, std::uint64_t seed,
                     std::optional<std::array<Vector, 2>> init_samples = std::nullopt);

    BmuPair find_bmus(std::span<const double> x) const;

    /// One adaptation step; inserts a node when step_index is a positive
    /// multiple of lambda.
    StepOutcome train_step(std::span<const double> x, std::size_t step_index);

    /// Seeded shuffled pass; step indices continue across epochs.
    EpochStats train_epoch(std::span<const Vector> data, std::uint64_t shuffle_seed);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<GngNode>& nodes() const { return nodes_; }
    const AgedGraph& graph() const { return graph_; }
    std::size_t steps() const { return steps_; }

private:
    std::size_t dim_;
    GngParams params_;
    std::vector<GngNode> nodes_;
    AgedGraph graph_;
    std::size_t steps_ = 0;
};

}  // namespace gwrnet
