#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "gwrnet/graph.hpp"
#include "gwrnet/linalg.hpp"

namespace gwrnet {

inline constexpr std::size_t kUnboundedNodes = std::numeric_limits<std::size_t>::max();

/// Lower clamp for habituation counters. The habituation rule itself settles
/// at 1 - 1/1.05 for a node that keeps winning, so the clamp rarely binds.
inline constexpr double kMinHabituation = 0.0;

/// Value the habituation rule converges to for a repeatedly firing node.
inline constexpr double kHabituationFixedPoint = 1.0 - 1.0 / 1.05;

/// Hyperparameters of a Grow When Required network.
struct GwrParams {
    double activation_threshold = 0.9;   // a_T; 0 disables insertion
    double habituation_threshold = 0.3;  // h_T
    double tau_b = 0.3;
    double tau_n = 0.1;
    double eps_b = 0.1;
    double eps_n = 0.01;
    int max_edge_age = 50;
    std::size_t max_nodes = kUnboundedNodes;

    void validate() const;
    bool operator==(const GwrParams&) const = default;
};

using LabelCounts = std::map<int, std::uint64_t>;

struct Prototype {
    Vector weight;
    double habituation = 1.0;
    LabelCounts label_counts;

    bool operator==(const Prototype&) const = default;
};

struct BmuPair {
    std::size_t best = 0;
    std::size_t second = 0;
    double best_distance = 0.0;
    double second_distance = 0.0;
};

struct StepOutcome {
    std::size_t bmu = 0;     // BMU id at selection time
    std::size_t second = 0;
    std::size_t winner = 0;  // node credited with the label; the new node on insertion
    double activity = 0.0;
    double bmu_habituation = 0.0;  // h_b when the insertion gate was evaluated
    bool inserted = false;
    std::size_t removed_nodes = 0;
};

struct EpochStats {
    double mean_activity = 0.0;
    double mean_bmu_habituation = 0.0;
    double quantization_error = 0.0;
    std::size_t node_count = 0;
    std::size_t insertions = 0;

    bool operator==(const EpochStats&) const = default;
};

struct Sample {
    Vector x;
    std::optional<int> label;
};

/// a = exp(-d_b).
double activity(double bmu_distance);

/// One application of the habituation rule
/// dh = tau * 1.05 * (1 - h) - tau, clamped to [kMinHabituation, 1].
double habituate(double h, double tau);

/// Mean over `data` of the Euclidean distance to the BMU.
template <class Net>
double quantization_error(const Net& net, std::span<const Vector> data) {
    require(!data.empty(), "quantization_error: empty data");
    double total = 0.0;
    for (const auto& x : data) total += net.find_bmus(x).best_distance;
    return total / static_cast<double>(data.size());
}

namespace detail {
/// Two weight vectors drawn uniformly from [0,1)^dim.
std::array<Vector, 2> random_initial_weights(std::size_t dim, std::uint64_t seed);
}  // namespace detail

/// Grow When Required network over static inputs.
class GwrNetwork {
public:
    GwrNetwork(std::size_t dim, GwrParams params, std::uint64_t seed,
               std::optional<std::array<Vector, 2>> init_samples = std::nullopt);

    /// Restores a network from explicit state (deserialization).
    GwrNetwork(std::size_t dim, GwrParams params, std::vector<Prototype> nodes, AgedGraph graph,
               std::uint64_t steps);

    BmuPair find_bmus(std::span<const double> x) const;

    StepOutcome train_step(std::span<const double> x, std::optional<int> label = std::nullopt);

    /// One seeded shuffled pass over `data`.
    EpochStats train_epoch(std::span<const Sample> data, std::uint64_t shuffle_seed);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return nodes_.size(); }
    const GwrParams& params() const { return params_; }
    void set_params(const GwrParams& params);
    const std::vector<Prototype>& nodes() const { return nodes_; }
    const Prototype& node(std::size_t id) const { return nodes_.at(id); }
    const AgedGraph& graph() const { return graph_; }
    std::uint64_t steps() const { return steps_; }

    bool frozen() const { return frozen_; }
    void freeze() { frozen_ = true; }
    void unfreeze() { frozen_ = false; }

    void reset_labels();

    bool operator==(const GwrNetwork&) const = default;

private:
    void check_invariants() const;

    std::size_t dim_;
    GwrParams params_;
    std::vector<Prototype> nodes_;
    AgedGraph graph_;
    std::uint64_t steps_ = 0;
    bool frozen_ = false;
};

}  // namespace gwrnet
