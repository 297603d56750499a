#include "gwrnet/gng.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "gwrnet/nearest.hpp"

namespace gwrnet {

void GngParams::validate() const {
    require(eps_n > 0.0 && eps_n < eps_b && eps_b <= 1.0, "GngParams: require 0 < eps_n < eps_b <= 1");
    require(max_edge_age >= 1, "GngParams: max_edge_age must be >= 1");
    require(lambda >= 1, "GngParams: lambda must be >= 1");
    require(split_error_decay > 0.0 && split_error_decay <= 1.0, "GngParams: split_error_decay in (0,1]");
    require(error_decay >= 0.0 && error_decay < 1.0, "GngParams: error_decay in [0,1)");
    require(max_nodes >= 2, "GngParams: max_nodes must be >= 2");
}

GrowingNeuralGas::GrowingNeuralGas(std::size_t dim, GngParams params, std::uint64_t seed,
                                   std::optional<std::array<Vector, 2>> init_samples)
    : dim_(dim), params_(params), graph_(2) {
    require(dim >= 1, "GrowingNeuralGas: dim must be >= 1");
    params_.validate();
    auto weights = init_samples ? *init_samples : detail::random_initial_weights(dim, seed);
    for (auto& w : weights) {
        require_dim(w.size(), dim, "GrowingNeuralGas init sample");
        nodes_.push_back(GngNode{std::move(w), 0.0});
    }
}

BmuPair GrowingNeuralGas::find_bmus(std::span<const double> x) const {
    require_dim(x.size(), dim_, "find_bmus");
    return two_nearest(nodes_.size(), [&](std::size_t j) { return distance(x, nodes_[j].weight); });
}

StepOutcome GrowingNeuralGas::train_step(std::span<const double> x, std::size_t step_index) {
    const BmuPair bmus = find_bmus(x);
    const std::size_t b = bmus.best;

    StepOutcome out;
    out.bmu = b;
    out.second = bmus.second;
    out.winner = b;
    out.activity = activity(bmus.best_distance);
    out.bmu_habituation = 1.0;

    graph_.connect(b, bmus.second);
    nodes_[b].error += bmus.best_distance * bmus.best_distance;
    move_towards(nodes_[b].weight, x, params_.eps_b);
    for (const auto& [n, age] : graph_.neighbors(b)) move_towards(nodes_[n].weight, x, params_.eps_n);

    graph_.age_edges_of(b);
    graph_.prune(params_.max_edge_age);
    out.removed_nodes = remove_isolated(graph_, nodes_).size();

    if (step_index > 0 && step_index % params_.lambda == 0 && nodes_.size() < params_.max_nodes) {
        const std::size_t q = nearest(nodes_.size(), [&](std::size_t j) { return -nodes_[j].error; });
        if (graph_.degree(q) > 0) {
            std::size_t f = graph_.neighbors(q).begin()->first;
            for (const auto& [n, age] : graph_.neighbors(q)) {
                if (nodes_[n].error > nodes_[f].error) f = n;
            }
            nodes_[q].error *= params_.split_error_decay;
            nodes_[f].error *= params_.split_error_decay;
            nodes_.push_back(GngNode{midpoint(nodes_[q].weight, nodes_[f].weight), nodes_[q].error});
            const std::size_t r = graph_.add_node();
            graph_.disconnect(q, f);
            graph_.connect(r, q);
            graph_.connect(r, f);
            out.inserted = true;
        }
    }
    for (auto& n : nodes_) n.error *= 1.0 - params_.error_decay;
    ++steps_;
    return out;
}

EpochStats GrowingNeuralGas::train_epoch(std::span<const Vector> data, std::uint64_t shuffle_seed) {
    require(!data.empty(), "train_epoch: empty data");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng);

    EpochStats stats;
    for (std::size_t i : order) {
        const StepOutcome o = train_step(data[i], steps_ + 1);
        stats.mean_activity += o.activity;
        stats.insertions += o.inserted ? 1 : 0;
    }
    const double n = static_cast<double>(data.size());
    stats.mean_activity /= n;
    stats.mean_bmu_habituation = 1.0;
    stats.quantization_error = quantization_error(*this, data);
    stats.node_count = nodes_.size();
    return stats;
}

}  // namespace gwrnet
