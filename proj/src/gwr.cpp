#include "gwrnet/gwr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gwrnet/nearest.hpp"

namespace gwrnet {

void GwrParams::validate() const {
    require(activation_threshold >= 0.0 && activation_threshold < 1.0,
            "GwrParams: activation_threshold must lie in [0,1)");
    require(habituation_threshold > 0.0 && habituation_threshold < 1.0,
            "GwrParams: habituation_threshold must lie in (0,1)");
    require(tau_n > 0.0 && tau_b > tau_n, "GwrParams: require tau_b > tau_n > 0");
    require(eps_n > 0.0 && eps_n < eps_b && eps_b <= 1.0, "GwrParams: require 0 < eps_n < eps_b <= 1");
    require(max_edge_age >= 1, "GwrParams: max_edge_age must be >= 1");
    require(max_nodes >= 2, "GwrParams: max_nodes must be >= 2");
}

double activity(double bmu_distance) {
    require(bmu_distance >= 0.0, "activity: negative distance");
    return std::exp(-bmu_distance);
}

double habituate(double h, double tau) {
    require(tau > 0.0, "habituate: tau must be positive");
    require(h >= 0.0 && h <= 1.0, "habituate: h must lie in [0,1]");
    const double delta = tau * 1.05 * (1.0 - h) - tau;
    return std::clamp(h + delta, kMinHabituation, 1.0);
}

namespace detail {
std::array<Vector, 2> random_initial_weights(std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::array<Vector, 2> out{Vector(dim), Vector(dim)};
    for (auto& w : out) {
        for (auto& v : w) v = uniform(rng);
    }
    return out;
}
}  // namespace detail

GwrNetwork::GwrNetwork(std::size_t dim, GwrParams params, std::uint64_t seed,
                       std::optional<std::array<Vector, 2>> init_samples)
    : dim_(dim), params_(params), graph_(2) {
    require(dim >= 1, "GwrNetwork: dim must be >= 1");
    params_.validate();
    auto weights = init_samples ? *init_samples : detail::random_initial_weights(dim, seed);
    for (auto& w : weights) {
        require_dim(w.size(), dim, "GwrNetwork init sample");
        nodes_.push_back(Prototype{std::move(w), 1.0, {}});
    }
}

GwrNetwork::GwrNetwork(std::size_t dim, GwrParams params, std::vector<Prototype> nodes, AgedGraph graph,
                       std::uint64_t steps)
    : dim_(dim), params_(params), nodes_(std::move(nodes)), graph_(std::move(graph)), steps_(steps) {
    params_.validate();
    check_invariants();
}

void GwrNetwork::set_params(const GwrParams& params) {
    params.validate();
    params_ = params;
}

void GwrNetwork::reset_labels() {
    for (auto& n : nodes_) n.label_counts.clear();
}

void GwrNetwork::check_invariants() const {
    require(nodes_.size() >= 2, "GwrNetwork: fewer than 2 nodes");
    require(graph_.node_count() == nodes_.size(), "GwrNetwork: graph/node count mismatch");
    for (const auto& n : nodes_) {
        require_dim(n.weight.size(), dim_, "GwrNetwork node weight");
        require(n.habituation >= 0.0 && n.habituation <= 1.0, "GwrNetwork: habituation outside [0,1]");
    }
}

BmuPair GwrNetwork::find_bmus(std::span<const double> x) const {
    require_dim(x.size(), dim_, "find_bmus");
    return two_nearest(nodes_.size(), [&](std::size_t j) { return distance(x, nodes_[j].weight); });
}

StepOutcome GwrNetwork::train_step(std::span<const double> x, std::optional<int> label) {
    require(!frozen_, "GwrNetwork: training a frozen network");
    const BmuPair bmus = find_bmus(x);
    const std::size_t b = bmus.best;
    const std::size_t s = bmus.second;

    StepOutcome out;
    out.bmu = b;
    out.second = s;
    out.activity = activity(bmus.best_distance);
    out.bmu_habituation = nodes_[b].habituation;

    graph_.connect(b, s);

    const bool insert = out.activity < params_.activation_threshold &&
                        out.bmu_habituation < params_.habituation_threshold &&
                        nodes_.size() < params_.max_nodes;
    if (insert) {
        nodes_.push_back(Prototype{midpoint(nodes_[b].weight, x), 1.0, {}});
        const std::size_t r = graph_.add_node();
        graph_.disconnect(b, s);
        graph_.connect(r, b);
        graph_.connect(r, s);
        out.inserted = true;
        out.winner = r;
    } else {
        Prototype& best = nodes_[b];
        move_towards(best.weight, x, params_.eps_b * best.habituation);
        for (const auto& [n, age] : graph_.neighbors(b)) {
            Prototype& neighbor = nodes_[n];
            move_towards(neighbor.weight, x, params_.eps_n * neighbor.habituation);
        }
        best.habituation = habituate(best.habituation, params_.tau_b);
        for (const auto& [n, age] : graph_.neighbors(b)) {
            nodes_[n].habituation = habituate(nodes_[n].habituation, params_.tau_n);
        }
        out.winner = b;
    }

    if (label) ++nodes_[out.winner].label_counts[*label];

    graph_.age_edges_of(b);
    graph_.prune(params_.max_edge_age);
    out.removed_nodes = remove_isolated(graph_, nodes_).size();
    ++steps_;
    return out;
}

EpochStats GwrNetwork::train_epoch(std::span<const Sample> data, std::uint64_t shuffle_seed) {
    require(!data.empty(), "train_epoch: empty data");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng);

    EpochStats stats;
    for (std::size_t i : order) {
        const StepOutcome o = train_step(data[i].x, data[i].label);
        stats.mean_activity += o.activity;
        stats.mean_bmu_habituation += o.bmu_habituation;
        stats.insertions += o.inserted ? 1 : 0;
    }
    const double n = static_cast<double>(data.size());
    stats.mean_activity /= n;
    stats.mean_bmu_habituation /= n;
    double qe = 0.0;
    for (const auto& sample : data) qe += find_bmus(sample.x).best_distance;
    stats.quantization_error = qe / n;
    stats.node_count = nodes_.size();
    return stats;
}

}  // namespace gwrnet
