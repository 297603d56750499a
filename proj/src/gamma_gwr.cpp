#include "gwrnet/gamma_gwr.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "gwrnet/nearest.hpp"

namespace gwrnet {

std::vector<double> GammaParams::default_alpha(std::size_t context_depth) {
    std::vector<double> alpha(context_depth + 1);
    double sum = 0.0;
    for (std::size_t k = 0; k <= context_depth; ++k) {
        alpha[k] = static_cast<double>(context_depth + 1 - k);
        sum += alpha[k];
    }
    for (auto& a : alpha) a /= sum;
    return alpha;
}

GammaParams GammaParams::resolved() const {
    GammaParams out = *this;
    if (out.alpha.empty()) out.alpha = default_alpha(context_depth);
    return out;
}

void GammaParams::validate() const {
    gwr.validate();
    require(alpha.size() == context_depth + 1, "GammaParams: alpha must have K+1 entries");
    for (double a : alpha) require(a > 0.0, "GammaParams: alpha entries must be positive");
    require(beta > 0.0 && beta < 1.0, "GammaParams: beta must lie in (0,1)");
}

GlobalContext GlobalContext::zero(std::size_t context_depth, std::size_t dim) {
    GlobalContext ctx;
    ctx.contexts.assign(context_depth, Vector(dim, 0.0));
    return ctx;
}

double gamma_distance(const GammaPrototype& node, std::span<const double> x, const GlobalContext& ctx,
                      std::span<const double> alpha) {
    require(alpha.size() == node.contexts.size() + 1, "gamma_distance: |alpha| must equal K+1");
    require(ctx.contexts.size() == node.contexts.size(), "gamma_distance: context depth mismatch");
    require_dim(x.size(), node.weight.size(), "gamma_distance");
    double d = alpha[0] * distance(x, node.weight);
    for (std::size_t k = 0; k < node.contexts.size(); ++k) {
        require_dim(ctx.contexts[k].size(), node.contexts[k].size(), "gamma_distance context");
        d += alpha[k + 1] * distance(ctx.contexts[k], node.contexts[k]);
    }
    return d;
}

GlobalContext update_global_context(GlobalContext ctx, double beta) {
    if (!ctx.previous) return ctx;
    const auto& prev = *ctx.previous;
    require(prev.contexts.size() == ctx.contexts.size(), "update_global_context: context depth mismatch");
    for (std::size_t k = 0; k < ctx.contexts.size(); ++k) {
        const Vector& lower = k == 0 ? prev.weight : prev.contexts[k - 1];
        Vector& c = ctx.contexts[k];
        require_dim(lower.size(), prev.weight.size(), "update_global_context");
        c.resize(prev.weight.size());
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = beta * prev.weight[i] + (1.0 - beta) * lower[i];
    }
    return ctx;
}

std::optional<LabelPrediction> majority_label(const LabelCounts& counts) {
    std::uint64_t total = 0;
    std::optional<LabelPrediction> best;
    std::uint64_t best_count = 0;
    for (const auto& [label, count] : counts) {
        total += count;
        if (count > best_count) {
            best_count = count;
            best = LabelPrediction{label, 0.0};
        }
    }
    if (!best) return std::nullopt;
    best->confidence = static_cast<double>(best_count) / static_cast<double>(total);
    return best;
}

GammaGwr::GammaGwr(std::size_t dim, GammaParams params, std::uint64_t seed,
                   std::optional<std::array<Vector, 2>> init_samples)
    : dim_(dim), params_(params.resolved()), graph_(2) {
    require(dim >= 1, "GammaGwr: dim must be >= 1");
    params_.validate();
    auto weights = init_samples ? *init_samples : detail::random_initial_weights(dim, seed);
    for (auto& w : weights) {
        require_dim(w.size(), dim, "GammaGwr init sample");
        nodes_.push_back(
            GammaPrototype{std::move(w), std::vector<Vector>(params_.context_depth, Vector(dim, 0.0)), 1.0, {}});
    }
    context_ = fresh_context();
}

GammaGwr::GammaGwr(std::size_t dim, GammaParams params, std::vector<GammaPrototype> nodes, AgedGraph graph,
                   GlobalContext training_context, std::uint64_t steps)
    : dim_(dim),
      params_(params.resolved()),
      nodes_(std::move(nodes)),
      graph_(std::move(graph)),
      context_(std::move(training_context)),
      steps_(steps) {
    params_.validate();
    check_invariants();
}

void GammaGwr::set_params(const GammaParams& params) {
    GammaParams p = params.resolved();
    p.validate();
    require(p.context_depth == params_.context_depth, "GammaGwr: context depth cannot change");
    params_ = std::move(p);
}

void GammaGwr::check_invariants() const {
    require(nodes_.size() >= 2, "GammaGwr: fewer than 2 nodes");
    require(graph_.node_count() == nodes_.size(), "GammaGwr: graph/node count mismatch");
    require(context_.contexts.size() == params_.context_depth, "GammaGwr: global context depth mismatch");
    for (const auto& n : nodes_) {
        require_dim(n.weight.size(), dim_, "GammaGwr node weight");
        require(n.contexts.size() == params_.context_depth, "GammaGwr: node context depth mismatch");
        for (const auto& c : n.contexts) require_dim(c.size(), dim_, "GammaGwr node context");
        require(n.habituation >= 0.0 && n.habituation <= 1.0, "GammaGwr: habituation outside [0,1]");
    }
}

GlobalContext::Snapshot GammaGwr::snapshot(std::size_t id) const {
    return GlobalContext::Snapshot{nodes_[id].weight, nodes_[id].contexts};
}

void GammaGwr::begin_sequence() { context_ = fresh_context(); }

BmuPair GammaGwr::find_bmus(std::span<const double> x, const GlobalContext& ctx) const {
    require_dim(x.size(), dim_, "find_bmus");
    return two_nearest(nodes_.size(),
                       [&](std::size_t j) { return gamma_distance(nodes_[j], x, ctx, params_.alpha); });
}

StepOutcome GammaGwr::train_step(std::span<const double> x, std::optional<int> label) {
    require(!frozen_, "GammaGwr: training a frozen network");
    require_dim(x.size(), dim_, "train_step");
    context_ = update_global_context(std::move(context_), params_.beta);

    const BmuPair bmus = find_bmus(x, context_);
    const std::size_t b = bmus.best;
    const std::size_t s = bmus.second;

    StepOutcome out;
    out.bmu = b;
    out.second = s;
    out.activity = activity(bmus.best_distance);
    out.bmu_habituation = nodes_[b].habituation;

    graph_.connect(b, s);

    const GwrParams& gp = params_.gwr;
    const bool insert = out.activity < gp.activation_threshold && out.bmu_habituation < gp.habituation_threshold &&
                        nodes_.size() < gp.max_nodes;
    if (insert) {
        GammaPrototype fresh;
        fresh.weight = midpoint(nodes_[b].weight, x);
        for (std::size_t k = 0; k < params_.context_depth; ++k) {
            fresh.contexts.push_back(midpoint(context_.contexts[k], nodes_[b].contexts[k]));
        }
        nodes_.push_back(std::move(fresh));
        const std::size_t r = graph_.add_node();
        graph_.disconnect(b, s);
        graph_.connect(r, b);
        graph_.connect(r, s);
        out.inserted = true;
        out.winner = r;
    } else {
        auto adapt = [&](GammaPrototype& node, double eps) {
            const double rate = eps * node.habituation;
            move_towards(node.weight, x, rate);
            for (std::size_t k = 0; k < params_.context_depth; ++k) {
                move_towards(node.contexts[k], context_.contexts[k], rate);
            }
        };
        adapt(nodes_[b], gp.eps_b);
        for (const auto& [n, age] : graph_.neighbors(b)) adapt(nodes_[n], gp.eps_n);
        nodes_[b].habituation = habituate(nodes_[b].habituation, gp.tau_b);
        for (const auto& [n, age] : graph_.neighbors(b)) {
            nodes_[n].habituation = habituate(nodes_[n].habituation, gp.tau_n);
        }
        out.winner = b;
    }

    if (label) ++nodes_[out.winner].label_counts[*label];

    context_.previous = snapshot(b);

    graph_.age_edges_of(b);
    graph_.prune(gp.max_edge_age);
    out.removed_nodes = remove_isolated(graph_, nodes_).size();
    ++steps_;
    return out;
}

EpochStats GammaGwr::train_sequence(const VectorSequence& seq) {
    begin_sequence();
    EpochStats stats;
    for (const auto& x : seq.steps) {
        const StepOutcome o = train_step(x, seq.label);
        stats.mean_activity += o.activity;
        stats.mean_bmu_habituation += o.bmu_habituation;
        stats.insertions += o.inserted ? 1 : 0;
    }
    stats.node_count = nodes_.size();
    return stats;
}

EpochStats GammaGwr::train_epoch(std::span<const VectorSequence> data, std::uint64_t shuffle_seed) {
    require(!data.empty(), "train_epoch: empty data");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng);

    EpochStats stats;
    std::size_t steps = 0;
    for (std::size_t i : order) {
        const EpochStats s = train_sequence(data[i]);
        stats.mean_activity += s.mean_activity;
        stats.mean_bmu_habituation += s.mean_bmu_habituation;
        stats.insertions += s.insertions;
        steps += data[i].steps.size();
    }
    require(steps > 0, "train_epoch: sequences contain no steps");
    stats.mean_activity /= static_cast<double>(steps);
    stats.mean_bmu_habituation /= static_cast<double>(steps);
    stats.quantization_error = quantization_error(data);
    stats.node_count = nodes_.size();
    return stats;
}

GammaInference GammaGwr::infer_step(GlobalContext& ctx, std::span<const double> x) const {
    require_dim(x.size(), dim_, "infer_step");
    ctx = update_global_context(std::move(ctx), params_.beta);
    const std::size_t b = nearest(nodes_.size(),
                                  [&](std::size_t j) { return gamma_distance(nodes_[j], x, ctx, params_.alpha); });
    GammaInference out;
    out.bmu = b;
    out.distance = gamma_distance(nodes_[b], x, ctx, params_.alpha);
    out.activity = activity(out.distance);
    ctx.previous = snapshot(b);
    return out;
}

LabelPrediction GammaGwr::predict_label(std::span<const Vector> window) const {
    require(!window.empty(), "predict_label: empty window");
    GlobalContext ctx = fresh_context();
    GlobalContext before_last;
    std::size_t bmu = 0;
    for (const auto& x : window) {
        before_last = ctx;
        bmu = infer_step(ctx, x).bmu;
    }
    if (auto p = majority_label(nodes_[bmu].label_counts)) return *p;

    // BMU never saw a label: use the closest labeled node under the same context.
    const GlobalContext last_ctx = update_global_context(before_last, params_.beta);
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
        if (nodes_[j].label_counts.empty()) continue;
        const double d = gamma_distance(nodes_[j], window.back(), last_ctx, params_.alpha);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    require(best.has_value(), "predict_label: network carries no labels");
    return *majority_label(nodes_[*best].label_counts);
}

double GammaGwr::quantization_error(std::span<const VectorSequence> data) const {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& seq : data) {
        GlobalContext ctx = fresh_context();
        for (const auto& x : seq.steps) {
            const GammaInference inf = infer_step(ctx, x);
            total += distance(x, nodes_[inf.bmu].weight);
            ++count;
        }
    }
    require(count > 0, "quantization_error: empty data");
    return total / static_cast<double>(count);
}

}  // namespace gwrnet
