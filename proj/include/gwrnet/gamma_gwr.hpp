#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gwrnet/gwr.hpp"

namespace gwrnet {

/// GWR hyperparameters plus the temporal-context settings.
struct GammaParams {
    GwrParams gwr;
    std::size_t context_depth = 1;  // K
    std::vector<double> alpha;      // alpha_0..alpha_K; empty means default_alpha(K)
    double beta = 0.7;

    /// alpha_k = (K + 1 - k) / sum, decaying weights summing to 1.
    static std::vector<double> default_alpha(std::size_t context_depth);

    /// Copy with alpha filled in when empty.
    GammaParams resolved() const;
    void validate() const;
    bool operator==(const GammaParams&) const = default;
};

struct GammaPrototype {
    Vector weight;
    std::vector<Vector> contexts;  // c_{j,1..K}
    double habituation = 1.0;
    LabelCounts label_counts;

    bool operator==(const GammaPrototype&) const = default;
};

/// Network-wide temporal context C_1..C_K plus the previous BMU's state that
/// produces the next context. Reset at every sequence boundary.
struct GlobalContext {
    struct Snapshot {
        Vector weight;
        std::vector<Vector> contexts;
        bool operator==(const Snapshot&) const = default;
    };

    std::vector<Vector> contexts;
    std::optional<Snapshot> previous;

    static GlobalContext zero(std::size_t context_depth, std::size_t dim);
    bool operator==(const GlobalContext&) const = default;
};

/// d_j = alpha_0 |x - w_j| + sum_k alpha_k |C_k - c_{j,k}|.
double gamma_distance(const GammaPrototype& node, std::span<const double> x, const GlobalContext& ctx,
                      std::span<const double> alpha);

/// C_k = beta * w_prev + (1 - beta) * c_prev_{k-1}, with c_prev_0 taken as
/// w_prev. Without a previous BMU the contexts are left unchanged (zero
/// after a reset).
GlobalContext update_global_context(GlobalContext ctx, double beta);

struct VectorSequence {
    std::vector<Vector> steps;
    std::optional<int> label;
};

struct GammaInference {
    std::size_t bmu = 0;
    double distance = 0.0;  // gamma distance d_b
    double activity = 0.0;
};

struct LabelPrediction {
    int label = 0;
    double confidence = 0.0;
};

/// Argmax of the counts (ties to the lowest label id) and its share.
std::optional<LabelPrediction> majority_label(const LabelCounts& counts);

/// Gamma-GWR: GWR with K temporal context descriptors per node.
class GammaGwr {
public:
    GammaGwr(std::size_t dim, GammaParams params, std::uint64_t seed,
             std::optional<std::array<Vector, 2>> init_samples = std::nullopt);

    GammaGwr(std::size_t dim, GammaParams params, std::vector<GammaPrototype> nodes, AgedGraph graph,
             GlobalContext training_context, std::uint64_t steps);

    /// Resets the training context (sequence boundary).
    void begin_sequence();

    StepOutcome train_step(std::span<const double> x, std::optional<int> label = std::nullopt);

    /// Resets the context, then trains on every step in order.
    EpochStats train_sequence(const VectorSequence& seq);

    /// Shuffles sequence order (never the steps within a sequence).
    EpochStats train_epoch(std::span<const VectorSequence> data, std::uint64_t shuffle_seed);

    BmuPair find_bmus(std::span<const double> x, const GlobalContext& ctx) const;

    GlobalContext fresh_context() const { return GlobalContext::zero(params_.context_depth, dim_); }

    /// Read-only counterpart of train_step: advances `ctx` and returns the BMU.
    GammaInference infer_step(GlobalContext& ctx, std::span<const double> x) const;

    /// Runs the window from a fresh context and reads the final BMU's label
    /// counts. Falls back to the nearest labeled node when that BMU has none.
    LabelPrediction predict_label(std::span<const Vector> window) const;

    /// Mean |x - w_b| over each sequence with BMUs chosen by context dynamics.
    double quantization_error(std::span<const VectorSequence> data) const;

    std::size_t dim() const { return dim_; }
    std::size_t context_depth() const { return params_.context_depth; }
    std::size_t size() const { return nodes_.size(); }
    const GammaParams& params() const { return params_; }
    void set_params(const GammaParams& params);
    const std::vector<GammaPrototype>& nodes() const { return nodes_; }
    const GammaPrototype& node(std::size_t id) const { return nodes_.at(id); }
    const AgedGraph& graph() const { return graph_; }
    const GlobalContext& training_context() const { return context_; }
    std::uint64_t steps() const { return steps_; }

    bool frozen() const { return frozen_; }
    void freeze() { frozen_ = true; }
    void unfreeze() { frozen_ = false; }

    bool operator==(const GammaGwr&) const = default;

private:
    void check_invariants() const;
    GlobalContext::Snapshot snapshot(std::size_t id) const;

    std::size_t dim_;
    GammaParams params_;
    std::vector<GammaPrototype> nodes_;
    AgedGraph graph_;
    GlobalContext context_;
    std::uint64_t steps_ = 0;
    bool frozen_ = false;
};

}  // namespace gwrnet
