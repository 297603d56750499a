#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gwrnet/features.hpp"
#include "gwrnet/gamma_gwr.hpp"
#include "gwrnet/gwr.hpp"

namespace gwrnet {

enum class NetworkKind { Gwr, GammaGwr };

const char* to_string(NetworkKind kind);
NetworkKind network_kind_from_string(const std::string& name);

/// One network slot. `window` is the trajectory length q concatenated in
/// front of the network; `pool_group` > 0 MAX-pools the BMU weight over
/// consecutive groups of that many components before handing it on.
struct LayerSpec {
    NetworkKind kind = NetworkKind::Gwr;
    GammaParams params;  // only params.gwr is used by GWR layers
    std::size_t window = 1;
    std::size_t pool_group = 0;
    std::size_t expected_input_dim = 0;  // 0: derived; otherwise checked at build

    bool operator==(const LayerSpec&) const = default;
};

/// Architecture description: pose and motion streams, then an integration
/// network carrying the label associations.
struct PipelineSpec {
    std::string preset = "concat";
    std::size_t joints = 13;
    std::size_t hip_joint = 0;
    std::vector<LayerSpec> pose_layers;
    std::vector<LayerSpec> motion_layers;
    LayerSpec integration;
    std::size_t decision_window = 10;  // frames per decision
    std::size_t decision_stride = 10;
    std::size_t epochs = 30;
    std::uint64_t seed = 1;

    /// Two GWR layers per stream with trajectory concatenation (q = 3) in
    /// front of layer 2, and a GWR integration network.
    static PipelineSpec concat_preset(std::size_t joints = 13);
    /// One GWR layer per stream feeding a Gamma-GWR integration network.
    static PipelineSpec recurrent_preset(std::size_t joints = 13);
    /// Gamma-GWR layers with per-joint MAX pooling after each stream layer.
    static PipelineSpec deep_preset(std::size_t joints = 13);

    bool operator==(const PipelineSpec&) const = default;
};

/// Derived dimensions of every slot, produced by the build-time audit.
struct PipelineShape {
    std::vector<std::size_t> pose_input_dims;
    std::vector<std::size_t> motion_input_dims;
    std::size_t pose_output_dim = 0;
    std::size_t motion_output_dim = 0;
    std::size_t integration_input_dim = 0;
    std::size_t min_frames = 0;  // shortest sequence that yields an integration input

    bool operator==(const PipelineShape&) const = default;
};

/// Validates the dimension arithmetic; throws naming the offending layer.
PipelineShape audit(const PipelineSpec& spec);

/// A trained network together with its slot description.
class Layer {
public:
    using Network = std::variant<GwrNetwork, GammaGwr>;

    Layer(std::string name, LayerSpec spec, Network net);

    const std::string& name() const { return name_; }
    const LayerSpec& spec() const { return spec_; }
    const Network& network() const { return net_; }
    Network& network() { return net_; }
    std::size_t input_dim() const;
    std::size_t size() const;
    bool frozen() const;
    void freeze();
    void unfreeze();
    void cap_growth();

    /// Window, substitute BMUs, pool.
    std::vector<Vector> forward(std::span<const Vector> inputs) const;

    std::vector<double> activities(std::span<const Vector> windowed) const;

    /// Label of the last input's BMU (context dynamics for Gamma layers).
    LabelPrediction predict_label(std::span<const Vector> windowed) const;

    EpochStats train_epoch(std::span<const VectorSequence> windowed, std::uint64_t shuffle_seed);

    bool operator==(const Layer&) const = default;

private:
    std::string name_;
    LayerSpec spec_;
    Network net_;
};

struct LayerReport {
    std::string layer;
    std::vector<EpochStats> epochs;
};

struct TrainingReport {
    std::vector<LayerReport> layers;
};

struct WindowDecision {
    std::size_t start = 0;
    int label = 0;
    double confidence = 0.0;
};

/// Majority vote, ties to the lowest label id.
int majority_vote(std::span<const WindowDecision> decisions);

class Pipeline {
public:
    /// Untrained pipeline; validates the spec.
    static Pipeline build(PipelineSpec spec);

    /// Restores a pipeline from already-built layers (deserialization).
    Pipeline(PipelineSpec spec, std::vector<Layer> pose, std::vector<Layer> motion, std::optional<Layer> integration);

    /// Trains each stream layer on its inputs, freezes it, then trains the
    /// next; the integration network is trained last with sequence labels.
    /// Existing networks keep training (continual learning).
    TrainingReport train_layerwise(std::span<const Sequence> data);

    /// One decision per window of decision_window frames.
    std::vector<WindowDecision> classify_sequence(const Sequence& seq) const;
    int classify(const Sequence& seq) const;

    /// Integration-network inputs for a whole sequence.
    std::vector<Vector> integration_inputs(const Sequence& seq) const;
    double mean_integration_activity(const Sequence& seq) const;

    /// Sets max_nodes of every network to its current size.
    void cap_growth();

    bool trained() const { return integration_.has_value(); }
    const PipelineSpec& spec() const { return spec_; }
    const PipelineShape& shape() const { return shape_; }
    const std::vector<Layer>& pose_layers() const { return pose_; }
    const std::vector<Layer>& motion_layers() const { return motion_; }
    const std::optional<Layer>& integration() const { return integration_; }

    bool operator==(const Pipeline&) const = default;

private:
    Pipeline() = default;

    std::vector<Vector> stream_forward(const std::vector<Layer>& layers, std::vector<Vector> inputs,
                                       std::size_t upto) const;
    std::vector<Vector> fuse(const std::vector<Vector>& pose, const std::vector<Vector>& motion) const;
    void train_slot(std::vector<Layer>& layers, std::size_t index, const std::vector<LayerSpec>& specs,
                    const std::vector<std::vector<Vector>>& stream_inputs, const std::string& name,
                    std::uint64_t slot_seed, TrainingReport& report);

    PipelineSpec spec_;
    PipelineShape shape_;
    std::vector<Layer> pose_;
    std::vector<Layer> motion_;
    std::optional<Layer> integration_;
};

}  // namespace gwrnet
