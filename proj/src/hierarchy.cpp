#include "gwrnet/hierarchy.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <random>

namespace gwrnet {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string slot_name(const char* stream, std::size_t index) {
    return std::string(stream) + " layer " + std::to_string(index + 1);
}

LayerSpec gwr_layer(std::size_t window = 1) {
    LayerSpec l;
    l.kind = NetworkKind::Gwr;
    l.params.context_depth = 0;
    l.window = window;
    return l;
}

LayerSpec gamma_layer(std::size_t context_depth, std::size_t pool_group = 0) {
    LayerSpec l;
    l.kind = NetworkKind::GammaGwr;
    l.params.context_depth = context_depth;
    l.pool_group = pool_group;
    return l;
}

// Per-layer dimension walk shared by the build-time audit.
std::size_t audit_stream(const char* stream, const std::vector<LayerSpec>& layers, std::size_t input_dim,
                         std::vector<std::size_t>& input_dims, std::size_t& lost_steps) {
    require(!layers.empty(), std::string("pipeline spec: the ") + stream + " stream needs at least one layer");
    std::size_t dim = input_dim;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        const std::string name = slot_name(stream, i);
        require(l.window >= 1, "pipeline spec: " + name + " window must be >= 1");
        const std::size_t in = dim * l.window;
        if (l.expected_input_dim != 0 && l.expected_input_dim != in) {
            throw Error("pipeline spec: " + name + " expects input dim " + std::to_string(l.expected_input_dim) +
                        " but receives " + std::to_string(in));
        }
        try {
            l.params.resolved().validate();
        } catch (const Error& e) {
            throw Error("pipeline spec: " + name + ": " + e.what());
        }
        input_dims.push_back(in);
        lost_steps += l.window - 1;
        if (l.pool_group > 0) {
            if (in % l.pool_group != 0) {
                throw Error("pipeline spec: " + name + " pool group " + std::to_string(l.pool_group) +
                            " does not divide its dim " + std::to_string(in));
            }
            dim = in / l.pool_group;
        } else {
            dim = in;
        }
    }
    return dim;
}

Layer::Network make_network(const LayerSpec& spec, std::size_t dim, std::uint64_t seed,
                            std::span<const VectorSequence> data) {
    std::vector<const Vector*> pool;
    for (const auto& s : data) {
        for (const auto& v : s.steps) pool.push_back(&v);
    }
    require(!pool.empty(), "pipeline: no training inputs for a layer");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    if (pool.size() > 1) {
        while (b == a) b = pick(rng);
    }
    std::array<Vector, 2> init{*pool[a], *pool[b]};
    if (spec.kind == NetworkKind::Gwr) return GwrNetwork(dim, spec.params.gwr, seed, init);
    return GammaGwr(dim, spec.params, seed, init);
}

}  // namespace

const char* to_string(NetworkKind kind) { return kind == NetworkKind::Gwr ? "gwr" : "gamma-gwr"; }

NetworkKind network_kind_from_string(const std::string& name) {
    if (name == "gwr") return NetworkKind::Gwr;
    if (name == "gamma-gwr") return NetworkKind::GammaGwr;
    throw Error("unknown network kind '" + name + "' (expected gwr or gamma-gwr)");
}

PipelineSpec PipelineSpec::concat_preset(std::size_t joints) {
    PipelineSpec s;
    s.preset = "concat";
    s.joints = joints;
    s.pose_layers = {gwr_layer(), gwr_layer(3)};
    s.motion_layers = {gwr_layer(), gwr_layer(3)};
    s.integration = gwr_layer();
    return s;
}

PipelineSpec PipelineSpec::recurrent_preset(std::size_t joints) {
    PipelineSpec s;
    s.preset = "recurrent";
    s.joints = joints;
    s.pose_layers = {gwr_layer()};
    s.motion_layers = {gwr_layer()};
    s.integration = gamma_layer(2);
    return s;
}

PipelineSpec PipelineSpec::deep_preset(std::size_t joints) {
    PipelineSpec s;
    s.preset = "deep";
    s.joints = joints;
    s.pose_layers = {gamma_layer(1, 3)};
    s.motion_layers = {gamma_layer(1, 3)};
    s.integration = gamma_layer(2);
    return s;
}

PipelineShape audit(const PipelineSpec& spec) {
    require(spec.joints >= 1, "pipeline spec: joints must be >= 1");
    require(spec.hip_joint < spec.joints, "pipeline spec: hip_joint out of range");
    require(spec.decision_window >= 1 && spec.decision_stride >= 1,
            "pipeline spec: decision window and stride must be >= 1");
    require(spec.epochs >= 1, "pipeline spec: epochs must be >= 1");

    PipelineShape shape;
    std::size_t lost_pose = 0;
    std::size_t lost_motion = 1;  // differencing
    shape.pose_output_dim = audit_stream("pose", spec.pose_layers, spec.joints * 3, shape.pose_input_dims, lost_pose);
    shape.motion_output_dim =
        audit_stream("motion", spec.motion_layers, spec.joints * 3, shape.motion_input_dims, lost_motion);

    const LayerSpec& integ = spec.integration;
    require(integ.window >= 1, "pipeline spec: integration layer window must be >= 1");
    require(integ.pool_group == 0, "pipeline spec: integration layer cannot pool");
    shape.integration_input_dim = (shape.pose_output_dim + shape.motion_output_dim) * integ.window;
    if (integ.expected_input_dim != 0 && integ.expected_input_dim != shape.integration_input_dim) {
        throw Error("pipeline spec: integration layer expects input dim " + std::to_string(integ.expected_input_dim) +
                    " but receives " + std::to_string(shape.integration_input_dim));
    }
    try {
        integ.params.resolved().validate();
    } catch (const Error& e) {
        throw Error(std::string("pipeline spec: integration layer: ") + e.what());
    }
    shape.min_frames = std::max(lost_pose, lost_motion) + integ.window;
    if (spec.decision_window < shape.min_frames) {
        throw Error("pipeline spec: decision window " + std::to_string(spec.decision_window) +
                    " is shorter than the " + std::to_string(shape.min_frames) +
                    " frames the layers consume");
    }
    return shape;
}

// ---------------------------------------------------------------------------

Layer::Layer(std::string name, LayerSpec spec, Network net)
    : name_(std::move(name)), spec_(std::move(spec)), net_(std::move(net)) {}

std::size_t Layer::input_dim() const {
    return std::visit([](const auto& n) { return n.dim(); }, net_);
}

std::size_t Layer::size() const {
    return std::visit([](const auto& n) { return n.size(); }, net_);
}

bool Layer::frozen() const {
    return std::visit([](const auto& n) { return n.frozen(); }, net_);
}

void Layer::freeze() {
    std::visit([](auto& n) { n.freeze(); }, net_);
}

void Layer::unfreeze() {
    std::visit([](auto& n) { n.unfreeze(); }, net_);
}

void Layer::cap_growth() {
    if (auto* gwr = std::get_if<GwrNetwork>(&net_)) {
        GwrParams p = gwr->params();
        p.max_nodes = std::max<std::size_t>(gwr->size(), 2);
        gwr->set_params(p);
    } else {
        auto& gamma = std::get<GammaGwr>(net_);
        GammaParams p = gamma.params();
        p.gwr.max_nodes = std::max<std::size_t>(gamma.size(), 2);
        gamma.set_params(p);
    }
}

std::vector<Vector> Layer::forward(std::span<const Vector> inputs) const {
    const auto windowed = concat_trajectory(inputs, spec_.window);
    for (const auto& v : windowed) {
        if (v.size() != input_dim()) {
            throw Error(name_ + ": receives input dim " + std::to_string(v.size()) + " but expects " +
                        std::to_string(input_dim()));
        }
    }
    std::vector<Vector> out =
        std::visit([&](const auto& n) { return bmu_substitute(n, windowed); }, net_);
    if (spec_.pool_group > 0) {
        for (auto& v : out) v = pool_groups(v, spec_.pool_group);
    }
    return out;
}

std::vector<double> Layer::activities(std::span<const Vector> windowed) const {
    std::vector<double> out;
    out.reserve(windowed.size());
    if (const auto* gwr = std::get_if<GwrNetwork>(&net_)) {
        for (const auto& x : windowed) out.push_back(activity(gwr->find_bmus(x).best_distance));
    } else {
        const auto& gamma = std::get<GammaGwr>(net_);
        GlobalContext ctx = gamma.fresh_context();
        for (const auto& x : windowed) out.push_back(gamma.infer_step(ctx, x).activity);
    }
    return out;
}

LabelPrediction Layer::predict_label(std::span<const Vector> windowed) const {
    require(!windowed.empty(), name_ + ": no inputs to classify");
    if (const auto* gamma = std::get_if<GammaGwr>(&net_)) return gamma->predict_label(windowed);

    const auto& gwr = std::get<GwrNetwork>(net_);
    const Vector& x = windowed.back();
    const std::size_t b = gwr.find_bmus(x).best;
    if (auto p = majority_label(gwr.node(b).label_counts)) return *p;
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < gwr.size(); ++j) {
        if (gwr.node(j).label_counts.empty()) continue;
        const double d = distance(x, gwr.node(j).weight);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    require(best.has_value(), name_ + ": network carries no labels");
    return *majority_label(gwr.node(*best).label_counts);
}

EpochStats Layer::train_epoch(std::span<const VectorSequence> windowed, std::uint64_t shuffle_seed) {
    if (auto* gamma = std::get_if<GammaGwr>(&net_)) return gamma->train_epoch(windowed, shuffle_seed);
    std::vector<Sample> samples;
    for (const auto& s : windowed) {
        for (const auto& v : s.steps) samples.push_back({v, s.label});
    }
    return std::get<GwrNetwork>(net_).train_epoch(samples, shuffle_seed);
}

// ---------------------------------------------------------------------------

int majority_vote(std::span<const WindowDecision> decisions) {
    require(!decisions.empty(), "majority_vote: no decisions");
    std::map<int, std::size_t> votes;
    for (const auto& d : decisions) ++votes[d.label];
    int best = votes.begin()->first;
    std::size_t best_count = 0;
    for (const auto& [label, count] : votes) {
        if (count > best_count) {
            best = label;
            best_count = count;
        }
    }
    return best;
}

Pipeline Pipeline::build(PipelineSpec spec) {
    Pipeline p;
    p.shape_ = audit(spec);
    p.spec_ = std::move(spec);
    return p;
}

Pipeline::Pipeline(PipelineSpec spec, std::vector<Layer> pose, std::vector<Layer> motion,
                   std::optional<Layer> integration)
    : spec_(std::move(spec)), pose_(std::move(pose)), motion_(std::move(motion)), integration_(std::move(integration)) {
    shape_ = audit(spec_);
    require(pose_.size() <= spec_.pose_layers.size() && motion_.size() <= spec_.motion_layers.size(),
            "pipeline: more trained layers than the spec declares");
    for (std::size_t i = 0; i < pose_.size(); ++i) {
        require(pose_[i].input_dim() == shape_.pose_input_dims[i], pose_[i].name() + ": dimension drift");
    }
    for (std::size_t i = 0; i < motion_.size(); ++i) {
        require(motion_[i].input_dim() == shape_.motion_input_dims[i], motion_[i].name() + ": dimension drift");
    }
    if (integration_) {
        require(pose_.size() == spec_.pose_layers.size() && motion_.size() == spec_.motion_layers.size(),
                "pipeline: integration layer present but stream layers missing");
        require(integration_->input_dim() == shape_.integration_input_dim, "integration layer: dimension drift");
    }
}

std::vector<Vector> Pipeline::stream_forward(const std::vector<Layer>& layers, std::vector<Vector> inputs,
                                             std::size_t upto) const {
    for (std::size_t i = 0; i < upto; ++i) inputs = layers[i].forward(inputs);
    return inputs;
}

std::vector<Vector> Pipeline::fuse(const std::vector<Vector>& pose, const std::vector<Vector>& motion) const {
    // Align the newest steps; the longer stream loses its oldest entries.
    const std::size_t n = std::min(pose.size(), motion.size());
    const std::size_t pose_skip = pose.size() - n;
    const std::size_t motion_skip = motion.size() - n;
    std::vector<Vector> out;
    out.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        Vector v = pose[pose_skip + t];
        v.insert(v.end(), motion[motion_skip + t].begin(), motion[motion_skip + t].end());
        out.push_back(std::move(v));
    }
    return out;
}

void Pipeline::train_slot(std::vector<Layer>& layers, std::size_t index, const std::vector<LayerSpec>& specs,
                          const std::vector<std::vector<Vector>>& stream_inputs, const std::string& name,
                          std::uint64_t slot_seed, TrainingReport& report) {
    const LayerSpec& spec = specs[index];
    std::vector<VectorSequence> windowed;
    windowed.reserve(stream_inputs.size());
    for (const auto& seq : stream_inputs) {
        windowed.push_back({concat_trajectory(stream_forward(layers, seq, index), spec.window), std::nullopt});
    }
    if (layers.size() <= index) {
        const std::size_t dim = windowed.front().steps.front().size();
        layers.emplace_back(name, spec, make_network(spec, dim, slot_seed, windowed));
    }
    Layer& layer = layers[index];
    layer.unfreeze();
    LayerReport lr{name, {}};
    for (std::size_t e = 0; e < spec_.epochs; ++e) lr.epochs.push_back(layer.train_epoch(windowed, slot_seed + e));
    layer.freeze();
    report.layers.push_back(std::move(lr));
}

TrainingReport Pipeline::train_layerwise(std::span<const Sequence> data) {
    require(!data.empty(), "train_layerwise: empty dataset");
    for (const auto& seq : data) {
        require(seq.label.has_value(), "train_layerwise: unlabeled sequence '" + seq.id + "' at integration stage");
        require(seq.frames.size() >= shape_.min_frames,
                "train_layerwise: sequence '" + seq.id + "' is shorter than " + std::to_string(shape_.min_frames) +
                    " frames");
        for (const auto& f : seq.frames) {
            require(f.joint_count() == spec_.joints, "train_layerwise: sequence '" + seq.id + "' joint count drift");
        }
    }

    std::vector<std::vector<Vector>> pose_in, motion_in;
    for (const auto& seq : data) {
        pose_in.push_back(pose_features(seq, spec_.hip_joint));
        motion_in.push_back(motion_diff(pose_in.back()));
    }

    TrainingReport report;
    const std::size_t depth = std::max(spec_.pose_layers.size(), spec_.motion_layers.size());
    for (std::size_t i = 0; i < depth; ++i) {
        if (i < spec_.pose_layers.size()) {
            train_slot(pose_, i, spec_.pose_layers, pose_in, slot_name("pose", i), splitmix64(spec_.seed + 2 * i),
                       report);
        }
        if (i < spec_.motion_layers.size()) {
            train_slot(motion_, i, spec_.motion_layers, motion_in, slot_name("motion", i),
                       splitmix64(spec_.seed + 2 * i + 1), report);
        }
    }

    std::vector<VectorSequence> fused;
    for (std::size_t s = 0; s < data.size(); ++s) {
        auto f = fuse(stream_forward(pose_, pose_in[s], pose_.size()), stream_forward(motion_, motion_in[s], motion_.size()));
        fused.push_back({concat_trajectory(f, spec_.integration.window), data[s].label});
    }
    const std::uint64_t seed = splitmix64(spec_.seed + 1000);
    if (!integration_) {
        integration_.emplace("integration layer", spec_.integration,
                             make_network(spec_.integration, shape_.integration_input_dim, seed, fused));
    }
    integration_->unfreeze();
    LayerReport lr{"integration layer", {}};
    for (std::size_t e = 0; e < spec_.epochs; ++e) lr.epochs.push_back(integration_->train_epoch(fused, seed + e));
    integration_->freeze();
    report.layers.push_back(std::move(lr));
    return report;
}

std::vector<Vector> Pipeline::integration_inputs(const Sequence& seq) const {
    require(trained(), "pipeline is not trained");
    require(seq.frames.size() >= shape_.min_frames,
            "sequence '" + seq.id + "' is shorter than " + std::to_string(shape_.min_frames) + " frames");
    for (const auto& f : seq.frames) {
        if (f.joint_count() != spec_.joints) {
            throw Error("sequence '" + seq.id + "' has " + std::to_string(f.joint_count()) +
                        " joints but the pipeline expects " + std::to_string(spec_.joints));
        }
    }
    const auto pose = pose_features(seq, spec_.hip_joint);
    const auto motion = motion_diff(pose);
    auto fused = fuse(stream_forward(pose_, pose, pose_.size()), stream_forward(motion_, motion, motion_.size()));
    auto windowed = concat_trajectory(fused, spec_.integration.window);
    for (const auto& v : windowed) {
        if (v.size() != integration_->input_dim()) {
            throw Error("integration layer: receives input dim " + std::to_string(v.size()) + " but expects " +
                        std::to_string(integration_->input_dim()));
        }
    }
    return windowed;
}

std::vector<WindowDecision> Pipeline::classify_sequence(const Sequence& seq) const {
    require(trained(), "pipeline is not trained");
    const std::size_t w = spec_.decision_window;
    require(seq.frames.size() >= w, "sequence '" + seq.id + "' is shorter than the decision window of " +
                                        std::to_string(w) + " frames");
    std::vector<WindowDecision> out;
    for (std::size_t start = 0; start + w <= seq.frames.size(); start += spec_.decision_stride) {
        Sequence window;
        window.id = seq.id;
        window.frames.assign(seq.frames.begin() + static_cast<std::ptrdiff_t>(start),
                             seq.frames.begin() + static_cast<std::ptrdiff_t>(start + w));
        const LabelPrediction p = integration_->predict_label(integration_inputs(window));
        out.push_back({start, p.label, p.confidence});
    }
    return out;
}

int Pipeline::classify(const Sequence& seq) const { return majority_vote(classify_sequence(seq)); }

double Pipeline::mean_integration_activity(const Sequence& seq) const {
    const auto acts = integration_->activities(integration_inputs(seq));
    double total = 0.0;
    for (double a : acts) total += a;
    return total / static_cast<double>(acts.size());
}

void Pipeline::cap_growth() {
    for (auto& l : pose_) l.cap_growth();
    for (auto& l : motion_) l.cap_growth();
    if (integration_) integration_->cap_growth();
}

}  // namespace gwrnet
