#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gwrnet/features.hpp"
#include "gwrnet/gamma_gwr.hpp"

namespace gwrnet {

struct FeedbackParams {
    double threshold = 0.7;             // f_T
    std::size_t persistence = 100;      // frames the exceedance must last
    std::size_t rollout_horizon = 30;
    std::optional<double> joint_threshold;  // empty: threshold / sqrt(J)

    double resolved_joint_threshold(std::size_t joints) const;
    void validate() const;
};

/// How a feature vector splits into joints: `blocks` consecutive J x 3
/// blocks (pose, then optionally motion). Joint j owns its coordinates in
/// every block.
struct JointLayout {
    std::size_t joints = 13;
    std::size_t blocks = 1;

    std::size_t dim() const { return joints * 3 * blocks; }
    bool operator==(const JointLayout&) const = default;
};

/// Hip-centred pose vectors; with `with_motion` each is followed by the
/// difference to the previous frame and the first frame is dropped.
std::vector<Vector> assessment_features(const Sequence& seq, std::size_t hip_joint, bool with_motion);

/// Weight of the node whose context descriptor is nearest to omega_prev
/// (ties to the lowest id). Needs a trained network with one context.
Vector predict_next(const GammaGwr& net, std::span<const double> omega_prev);

struct Deviation {
    double total = 0.0;
    std::vector<double> per_joint;
};

/// Residual omega_t - predict_next(omega_prev) split by joint.
Deviation feedback(const GammaGwr& net, const JointLayout& layout, std::span<const double> omega_t,
                   std::span<const double> omega_prev);

/// Per-joint norms of an arbitrary residual.
Deviation decompose(const JointLayout& layout, std::span<const double> residual);

/// Repeated prediction starting from `seed`; returns `steps` frames.
std::vector<Vector> rollout(const GammaGwr& net, std::span<const double> seed, std::size_t steps);

/// Inclusive frame range [start, end] of a persistent exceedance.
struct MistakeSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::vector<std::size_t> joints;

    std::size_t length() const { return end - start + 1; }
    bool operator==(const MistakeSpan&) const = default;
};

/// Entry i of `total` and `per_joint` belongs to frame t = i + 1.
struct FeedbackReport {
    std::vector<double> total;
    std::vector<std::vector<double>> per_joint;
    std::vector<MistakeSpan> spans;
    std::uint64_t distance_evaluations = 0;

    bool flagged() const { return !spans.empty(); }
    /// Whether frame t (1-based on the deviation timeline) lies inside a span.
    bool frame_flagged(std::size_t t) const;
};

/// Maximal runs where the deviation exceeds the threshold for at least
/// `persistence` frames.
std::vector<MistakeSpan> find_spans(std::span<const double> total, const std::vector<std::vector<double>>& per_joint,
                                    const FeedbackParams& params, std::size_t joints);

FeedbackReport detect_mistakes(const GammaGwr& net, const JointLayout& layout, std::span<const Vector> frames,
                               const FeedbackParams& params);

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
};

/// Rates with a zero denominator are reported as 1.0 and flagged.
struct FeedbackEvaluation {
    ConfusionCounts counts;
    double tpr = 0.0;
    double tnr = 0.0;
    double ppv = 0.0;
    bool tpr_undefined = false;
    bool tnr_undefined = false;
    bool ppv_undefined = false;
};

FeedbackEvaluation rates_from_counts(const ConfusionCounts& counts);

/// One decision per sequence: flagged iff the report has a span.
FeedbackEvaluation evaluate_feedback(std::span<const FeedbackReport> reports, std::span<const bool> is_mistake);

/// One decision per frame of the deviation timeline.
FeedbackEvaluation evaluate_feedback_frames(std::span<const FeedbackReport> reports,
                                            std::span<const std::vector<bool>> frame_is_mistake);

/// Line-oriented report: a header, one line per frame (t, total, per joint),
/// then a summary block listing the spans.
void write_feedback_report(std::ostream& out, const std::string& sequence_id, const FeedbackReport& report,
                           int precision = 6);

/// A Gamma-GWR (one context) trained on correct routines in assessment feature space.
struct AssessorSpec {
    GammaParams params;
    std::size_t joints = 13;
    std::size_t hip_joint = 0;
    bool with_motion = false;
    std::size_t epochs = 30;  // 0 keeps the two initial nodes
    std::uint64_t seed = 1;

    JointLayout layout() const { return {joints, with_motion ? std::size_t{2} : std::size_t{1}}; }
    void validate() const;
    bool operator==(const AssessorSpec&) const = default;
};

struct Assessor {
    AssessorSpec spec;
    GammaGwr net;
    std::vector<EpochStats> history;

    FeedbackReport assess(const Sequence& seq, const FeedbackParams& params) const;
    bool operator==(const Assessor&) const = default;
};

Assessor train_assessor(std::span<const Sequence> routines, const AssessorSpec& spec);

}  // namespace gwrnet
