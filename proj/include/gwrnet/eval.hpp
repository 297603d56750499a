#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gwrnet/features.hpp"
#include "gwrnet/gng.hpp"
#include "gwrnet/gwr.hpp"
#include "gwrnet/hierarchy.hpp"

namespace gwrnet {

// ---- synthetic skeleton data ----------------------------------------------

/// Sinusoidal joint motion parameters of one class. Joint j moves with phase
/// `phase + j * joint_phase_step`.
struct MotionSignature {
    double frequency = 1.0;  // Hz; the sign sets the rotation direction
    double amplitude = 0.2;
    double phase = 0.0;
    double joint_phase_step = 0.4;

    bool operator==(const MotionSignature&) const = default;
};

struct SyntheticSpec {
    std::size_t classes = 3;
    std::size_t joints = 13;
    std::size_t frames = 60;
    std::size_t subjects = 5;
    std::size_t sequences_per_cell = 2;  // per (subject, class)
    std::vector<MotionSignature> signatures;  // empty: default_signatures(classes)
    double noise_sigma = 0.0;
    double frame_rate = 30.0;
    double subject_scale_spread = 0.1;  // body size varies by +-spread across subjects
    bool random_start_phase = true;
    std::uint64_t seed = 1;

    static std::vector<MotionSignature> default_signatures(std::size_t classes);
    void validate() const;
};

/// Labeled skeleton sequences. Deterministic in spec.seed. Label = class index.
std::vector<Sequence> gen_synthetic(const SyntheticSpec& spec);

/// Same skeleton with its frames in reverse order.
Sequence reversed(const Sequence& seq);

/// Adds `offset` to the z coordinate of one joint over frames
/// [start, start + length). Used to build incorrect executions.
Sequence with_joint_offset(Sequence seq, std::size_t joint, std::size_t start, std::size_t length, double offset);

// ---- numeric datasets ------------------------------------------------------

struct LabeledVectors {
    std::vector<Vector> x;
    std::vector<int> labels;
};

/// The 150 x 4 Iris table, labels 0..2.
LabeledVectors iris_raw();
/// Iris with each feature standardized to zero mean and unit variance.
LabeledVectors iris_standardized();
/// Per-column z-scores (population variance). Constant columns are left centered.
std::vector<Vector> standardize(std::span<const Vector> data);

// ---- metrics ---------------------------------------------------------------

struct ClassMetrics {
    int label = 0;
    std::size_t support = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Confusion rows are truth, columns prediction, both indexed like `labels`.
struct ClassificationReport {
    std::vector<int> labels;
    std::vector<std::vector<std::size_t>> confusion;
    std::vector<ClassMetrics> per_class;
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

/// Macro-averaged over the union of labels seen in either list. A class with
/// no predictions has precision 0.
ClassificationReport classification_metrics(std::span<const int> predicted, std::span<const int> truth);

/// Rebuilds the report from a confusion matrix alone.
ClassificationReport metrics_from_confusion(std::vector<int> labels,
                                            std::vector<std::vector<std::size_t>> confusion);

// ---- cross-validation ------------------------------------------------------

enum class CvProtocol { LeaveOneSubjectOut, KFold };

struct CvOptions {
    CvProtocol protocol = CvProtocol::LeaveOneSubjectOut;
    std::size_t k = 3;
    std::uint64_t seed = 1;
};

/// Held-out indices per fold. Membership depends only on sequence ids (and
/// subjects), never on the order of `data`.
std::vector<std::vector<std::size_t>> make_folds(std::span<const Sequence> data, const CvOptions& options);

struct FoldResult {
    std::string name;
    std::vector<std::string> held_out;
    std::vector<int> predicted;
    std::vector<int> truth;
    ClassificationReport report;
};

struct CvReport {
    std::vector<FoldResult> folds;
    ClassificationReport pooled;  // over every held-out prediction
    double mean_fold_accuracy = 0.0;
};

CvReport cross_validate(std::span<const Sequence> data, const CvOptions& options, const PipelineSpec& spec);

// ---- GNG vs GWR curves -----------------------------------------------------

struct GrowthCurves {
    double initial_qe = 0.0;  // with the two initial nodes
    std::vector<EpochStats> epochs;
};

struct GngGwrComparison {
    GrowthCurves gwr;
    GrowthCurves gng;
};

GngGwrComparison compare_gng_gwr(std::span<const Vector> data, std::size_t epochs, std::uint64_t seed,
                                 const GwrParams& gwr_params = {}, const GngParams& gng_params = {});

/// Index of the first epoch whose node count equals the final count.
std::size_t growth_plateau_epoch(std::span<const EpochStats> epochs);

// ---- continual learning ----------------------------------------------------

/// accuracy[c][p]: accuracy on class order[c] after phase p; empty when the
/// class was not yet seen.
struct ForgettingMatrix {
    std::vector<int> classes;
    std::vector<std::vector<std::optional<double>>> accuracy;
};

struct ContinualReport {
    ForgettingMatrix growing;
    ForgettingMatrix fixed_capacity;
    std::vector<std::size_t> growing_nodes;  // total node count after each phase
    std::vector<std::size_t> fixed_nodes;
};

/// One phase per entry of `class_order`, no replay. The fixed-capacity
/// baseline caps every network at its size after phase 1.
ContinualReport continual_protocol(std::span<const Sequence> train, std::span<const Sequence> test,
                                   std::span<const int> class_order, const PipelineSpec& spec);

}  // namespace gwrnet
