#include "gwrnet/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>

namespace gwrnet {

double FeedbackParams::resolved_joint_threshold(std::size_t joints) const {
    require(joints >= 1, "feedback: joint count must be >= 1");
    return joint_threshold ? *joint_threshold : threshold / std::sqrt(static_cast<double>(joints));
}

void FeedbackParams::validate() const {
    require(threshold > 0.0 && std::isfinite(threshold), "feedback: threshold must be > 0");
    require(persistence >= 1, "feedback: persistence must be >= 1");
    require(rollout_horizon >= 1, "feedback: rollout horizon must be >= 1");
    if (joint_threshold) require(*joint_threshold > 0.0, "feedback: joint threshold must be > 0");
}

std::vector<Vector> assessment_features(const Sequence& seq, std::size_t hip_joint, bool with_motion) {
    auto pose = pose_features(seq, hip_joint);
    if (!with_motion) return pose;
    const auto motion = motion_diff(pose);
    std::vector<Vector> out;
    out.reserve(motion.size());
    for (std::size_t t = 0; t < motion.size(); ++t) {
        Vector v = pose[t + 1];
        v.insert(v.end(), motion[t].begin(), motion[t].end());
        out.push_back(std::move(v));
    }
    return out;
}

namespace {

void require_predictor(const GammaGwr& net) {
    require(net.context_depth() == 1,
            "assessment needs a Gamma-GWR with exactly one context descriptor, got " +
                std::to_string(net.context_depth()));
    require(net.steps() > 0, "assessment needs a trained network");
}

std::size_t predictor_node(const GammaGwr& net, std::span<const double> omega_prev, std::uint64_t* evaluations) {
    require_dim(omega_prev.size(), net.dim(), "predict_next");
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < net.size(); ++j) {
        const double d = squared_distance(net.node(j).contexts[0], omega_prev);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    if (evaluations) *evaluations += net.size();
    return best;
}

}  // namespace

Vector predict_next(const GammaGwr& net, std::span<const double> omega_prev) {
    require_predictor(net);
    return net.node(predictor_node(net, omega_prev, nullptr)).weight;
}

Deviation decompose(const JointLayout& layout, std::span<const double> residual) {
    require_dim(residual.size(), layout.dim(), "feedback residual");
    Deviation d;
    d.per_joint.assign(layout.joints, 0.0);
    double sum = 0.0;
    for (std::size_t b = 0; b < layout.blocks; ++b) {
        for (std::size_t j = 0; j < layout.joints; ++j) {
            for (std::size_t k = 0; k < 3; ++k) {
                const double r = residual[(b * layout.joints + j) * 3 + k];
                d.per_joint[j] += r * r;
                sum += r * r;
            }
        }
    }
    for (double& v : d.per_joint) v = std::sqrt(v);
    d.total = std::sqrt(sum);
    return d;
}

namespace {

Deviation feedback_counted(const GammaGwr& net, const JointLayout& layout, std::span<const double> omega_t,
                           std::span<const double> omega_prev, std::uint64_t* evaluations) {
    require_dim(omega_t.size(), net.dim(), "feedback");
    require(layout.dim() == net.dim(), "feedback: joint layout does not match the network dimension");
    const Vector& p = net.node(predictor_node(net, omega_prev, evaluations)).weight;
    Vector residual(omega_t.begin(), omega_t.end());
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= p[i];
    return decompose(layout, residual);
}

}  // namespace

Deviation feedback(const GammaGwr& net, const JointLayout& layout, std::span<const double> omega_t,
                   std::span<const double> omega_prev) {
    require_predictor(net);
    return feedback_counted(net, layout, omega_t, omega_prev, nullptr);
}

std::vector<Vector> rollout(const GammaGwr& net, std::span<const double> seed, std::size_t steps) {
    require(steps >= 1, "rollout: steps must be >= 1");
    std::vector<Vector> out;
    out.reserve(steps);
    out.push_back(predict_next(net, seed));
    while (out.size() < steps) out.push_back(predict_next(net, out.back()));
    return out;
}

bool FeedbackReport::frame_flagged(std::size_t t) const {
    return std::any_of(spans.begin(), spans.end(), [t](const MistakeSpan& s) { return t >= s.start && t <= s.end; });
}

std::vector<MistakeSpan> find_spans(std::span<const double> total, const std::vector<std::vector<double>>& per_joint,
                                    const FeedbackParams& params, std::size_t joints) {
    params.validate();
    require(per_joint.size() == total.size(), "find_spans: per-joint rows do not match the timeline");
    const double joint_threshold = params.resolved_joint_threshold(joints);
    std::vector<MistakeSpan> spans;
    std::size_t i = 0;
    while (i < total.size()) {
        if (!(total[i] > params.threshold)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < total.size() && total[j + 1] > params.threshold) ++j;
        if (j - i + 1 >= params.persistence) {
            MistakeSpan span{i + 1, j + 1, {}};
            for (std::size_t joint = 0; joint < joints; ++joint) {
                double mean = 0.0;
                for (std::size_t t = i; t <= j; ++t) mean += per_joint[t].at(joint);
                mean /= static_cast<double>(j - i + 1);
                if (mean > joint_threshold) span.joints.push_back(joint);
            }
            spans.push_back(std::move(span));
        }
        i = j + 1;
    }
    return spans;
}

FeedbackReport detect_mistakes(const GammaGwr& net, const JointLayout& layout, std::span<const Vector> frames,
                               const FeedbackParams& params) {
    params.validate();
    require_predictor(net);
    require(frames.size() >= 2, "detect_mistakes: sequence needs at least 2 frames");
    FeedbackReport report;
    report.total.reserve(frames.size() - 1);
    report.per_joint.reserve(frames.size() - 1);
    for (std::size_t t = 1; t < frames.size(); ++t) {
        Deviation d = feedback_counted(net, layout, frames[t], frames[t - 1], &report.distance_evaluations);
        report.total.push_back(d.total);
        report.per_joint.push_back(std::move(d.per_joint));
    }
    report.spans = find_spans(report.total, report.per_joint, params, layout.joints);
    return report;
}

FeedbackEvaluation rates_from_counts(const ConfusionCounts& c) {
    FeedbackEvaluation e;
    e.counts = c;
    auto ratio = [](std::uint64_t num, std::uint64_t den, bool& undefined) {
        undefined = den == 0;
        return undefined ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    e.tpr = ratio(c.tp, c.tp + c.fn, e.tpr_undefined);
    e.tnr = ratio(c.tn, c.tn + c.fp, e.tnr_undefined);
    e.ppv = ratio(c.tp, c.tp + c.fp, e.ppv_undefined);
    return e;
}

namespace {

void tally(ConfusionCounts& c, bool predicted, bool actual) {
    if (actual) {
        (predicted ? c.tp : c.fn) += 1;
    } else {
        (predicted ? c.fp : c.tn) += 1;
    }
}

}  // namespace

FeedbackEvaluation evaluate_feedback(std::span<const FeedbackReport> reports, std::span<const bool> is_mistake) {
    require(reports.size() == is_mistake.size(), "evaluate_feedback: " + std::to_string(reports.size()) +
                                                     " reports but " + std::to_string(is_mistake.size()) + " labels");
    ConfusionCounts c;
    for (std::size_t i = 0; i < reports.size(); ++i) tally(c, reports[i].flagged(), is_mistake[i]);
    return rates_from_counts(c);
}

FeedbackEvaluation evaluate_feedback_frames(std::span<const FeedbackReport> reports,
                                            std::span<const std::vector<bool>> frame_is_mistake) {
    require(reports.size() == frame_is_mistake.size(), "evaluate_feedback_frames: report and label counts differ");
    ConfusionCounts c;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        require(frame_is_mistake[i].size() == reports[i].total.size(),
                "evaluate_feedback_frames: label length differs from the deviation timeline of report " +
                    std::to_string(i));
        for (std::size_t k = 0; k < reports[i].total.size(); ++k) {
            tally(c, reports[i].frame_flagged(k + 1), frame_is_mistake[i][k]);
        }
    }
    return rates_from_counts(c);
}

void write_feedback_report(std::ostream& out, const std::string& sequence_id, const FeedbackReport& report,
                           int precision) {
    const std::size_t joints = report.per_joint.empty() ? 0 : report.per_joint.front().size();
    out << "# feedback " << sequence_id << "\n";
    out << "# t total";
    for (std::size_t j = 0; j < joints; ++j) out << " j" << j;
    out << "\n";
    out << std::fixed << std::setprecision(precision);
    for (std::size_t i = 0; i < report.total.size(); ++i) {
        out << (i + 1) << ' ' << report.total[i];
        for (double v : report.per_joint[i]) out << ' ' << v;
        out << "\n";
    }
    out << "# summary\n";
    out << "spans " << report.spans.size() << "\n";
    for (const auto& s : report.spans) {
        out << "span " << s.start << ' ' << s.end << ' ';
        if (s.joints.empty()) out << '-';
        for (std::size_t k = 0; k < s.joints.size(); ++k) out << (k ? "," : "") << s.joints[k];
        out << "\n";
    }
}

void AssessorSpec::validate() const {
    require(params.context_depth == 1, "assessor: context_depth must be 1");
    params.resolved().validate();
    require(joints >= 1 && hip_joint < joints, "assessor: bad joint configuration");
}

FeedbackReport Assessor::assess(const Sequence& seq, const FeedbackParams& params) const {
    for (const auto& f : seq.frames) {
        require(f.joint_count() == spec.joints, "sequence '" + seq.id + "' has " + std::to_string(f.joint_count()) +
                                                    " joints but the model expects " + std::to_string(spec.joints));
    }
    const auto frames = assessment_features(seq, spec.hip_joint, spec.with_motion);
    return detect_mistakes(net, spec.layout(), frames, params);
}

Assessor train_assessor(std::span<const Sequence> routines, const AssessorSpec& spec) {
    spec.validate();
    require(!routines.empty(), "train_assessor: no routines");
    std::vector<VectorSequence> data;
    for (const auto& r : routines) {
        for (const auto& f : r.frames) {
            require(f.joint_count() == spec.joints, "train_assessor: sequence '" + r.id + "' joint count drift");
        }
        auto v = assessment_features(r, spec.hip_joint, spec.with_motion);
        require(v.size() >= 2, "train_assessor: sequence '" + r.id + "' is too short");
        data.push_back({std::move(v), std::nullopt});
    }
    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<std::size_t> pick_seq(0, data.size() - 1);
    const auto& a = data[pick_seq(rng)].steps;
    const auto& b = data[pick_seq(rng)].steps;
    std::uniform_int_distribution<std::size_t> pick_a(0, a.size() - 1), pick_b(0, b.size() - 1);
    std::array<Vector, 2> init{a[pick_a(rng)], b[pick_b(rng)]};

    Assessor out{spec, GammaGwr(spec.layout().dim(), spec.params, spec.seed, init), {}};
    for (std::size_t e = 0; e < spec.epochs; ++e) out.history.push_back(out.net.train_epoch(data, spec.seed + e));
    out.net.freeze();
    return out;
}

}  // namespace gwrnet
