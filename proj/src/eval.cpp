#include "gwrnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

namespace gwrnet {

namespace {

std::string padded(std::size_t value, std::size_t width) {
    std::string s = std::to_string(value);
    if (s.size() < width) s.insert(0, width - s.size(), '0');
    return s;
}

std::size_t digits(std::size_t n) { return std::to_string(n == 0 ? 0 : n - 1).size(); }

}  // namespace

std::vector<MotionSignature> SyntheticSpec::default_signatures(std::size_t classes) {
    std::vector<MotionSignature> out;
    for (std::size_t c = 0; c < classes; ++c) {
        MotionSignature s;
        s.frequency = 1.0 + static_cast<double>(c);
        s.amplitude = 0.15 + 0.05 * static_cast<double>(c % 4);
        s.phase = 0.5 * static_cast<double>(c);
        s.joint_phase_step = 0.4 + 0.6 * static_cast<double>(c);
        out.push_back(s);
    }
    return out;
}

void SyntheticSpec::validate() const {
    require(classes >= 1, "synthetic spec: classes must be >= 1");
    require(joints >= 2, "synthetic spec: joints must be >= 2");
    require(frames >= 2, "synthetic spec: frames must be >= 2");
    require(subjects >= 1 && sequences_per_cell >= 1, "synthetic spec: subjects and sequences_per_cell must be >= 1");
    require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), "synthetic spec: noise_sigma must be >= 0");
    require(frame_rate > 0.0, "synthetic spec: frame_rate must be > 0");
    require(subject_scale_spread >= 0.0 && subject_scale_spread < 1.0,
            "synthetic spec: subject_scale_spread must be in [0, 1)");
    if (!signatures.empty()) {
        require(signatures.size() == classes, "synthetic spec: one signature per class required");
        for (std::size_t a = 0; a < classes; ++a) {
            require(signatures[a].frequency != 0.0 && signatures[a].amplitude > 0.0,
                    "synthetic spec: frequency must be nonzero and amplitude > 0");
            for (std::size_t b = a + 1; b < classes; ++b) {
                require(!(signatures[a] == signatures[b]), "synthetic spec: classes " + std::to_string(a) + " and " +
                                                               std::to_string(b) + " share a signature");
            }
        }
    }
}

std::vector<Sequence> gen_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const auto signatures = spec.signatures.empty() ? SyntheticSpec::default_signatures(spec.classes) : spec.signatures;
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double two_pi = 2.0 * std::numbers::pi;

    // Rest skeleton: joints on a ring around the hip, slightly lifted.
    std::vector<std::array<double, 3>> rest(spec.joints, {0.0, 0.0, 0.0});
    for (std::size_t j = 1; j < spec.joints; ++j) {
        const double a = two_pi * static_cast<double>(j) / static_cast<double>(spec.joints - 1);
        rest[j] = {0.5 * std::cos(a), 0.5 * std::sin(a), 0.05 * static_cast<double>(j)};
    }

    std::vector<Sequence> out;
    for (std::size_t s = 0; s < spec.subjects; ++s) {
        const double spread = spec.subjects > 1
                                  ? spec.subject_scale_spread *
                                        (2.0 * static_cast<double>(s) / static_cast<double>(spec.subjects - 1) - 1.0)
                                  : 0.0;
        const double scale = 1.0 + spread;
        for (std::size_t c = 0; c < spec.classes; ++c) {
            const MotionSignature& sig = signatures[c];
            for (std::size_t r = 0; r < spec.sequences_per_cell; ++r) {
                Sequence seq;
                seq.id = "p" + padded(s, digits(spec.subjects)) + "_c" + padded(c, digits(spec.classes)) + "_r" +
                         padded(r, digits(spec.sequences_per_cell));
                seq.subject = "p" + padded(s, digits(spec.subjects));
                seq.label = static_cast<int>(c);
                const double start = spec.random_start_phase ? two_pi * unit(rng) : 0.0;
                const std::array<double, 3> origin{2.0 * unit(rng) - 1.0, 2.0 * unit(rng) - 1.0, 0.0};
                for (std::size_t t = 0; t < spec.frames; ++t) {
                    const double time = static_cast<double>(t) / spec.frame_rate;
                    Frame f;
                    f.joints.resize(spec.joints);
                    for (std::size_t j = 0; j < spec.joints; ++j) {
                        std::array<double, 3> p = rest[j];
                        if (j > 0) {
                            const double angle = two_pi * sig.frequency * time + start + sig.phase +
                                                 static_cast<double>(j) * sig.joint_phase_step;
                            p[0] += sig.amplitude * std::cos(angle);
                            p[1] += sig.amplitude * std::sin(angle);
                        }
                        for (std::size_t k = 0; k < 3; ++k) {
                            f.joints[j][k] = origin[k] + scale * p[k];
                            if (spec.noise_sigma > 0.0) f.joints[j][k] += spec.noise_sigma * noise(rng);
                        }
                    }
                    seq.frames.push_back(std::move(f));
                }
                out.push_back(std::move(seq));
            }
        }
    }
    return out;
}

Sequence reversed(const Sequence& seq) {
    Sequence out = seq;
    std::reverse(out.frames.begin(), out.frames.end());
    return out;
}

Sequence with_joint_offset(Sequence seq, std::size_t joint, std::size_t start, std::size_t length, double offset) {
    require(start + length <= seq.frames.size(), "with_joint_offset: fault runs past the end of '" + seq.id + "'");
    for (std::size_t t = start; t < start + length; ++t) {
        require(joint < seq.frames[t].joint_count(), "with_joint_offset: joint out of range");
        seq.frames[t].joints[joint][2] += offset;
    }
    return seq;
}

std::vector<Vector> standardize(std::span<const Vector> data) {
    require(!data.empty(), "standardize: empty data");
    const std::size_t dim = data.front().size();
    Vector mean(dim, 0.0), var(dim, 0.0);
    for (const auto& x : data) {
        require_dim(x.size(), dim, "standardize");
        for (std::size_t i = 0; i < dim; ++i) mean[i] += x[i];
    }
    const double n = static_cast<double>(data.size());
    for (double& m : mean) m /= n;
    for (const auto& x : data) {
        for (std::size_t i = 0; i < dim; ++i) var[i] += (x[i] - mean[i]) * (x[i] - mean[i]);
    }
    std::vector<Vector> out;
    out.reserve(data.size());
    for (const auto& x : data) {
        Vector z(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            const double sd = std::sqrt(var[i] / n);
            z[i] = sd > 0.0 ? (x[i] - mean[i]) / sd : x[i] - mean[i];
        }
        out.push_back(std::move(z));
    }
    return out;
}

LabeledVectors iris_standardized() {
    LabeledVectors raw = iris_raw();
    raw.x = standardize(raw.x);
    return raw;
}

// ---------------------------------------------------------------------------

ClassificationReport metrics_from_confusion(std::vector<int> labels, std::vector<std::vector<std::size_t>> confusion) {
    const std::size_t n = labels.size();
    require(n >= 1, "classification metrics: no classes");
    require(confusion.size() == n, "classification metrics: confusion matrix shape");
    ClassificationReport r;
    std::size_t total = 0, correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        require(confusion[i].size() == n, "classification metrics: confusion matrix shape");
        for (std::size_t j = 0; j < n; ++j) total += confusion[i][j];
        correct += confusion[i][i];
    }
    require(total > 0, "classification metrics: empty confusion matrix");
    for (std::size_t i = 0; i < n; ++i) {
        ClassMetrics m;
        m.label = labels[i];
        std::size_t predicted = 0;
        for (std::size_t j = 0; j < n; ++j) {
            m.support += confusion[i][j];
            predicted += confusion[j][i];
        }
        const double tp = static_cast<double>(confusion[i][i]);
        m.precision = predicted > 0 ? tp / static_cast<double>(predicted) : 0.0;
        m.recall = m.support > 0 ? tp / static_cast<double>(m.support) : 0.0;
        m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        r.macro_precision += m.precision;
        r.macro_recall += m.recall;
        r.macro_f1 += m.f1;
        r.per_class.push_back(m);
    }
    r.macro_precision /= static_cast<double>(n);
    r.macro_recall /= static_cast<double>(n);
    r.macro_f1 /= static_cast<double>(n);
    r.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    r.labels = std::move(labels);
    r.confusion = std::move(confusion);
    return r;
}

ClassificationReport classification_metrics(std::span<const int> predicted, std::span<const int> truth) {
    require(!truth.empty(), "classification metrics: empty input");
    require(predicted.size() == truth.size(), "classification metrics: prediction and truth lengths differ");
    std::set<int> label_set(truth.begin(), truth.end());
    label_set.insert(predicted.begin(), predicted.end());
    std::vector<int> labels(label_set.begin(), label_set.end());
    std::map<int, std::size_t> index;
    for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i]] = i;
    std::vector<std::vector<std::size_t>> confusion(labels.size(), std::vector<std::size_t>(labels.size(), 0));
    for (std::size_t i = 0; i < truth.size(); ++i) ++confusion[index[truth[i]]][index[predicted[i]]];
    return metrics_from_confusion(std::move(labels), std::move(confusion));
}

// ---------------------------------------------------------------------------

std::vector<std::vector<std::size_t>> make_folds(std::span<const Sequence> data, const CvOptions& options) {
    require(!data.empty(), "cross-validation: empty dataset");
    std::map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < data.size(); ++i) {
        require(by_id.emplace(data[i].id, i).second, "cross-validation: duplicate sequence id '" + data[i].id + "'");
    }

    std::vector<std::vector<std::size_t>> folds;
    if (options.protocol == CvProtocol::LeaveOneSubjectOut) {
        std::map<std::string, std::vector<std::size_t>> by_subject;
        for (const auto& [id, i] : by_id) {
            require(!data[i].subject.empty(), "cross-validation: sequence '" + id + "' has no subject id");
            by_subject[data[i].subject].push_back(i);
        }
        require(by_subject.size() >= 2, "cross-validation: leave-one-subject-out needs at least 2 subjects");
        for (auto& [subject, members] : by_subject) folds.push_back(std::move(members));
        return folds;
    }

    require(options.k >= 2, "cross-validation: k must be >= 2");
    require(options.k <= data.size(), "cross-validation: k = " + std::to_string(options.k) +
                                          " exceeds the dataset size " + std::to_string(data.size()));
    std::vector<std::string> ids;
    for (const auto& entry : by_id) ids.push_back(entry.first);
    std::mt19937_64 rng(options.seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    folds.resize(options.k);
    for (std::size_t i = 0; i < ids.size(); ++i) folds[i % options.k].push_back(by_id[ids[i]]);
    for (auto& f : folds) std::sort(f.begin(), f.end(), [&](std::size_t a, std::size_t b) { return data[a].id < data[b].id; });
    return folds;
}

CvReport cross_validate(std::span<const Sequence> data, const CvOptions& options, const PipelineSpec& spec) {
    const auto folds = make_folds(data, options);
    CvReport report;
    std::vector<int> all_pred, all_truth;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<bool> held(data.size(), false);
        for (std::size_t i : folds[f]) held[i] = true;
        std::vector<Sequence> train;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (!held[i]) train.push_back(data[i]);
        }
        Pipeline pipeline = Pipeline::build(spec);
        pipeline.train_layerwise(train);

        FoldResult fold;
        fold.name = options.protocol == CvProtocol::LeaveOneSubjectOut ? data[folds[f].front()].subject
                                                                       : "fold" + std::to_string(f + 1);
        for (std::size_t i : folds[f]) {
            require(data[i].label.has_value(), "cross-validation: sequence '" + data[i].id + "' is unlabeled");
            fold.held_out.push_back(data[i].id);
            fold.predicted.push_back(pipeline.classify(data[i]));
            fold.truth.push_back(*data[i].label);
        }
        fold.report = classification_metrics(fold.predicted, fold.truth);
        report.mean_fold_accuracy += fold.report.accuracy;
        all_pred.insert(all_pred.end(), fold.predicted.begin(), fold.predicted.end());
        all_truth.insert(all_truth.end(), fold.truth.begin(), fold.truth.end());
        report.folds.push_back(std::move(fold));
    }
    report.mean_fold_accuracy /= static_cast<double>(report.folds.size());
    report.pooled = classification_metrics(all_pred, all_truth);
    return report;
}

// ---------------------------------------------------------------------------

GngGwrComparison compare_gng_gwr(std::span<const Vector> data, std::size_t epochs, std::uint64_t seed,
                                 const GwrParams& gwr_params, const GngParams& gng_params) {
    require(data.size() >= 2, "compare_gng_gwr: need at least 2 samples");
    require(epochs >= 1, "compare_gng_gwr: epochs must be >= 1");
    // Both models start from the same two randomly drawn samples.
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    while (b == a) b = pick(rng);
    const std::array<Vector, 2> init{data[a], data[b]};
    const std::size_t dim = data.front().size();

    GwrNetwork gwr(dim, gwr_params, seed, init);
    GrowingNeuralGas gng(dim, gng_params, seed, init);
    GngGwrComparison out;
    out.gwr.initial_qe = quantization_error(gwr, data);
    out.gng.initial_qe = quantization_error(gng, data);
    std::vector<Sample> samples;
    for (const auto& x : data) samples.push_back({x, std::nullopt});
    for (std::size_t e = 0; e < epochs; ++e) {
        out.gwr.epochs.push_back(gwr.train_epoch(samples, seed + e));
        out.gng.epochs.push_back(gng.train_epoch(data, seed + e));
    }
    return out;
}

std::size_t growth_plateau_epoch(std::span<const EpochStats> epochs) {
    require(!epochs.empty(), "growth_plateau_epoch: no epochs");
    std::size_t e = epochs.size() - 1;
    while (e > 0 && epochs[e - 1].node_count == epochs.back().node_count) --e;
    return e;
}

// ---------------------------------------------------------------------------

namespace {

std::size_t total_nodes(const Pipeline& p) {
    std::size_t n = 0;
    for (const auto& l : p.pose_layers()) n += l.size();
    for (const auto& l : p.motion_layers()) n += l.size();
    if (p.integration()) n += p.integration()->size();
    return n;
}

std::vector<Sequence> of_class(std::span<const Sequence> data, int label) {
    std::vector<Sequence> out;
    for (const auto& s : data) {
        if (s.label == label) out.push_back(s);
    }
    return out;
}

double class_accuracy(const Pipeline& p, std::span<const Sequence> test, int label) {
    std::size_t n = 0, hit = 0;
    for (const auto& s : test) {
        if (s.label != label) continue;
        ++n;
        hit += p.classify(s) == label ? 1 : 0;
    }
    require(n > 0, "continual protocol: no test sequences for class " + std::to_string(label));
    return static_cast<double>(hit) / static_cast<double>(n);
}

}  // namespace

ContinualReport continual_protocol(std::span<const Sequence> train, std::span<const Sequence> test,
                                   std::span<const int> class_order, const PipelineSpec& spec) {
    require(class_order.size() >= 2, "continual protocol: needs at least 2 classes");
    std::set<int> distinct(class_order.begin(), class_order.end());
    require(distinct.size() == class_order.size(), "continual protocol: class order repeats a class");

    const std::size_t phases = class_order.size();
    ContinualReport report;
    for (ForgettingMatrix* m : {&report.growing, &report.fixed_capacity}) {
        m->classes.assign(class_order.begin(), class_order.end());
        m->accuracy.assign(phases, std::vector<std::optional<double>>(phases));
    }

    Pipeline growing = Pipeline::build(spec);
    std::optional<Pipeline> fixed;
    for (std::size_t p = 0; p < phases; ++p) {
        const auto phase_data = of_class(train, class_order[p]);
        require(!phase_data.empty(), "continual protocol: no training sequences for class " +
                                         std::to_string(class_order[p]));
        growing.train_layerwise(phase_data);
        if (p == 0) {
            fixed = growing;
            fixed->cap_growth();
        } else {
            fixed->train_layerwise(phase_data);
        }
        for (std::size_t c = 0; c <= p; ++c) {
            report.growing.accuracy[c][p] = class_accuracy(growing, test, class_order[c]);
            report.fixed_capacity.accuracy[c][p] = class_accuracy(*fixed, test, class_order[c]);
        }
        report.growing_nodes.push_back(total_nodes(growing));
        report.fixed_nodes.push_back(total_nodes(*fixed));
    }
    return report;
}

}  // namespace gwrnet
