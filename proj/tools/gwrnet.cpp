// gwrnet command-line tool: train | classify | assess | eval | inspect | generate.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 data or model error.
// The only environment variable read is GWRNET_LOG_LEVEL (trace..off).

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "gwrnet/io.hpp"

namespace fs = std::filesystem;
using namespace gwrnet;
using namespace gwrnet::io;

namespace {

constexpr int kPrecision = 6;

std::string num(double v) { return fixed(v, kPrecision); }

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("gwrnet");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("GWRNET_LOG_LEVEL")) {
        const auto level = spdlog::level::from_str(env);
        if (level == spdlog::level::off && std::string(env) != "off") {
            spdlog::warn("ignoring unknown GWRNET_LOG_LEVEL '{}'", env);
        } else {
            spdlog::set_level(level);
        }
    }
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + dir + "'");
}

std::string join_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

// Sequence ids become file names; anything outside [A-Za-z0-9._-] is replaced.
std::string safe_name(const std::string& id) {
    std::string out = id;
    for (char& c : out) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                        c == '_' || c == '-';
        if (!ok) c = '_';
    }
    return out;
}

std::string padded(std::size_t i, std::size_t width = 4) {
    std::string s = std::to_string(i);
    return std::string(s.size() < width ? width - s.size() : 0, '0') + s;
}

// Training or evaluation data: an explicit file wins over the config's
// synthetic block.
Dataset load_training_data(const Config& cfg, const std::string& data_path) {
    if (!data_path.empty()) return read_dataset(data_path);
    if (!cfg.synthetic) throw UsageError("no --data given and the config has no synthetic block");
    spdlog::info("generating synthetic data (seed {})", cfg.synthetic->seed);
    return dataset_from_sequences(gen_synthetic(*cfg.synthetic));
}

std::string label_or_empty(const Dataset& d, const std::optional<int>& label) {
    return label ? d.label_name(*label) : std::string();
}

std::string training_report_csv(const TrainingReport& report) {
    std::ostringstream out;
    out << "layer,epoch,node_count,insertions,quantization_error,mean_activity,mean_bmu_habituation\n";
    for (const auto& layer : report.layers) {
        for (std::size_t e = 0; e < layer.epochs.size(); ++e) {
            const auto& s = layer.epochs[e];
            out << csv_field(layer.layer) << ',' << (e + 1) << ',' << s.node_count << ',' << s.insertions << ','
                << num(s.quantization_error) << ',' << num(s.mean_activity) << ',' << num(s.mean_bmu_habituation)
                << "\n";
        }
    }
    return out.str();
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
    std::string config, data, model, report;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> epochs;
};

int cmd_train(const TrainArgs& a) {
    Config cfg = load_config(a.config);
    if (a.seed) cfg.set_seed(*a.seed);
    if (a.epochs) cfg.set_epochs(*a.epochs);
    cfg.validate();
    Dataset data = load_training_data(cfg, a.data);
    spdlog::info("{} sequences, {} joints, {} labels", data.sequences.size(), data.joints, data.label_names.size());

    ModelFile model;
    model.kind = cfg.model;
    model.label_names = data.label_names;
    TrainingReport report;
    if (cfg.model == ModelKind::Pipeline) {
        Pipeline p = Pipeline::build(cfg.pipeline);
        report = p.train_layerwise(data.sequences);
        model.pipeline = std::move(p);
    } else {
        Assessor as = train_assessor(data.sequences, cfg.assessor);
        report.layers.push_back({"assessor", as.history});
        model.assessor = std::move(as);
    }
    save_model(a.model, model);
    const std::string csv = training_report_csv(report);
    if (!a.report.empty()) write_file_atomic(a.report, csv);
    std::cout << csv;
    spdlog::info("model written to {}", a.model);
    return 0;
}

// ---- classify --------------------------------------------------------------

int cmd_classify(const std::string& model_path, const std::string& data_path, const std::string& out_dir) {
    const ModelFile model = load_model(model_path);
    if (model.kind != ModelKind::Pipeline || !model.pipeline) {
        throw DataError(model_path + ": classify needs a pipeline model, not an assessor");
    }
    const Pipeline& p = *model.pipeline;
    const Dataset original = read_dataset(data_path);
    Dataset data = original;
    relabel(data, model.label_names);

    std::ostringstream windows, sequences;
    windows << "sequence_id,window,start_frame,label,confidence\n";
    sequences << "sequence_id,subject_id,true_label,predicted_label,windows,status\n";
    std::size_t total_windows = 0, labeled = 0, correct = 0, failed = 0;
    for (std::size_t i = 0; i < data.sequences.size(); ++i) {
        const Sequence& seq = data.sequences[i];
        const std::string truth = label_or_empty(original, original.sequences[i].label);
        std::vector<WindowDecision> decisions;
        try {
            decisions = p.classify_sequence(seq);
        } catch (const Error& e) {
            ++failed;
            spdlog::warn("{}", e.what());
            sequences << csv_field(seq.id) << ',' << csv_field(seq.subject) << ',' << csv_field(truth) << ",,0,"
                      << csv_field(std::string("error: ") + e.what()) << "\n";
            continue;
        }
        std::map<int, std::size_t> votes;
        for (std::size_t w = 0; w < decisions.size(); ++w) {
            const auto& d = decisions[w];
            ++votes[d.label];
            windows << csv_field(seq.id) << ',' << w << ',' << d.start << ',' << csv_field(model.label_names.at(d.label))
                    << ',' << num(d.confidence) << "\n";
        }
        total_windows += decisions.size();
        // Majority vote; std::map iteration order makes ties go to the lowest id.
        int winner = votes.begin()->first;
        for (const auto& [label, n] : votes) {
            if (n > votes[winner]) winner = label;
        }
        if (seq.label) {
            ++labeled;
            correct += *seq.label == winner ? 1 : 0;
        }
        sequences << csv_field(seq.id) << ',' << csv_field(seq.subject) << ',' << csv_field(truth) << ','
                  << csv_field(model.label_names.at(winner)) << ',' << decisions.size() << ",ok\n";
    }
    ensure_dir(out_dir);
    write_file_atomic(join_path(out_dir, "windows.csv"), windows.str());
    write_file_atomic(join_path(out_dir, "sequences.csv"), sequences.str());
    std::cout << "sequences " << data.sequences.size() << "\n";
    std::cout << "windows " << total_windows << "\n";
    std::cout << "errors " << failed << "\n";
    if (labeled > 0) {
        std::cout << "sequence_accuracy " << num(static_cast<double>(correct) / static_cast<double>(labeled)) << "\n";
    }
    return 0;
}

// ---- assess ----------------------------------------------------------------

struct AssessArgs {
    std::string model, data, out, mistake_label;
    std::optional<double> f_threshold;
    std::optional<std::size_t> persistence, rollout;
};

std::string rollout_header(const JointLayout& layout) {
    std::ostringstream out;
    out << "sequence_id,seed_t,step";
    const char* prefixes[] = {"", "d"};
    for (std::size_t b = 0; b < layout.blocks; ++b) {
        for (std::size_t j = 0; j < layout.joints; ++j) {
            out << ',' << prefixes[b] << 'x' << j << ',' << prefixes[b] << 'y' << j << ',' << prefixes[b] << 'z' << j;
        }
    }
    out << "\n";
    return out.str();
}

int cmd_assess(const AssessArgs& a) {
    const ModelFile model = load_model(a.model);
    if (model.kind != ModelKind::Assessor || !model.assessor) {
        throw DataError(a.model + ": assess needs an assessor model, not a pipeline");
    }
    const Assessor& as = *model.assessor;
    FeedbackParams fp;
    if (a.f_threshold) fp.threshold = *a.f_threshold;
    if (a.persistence) fp.persistence = *a.persistence;
    if (a.rollout) fp.rollout_horizon = *a.rollout;
    try {
        fp.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    const Dataset data = read_dataset(a.data);
    const JointLayout layout = as.spec.layout();

    ensure_dir(a.out);
    const std::string feedback_dir = join_path(a.out, "feedback");
    ensure_dir(feedback_dir);

    std::ostringstream summary, mistakes, rollouts;
    summary << "sequence_id,steps,mean_deviation,max_deviation,spans,flagged\n";
    mistakes << "sequence_id,span_start,span_end,length,joints\n";
    rollouts << rollout_header(layout);

    std::vector<FeedbackReport> reports;
    std::vector<bool> truth;
    for (std::size_t i = 0; i < data.sequences.size(); ++i) {
        const Sequence& seq = data.sequences[i];
        FeedbackReport r = as.assess(seq, fp);
        const auto& total = r.total;
        const double mean = std::accumulate(total.begin(), total.end(), 0.0) / static_cast<double>(total.size());
        const double peak = *std::max_element(total.begin(), total.end());
        summary << csv_field(seq.id) << ',' << total.size() << ',' << num(mean) << ',' << num(peak) << ','
                << r.spans.size() << ',' << (r.flagged() ? 1 : 0) << "\n";
        for (const auto& s : r.spans) {
            std::string joints;
            for (std::size_t k = 0; k < s.joints.size(); ++k) joints += (k ? ";" : "") + std::to_string(s.joints[k]);
            mistakes << csv_field(seq.id) << ',' << s.start << ',' << s.end << ',' << s.length() << ',' << joints
                     << "\n";
        }

        // Guidance: a rollout from the first step, and one from the step
        // before each detected span.
        const auto features = assessment_features(seq, as.spec.hip_joint, as.spec.with_motion);
        std::vector<std::size_t> seeds{0};
        for (const auto& s : r.spans) seeds.push_back(s.start - 1);
        for (std::size_t seed_t : seeds) {
            const auto frames = rollout(as.net, features[seed_t], fp.rollout_horizon);
            for (std::size_t k = 0; k < frames.size(); ++k) {
                rollouts << csv_field(seq.id) << ',' << seed_t << ',' << (k + 1);
                for (double v : frames[k]) rollouts << ',' << num(v);
                rollouts << "\n";
            }
        }

        std::ostringstream txt;
        write_feedback_report(txt, seq.id, r, kPrecision);
        write_file_atomic(join_path(feedback_dir, padded(i) + "_" + safe_name(seq.id) + ".txt"), txt.str());
        if (!a.mistake_label.empty()) truth.push_back(label_or_empty(data, seq.label) == a.mistake_label);
        reports.push_back(std::move(r));
    }
    write_file_atomic(join_path(a.out, "summary.csv"), summary.str());
    write_file_atomic(join_path(a.out, "mistakes.csv"), mistakes.str());
    write_file_atomic(join_path(a.out, "rollout.csv"), rollouts.str());

    std::size_t flagged = 0;
    for (const auto& r : reports) flagged += r.flagged() ? 1 : 0;
    std::cout << "sequences " << reports.size() << "\n";
    std::cout << "flagged " << flagged << "\n";
    std::cout << "f_threshold " << num(fp.threshold) << "\n";
    std::cout << "persistence " << fp.persistence << "\n";
    if (!a.mistake_label.empty()) {
        const auto flags = std::make_unique<bool[]>(truth.size());
        std::copy(truth.begin(), truth.end(), flags.get());
        const auto ev = evaluate_feedback(reports, std::span<const bool>(flags.get(), truth.size()));
        std::ostringstream csv;
        csv << "tp,fn,tn,fp,tpr,tnr,ppv,tpr_undefined,tnr_undefined,ppv_undefined\n";
        csv << ev.counts.tp << ',' << ev.counts.fn << ',' << ev.counts.tn << ',' << ev.counts.fp << ',' << num(ev.tpr)
            << ',' << num(ev.tnr) << ',' << num(ev.ppv) << ',' << ev.tpr_undefined << ',' << ev.tnr_undefined << ','
            << ev.ppv_undefined << "\n";
        write_file_atomic(join_path(a.out, "evaluation.csv"), csv.str());
        std::cout << "tpr " << num(ev.tpr) << "\ntnr " << num(ev.tnr) << "\nppv " << num(ev.ppv) << "\n";
    }
    return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
    std::string experiment, config, data, test_data, out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> epochs;
};

const char* kFig2Script = R"(# gnuplot script for the four growth curves; run from the output directory.
set datafile separator ','
set key autotitle columnhead
set terminal pngcairo size 1200,900
set output 'curves.png'
set multiplot layout 2,2
set xlabel 'epoch'
set title 'nodes'
plot 'node_count.csv' using 1:2 with linespoints, '' using 1:3 with linespoints
set title 'quantization error'
plot 'quantization_error.csv' using 1:2 with linespoints, '' using 1:3 with linespoints
set title 'GWR mean activation'
plot 'activation.csv' using 1:2 with linespoints
set title 'GWR mean BMU habituation'
plot 'habituation.csv' using 1:2 with linespoints
unset multiplot
)";

int eval_gng_vs_gwr(const Config& cfg, const EvalArgs& a) {
    if (!a.data.empty()) throw UsageError("gng-vs-gwr runs on the bundled Iris table and takes no --data");
    const std::size_t epochs = a.epochs ? *a.epochs : cfg.iris.epochs;
    const auto iris = iris_standardized();
    const auto cmp = compare_gng_gwr(iris.x, epochs, cfg.seed, cfg.iris.gwr, cfg.iris.gng);

    std::ostringstream nodes, qe, act, hab;
    nodes << "epoch,gwr,gng\n0,2,2\n";
    qe << "epoch,gwr,gng\n0," << num(cmp.gwr.initial_qe) << ',' << num(cmp.gng.initial_qe) << "\n";
    act << "epoch,gwr_mean_activation\n";
    hab << "epoch,gwr_mean_bmu_habituation\n";
    for (std::size_t e = 0; e < epochs; ++e) {
        const auto& g = cmp.gwr.epochs[e];
        const auto& n = cmp.gng.epochs[e];
        nodes << (e + 1) << ',' << g.node_count << ',' << n.node_count << "\n";
        qe << (e + 1) << ',' << num(g.quantization_error) << ',' << num(n.quantization_error) << "\n";
        act << (e + 1) << ',' << num(g.mean_activity) << "\n";
        hab << (e + 1) << ',' << num(g.mean_bmu_habituation) << "\n";
    }
    ensure_dir(a.out);
    write_file_atomic(join_path(a.out, "node_count.csv"), nodes.str());
    write_file_atomic(join_path(a.out, "quantization_error.csv"), qe.str());
    write_file_atomic(join_path(a.out, "activation.csv"), act.str());
    write_file_atomic(join_path(a.out, "habituation.csv"), hab.str());
    write_file_atomic(join_path(a.out, "curves.gp"), kFig2Script);
    std::cout << "epochs " << epochs << "\n";
    std::cout << "gwr_nodes " << cmp.gwr.epochs.back().node_count << "\n";
    std::cout << "gng_nodes " << cmp.gng.epochs.back().node_count << "\n";
    std::cout << "gwr_plateau_epoch " << growth_plateau_epoch(cmp.gwr.epochs) + 1 << "\n";
    return 0;
}

std::string metrics_csv(const ClassificationReport& r, const Dataset& d) {
    std::ostringstream out;
    out << "label,support,precision,recall,f1\n";
    for (const auto& m : r.per_class) {
        out << csv_field(d.label_name(m.label)) << ',' << m.support << ',' << num(m.precision) << ',' << num(m.recall)
            << ',' << num(m.f1) << "\n";
    }
    std::size_t support = 0;
    for (const auto& m : r.per_class) support += m.support;
    out << "macro," << support << ',' << num(r.macro_precision) << ',' << num(r.macro_recall) << ','
        << num(r.macro_f1) << "\n";
    return out.str();
}

std::string confusion_csv(const ClassificationReport& r, const Dataset& d) {
    std::ostringstream out;
    out << "truth";
    for (int l : r.labels) out << ',' << csv_field(d.label_name(l));
    out << "\n";
    for (std::size_t i = 0; i < r.labels.size(); ++i) {
        out << csv_field(d.label_name(r.labels[i]));
        for (std::size_t n : r.confusion[i]) out << ',' << n;
        out << "\n";
    }
    return out.str();
}

int eval_cv(const Config& cfg, const EvalArgs& a) {
    const Dataset data = load_training_data(cfg, a.data);
    const CvReport rep = cross_validate(data.sequences, cfg.cv, cfg.pipeline);

    std::ostringstream folds, predictions;
    folds << "fold,held_out,accuracy,macro_f1\n";
    predictions << "fold,sequence_id,true_label,predicted_label\n";
    for (const auto& f : rep.folds) {
        folds << csv_field(f.name) << ',' << f.held_out.size() << ',' << num(f.report.accuracy) << ','
              << num(f.report.macro_f1) << "\n";
        for (std::size_t i = 0; i < f.held_out.size(); ++i) {
            predictions << csv_field(f.name) << ',' << csv_field(f.held_out[i]) << ','
                        << csv_field(data.label_name(f.truth[i])) << ',' << csv_field(data.label_name(f.predicted[i]))
                        << "\n";
        }
    }
    std::ostringstream report;
    report << "protocol " << (cfg.cv.protocol == CvProtocol::LeaveOneSubjectOut ? "loso" : "kfold") << "\n";
    report << "folds " << rep.folds.size() << "\n";
    report << "accuracy " << num(rep.pooled.accuracy) << "\n";
    report << "mean_fold_accuracy " << num(rep.mean_fold_accuracy) << "\n";
    report << "macro_precision " << num(rep.pooled.macro_precision) << "\n";
    report << "macro_recall " << num(rep.pooled.macro_recall) << "\n";
    report << "macro_f1 " << num(rep.pooled.macro_f1) << "\n";

    ensure_dir(a.out);
    write_file_atomic(join_path(a.out, "folds.csv"), folds.str());
    write_file_atomic(join_path(a.out, "predictions.csv"), predictions.str());
    write_file_atomic(join_path(a.out, "metrics.csv"), metrics_csv(rep.pooled, data));
    write_file_atomic(join_path(a.out, "confusion.csv"), confusion_csv(rep.pooled, data));
    write_file_atomic(join_path(a.out, "report.txt"), report.str());
    std::cout << report.str();
    return 0;
}

int eval_continual(const Config& cfg, const EvalArgs& a) {
    const Dataset train = load_training_data(cfg, a.data);
    Dataset test;
    if (!a.test_data.empty()) {
        test = read_dataset(a.test_data);
        relabel(test, train.label_names);
    } else if (a.data.empty()) {
        SyntheticSpec held = *cfg.synthetic;
        held.seed = cfg.synthetic->seed + 1;
        test = dataset_from_sequences(gen_synthetic(held));
    } else {
        spdlog::warn("no --test-data: measuring retention on the training file");
        test = train;
    }
    std::vector<int> order = cfg.class_order;
    if (order.empty()) {
        for (std::size_t i = 0; i < train.label_names.size(); ++i) order.push_back(static_cast<int>(i));
    }
    const ContinualReport rep = continual_protocol(train.sequences, test.sequences, order, cfg.pipeline);

    std::ostringstream forgetting, nodes;
    forgetting << "model,class,phase,accuracy\n";
    auto emit = [&](const char* name, const ForgettingMatrix& m) {
        for (std::size_t c = 0; c < m.classes.size(); ++c) {
            for (std::size_t p = 0; p < m.accuracy[c].size(); ++p) {
                if (!m.accuracy[c][p]) continue;
                forgetting << name << ',' << csv_field(train.label_name(m.classes[c])) << ',' << (p + 1) << ','
                           << num(*m.accuracy[c][p]) << "\n";
            }
        }
    };
    emit("growing", rep.growing);
    emit("fixed_capacity", rep.fixed_capacity);
    nodes << "phase,growing,fixed_capacity\n";
    for (std::size_t p = 0; p < rep.growing_nodes.size(); ++p) {
        nodes << (p + 1) << ',' << rep.growing_nodes[p] << ',' << rep.fixed_nodes[p] << "\n";
    }
    ensure_dir(a.out);
    write_file_atomic(join_path(a.out, "forgetting.csv"), forgetting.str());
    write_file_atomic(join_path(a.out, "nodes.csv"), nodes.str());
    std::cout << forgetting.str();
    return 0;
}

int cmd_eval(const EvalArgs& a) {
    static const std::vector<std::string> known{"gng-vs-gwr", "continual", "cv"};
    if (std::find(known.begin(), known.end(), a.experiment) == known.end()) {
        throw UsageError("unknown experiment '" + a.experiment + "' (expected gng-vs-gwr, continual or cv)");
    }
    Config cfg = load_config(a.config);
    if (a.seed) cfg.set_seed(*a.seed);
    if (a.epochs) cfg.set_epochs(*a.epochs);
    if (a.experiment != "gng-vs-gwr") {
        if (cfg.model != ModelKind::Pipeline) throw UsageError(a.experiment + " needs a pipeline config");
        cfg.validate();
    }
    if (a.experiment == "gng-vs-gwr") return eval_gng_vs_gwr(cfg, a);
    if (a.experiment == "cv") return eval_cv(cfg, a);
    return eval_continual(cfg, a);
}

// ---- inspect ---------------------------------------------------------------

void describe_gwr_params(std::ostream& out, const GwrParams& p) {
    out << "    activation_threshold " << num(p.activation_threshold) << "\n"
        << "    habituation_threshold " << num(p.habituation_threshold) << "\n"
        << "    tau_b " << num(p.tau_b) << "  tau_n " << num(p.tau_n) << "\n"
        << "    eps_b " << num(p.eps_b) << "  eps_n " << num(p.eps_n) << "\n"
        << "    max_edge_age " << p.max_edge_age << "\n"
        << "    max_nodes " << (p.max_nodes == kUnboundedNodes ? std::string("unbounded") : std::to_string(p.max_nodes))
        << "\n";
}

template <class Net>
void describe_network(std::ostream& out, const std::string& name, const Net& net,
                      const std::vector<std::string>& labels) {
    out << name << "\n";
    out << "  input_dim " << net.dim() << "\n";
    out << "  nodes " << net.size() << "\n";
    out << "  edges " << net.graph().edge_count() << "\n";
    out << "  steps " << net.steps() << "\n";
    out << "  frozen " << (net.frozen() ? "yes" : "no") << "\n";
    std::map<int, std::size_t> by_majority;
    std::map<int, std::uint64_t> presentations;
    std::size_t unlabeled = 0;
    for (const auto& n : net.nodes()) {
        const auto m = majority_label(n.label_counts);
        if (m) {
            ++by_majority[m->label];
        } else {
            ++unlabeled;
        }
        for (const auto& [label, count] : n.label_counts) presentations[label] += count;
    }
    if (!presentations.empty()) {
        out << "  label              nodes  presentations\n";
        for (const auto& [label, count] : presentations) {
            const std::string lname =
                label >= 0 && static_cast<std::size_t>(label) < labels.size() ? labels[label] : std::to_string(label);
            std::string padded_name = lname;
            padded_name.resize(std::max<std::size_t>(lname.size(), 18), ' ');
            out << "  " << padded_name << ' ' << by_majority[label] << "  " << count << "\n";
        }
        out << "  unlabeled nodes " << unlabeled << "\n";
    }
    out << "  params\n";
    if constexpr (std::is_same_v<Net, GammaGwr>) {
        out << "    context_depth " << net.params().context_depth << "\n";
        out << "    beta " << num(net.params().beta) << "\n";
        out << "    alpha";
        for (double v : net.params().resolved().alpha) out << ' ' << num(v);
        out << "\n";
        describe_gwr_params(out, net.params().gwr);
    } else {
        describe_gwr_params(out, net.params());
    }
}

void describe_layer(std::ostream& out, const Layer& layer, const std::vector<std::string>& labels) {
    std::visit([&](const auto& net) { describe_network(out, layer.name(), net, labels); }, layer.network());
    out << "  window " << layer.spec().window << "  pool_group " << layer.spec().pool_group << "\n";
}

int cmd_inspect(const std::string& model_path) {
    const ModelFile model = load_model(model_path);
    std::ostringstream out;
    out << "format_version " << kModelFormatVersion << "\n";
    out << "kind " << (model.kind == ModelKind::Pipeline ? "pipeline" : "assessor") << "\n";
    out << "labels";
    for (const auto& l : model.label_names) out << ' ' << l;
    out << "\n";
    if (model.pipeline) {
        const Pipeline& p = *model.pipeline;
        const auto& s = p.spec();
        out << "preset " << s.preset << "\n";
        out << "joints " << s.joints << "  hip_joint " << s.hip_joint << "\n";
        out << "decision_window " << s.decision_window << "  decision_stride " << s.decision_stride << "\n";
        out << "epochs " << s.epochs << "  seed " << s.seed << "\n";
        std::size_t total = 0;
        for (const auto& l : p.pose_layers()) total += l.size();
        for (const auto& l : p.motion_layers()) total += l.size();
        if (p.integration()) total += p.integration()->size();
        out << "total_nodes " << total << "\n\n";
        for (const auto& l : p.pose_layers()) describe_layer(out, l, model.label_names);
        for (const auto& l : p.motion_layers()) describe_layer(out, l, model.label_names);
        if (p.integration()) describe_layer(out, *p.integration(), model.label_names);
    } else {
        const Assessor& as = *model.assessor;
        out << "joints " << as.spec.joints << "  hip_joint " << as.spec.hip_joint << "\n";
        out << "with_motion " << (as.spec.with_motion ? "yes" : "no") << "\n";
        out << "epochs " << as.spec.epochs << "  seed " << as.spec.seed << "\n\n";
        describe_network(out, "assessor", as.net, model.label_names);
    }
    std::cout << out.str();
    return 0;
}

// ---- generate --------------------------------------------------------------

struct GenerateArgs {
    std::string config, out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> fault_joint;
    std::size_t fault_start = 0;
    std::size_t fault_frames = 0;
    double fault_offset = 1.0;
    std::string fault_label;
};

int cmd_generate(const GenerateArgs& a) {
    Config cfg = load_config(a.config);
    if (!cfg.synthetic) throw UsageError(a.config + ": generate needs a synthetic block");
    if (a.seed) cfg.set_seed(*a.seed);
    Dataset d = dataset_from_sequences(gen_synthetic(*cfg.synthetic));
    if (a.fault_joint) {
        if (a.fault_frames == 0) throw UsageError("--fault-frames must be >= 1 with --fault-joint");
        int relabeled = -1;
        if (!a.fault_label.empty()) {
            relabeled = static_cast<int>(d.label_names.size());
            d.label_names.push_back(a.fault_label);
        }
        for (auto& s : d.sequences) {
            try {
                s = with_joint_offset(std::move(s), *a.fault_joint, a.fault_start, a.fault_frames, a.fault_offset);
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            if (relabeled >= 0) s.label = relabeled;
        }
    }
    std::ostringstream out;
    write_dataset(out, d);
    write_file_atomic(a.out, out.str());
    std::cout << "sequences " << d.sequences.size() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"gwrnet: growing self-organizing networks for skeleton action recognition and assessment"};
    app.require_subcommand(1);

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "Train a pipeline or assessor model");
    c_train->add_option("--config", train.config, "Configuration file (JSON)")->required();
    c_train->add_option("--data", train.data, "Training data CSV; optional when the config has a synthetic block");
    c_train->add_option("--model", train.model, "Output model file")->required();
    c_train->add_option("--report", train.report, "Also write the training report CSV here");
    c_train->add_option("--seed", train.seed, "Override the config seed");
    c_train->add_option("--epochs", train.epochs, "Override the config epochs (assessors accept 0: an initialized, untrained model)");

    std::string model_path, data_path, out_dir;
    auto* c_classify = app.add_subcommand("classify", "Label sequences with a trained pipeline");
    c_classify->add_option("--model", model_path, "Model file")->required();
    c_classify->add_option("--data", data_path, "Data CSV")->required();
    c_classify->add_option("--out", out_dir, "Output directory")->required();

    AssessArgs assess;
    auto* c_assess = app.add_subcommand("assess", "Compute feedback and detect mistakes with an assessor");
    c_assess->add_option("--model", assess.model, "Assessor model file")->required();
    c_assess->add_option("--data", assess.data, "Data CSV")->required();
    c_assess->add_option("--out", assess.out, "Output directory")->required();
    c_assess->add_option("--f-threshold", assess.f_threshold, "Feedback threshold (default 0.7)");
    c_assess->add_option("--persistence", assess.persistence, "Frames the threshold must be exceeded (default 100)");
    c_assess->add_option("--rollout", assess.rollout, "Predicted frames per rollout seed (default 30)");
    c_assess->add_option("--mistake-label", assess.mistake_label,
                         "Label marking incorrect sequences; enables the TPR/TNR/PPV evaluation");

    EvalArgs eval;
    auto* c_eval = app.add_subcommand("eval", "Run an evaluation experiment");
    c_eval->add_option("--experiment", eval.experiment, "gng-vs-gwr, continual or cv")->required();
    c_eval->add_option("--config", eval.config, "Configuration file (JSON)")->required();
    c_eval->add_option("--data", eval.data, "Data CSV; optional when the config has a synthetic block");
    c_eval->add_option("--test-data", eval.test_data, "Held-out data for the continual experiment");
    c_eval->add_option("--out", eval.out, "Output directory")->required();
    c_eval->add_option("--seed", eval.seed, "Override the config seed");
    c_eval->add_option("--epochs", eval.epochs, "Override the config epochs");

    std::string inspect_model;
    auto* c_inspect = app.add_subcommand("inspect", "Summarize a model file");
    c_inspect->add_option("--model", inspect_model, "Model file")->required();

    GenerateArgs gen;
    auto* c_generate = app.add_subcommand("generate", "Write the synthetic dataset described by a config");
    c_generate->add_option("--config", gen.config, "Configuration file with a synthetic block")->required();
    c_generate->add_option("--out", gen.out, "Output data CSV")->required();
    c_generate->add_option("--seed", gen.seed, "Override the config seed");
    c_generate->add_option("--fault-joint", gen.fault_joint, "Offset this joint in every sequence");
    c_generate->add_option("--fault-start", gen.fault_start, "First faulty frame");
    c_generate->add_option("--fault-frames", gen.fault_frames, "Number of faulty frames");
    c_generate->add_option("--fault-offset", gen.fault_offset, "Offset added to the joint's z coordinate");
    c_generate->add_option("--fault-label", gen.fault_label, "Relabel faulty sequences with this name");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*c_train) return cmd_train(train);
        if (*c_classify) return cmd_classify(model_path, data_path, out_dir);
        if (*c_assess) return cmd_assess(assess);
        if (*c_eval) return cmd_eval(eval);
        if (*c_inspect) return cmd_inspect(inspect_model);
        if (*c_generate) return cmd_generate(gen);
    } catch (const UsageError& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 3;
    }
    return 2;
}
