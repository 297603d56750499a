#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gwrnet/assessment.hpp"
#include "gwrnet/eval.hpp"
#include "gwrnet/gng.hpp"
#include "gwrnet/hierarchy.hpp"
#include "gwrnet/io.hpp"

namespace py = pybind11;
using namespace gwrnet;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Vector to_vector(const Array& a) {
    if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
    return Vector(a.data(), a.data() + a.shape(0));
}

std::vector<Vector> to_rows(const Array& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
    const auto n = static_cast<std::size_t>(a.shape(0));
    const auto d = static_cast<std::size_t>(a.shape(1));
    std::vector<Vector> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i].assign(a.data() + i * d, a.data() + (i + 1) * d);
    return rows;
}

Array from_rows(const std::vector<Vector>& rows, std::size_t dim) {
    Array out({rows.size(), dim});
    auto* p = out.mutable_data();
    for (const auto& r : rows) p = std::copy(r.begin(), r.end(), p);
    return out;
}

Array from_vector(const Vector& v) {
    Array out(v.size());
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

Array frames_to_array(const Sequence& s) {
    const std::size_t joints = s.frames.empty() ? 0 : s.frames.front().joint_count();
    Array out({s.frames.size(), joints, std::size_t{3}});
    auto* p = out.mutable_data();
    for (const auto& f : s.frames) {
        for (const auto& j : f.joints) p = std::copy(j.begin(), j.end(), p);
    }
    return out;
}

std::vector<Frame> array_to_frames(const Array& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw py::value_error("frames must have shape (T, J, 3)");
    std::vector<Frame> frames(static_cast<std::size_t>(a.shape(0)));
    const auto joints = static_cast<std::size_t>(a.shape(1));
    const double* p = a.data();
    for (auto& f : frames) {
        f.joints.resize(joints);
        for (auto& j : f.joints) {
            j = {p[0], p[1], p[2]};
            p += 3;
        }
    }
    return frames;
}

template <class Net>
Array node_weights(const Net& net) {
    std::vector<Vector> rows;
    for (const auto& n : net.nodes()) rows.push_back(n.weight);
    return from_rows(rows, net.dim());
}

template <class Net>
std::vector<double> node_habituations(const Net& net) {
    std::vector<double> out;
    for (const auto& n : net.nodes()) out.push_back(n.habituation);
    return out;
}

std::vector<Sample> samples(const Array& x, const std::optional<std::vector<int>>& labels) {
    auto rows = to_rows(x);
    if (labels && labels->size() != rows.size()) throw py::value_error("labels and rows differ in length");
    std::vector<Sample> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.push_back({std::move(rows[i]), labels ? std::optional<int>((*labels)[i]) : std::nullopt});
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_gwrnet, m) {
    m.doc() = "Growing self-organizing networks for skeleton-based action recognition and motion assessment";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<io::UsageError>(m, "UsageError", error.ptr());
    py::register_exception<io::DataError>(m, "DataError", error.ptr());

    m.attr("HABITUATION_FIXED_POINT") = kHabituationFixedPoint;
    m.def("activity", &activity, py::arg("bmu_distance"));
    m.def("habituate", &habituate, py::arg("h"), py::arg("tau"));

    py::class_<GwrParams>(m, "GwrParams")
        .def(py::init<>())
        .def_readwrite("activation_threshold", &GwrParams::activation_threshold)
        .def_readwrite("habituation_threshold", &GwrParams::habituation_threshold)
        .def_readwrite("tau_b", &GwrParams::tau_b)
        .def_readwrite("tau_n", &GwrParams::tau_n)
        .def_readwrite("eps_b", &GwrParams::eps_b)
        .def_readwrite("eps_n", &GwrParams::eps_n)
        .def_readwrite("max_edge_age", &GwrParams::max_edge_age)
        .def_readwrite("max_nodes", &GwrParams::max_nodes)
        .def("validate", &GwrParams::validate);

    py::class_<GngParams>(m, "GngParams")
        .def(py::init<>())
        .def_readwrite("eps_b", &GngParams::eps_b)
        .def_readwrite("eps_n", &GngParams::eps_n)
        .def_readwrite("lambda_", &GngParams::lambda)
        .def_readwrite("max_edge_age", &GngParams::max_edge_age);

    py::class_<GammaParams>(m, "GammaParams")
        .def(py::init<>())
        .def_readwrite("gwr", &GammaParams::gwr)
        .def_readwrite("context_depth", &GammaParams::context_depth)
        .def_readwrite("alpha", &GammaParams::alpha)
        .def_readwrite("beta", &GammaParams::beta)
        .def("validate", &GammaParams::validate);

    py::class_<EpochStats>(m, "EpochStats")
        .def_readonly("mean_activity", &EpochStats::mean_activity)
        .def_readonly("mean_bmu_habituation", &EpochStats::mean_bmu_habituation)
        .def_readonly("quantization_error", &EpochStats::quantization_error)
        .def_readonly("node_count", &EpochStats::node_count)
        .def_readonly("insertions", &EpochStats::insertions)
        .def("__repr__", [](const EpochStats& e) {
            return "EpochStats(node_count=" + std::to_string(e.node_count) +
                   ", quantization_error=" + io::fixed(e.quantization_error) + ")";
        });

    py::class_<StepOutcome>(m, "StepOutcome")
        .def_readonly("bmu", &StepOutcome::bmu)
        .def_readonly("second", &StepOutcome::second)
        .def_readonly("winner", &StepOutcome::winner)
        .def_readonly("activity", &StepOutcome::activity)
        .def_readonly("bmu_habituation", &StepOutcome::bmu_habituation)
        .def_readonly("inserted", &StepOutcome::inserted)
        .def_readonly("removed_nodes", &StepOutcome::removed_nodes);

    py::class_<GwrNetwork>(m, "GwrNetwork")
        .def(py::init<std::size_t, GwrParams, std::uint64_t>(), py::arg("dim"), py::arg("params") = GwrParams{},
             py::arg("seed") = 1)
        .def(
            "train_step",
            [](GwrNetwork& n, const Array& x, std::optional<int> label) { return n.train_step(to_vector(x), label); },
            py::arg("x"), py::arg("label") = py::none())
        .def(
            "train_epoch",
            [](GwrNetwork& n, const Array& x, std::optional<std::vector<int>> labels, std::uint64_t seed) {
                const auto data = samples(x, labels);
                return n.train_epoch(data, seed);
            },
            py::arg("x"), py::arg("labels") = py::none(), py::arg("shuffle_seed") = 0)
        .def(
            "find_bmu",
            [](const GwrNetwork& n, const Array& x) {
                const auto b = n.find_bmus(to_vector(x));
                return py::make_tuple(b.best, b.best_distance);
            },
            py::arg("x"))
        .def(
            "quantization_error",
            [](const GwrNetwork& n, const Array& x) {
                const auto rows = to_rows(x);
                return quantization_error(n, rows);
            },
            py::arg("x"))
        .def_property_readonly("dim", &GwrNetwork::dim)
        .def_property_readonly("params", &GwrNetwork::params)
        .def_property_readonly("steps", &GwrNetwork::steps)
        .def_property_readonly("weights", &node_weights<GwrNetwork>)
        .def_property_readonly("habituations", &node_habituations<GwrNetwork>)
        .def_property_readonly("edges", [](const GwrNetwork& n) { return n.graph().edges(); })
        .def("__len__", &GwrNetwork::size)
        .def("__eq__", [](const GwrNetwork& a, const GwrNetwork& b) { return a == b; });

    py::class_<GammaInference>(m, "GammaInference")
        .def_readonly("bmu", &GammaInference::bmu)
        .def_readonly("distance", &GammaInference::distance)
        .def_readonly("activity", &GammaInference::activity);

    py::class_<GammaGwr>(m, "GammaGwr")
        .def(py::init([](std::size_t dim, GammaParams params, std::uint64_t seed) {
                 return GammaGwr(dim, std::move(params), seed);
             }),
             py::arg("dim"), py::arg("params") = GammaParams{}, py::arg("seed") = 1)
        .def("begin_sequence", &GammaGwr::begin_sequence)
        .def(
            "train_step",
            [](GammaGwr& n, const Array& x, std::optional<int> label) { return n.train_step(to_vector(x), label); },
            py::arg("x"), py::arg("label") = py::none())
        .def(
            "train_sequence",
            [](GammaGwr& n, const Array& x, std::optional<int> label) {
                return n.train_sequence(VectorSequence{to_rows(x), label});
            },
            py::arg("x"), py::arg("label") = py::none())
        .def(
            "infer",
            [](const GammaGwr& n, const Array& x) {
                GlobalContext ctx = n.fresh_context();
                std::vector<GammaInference> out;
                for (const auto& row : to_rows(x)) out.push_back(n.infer_step(ctx, row));
                return out;
            },
            py::arg("x"), "BMU, distance and activity per step, starting from an empty context.")
        .def(
            "predict_next", [](const GammaGwr& n, const Array& x) { return from_vector(predict_next(n, to_vector(x))); },
            py::arg("omega_prev"))
        .def(
            "rollout",
            [](const GammaGwr& n, const Array& seed, std::size_t steps) {
                return from_rows(rollout(n, to_vector(seed), steps), n.dim());
            },
            py::arg("seed"), py::arg("steps"))
        .def_property("params", &GammaGwr::params, &GammaGwr::set_params)
        .def_property_readonly("dim", &GammaGwr::dim)
        .def_property_readonly("weights", &node_weights<GammaGwr>)
        .def_property_readonly("habituations", &node_habituations<GammaGwr>)
        .def_property_readonly("edges", [](const GammaGwr& n) { return n.graph().edges(); })
        .def("__len__", &GammaGwr::size);

    py::class_<Sequence>(m, "Sequence")
        .def(py::init([](std::string id, std::string subject, std::optional<int> label, const Array& frames) {
                 return Sequence{std::move(id), std::move(subject), label, array_to_frames(frames)};
             }),
             py::arg("id"), py::arg("subject"), py::arg("label"), py::arg("frames"))
        .def_readwrite("id", &Sequence::id)
        .def_readwrite("subject", &Sequence::subject)
        .def_readwrite("label", &Sequence::label)
        .def_property(
            "frames", &frames_to_array, [](Sequence& s, const Array& a) { s.frames = array_to_frames(a); },
            "Coordinates as a (T, J, 3) array.")
        .def("__len__", [](const Sequence& s) { return s.frames.size(); });

    m.def("reversed", &reversed, py::arg("sequence"));
    m.def("with_joint_offset", &with_joint_offset, py::arg("sequence"), py::arg("joint"), py::arg("start"),
          py::arg("length"), py::arg("offset"));

    py::class_<SyntheticSpec>(m, "SyntheticSpec")
        .def(py::init<>())
        .def_readwrite("classes", &SyntheticSpec::classes)
        .def_readwrite("joints", &SyntheticSpec::joints)
        .def_readwrite("frames", &SyntheticSpec::frames)
        .def_readwrite("subjects", &SyntheticSpec::subjects)
        .def_readwrite("sequences_per_cell", &SyntheticSpec::sequences_per_cell)
        .def_readwrite("noise_sigma", &SyntheticSpec::noise_sigma)
        .def_readwrite("seed", &SyntheticSpec::seed);
    m.def("gen_synthetic", &gen_synthetic, py::arg("spec"));

    m.def("iris_standardized", [] {
        const auto iris = iris_standardized();
        return py::make_tuple(from_rows(iris.x, iris.x.front().size()), iris.labels);
    });

    py::class_<GrowthCurves>(m, "GrowthCurves")
        .def_readonly("initial_qe", &GrowthCurves::initial_qe)
        .def_readonly("epochs", &GrowthCurves::epochs);
    py::class_<GngGwrComparison>(m, "GngGwrComparison")
        .def_readonly("gwr", &GngGwrComparison::gwr)
        .def_readonly("gng", &GngGwrComparison::gng);
    m.def(
        "compare_gng_gwr",
        [](const Array& x, std::size_t epochs, std::uint64_t seed, const GwrParams& gwr, const GngParams& gng) {
            const auto rows = to_rows(x);
            return compare_gng_gwr(rows, epochs, seed, gwr, gng);
        },
        py::arg("x"), py::arg("epochs"), py::arg("seed") = 1, py::arg("gwr") = GwrParams{},
        py::arg("gng") = GngParams{});

    py::class_<PipelineSpec>(m, "PipelineSpec")
        .def_static("concat", &PipelineSpec::concat_preset, py::arg("joints") = 13)
        .def_static("recurrent", &PipelineSpec::recurrent_preset, py::arg("joints") = 13)
        .def_static("deep", &PipelineSpec::deep_preset, py::arg("joints") = 13)
        .def_readonly("preset", &PipelineSpec::preset)
        .def_readwrite("epochs", &PipelineSpec::epochs)
        .def_readwrite("seed", &PipelineSpec::seed)
        .def_readwrite("hip_joint", &PipelineSpec::hip_joint)
        .def_readwrite("decision_window", &PipelineSpec::decision_window)
        .def_readwrite("decision_stride", &PipelineSpec::decision_stride);

    py::class_<WindowDecision>(m, "WindowDecision")
        .def_readonly("start", &WindowDecision::start)
        .def_readonly("label", &WindowDecision::label)
        .def_readonly("confidence", &WindowDecision::confidence);

    py::class_<Pipeline>(m, "Pipeline")
        .def(py::init(&Pipeline::build), py::arg("spec"))
        .def(
            "train",
            [](Pipeline& p, const std::vector<Sequence>& data) {
                std::vector<std::pair<std::string, std::vector<EpochStats>>> out;
                for (auto& l : p.train_layerwise(data).layers) out.emplace_back(l.layer, std::move(l.epochs));
                return out;
            },
            py::arg("data"), "Layer-wise training; returns (layer, epoch stats) per network.")
        .def("classify", &Pipeline::classify, py::arg("sequence"))
        .def("classify_windows", &Pipeline::classify_sequence, py::arg("sequence"))
        .def("mean_integration_activity", &Pipeline::mean_integration_activity, py::arg("sequence"))
        .def_property_readonly("trained", &Pipeline::trained)
        .def_property_readonly("spec", &Pipeline::spec)
        .def("__eq__", [](const Pipeline& a, const Pipeline& b) { return a == b; });

    py::class_<FeedbackParams>(m, "FeedbackParams")
        .def(py::init<>())
        .def_readwrite("threshold", &FeedbackParams::threshold)
        .def_readwrite("persistence", &FeedbackParams::persistence)
        .def_readwrite("rollout_horizon", &FeedbackParams::rollout_horizon)
        .def_readwrite("joint_threshold", &FeedbackParams::joint_threshold);

    py::class_<MistakeSpan>(m, "MistakeSpan")
        .def_readonly("start", &MistakeSpan::start)
        .def_readonly("end", &MistakeSpan::end)
        .def_readonly("joints", &MistakeSpan::joints)
        .def("__len__", &MistakeSpan::length);

    py::class_<FeedbackReport>(m, "FeedbackReport")
        .def_readonly("total", &FeedbackReport::total)
        .def_readonly("per_joint", &FeedbackReport::per_joint)
        .def_readonly("spans", &FeedbackReport::spans)
        .def_property_readonly("flagged", &FeedbackReport::flagged);

    py::class_<AssessorSpec>(m, "AssessorSpec")
        .def(py::init<>())
        .def_readwrite("params", &AssessorSpec::params)
        .def_readwrite("joints", &AssessorSpec::joints)
        .def_readwrite("hip_joint", &AssessorSpec::hip_joint)
        .def_readwrite("with_motion", &AssessorSpec::with_motion)
        .def_readwrite("epochs", &AssessorSpec::epochs)
        .def_readwrite("seed", &AssessorSpec::seed);

    py::class_<Assessor>(m, "Assessor")
        .def(py::init(
                 [](const std::vector<Sequence>& routines, const AssessorSpec& spec) {
                     return train_assessor(routines, spec);
                 }),
             py::arg("routines"), py::arg("spec") = AssessorSpec{})
        .def("assess", &Assessor::assess, py::arg("sequence"), py::arg("params") = FeedbackParams{})
        .def_property_readonly("network", [](const Assessor& a) { return a.net; })
        .def_readonly("history", &Assessor::history);

    py::class_<FeedbackEvaluation>(m, "FeedbackEvaluation")
        .def_property_readonly("tp", [](const FeedbackEvaluation& e) { return e.counts.tp; })
        .def_property_readonly("fn", [](const FeedbackEvaluation& e) { return e.counts.fn; })
        .def_property_readonly("tn", [](const FeedbackEvaluation& e) { return e.counts.tn; })
        .def_property_readonly("fp", [](const FeedbackEvaluation& e) { return e.counts.fp; })
        .def_readonly("tpr", &FeedbackEvaluation::tpr)
        .def_readonly("tnr", &FeedbackEvaluation::tnr)
        .def_readonly("ppv", &FeedbackEvaluation::ppv);
    m.def(
        "rates_from_counts",
        [](std::uint64_t tp, std::uint64_t fn, std::uint64_t tn, std::uint64_t fp) {
            return rates_from_counts({tp, fn, tn, fp});
        },
        py::arg("tp"), py::arg("fn"), py::arg("tn"), py::arg("fp"));

    // Model files: a pipeline or an assessor plus its label dictionary.
    m.def(
        "save_pipeline",
        [](const std::string& path, const Pipeline& p, std::vector<std::string> labels) {
            io::ModelFile f;
            f.kind = io::ModelKind::Pipeline;
            f.label_names = std::move(labels);
            f.pipeline = p;
            io::save_model(path, f);
        },
        py::arg("path"), py::arg("pipeline"), py::arg("labels"));
    m.def(
        "load_model",
        [](const std::string& path) -> py::tuple {
            auto f = io::load_model(path);
            if (f.kind == io::ModelKind::Pipeline) return py::make_tuple(py::cast(std::move(*f.pipeline)), f.label_names);
            return py::make_tuple(py::cast(std::move(*f.assessor)), f.label_names);
        },
        py::arg("path"), "Returns (Pipeline or Assessor, label names).");
    m.def(
        "read_dataset",
        [](const std::string& path) {
            auto d = io::read_dataset(path);
            return py::make_tuple(std::move(d.sequences), d.label_names);
        },
        py::arg("path"), "Returns (sequences, label names).");
}
