#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "gwrnet/eval.hpp"
#include "test_support.hpp"

using namespace gwrnet;

namespace {

SyntheticSpec tiny_spec(std::size_t classes = 3) {
    SyntheticSpec s;
    s.classes = classes;
    s.subjects = 3;
    s.sequences_per_cell = 1;
    s.frames = 30;
    return s;
}

bool same_data(const std::vector<Sequence>& a, const std::vector<Sequence>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].id != b[i].id || a[i].subject != b[i].subject || a[i].label != b[i].label ||
            a[i].frames != b[i].frames) {
            return false;
        }
    }
    return true;
}

// Mean of a window of flattened frames, used by the separability oracle.
Vector window_signature(const Sequence& s, std::size_t start, std::size_t length) {
    const auto motion = motion_diff(pose_features(s, 0));
    Vector speed(motion.front().size() / 3, 0.0);
    for (std::size_t t = start; t < start + length; ++t) {
        for (std::size_t j = 0; j < speed.size(); ++j) {
            speed[j] += std::hypot(motion[t][3 * j], motion[t][3 * j + 1]) / static_cast<double>(length);
        }
    }
    return speed;
}

}  // namespace

TEST_CASE("synthetic data is deterministic under its seed") {
    const auto spec = tiny_spec();
    CHECK(same_data(gen_synthetic(spec), gen_synthetic(spec)));
    auto other = spec;
    other.seed = 2;
    CHECK_FALSE(same_data(gen_synthetic(spec), gen_synthetic(other)));

    const auto data = gen_synthetic(spec);
    CHECK(data.size() == 9);
    for (const auto& s : data) {
        CHECK(s.frames.size() == 30);
        CHECK(s.frames.front().joint_count() == 13);
        REQUIRE(s.label.has_value());
    }
    CHECK(data.front().id == "p0_c0_r0");
    CHECK(data.front().subject == "p0");
}

TEST_CASE("noiseless classes with different frequencies are separated by a window oracle") {
    auto spec = tiny_spec(2);
    spec.signatures = {MotionSignature{1.0, 0.2, 0.0, 0.4}, MotionSignature{2.0, 0.2, 0.0, 0.4}};
    spec.subject_scale_spread = 0.0;
    const auto data = gen_synthetic(spec);
    // Per-joint speed is constant within a class and doubles with frequency.
    double max0 = 0.0, min1 = 1e9;
    for (const auto& s : data) {
        for (std::size_t start = 0; start + 10 < s.frames.size(); start += 5) {
            const auto sig = window_signature(s, start, 10);
            const double mean = std::accumulate(sig.begin(), sig.end(), 0.0) / static_cast<double>(sig.size());
            if (*s.label == 0) max0 = std::max(max0, mean);
            else min1 = std::min(min1, mean);
        }
    }
    CHECK(max0 < min1);
}

TEST_CASE("synthetic spec validation") {
    auto spec = tiny_spec();
    spec.noise_sigma = -0.1;
    CHECK_THROWS_AS(gen_synthetic(spec), Error);
    spec = tiny_spec(2);
    spec.signatures = {MotionSignature{}, MotionSignature{}};
    CHECK_THROWS_AS(gen_synthetic(spec), Error);
    spec.signatures = {MotionSignature{}};
    CHECK_THROWS_AS(gen_synthetic(spec), Error);
    spec = tiny_spec();
    spec.joints = 1;
    CHECK_THROWS_AS(gen_synthetic(spec), Error);
}

TEST_CASE("reversed flips frame order only") {
    const auto s = gen_synthetic(tiny_spec()).front();
    const auto r = reversed(s);
    CHECK(r.frames.front() == s.frames.back());
    CHECK(r.id == s.id);
    CHECK(reversed(r).frames == s.frames);
}

TEST_CASE("standardized iris has zero mean and unit variance") {
    const auto iris = iris_standardized();
    REQUIRE(iris.x.size() == 150);
    CHECK(std::count(iris.labels.begin(), iris.labels.end(), 2) == 50);
    for (std::size_t d = 0; d < 4; ++d) {
        double mean = 0.0, var = 0.0;
        for (const auto& x : iris.x) mean += x[d];
        mean /= 150.0;
        for (const auto& x : iris.x) var += (x[d] - mean) * (x[d] - mean);
        CHECK(std::abs(mean) < 1e-12);
        CHECK(var / 150.0 == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(iris_raw().x[0] == Vector{5.1, 3.5, 1.4, 0.2});
}

TEST_CASE("quantization error examples") {
    GwrNetwork net(2, GwrParams{}, 0, std::array<Vector, 2>{Vector{0.0, 0.0}, Vector{3.0, 4.0}});
    const std::vector<Vector> on_nodes{{0.0, 0.0}, {3.0, 4.0}};
    CHECK(quantization_error(net, on_nodes) == 0.0);

    const Vector p{1.0, 1.0}, q{4.0, 5.0};
    const Vector mid = midpoint(p, q);
    GwrNetwork centred(2, GwrParams{}, 0, std::array<Vector, 2>{mid, mid});
    CHECK(quantization_error(centred, std::vector<Vector>{p, q}) == doctest::Approx(distance(p, q) / 2.0).epsilon(1e-15));

    CHECK_THROWS_AS(quantization_error(net, std::vector<Vector>{}), Error);
}

TEST_CASE("quantization error matches an exhaustive oracle") {
    GwrParams params;
    params.activation_threshold = 0.95;
    GwrNetwork net(3, params, 5);
    const auto data = testing::random_points(300, 3, 8);
    std::vector<Sample> samples;
    for (const auto& x : data) samples.push_back({x, std::nullopt});
    for (int e = 0; e < 3; ++e) net.train_epoch(samples, e);
    long double total = 0.0L;
    for (const auto& x : data) {
        long double best = std::numeric_limits<long double>::infinity();
        for (const auto& n : net.nodes()) {
            long double s = 0.0L;
            for (std::size_t i = 0; i < 3; ++i) s += (static_cast<long double>(x[i]) - n.weight[i]) * (static_cast<long double>(x[i]) - n.weight[i]);
            best = std::min(best, std::sqrt(s));
        }
        total += best;
    }
    CHECK(quantization_error(net, data) == doctest::Approx(static_cast<double>(total / 300.0L)).epsilon(1e-12));
}

TEST_CASE("classification metrics") {
    SUBCASE("perfect predictions") {
        const std::vector<int> t{0, 1, 2, 1};
        const auto r = classification_metrics(t, t);
        CHECK(r.accuracy == 1.0);
        CHECK(r.macro_precision == 1.0);
        CHECK(r.macro_recall == 1.0);
        CHECK(r.macro_f1 == 1.0);
    }
    SUBCASE("a constant predictor on balanced classes") {
        const std::vector<int> truth{0, 0, 1, 1}, pred{0, 0, 0, 0};
        const auto r = classification_metrics(pred, truth);
        CHECK(r.accuracy == 0.5);
        CHECK(r.per_class[1].precision == 0.0);
    }
    SUBCASE("hand confusion counts") {
        // For class 1: TP 3, FP 1, FN 2.
        const std::vector<int> truth{1, 1, 1, 0, 1, 1, 0};
        const std::vector<int> pred{1, 1, 1, 1, 0, 0, 0};
        const auto r = classification_metrics(pred, truth);
        const auto& c1 = r.per_class[1];
        CHECK(c1.label == 1);
        CHECK(c1.precision == doctest::Approx(0.75));
        CHECK(c1.recall == doctest::Approx(0.6));
        CHECK(c1.f1 == doctest::Approx(2.0 * 0.75 * 0.6 / 1.35));
        CHECK(c1.f1 == doctest::Approx(0.667).epsilon(1e-3));
    }
    SUBCASE("confusion rows sum to support and the matrix reproduces the report") {
        const std::vector<int> truth{0, 0, 1, 2, 2, 2, 1};
        const std::vector<int> pred{0, 2, 1, 2, 1, 2, 1};
        const auto r = classification_metrics(pred, truth);
        for (std::size_t i = 0; i < r.labels.size(); ++i) {
            CHECK(std::accumulate(r.confusion[i].begin(), r.confusion[i].end(), std::size_t{0}) == r.per_class[i].support);
        }
        const auto again = metrics_from_confusion(r.labels, r.confusion);
        CHECK(again.macro_f1 == r.macro_f1);
        CHECK(again.accuracy == r.accuracy);
    }
    CHECK_THROWS_AS(classification_metrics(std::vector<int>{}, std::vector<int>{}), Error);
    CHECK_THROWS_AS(classification_metrics(std::vector<int>{1}, std::vector<int>{1, 2}), Error);
}

TEST_CASE("fold construction") {
    auto data = gen_synthetic(tiny_spec());
    CvOptions loso;
    CHECK(make_folds(data, loso).size() == 3);

    CvOptions kf;
    kf.protocol = CvProtocol::KFold;
    kf.k = data.size();
    CHECK(make_folds(data, kf).size() == data.size());

    kf.k = 4;
    auto ids_of = [](const std::vector<Sequence>& d, const std::vector<std::vector<std::size_t>>& folds) {
        std::vector<std::vector<std::string>> out;
        for (const auto& f : folds) {
            std::vector<std::string> ids;
            for (std::size_t i : f) ids.push_back(d[i].id);
            out.push_back(ids);
        }
        return out;
    };
    const auto reference = ids_of(data, make_folds(data, kf));
    auto shuffled = data;
    std::mt19937_64 rng(3);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(ids_of(shuffled, make_folds(shuffled, kf)) == reference);
    std::size_t total = 0;
    for (const auto& f : reference) total += f.size();
    CHECK(total == data.size());

    kf.k = data.size() + 1;
    CHECK_THROWS_AS(make_folds(data, kf), Error);
    data[2].subject.clear();
    CHECK_THROWS_AS(make_folds(data, loso), Error);
    data[2].subject = "p0";
    data[3].id = data[4].id;
    CHECK_THROWS_AS(make_folds(data, loso), Error);
}

TEST_CASE("cross-validation is deterministic and trains each fold from scratch") {
    const auto data = gen_synthetic(tiny_spec());
    auto spec = PipelineSpec::recurrent_preset(13);
    spec.epochs = 3;
    const auto a = cross_validate(data, CvOptions{}, spec);
    const auto b = cross_validate(data, CvOptions{}, spec);
    REQUIRE(a.folds.size() == 3);
    CHECK(a.folds[0].name == "p0");
    for (std::size_t f = 0; f < 3; ++f) CHECK(a.folds[f].predicted == b.folds[f].predicted);
    CHECK(a.pooled.confusion == b.pooled.confusion);
    CHECK(a.pooled.accuracy >= 0.9);
}

TEST_CASE("heavy noise drives accuracy toward chance") {
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto s = tiny_spec();
        s.seed = seed;
        s.noise_sigma = 1.0;
        s.sequences_per_cell = 2;
        auto spec = PipelineSpec::recurrent_preset(13);
        spec.epochs = 2;
        CvOptions o;
        o.protocol = CvProtocol::KFold;
        o.k = 3;
        o.seed = seed;
        total += cross_validate(gen_synthetic(s), o, spec).pooled.accuracy;
    }
    CHECK(std::abs(total / 3.0 - 1.0 / 3.0) <= 0.1);
}

TEST_CASE("GNG and GWR growth curves on Iris") {
    const auto iris = iris_standardized();
    GwrParams gwr;
    gwr.activation_threshold = 0.8;
    const auto c = compare_gng_gwr(iris.x, 30, 1, gwr);
    REQUIRE(c.gwr.epochs.size() == 30);
    REQUIRE(c.gng.epochs.size() == 30);

    // GNG inserts one node per lambda = 100 steps, 150 steps per epoch.
    for (std::size_t e = 0; e < 30; ++e) CHECK(c.gng.epochs[e].node_count == 2 + (150 * (e + 1)) / 100);

    const std::size_t plateau = growth_plateau_epoch(c.gwr.epochs);
    CHECK(plateau < 29);
    CHECK(c.gwr.epochs.back().node_count > c.gwr.epochs.front().node_count);
    for (std::size_t e = 1; e <= plateau; ++e) {
        CHECK(c.gwr.epochs[e].mean_bmu_habituation <= c.gwr.epochs[e - 1].mean_bmu_habituation + 1e-6);
    }
    CHECK(c.gwr.epochs.back().quantization_error < c.gwr.initial_qe);
    CHECK(c.gng.epochs.back().quantization_error < c.gng.initial_qe);
    CHECK(c.gwr.epochs.back().quantization_error < c.gwr.epochs.front().quantization_error);
}

TEST_CASE("growth plateau index") {
    std::vector<EpochStats> e(5);
    const std::size_t counts[] = {3, 5, 8, 8, 8};
    for (std::size_t i = 0; i < 5; ++i) e[i].node_count = counts[i];
    CHECK(growth_plateau_epoch(e) == 2);
    e[4].node_count = 9;
    CHECK(growth_plateau_epoch(e) == 4);
}

TEST_CASE("continual protocol bookkeeping") {
    auto s = tiny_spec(2);
    const auto data = gen_synthetic(s);
    auto spec = PipelineSpec::recurrent_preset(13);
    spec.epochs = 3;
    const std::vector<int> order{1, 0};
    const auto r = continual_protocol(data, data, order, spec);
    CHECK(r.growing.classes == order);
    // Nothing is evaluated on classes not yet seen.
    CHECK_FALSE(r.growing.accuracy[1][0].has_value());
    CHECK(r.growing.accuracy[0][0].has_value());
    CHECK(r.growing.accuracy[1][1].has_value());
    // Phase 1 is shared by both learners.
    CHECK(r.growing.accuracy[0][0] == r.fixed_capacity.accuracy[0][0]);
    CHECK(r.growing_nodes[0] == r.fixed_nodes[0]);
    CHECK(r.fixed_nodes[1] == r.fixed_nodes[0]);
    CHECK(r.growing_nodes[1] > r.growing_nodes[0]);
    CHECK(*r.growing.accuracy[0][1] >= 0.8);

    // Phase-1 accuracy equals that of a plain single-class run.
    std::vector<Sequence> only;
    for (const auto& q : data) {
        if (q.label == 1) only.push_back(q);
    }
    auto single = Pipeline::build(spec);
    single.train_layerwise(only);
    std::size_t hit = 0;
    for (const auto& q : only) hit += single.classify(q) == 1 ? 1 : 0;
    CHECK(*r.growing.accuracy[0][0] == static_cast<double>(hit) / static_cast<double>(only.size()));

    CHECK_THROWS_AS(continual_protocol(data, data, std::vector<int>{0}, spec), Error);
    CHECK_THROWS_AS(continual_protocol(data, data, std::vector<int>{0, 0}, spec), Error);
}
