#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "gwrnet/io.hpp"

using namespace gwrnet;
using namespace gwrnet::io;

namespace {

std::vector<Sequence> corpus(std::size_t classes, std::size_t subjects, std::uint64_t seed, std::size_t frames = 40) {
    SyntheticSpec s;
    s.classes = classes;
    s.subjects = subjects;
    s.sequences_per_cell = 1;
    s.frames = frames;
    s.seed = seed;
    return gen_synthetic(s);
}

Pipeline trained(PipelineSpec spec, const std::vector<Sequence>& data, std::size_t epochs = 2) {
    spec.epochs = epochs;
    Pipeline p = Pipeline::build(spec);
    p.train_layerwise(data);
    return p;
}

ModelFile as_model(Pipeline p) {
    ModelFile m;
    m.kind = ModelKind::Pipeline;
    m.label_names = {"c0", "c1", "c2"};
    m.pipeline = std::move(p);
    return m;
}

template <class E>
std::string message_of(auto&& fn) {
    try {
        fn();
    } catch (const E& e) {
        return e.what();
    }
    return "<no exception>";
}

Dataset parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse_dataset(in, "mem");
}

const std::string kHeader = "sequence_id,subject_id,label,frame,x0,y0,z0,x1,y1,z1\n";

}  // namespace

TEST_CASE("fixed formatting is locale free and drops negative zero") {
    CHECK(fixed(1.5, 3) == "1.500");
    CHECK(fixed(-2.25, 1) == "-2.2");
    CHECK(fixed(-0.0, 2) == "0.00");
    CHECK(fixed(-1e-9, 3) == "0.000");
    CHECK(fixed(1234567.0, 0) == "1234567");
    CHECK_THROWS_AS(fixed(std::nan(""), 2), Error);
}

TEST_CASE("csv fields are quoted only when needed") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("fnv1a64 matches published test vectors") {
    CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
    CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
    CHECK(hex64(fnv1a64("foobar")) == "85944171f73967e8");
}

TEST_CASE("dataset csv round-trips and rewrites byte-identically") {
    Dataset d = dataset_from_sequences(corpus(3, 2, 5));
    std::ostringstream first;
    write_dataset(first, d);
    Dataset back = parse_text(first.str());
    REQUIRE(back.sequences.size() == d.sequences.size());
    CHECK(back.joints == 13);
    CHECK(back.label_names == d.label_names);
    for (std::size_t i = 0; i < d.sequences.size(); ++i) {
        const auto& a = d.sequences[i];
        const auto& b = back.sequences[i];
        CHECK(a.id == b.id);
        CHECK(a.subject == b.subject);
        CHECK(a.label == b.label);
        REQUIRE(a.frames.size() == b.frames.size());
        for (std::size_t t = 0; t < a.frames.size(); ++t) {
            for (std::size_t j = 0; j < 13; ++j) {
                for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(a.frames[t].joints[j][k] - b.frames[t].joints[j][k]) <= 5e-10);
            }
        }
    }
    std::ostringstream second;
    write_dataset(second, back);
    CHECK(first.str() == second.str());
}

TEST_CASE("label ids follow the sorted label names and empty labels stay unlabeled") {
    const auto d = parse_text(kHeader +
                              "s1,p0,walk,0,0,0,0,1,1,1\n"
                              "s2,p0,jump,0,0,0,0,1,1,1\n"
                              "s3,p1,,0,0,0,0,1,1,1\n");
    CHECK(d.label_names == std::vector<std::string>{"jump", "walk"});
    CHECK(d.sequences[0].label == 1);
    CHECK(d.sequences[1].label == 0);
    CHECK_FALSE(d.sequences[2].label.has_value());
    CHECK(d.joints == 2);
}

TEST_CASE("quoted ids, CRLF line endings and blank lines are accepted") {
    const auto d = parse_text(kHeader + "\"a,b\",p0,x,0,1,2,3,4,5,6\r\n\r\n\"a,b\",p0,x,1,1,2,3,4,5,6.5\r\n");
    REQUIRE(d.sequences.size() == 1);
    CHECK(d.sequences[0].id == "a,b");
    CHECK(d.sequences[0].frames.size() == 2);
    CHECK(d.sequences[0].frames[1].joints[1][2] == 6.5);
}

TEST_CASE("malformed data files are rejected with the line number") {
    CHECK(message_of<DataError>([] { parse_text(""); }).find("empty") != std::string::npos);
    CHECK(message_of<DataError>([] { parse_text("id,subject_id,label,frame,x0,y0,z0\n"); }).find("sequence_id") !=
          std::string::npos);
    CHECK(message_of<DataError>([] { parse_text("sequence_id,subject_id,label,frame,x0,y0,w0\n"); })
              .find("z0") != std::string::npos);
    CHECK(message_of<DataError>([] { parse_text(kHeader); }).find("no data rows") != std::string::npos);
    CHECK(message_of<DataError>([] { parse_text(kHeader + "s,p,a,0,1,2,3,4,5\n"); }).find("mem:2") !=
          std::string::npos);
    CHECK(message_of<DataError>([] { parse_text(kHeader + "s,p,a,0,1,2,3,4,5,nope\n"); }).find("not a number") !=
          std::string::npos);
    CHECK(message_of<DataError>([] { parse_text(kHeader + "s,p,a,0,1,2,3,4,5,inf\n"); }).find("non-finite") !=
          std::string::npos);
    CHECK(message_of<DataError>([] { parse_text(kHeader + "s,p,a,1,1,2,3,4,5,6\n"); }).find("should be 0") !=
          std::string::npos);
    CHECK(message_of<DataError>([] {
              parse_text(kHeader + "s,p,a,0,1,2,3,4,5,6\nt,p,a,0,1,2,3,4,5,6\ns,p,a,1,1,2,3,4,5,6\n");
          }).find("not contiguous") != std::string::npos);
    CHECK(message_of<DataError>([] { parse_text(kHeader + "s,p,a,0,1,2,3,4,5,6\ns,p,b,1,1,2,3,4,5,6\n"); })
              .find("label changes") != std::string::npos);
    CHECK(message_of<DataError>([] { parse_text(kHeader + "s,p,a,0,1,2,3,4,5,6\ns,q,a,1,1,2,3,4,5,6\n"); })
              .find("subject changes") != std::string::npos);
    CHECK(message_of<DataError>([] { parse_text(kHeader + "\"s,p,a,0,1,2,3,4,5,6\n"); }).find("unterminated") !=
          std::string::npos);
}

TEST_CASE("relabel maps names onto a model dictionary") {
    auto d = parse_text(kHeader + "s1,p0,walk,0,0,0,0,1,1,1\ns2,p0,swim,0,0,0,0,1,1,1\n");
    relabel(d, {"run", "walk"});
    CHECK(d.sequences[0].label == 1);
    CHECK_FALSE(d.sequences[1].label.has_value());
    CHECK(d.label_names == std::vector<std::string>{"run", "walk"});
}

TEST_CASE("pipeline models round-trip exactly for every preset") {
    const auto data = corpus(3, 2, 11);
    for (const auto& spec : {PipelineSpec::concat_preset(13), PipelineSpec::recurrent_preset(13),
                             PipelineSpec::deep_preset(13)}) {
        CAPTURE(spec.preset);
        const ModelFile m = as_model(trained(spec, data));
        const std::string text = serialize_model(m);
        const ModelFile back = parse_model(text);
        CHECK(back.kind == ModelKind::Pipeline);
        CHECK(back.label_names == m.label_names);
        REQUIRE(back.pipeline.has_value());
        CHECK(*back.pipeline == *m.pipeline);
        CHECK(serialize_model(back) == text);
    }
}

TEST_CASE("a reloaded pipeline classifies 100 sequences identically") {
    const auto train = corpus(3, 2, 21);
    const Pipeline p = trained(PipelineSpec::recurrent_preset(13), train);
    const Pipeline q = *parse_model(serialize_model(as_model(p))).pipeline;
    SyntheticSpec s;
    s.classes = 5;
    s.subjects = 10;
    s.sequences_per_cell = 2;
    s.frames = 30;
    s.seed = 99;
    const auto probe = gen_synthetic(s);
    REQUIRE(probe.size() == 100);
    for (const auto& seq : probe) {
        const auto a = p.classify_sequence(seq);
        const auto b = q.classify_sequence(seq);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].label == b[i].label);
            CHECK(a[i].confidence == b[i].confidence);
        }
    }
}

TEST_CASE("training twice with one seed gives byte-identical model files") {
    const auto data = corpus(2, 2, 4);
    const auto a = serialize_model(as_model(trained(PipelineSpec::concat_preset(13), data)));
    const auto b = serialize_model(as_model(trained(PipelineSpec::concat_preset(13), data)));
    CHECK(a == b);
    auto other = PipelineSpec::concat_preset(13);
    other.seed = 2;
    CHECK(serialize_model(as_model(trained(other, data))) != a);
}

TEST_CASE("assessor models round-trip with their history and frozen state") {
    const auto routines = corpus(1, 1, 3, 80);
    AssessorSpec spec;
    spec.epochs = 3;
    spec.with_motion = true;
    ModelFile m;
    m.kind = ModelKind::Assessor;
    m.assessor = train_assessor(routines, spec);
    const std::string text = serialize_model(m);
    const ModelFile back = parse_model(text);
    REQUIRE(back.assessor.has_value());
    CHECK(*back.assessor == *m.assessor);
    CHECK(back.assessor->net.frozen());
    CHECK(back.assessor->history.size() == 3);
    FeedbackParams fp;
    fp.persistence = 5;
    const auto r1 = m.assessor->assess(routines[0], fp);
    const auto r2 = back.assessor->assess(routines[0], fp);
    CHECK(r1.total == r2.total);
    CHECK(r1.spans == r2.spans);
}

TEST_CASE("corrupt, foreign and future model files are refused") {
    const std::string text = serialize_model(as_model(trained(PipelineSpec::recurrent_preset(13), corpus(3, 2, 8))));

    std::string edited = text;
    const auto pos = edited.find("\"habituation\": 0.");
    REQUIRE(pos != std::string::npos);
    edited[pos + 17] = edited[pos + 17] == '9' ? '8' : '9';
    CHECK(message_of<DataError>([&] { parse_model(edited); }).find("checksum mismatch") != std::string::npos);

    std::string future = text;
    const auto v = future.find("\"format_version\": 1");
    REQUIRE(v != std::string::npos);
    future.replace(v, 19, "\"format_version\": 2");
    CHECK(message_of<DataError>([&] { parse_model(future); }).find("unsupported format_version 2") !=
          std::string::npos);

    CHECK(message_of<DataError>([] { parse_model("{\"hello\": 1}"); }).find("not a gwrnet model") !=
          std::string::npos);
    CHECK(message_of<DataError>([] { parse_model("not json"); }).find("not a model file") != std::string::npos);
    CHECK(message_of<DataError>([&] { parse_model(text.substr(0, text.size() / 2)); }).find("not a model file") !=
          std::string::npos);
}

TEST_CASE("a minimal pipeline config resolves the preset") {
    const Config c = parse_config(R"({"model": "pipeline", "preset": "deep", "joints": 13, "seed": 7, "epochs": 12})");
    CHECK(c.model == ModelKind::Pipeline);
    CHECK(c.pipeline.preset == "deep");
    CHECK(c.pipeline.seed == 7);
    CHECK(c.pipeline.epochs == 12);
    CHECK(c.assessor.seed == 7);
    CHECK(c.cv.seed == 7);
    CHECK(c.pipeline.decision_window == 10);
    CHECK(c.pipeline.decision_stride == 10);
}

TEST_CASE("layer settings take precedence over the shared network block") {
    const Config c = parse_config(R"({
        "model": "pipeline", "preset": "recurrent", "joints": 13, "seed": 1, "epochs": 3,
        "network": {"activation_threshold": 0.8, "eps_b": 0.2},
        "layers": {"integration": {"gwr": {"activation_threshold": 0.95}}}
    })");
    CHECK(c.pipeline.pose_layers[0].params.gwr.activation_threshold == 0.8);
    CHECK(c.pipeline.motion_layers[0].params.gwr.eps_b == 0.2);
    CHECK(c.pipeline.integration.params.gwr.activation_threshold == 0.95);
    CHECK(c.pipeline.integration.params.gwr.eps_b == 0.2);
    CHECK(c.pipeline.integration.kind == NetworkKind::GammaGwr);
}

TEST_CASE("command-line style overrides reach every nested spec") {
    Config c = parse_config(R"({"model": "pipeline", "preset": "concat", "joints": 13, "seed": 1, "epochs": 3,
                                "synthetic": {"classes": 2}})");
    c.set_seed(42);
    c.set_epochs(9);
    CHECK(c.pipeline.seed == 42);
    CHECK(c.synthetic->seed == 42);
    CHECK(c.pipeline.epochs == 9);
    CHECK(c.assessor.epochs == 9);
}

TEST_CASE("assessor configs carry feedback settings") {
    const Config c = parse_config(R"({"model": "assessor", "joints": 13, "hip_joint": 0, "seed": 3, "epochs": 10,
        "network": {"activation_threshold": 0.9, "beta": 0.6},
        "assessment": {"with_motion": true, "f_threshold": 0.5, "persistence": 20, "rollout": 15}})");
    CHECK(c.model == ModelKind::Assessor);
    CHECK(c.assessor.params.gwr.activation_threshold == 0.9);
    CHECK(c.assessor.params.beta == 0.6);
    CHECK(c.assessor.with_motion);
    CHECK(c.feedback.threshold == 0.5);
    CHECK(c.feedback.persistence == 20);
    CHECK(c.feedback.rollout_horizon == 15);
}

TEST_CASE("config errors name the offending key") {
    auto err = [](const std::string& text) { return message_of<UsageError>([&] { parse_config(text); }); };
    CHECK(err(R"({"model": "pipeline", "preset": "concat", "joints": 13, "epochs": 3})").find("'seed'") !=
          std::string::npos);
    CHECK(err(R"({"model": "pipeline", "preset": "concat", "joints": 13, "seed": 1, "epochs": 3, "colour": 1})")
              .find("unknown key 'colour'") != std::string::npos);
    CHECK(err(R"({"model": "pipeline", "preset": "concat", "joints": 13, "seed": 1, "epochs": 3,
                  "network": {"eps": 0.1}})")
              .find("unknown key 'network.eps'") != std::string::npos);
    CHECK(err(R"({"model": "pipeline", "preset": "wide", "joints": 13, "seed": 1, "epochs": 3})").find("preset") !=
          std::string::npos);
    CHECK(err(R"({"model": "pipeline", "preset": "concat", "joints": 13, "seed": -1, "epochs": 3})")
              .find("non-negative") != std::string::npos);
    CHECK(err(R"({"model": "pipeline", "preset": "concat", "joints": 13, "seed": 1, "epochs": 3,
                  "decision_window": 2})")
              .find("decision window") != std::string::npos);
    CHECK(err(R"({"model": "pipeline", "preset": "concat", "joints": 13, "seed": 1, "epochs": 3,
                  "layers": {"pose": [{"kind": "gwr"}, {"kind": "gwr", "expected_input_dim": 100}]}})")
              .find("pose layer 2") != std::string::npos);
    CHECK(err("{not json").find("invalid JSON") != std::string::npos);
    CHECK(err(R"({"model": "net", "seed": 1, "epochs": 3, "joints": 13})").find("'model'") != std::string::npos);
}
