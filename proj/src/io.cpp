#include "gwrnet/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gwrnet::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Formatting

std::string fixed(double value, int precision) {
    require(std::isfinite(value), "cannot format a non-finite number");
    if (value == 0.0) value = 0.0;  // drop the sign of negative zero
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, precision);
    require(ec == std::errc{}, "number formatting overflow");
    std::string out(buf, end);
    // Values that round to zero keep no sign either.
    if (out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
    return out;
}

std::string csv_field(std::string_view text) {
    if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

void write_file_atomic(const std::string& path, std::string_view content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw DataError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw DataError("cannot move output into place at '" + path + "'");
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Data files

namespace {

std::vector<std::string> split_csv_line(const std::string& line, const std::string& where) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            if (!cur.empty()) throw DataError(where + ": stray quote");
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw DataError(where + ": unterminated quote");
    fields.push_back(std::move(cur));
    return fields;
}

double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || s.empty()) throw DataError(where + ": '" + s + "' is not a number");
    if (!std::isfinite(v)) throw DataError(where + ": non-finite coordinate");
    return v;
}

std::size_t parse_index(const std::string& s, const std::string& where) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw DataError(where + ": '" + s + "' is not a frame index");
    }
    return v;
}

}  // namespace

std::optional<int> Dataset::label_id(std::string_view name) const {
    for (std::size_t i = 0; i < label_names.size(); ++i) {
        if (label_names[i] == name) return static_cast<int>(i);
    }
    return std::nullopt;
}

std::string Dataset::label_name(int id) const {
    if (id >= 0 && static_cast<std::size_t>(id) < label_names.size()) return label_names[static_cast<std::size_t>(id)];
    return std::to_string(id);
}

Dataset parse_dataset(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    auto where = [&] { return source + ":" + std::to_string(line_no); };
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    };

    if (!next_line()) throw DataError(source + ": empty data file");
    const auto header = split_csv_line(line, where());
    const char* fixed_cols[] = {"sequence_id", "subject_id", "label", "frame"};
    if (header.size() < 7 || (header.size() - 4) % 3 != 0) {
        throw DataError(where() + ": header must be sequence_id,subject_id,label,frame followed by x,y,z per joint");
    }
    for (std::size_t i = 0; i < 4; ++i) {
        if (header[i] != fixed_cols[i]) {
            throw DataError(where() + ": header column " + std::to_string(i + 1) + " must be '" + fixed_cols[i] + "'");
        }
    }
    const std::size_t joints = (header.size() - 4) / 3;
    for (std::size_t j = 0; j < joints; ++j) {
        const char axes[] = {'x', 'y', 'z'};
        for (std::size_t k = 0; k < 3; ++k) {
            const std::string expected = axes[k] + std::to_string(j);
            if (header[4 + 3 * j + k] != expected) {
                throw DataError(where() + ": expected header column '" + expected + "'");
            }
        }
    }

    struct Raw {
        Sequence seq;
        std::string label;
    };
    std::vector<Raw> raws;
    std::set<std::string> seen;
    while (next_line()) {
        const auto f = split_csv_line(line, where());
        if (f.size() != header.size()) {
            throw DataError(where() + ": expected " + std::to_string(header.size()) + " fields, found " +
                            std::to_string(f.size()));
        }
        if (f[0].empty()) throw DataError(where() + ": empty sequence_id");
        if (raws.empty() || raws.back().seq.id != f[0]) {
            if (!seen.insert(f[0]).second) {
                throw DataError(where() + ": rows of sequence '" + f[0] + "' are not contiguous");
            }
            Raw r;
            r.seq.id = f[0];
            r.seq.subject = f[1];
            r.label = f[2];
            raws.push_back(std::move(r));
        }
        Raw& cur = raws.back();
        if (f[1] != cur.seq.subject) throw DataError(where() + ": subject changes within sequence '" + f[0] + "'");
        if (f[2] != cur.label) throw DataError(where() + ": label changes within sequence '" + f[0] + "'");
        const std::size_t frame = parse_index(f[3], where());
        if (frame != cur.seq.frames.size()) {
            throw DataError(where() + ": frame " + std::to_string(frame) + " of sequence '" + f[0] + "' should be " +
                            std::to_string(cur.seq.frames.size()));
        }
        Frame fr;
        fr.joints.resize(joints);
        for (std::size_t j = 0; j < joints; ++j) {
            for (std::size_t k = 0; k < 3; ++k) fr.joints[j][k] = parse_double(f[4 + 3 * j + k], where());
        }
        cur.seq.frames.push_back(std::move(fr));
    }
    if (raws.empty()) throw DataError(source + ": no data rows");

    Dataset out;
    out.joints = joints;
    std::set<std::string> names;
    for (const auto& r : raws) {
        if (!r.label.empty()) names.insert(r.label);
    }
    out.label_names.assign(names.begin(), names.end());
    for (auto& r : raws) {
        if (!r.label.empty()) r.seq.label = *out.label_id(r.label);
        out.sequences.push_back(std::move(r.seq));
    }
    return out;
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read data file '" + path + "'");
    return parse_dataset(in, path);
}

void relabel(Dataset& data, const std::vector<std::string>& dictionary) {
    for (auto& s : data.sequences) {
        if (!s.label) continue;
        const std::string name = data.label_name(*s.label);
        s.label.reset();
        for (std::size_t i = 0; i < dictionary.size(); ++i) {
            if (dictionary[i] == name) s.label = static_cast<int>(i);
        }
    }
    data.label_names = dictionary;
}

void write_dataset(std::ostream& out, const Dataset& data, int precision) {
    require(!data.sequences.empty(), "write_dataset: no sequences");
    const std::size_t joints = data.sequences.front().frames.at(0).joint_count();
    out << "sequence_id,subject_id,label,frame";
    for (std::size_t j = 0; j < joints; ++j) out << ",x" << j << ",y" << j << ",z" << j;
    out << "\n";
    for (const auto& s : data.sequences) {
        const std::string label = s.label ? csv_field(data.label_name(*s.label)) : std::string();
        for (std::size_t t = 0; t < s.frames.size(); ++t) {
            require(s.frames[t].joint_count() == joints, "write_dataset: joint count drift in '" + s.id + "'");
            out << csv_field(s.id) << ',' << csv_field(s.subject) << ',' << label << ',' << t;
            for (const auto& p : s.frames[t].joints) {
                for (double v : p) out << ',' << fixed(v, precision);
            }
            out << "\n";
        }
    }
}

Dataset dataset_from_sequences(std::vector<Sequence> sequences) {
    Dataset d;
    int max_label = -1;
    for (const auto& s : sequences) {
        if (s.label) {
            require(*s.label >= 0, "dataset: negative label id");
            max_label = std::max(max_label, *s.label);
        }
    }
    for (int i = 0; i <= max_label; ++i) d.label_names.push_back("c" + std::to_string(i));
    d.joints = sequences.empty() ? 0 : sequences.front().frames.at(0).joint_count();
    d.sequences = std::move(sequences);
    return d;
}

// ---------------------------------------------------------------------------
// Strict JSON object reader

namespace {

class Obj {
public:
    Obj(const json& j, std::string path, bool usage) : j_(j), path_(std::move(path)), usage_(usage) {
        if (!j_.is_object()) fail(path_ + " must be an object");
    }

    [[noreturn]] void fail(const std::string& msg) const {
        if (usage_) throw UsageError(msg);
        throw DataError(msg);
    }

    std::string key_path(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

    bool has(const std::string& k) {
        if (!j_.contains(k)) return false;
        seen_.insert(k);
        return true;
    }

    const json& at(const std::string& k) {
        if (!has(k)) fail("missing key '" + key_path(k) + "'");
        return j_.at(k);
    }

    double number(const std::string& k) {
        const json& v = at(k);
        if (!v.is_number()) fail("'" + key_path(k) + "' must be a number");
        return v.get<double>();
    }
    double number(const std::string& k, double fallback) { return has(k) ? number(k) : fallback; }

    std::uint64_t count(const std::string& k) {
        const json& v = at(k);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            fail("'" + key_path(k) + "' must be a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }
    std::uint64_t count(const std::string& k, std::uint64_t fallback) { return has(k) ? count(k) : fallback; }

    std::int64_t integer(const std::string& k) {
        const json& v = at(k);
        if (!v.is_number_integer()) fail("'" + key_path(k) + "' must be an integer");
        return v.get<std::int64_t>();
    }

    bool boolean(const std::string& k) {
        const json& v = at(k);
        if (!v.is_boolean()) fail("'" + key_path(k) + "' must be true or false");
        return v.get<bool>();
    }
    bool boolean(const std::string& k, bool fallback) { return has(k) ? boolean(k) : fallback; }

    std::string string(const std::string& k) {
        const json& v = at(k);
        if (!v.is_string()) fail("'" + key_path(k) + "' must be a string");
        return v.get<std::string>();
    }
    std::string string(const std::string& k, const std::string& fallback) { return has(k) ? string(k) : fallback; }

    const json& array(const std::string& k) {
        const json& v = at(k);
        if (!v.is_array()) fail("'" + key_path(k) + "' must be an array");
        return v;
    }

    Obj object(const std::string& k) { return Obj(at(k), key_path(k), usage_); }

    Vector vector(const std::string& k) { return to_vector(at(k), key_path(k)); }

    Vector to_vector(const json& v, const std::string& where) const {
        if (!v.is_array()) fail("'" + where + "' must be an array of numbers");
        Vector out;
        out.reserve(v.size());
        for (const auto& x : v) {
            if (!x.is_number()) fail("'" + where + "' must be an array of numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    bool usage() const { return usage_; }
    const std::string& path() const { return path_; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) fail("unknown key '" + key_path(it.key()) + "'");
        }
    }

private:
    const json& j_;
    std::string path_;
    bool usage_;
    std::set<std::string> seen_;
};

// ---- parameters ----

json gwr_params_json(const GwrParams& p) {
    json j;
    j["activation_threshold"] = p.activation_threshold;
    j["habituation_threshold"] = p.habituation_threshold;
    j["tau_b"] = p.tau_b;
    j["tau_n"] = p.tau_n;
    j["eps_b"] = p.eps_b;
    j["eps_n"] = p.eps_n;
    j["max_edge_age"] = p.max_edge_age;
    j["max_nodes"] = p.max_nodes == kUnboundedNodes ? json(nullptr) : json(p.max_nodes);
    return j;
}

// Partial update: only keys present are changed.
void read_gwr_params(Obj& o, GwrParams& p) {
    p.activation_threshold = o.number("activation_threshold", p.activation_threshold);
    p.habituation_threshold = o.number("habituation_threshold", p.habituation_threshold);
    p.tau_b = o.number("tau_b", p.tau_b);
    p.tau_n = o.number("tau_n", p.tau_n);
    p.eps_b = o.number("eps_b", p.eps_b);
    p.eps_n = o.number("eps_n", p.eps_n);
    if (o.has("max_edge_age")) p.max_edge_age = static_cast<int>(o.integer("max_edge_age"));
    if (o.has("max_nodes")) {
        p.max_nodes = o.at("max_nodes").is_null() ? kUnboundedNodes : o.count("max_nodes");
    }
}

void read_gng_params(Obj& o, GngParams& p) {
    p.eps_b = o.number("eps_b", p.eps_b);
    p.eps_n = o.number("eps_n", p.eps_n);
    if (o.has("max_edge_age")) p.max_edge_age = static_cast<int>(o.integer("max_edge_age"));
    p.lambda = o.count("lambda", p.lambda);
    p.split_error_decay = o.number("split_error_decay", p.split_error_decay);
    p.error_decay = o.number("error_decay", p.error_decay);
}

json gamma_params_json(const GammaParams& p) {
    return json{{"gwr", gwr_params_json(p.gwr)}, {"context_depth", p.context_depth}, {"alpha", p.alpha}, {"beta", p.beta}};
}

// Reads the context keys that sit next to (not inside) the gwr block.
void read_context_keys(Obj& o, GammaParams& p) {
    p.context_depth = o.count("context_depth", p.context_depth);
    if (o.has("alpha")) p.alpha = o.vector("alpha");
    p.beta = o.number("beta", p.beta);
}

GammaParams read_gamma_params(Obj& o) {
    GammaParams p;
    Obj g = o.object("gwr");
    read_gwr_params(g, p.gwr);
    g.finish();
    read_context_keys(o, p);
    o.finish();
    return p;
}

json layer_spec_json(const LayerSpec& l) {
    json j;
    j["kind"] = to_string(l.kind);
    j["window"] = l.window;
    j["pool_group"] = l.pool_group;
    j["expected_input_dim"] = l.expected_input_dim;
    j["context_depth"] = l.params.context_depth;
    j["alpha"] = l.params.alpha;
    j["beta"] = l.params.beta;
    j["gwr"] = gwr_params_json(l.params.gwr);
    return j;
}

void read_layer_spec(Obj& o, LayerSpec& l) {
    if (o.has("kind")) {
        try {
            l.kind = network_kind_from_string(o.string("kind"));
        } catch (const Error& e) {
            o.fail("'" + o.key_path("kind") + "': " + e.what());
        }
        if (l.kind == NetworkKind::Gwr) l.params.context_depth = 0;
    }
    l.window = o.count("window", l.window);
    l.pool_group = o.count("pool_group", l.pool_group);
    l.expected_input_dim = o.count("expected_input_dim", l.expected_input_dim);
    read_context_keys(o, l.params);
    if (o.has("gwr")) {
        Obj g = o.object("gwr");
        read_gwr_params(g, l.params.gwr);
        g.finish();
    }
    if (l.kind == NetworkKind::Gwr && l.params.context_depth != 0) {
        o.fail("'" + o.key_path("context_depth") + "' must be 0 for a gwr layer");
    }
    o.finish();
}

json pipeline_spec_json(const PipelineSpec& s) {
    json j;
    j["preset"] = s.preset;
    j["joints"] = s.joints;
    j["hip_joint"] = s.hip_joint;
    j["decision_window"] = s.decision_window;
    j["decision_stride"] = s.decision_stride;
    j["epochs"] = s.epochs;
    j["seed"] = s.seed;
    j["pose_layers"] = json::array();
    for (const auto& l : s.pose_layers) j["pose_layers"].push_back(layer_spec_json(l));
    j["motion_layers"] = json::array();
    for (const auto& l : s.motion_layers) j["motion_layers"].push_back(layer_spec_json(l));
    j["integration"] = layer_spec_json(s.integration);
    return j;
}

std::vector<LayerSpec> read_layer_list(Obj& o, const std::string& key) {
    const json& arr = o.array(key);
    std::vector<LayerSpec> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        Obj lo(arr[i], o.key_path(key) + "[" + std::to_string(i) + "]", o.usage());
        LayerSpec l;
        read_layer_spec(lo, l);
        out.push_back(l);
    }
    return out;
}

PipelineSpec read_pipeline_spec(Obj& o) {
    PipelineSpec s;
    s.preset = o.string("preset");
    s.joints = o.count("joints");
    s.hip_joint = o.count("hip_joint");
    s.decision_window = o.count("decision_window");
    s.decision_stride = o.count("decision_stride");
    s.epochs = o.count("epochs");
    s.seed = o.count("seed");
    s.pose_layers = read_layer_list(o, "pose_layers");
    s.motion_layers = read_layer_list(o, "motion_layers");
    Obj integ = o.object("integration");
    read_layer_spec(integ, s.integration);
    o.finish();
    return s;
}

// ---- networks ----

json label_counts_json(const LabelCounts& counts) {
    json arr = json::array();
    for (const auto& [label, n] : counts) arr.push_back(json::array({label, n}));
    return arr;
}

LabelCounts read_label_counts(const json& j, const Obj& ctx, const std::string& where) {
    if (!j.is_array()) ctx.fail("'" + where + "' must be an array of [label, count] pairs");
    LabelCounts out;
    for (const auto& pair : j) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number_unsigned()) {
            ctx.fail("'" + where + "' must be an array of [label, count] pairs");
        }
        out[pair[0].get<int>()] = pair[1].get<std::uint64_t>();
    }
    return out;
}

json edges_json(const AgedGraph& g) {
    json arr = json::array();
    for (const auto& [a, b, age] : g.edges()) arr.push_back(json::array({a, b, age}));
    return arr;
}

AgedGraph read_edges(Obj& o, std::size_t nodes) {
    const json& arr = o.array("edges");
    std::vector<std::tuple<std::size_t, std::size_t, int>> edges;
    for (const auto& e : arr) {
        if (!e.is_array() || e.size() != 3 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned() ||
            !e[2].is_number_integer()) {
            o.fail("'" + o.key_path("edges") + "' entries must be [a, b, age]");
        }
        edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<int>());
    }
    try {
        return AgedGraph::from_edges(nodes, edges);
    } catch (const Error& e) {
        o.fail(o.key_path("edges") + ": " + e.what());
    }
}

json network_json(const Layer::Network& net) {
    json j;
    if (const auto* g = std::get_if<GwrNetwork>(&net)) {
        j["kind"] = "gwr";
        j["dim"] = g->dim();
        j["params"] = gwr_params_json(g->params());
        j["steps"] = g->steps();
        j["frozen"] = g->frozen();
        j["nodes"] = json::array();
        for (const auto& n : g->nodes()) {
            j["nodes"].push_back(
                {{"weight", n.weight}, {"habituation", n.habituation}, {"labels", label_counts_json(n.label_counts)}});
        }
        j["edges"] = edges_json(g->graph());
        return j;
    }
    const auto& g = std::get<GammaGwr>(net);
    j["kind"] = "gamma-gwr";
    j["dim"] = g.dim();
    j["params"] = gamma_params_json(g.params());
    j["steps"] = g.steps();
    j["frozen"] = g.frozen();
    j["nodes"] = json::array();
    for (const auto& n : g.nodes()) {
        j["nodes"].push_back({{"weight", n.weight},
                              {"contexts", n.contexts},
                              {"habituation", n.habituation},
                              {"labels", label_counts_json(n.label_counts)}});
    }
    j["edges"] = edges_json(g.graph());
    const GlobalContext& ctx = g.training_context();
    json c;
    c["contexts"] = ctx.contexts;
    c["previous"] = ctx.previous ? json{{"weight", ctx.previous->weight}, {"contexts", ctx.previous->contexts}}
                                 : json(nullptr);
    j["context"] = c;
    return j;
}

std::vector<Vector> read_vector_list(Obj& o, const std::string& key) {
    const json& arr = o.array(key);
    std::vector<Vector> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        out.push_back(o.to_vector(arr[i], o.key_path(key) + "[" + std::to_string(i) + "]"));
    }
    return out;
}

Layer::Network read_network(Obj& o) {
    const std::string kind = o.string("kind");
    const std::size_t dim = o.count("dim");
    const std::uint64_t steps = o.count("steps");
    const bool frozen = o.boolean("frozen");
    const json& nodes = o.array("nodes");
    try {
        if (kind == "gwr") {
            Obj po = o.object("params");
            GwrParams p;
            read_gwr_params(po, p);
            po.finish();
            std::vector<Prototype> protos;
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                Obj n(nodes[i], o.key_path("nodes") + "[" + std::to_string(i) + "]", false);
                Prototype proto;
                proto.weight = n.vector("weight");
                proto.habituation = n.number("habituation");
                proto.label_counts = read_label_counts(n.at("labels"), n, n.key_path("labels"));
                n.finish();
                protos.push_back(std::move(proto));
            }
            AgedGraph graph = read_edges(o, protos.size());
            o.finish();
            GwrNetwork net(dim, p, std::move(protos), std::move(graph), steps);
            if (frozen) net.freeze();
            return net;
        }
        if (kind == "gamma-gwr") {
            Obj po = o.object("params");
            GammaParams p = read_gamma_params(po);
            std::vector<GammaPrototype> protos;
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                Obj n(nodes[i], o.key_path("nodes") + "[" + std::to_string(i) + "]", false);
                GammaPrototype proto;
                proto.weight = n.vector("weight");
                proto.contexts = read_vector_list(n, "contexts");
                proto.habituation = n.number("habituation");
                proto.label_counts = read_label_counts(n.at("labels"), n, n.key_path("labels"));
                n.finish();
                protos.push_back(std::move(proto));
            }
            AgedGraph graph = read_edges(o, protos.size());
            Obj co = o.object("context");
            GlobalContext ctx;
            ctx.contexts = read_vector_list(co, "contexts");
            if (!co.at("previous").is_null()) {
                Obj prev = co.object("previous");
                GlobalContext::Snapshot snap;
                snap.weight = prev.vector("weight");
                snap.contexts = read_vector_list(prev, "contexts");
                prev.finish();
                ctx.previous = std::move(snap);
            }
            co.finish();
            o.finish();
            GammaGwr net(dim, p, std::move(protos), std::move(graph), std::move(ctx), steps);
            if (frozen) net.freeze();
            return net;
        }
    } catch (const DataError&) {
        throw;
    } catch (const Error& e) {
        throw DataError(o.path() + ": " + e.what());
    }
    o.fail("'" + o.key_path("kind") + "' must be gwr or gamma-gwr");
}

json epoch_stats_json(const EpochStats& e) {
    return json{{"mean_activity", e.mean_activity},
                {"mean_bmu_habituation", e.mean_bmu_habituation},
                {"quantization_error", e.quantization_error},
                {"node_count", e.node_count},
                {"insertions", e.insertions}};
}

EpochStats read_epoch_stats(Obj& o) {
    EpochStats e;
    e.mean_activity = o.number("mean_activity");
    e.mean_bmu_habituation = o.number("mean_bmu_habituation");
    e.quantization_error = o.number("quantization_error");
    e.node_count = o.count("node_count");
    e.insertions = o.count("insertions");
    o.finish();
    return e;
}

json layers_json(const std::vector<Layer>& layers) {
    json arr = json::array();
    for (const auto& l : layers) arr.push_back({{"name", l.name()}, {"network", network_json(l.network())}});
    return arr;
}

std::vector<Layer> read_layers(Obj& o, const std::string& key, const std::vector<LayerSpec>& specs) {
    const json& arr = o.array(key);
    if (arr.size() > specs.size()) o.fail("'" + o.key_path(key) + "' has more layers than the spec declares");
    std::vector<Layer> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        Obj lo(arr[i], o.key_path(key) + "[" + std::to_string(i) + "]", false);
        const std::string name = lo.string("name");
        Obj no = lo.object("network");
        Layer::Network net = read_network(no);
        lo.finish();
        out.emplace_back(name, specs[i], std::move(net));
    }
    return out;
}

json pipeline_json(const Pipeline& p) {
    json j;
    j["spec"] = pipeline_spec_json(p.spec());
    j["pose"] = layers_json(p.pose_layers());
    j["motion"] = layers_json(p.motion_layers());
    j["integration"] = p.integration() ? json{{"name", p.integration()->name()},
                                              {"network", network_json(p.integration()->network())}}
                                       : json(nullptr);
    return j;
}

Pipeline read_pipeline(Obj& o) {
    Obj so = o.object("spec");
    PipelineSpec spec = read_pipeline_spec(so);
    auto pose = read_layers(o, "pose", spec.pose_layers);
    auto motion = read_layers(o, "motion", spec.motion_layers);
    std::optional<Layer> integration;
    if (!o.at("integration").is_null()) {
        Obj io = o.object("integration");
        const std::string name = io.string("name");
        Obj no = io.object("network");
        integration.emplace(name, spec.integration, read_network(no));
        io.finish();
    }
    o.finish();
    try {
        return Pipeline(std::move(spec), std::move(pose), std::move(motion), std::move(integration));
    } catch (const Error& e) {
        throw DataError(std::string("model pipeline: ") + e.what());
    }
}

json assessor_json(const Assessor& a) {
    json spec;
    spec["joints"] = a.spec.joints;
    spec["hip_joint"] = a.spec.hip_joint;
    spec["with_motion"] = a.spec.with_motion;
    spec["epochs"] = a.spec.epochs;
    spec["seed"] = a.spec.seed;
    spec["params"] = gamma_params_json(a.spec.params);
    json history = json::array();
    for (const auto& e : a.history) history.push_back(epoch_stats_json(e));
    return json{{"spec", spec}, {"network", network_json(Layer::Network(a.net))}, {"history", history}};
}

Assessor read_assessor(Obj& o) {
    Obj so = o.object("spec");
    AssessorSpec spec;
    spec.joints = so.count("joints");
    spec.hip_joint = so.count("hip_joint");
    spec.with_motion = so.boolean("with_motion");
    spec.epochs = so.count("epochs");
    spec.seed = so.count("seed");
    Obj po = so.object("params");
    spec.params = read_gamma_params(po);
    so.finish();
    Obj no = o.object("network");
    Layer::Network net = read_network(no);
    if (!std::holds_alternative<GammaGwr>(net)) o.fail("assessor network must be gamma-gwr");
    std::vector<EpochStats> history;
    const json& h = o.array("history");
    for (std::size_t i = 0; i < h.size(); ++i) {
        Obj eo(h[i], o.key_path("history") + "[" + std::to_string(i) + "]", false);
        history.push_back(read_epoch_stats(eo));
    }
    o.finish();
    auto& gamma = std::get<GammaGwr>(net);
    if (gamma.dim() != spec.layout().dim()) o.fail("assessor network dimension does not match its joint layout");
    return Assessor{spec, std::move(gamma), std::move(history)};
}

const char* kind_name(ModelKind k) { return k == ModelKind::Pipeline ? "pipeline" : "assessor"; }

}  // namespace

// ---------------------------------------------------------------------------
// Model files

std::string serialize_model(const ModelFile& model) {
    json body;
    body["format"] = "gwrnet-model";
    body["format_version"] = kModelFormatVersion;
    body["kind"] = kind_name(model.kind);
    body["labels"] = model.label_names;
    if (model.kind == ModelKind::Pipeline) {
        require(model.pipeline.has_value(), "serialize_model: pipeline missing");
        body["payload"] = pipeline_json(*model.pipeline);
    } else {
        require(model.assessor.has_value(), "serialize_model: assessor missing");
        body["payload"] = assessor_json(*model.assessor);
    }
    body["checksum"] = "fnv1a64:" + hex64(fnv1a64(body.dump()));
    return body.dump(1) + "\n";
}

ModelFile parse_model(std::string_view text, const std::string& source) {
    json body;
    try {
        body = json::parse(text.begin(), text.end());
    } catch (const json::exception& e) {
        throw DataError(source + ": not a model file (" + e.what() + ")");
    }
    if (!body.is_object() || !body.contains("format") || body["format"] != "gwrnet-model") {
        throw DataError(source + ": not a gwrnet model file");
    }
    if (!body.contains("format_version") || !body["format_version"].is_number_integer() ||
        body["format_version"].get<int>() != kModelFormatVersion) {
        const std::string got = body.contains("format_version") ? body["format_version"].dump() : "none";
        throw DataError(source + ": unsupported format_version " + got + " (expected " +
                        std::to_string(kModelFormatVersion) + ")");
    }
    if (!body.contains("checksum") || !body["checksum"].is_string()) throw DataError(source + ": checksum missing");
    const std::string stored = body["checksum"].get<std::string>();
    body.erase("checksum");
    const std::string actual = "fnv1a64:" + hex64(fnv1a64(body.dump()));
    if (stored != actual) throw DataError(source + ": checksum mismatch (file is corrupt or was edited)");

    Obj o(body, "", false);
    o.string("format");
    o.integer("format_version");
    ModelFile m;
    const std::string kind = o.string("kind");
    if (kind == "pipeline") {
        m.kind = ModelKind::Pipeline;
    } else if (kind == "assessor") {
        m.kind = ModelKind::Assessor;
    } else {
        throw DataError(source + ": unknown model kind '" + kind + "'");
    }
    for (const auto& l : o.array("labels")) {
        if (!l.is_string()) throw DataError(source + ": labels must be strings");
        m.label_names.push_back(l.get<std::string>());
    }
    Obj payload = o.object("payload");
    if (m.kind == ModelKind::Pipeline) {
        m.pipeline = read_pipeline(payload);
    } else {
        m.assessor = read_assessor(payload);
    }
    o.finish();
    return m;
}

void save_model(const std::string& path, const ModelFile& model) { write_file_atomic(path, serialize_model(model)); }

ModelFile load_model(const std::string& path) { return parse_model(read_file(path), path); }

// ---------------------------------------------------------------------------
// Configuration

void Config::set_seed(std::uint64_t s) {
    seed = s;
    pipeline.seed = s;
    assessor.seed = s;
    cv.seed = s;
    if (synthetic) synthetic->seed = s;
}

void Config::set_epochs(std::size_t e) {
    epochs = e;
    pipeline.epochs = e;
    assessor.epochs = e;
}

void Config::validate() const {
    try {
        if (model == ModelKind::Pipeline) {
            audit(pipeline);
        } else {
            assessor.validate();
        }
        feedback.validate();
        iris.gwr.validate();
    } catch (const UsageError&) {
        throw;
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

namespace {

PipelineSpec preset_by_name(const std::string& name, std::size_t joints, Obj& o) {
    if (name == "concat") return PipelineSpec::concat_preset(joints);
    if (name == "recurrent") return PipelineSpec::recurrent_preset(joints);
    if (name == "deep") return PipelineSpec::deep_preset(joints);
    o.fail("'preset' must be concat, recurrent or deep (got '" + name + "')");
}

// One shared parameter table applied to every layer.
void apply_network_block(Obj& net, PipelineSpec& spec) {
    for (auto& l : spec.pose_layers) read_gwr_params(net, l.params.gwr);
    for (auto& l : spec.motion_layers) read_gwr_params(net, l.params.gwr);
    read_gwr_params(net, spec.integration.params.gwr);
}

SyntheticSpec read_synthetic(Obj& o) {
    SyntheticSpec s;
    s.classes = o.count("classes", s.classes);
    s.joints = o.count("joints", s.joints);
    s.frames = o.count("frames", s.frames);
    s.subjects = o.count("subjects", s.subjects);
    s.sequences_per_cell = o.count("sequences_per_cell", s.sequences_per_cell);
    s.noise_sigma = o.number("noise_sigma", s.noise_sigma);
    s.frame_rate = o.number("frame_rate", s.frame_rate);
    s.subject_scale_spread = o.number("subject_scale_spread", s.subject_scale_spread);
    s.random_start_phase = o.boolean("random_start_phase", s.random_start_phase);
    s.seed = o.count("seed", s.seed);
    if (o.has("signatures")) {
        const json& arr = o.array("signatures");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            Obj so(arr[i], o.key_path("signatures") + "[" + std::to_string(i) + "]", true);
            MotionSignature m;
            m.frequency = so.number("frequency", m.frequency);
            m.amplitude = so.number("amplitude", m.amplitude);
            m.phase = so.number("phase", m.phase);
            m.joint_phase_step = so.number("joint_phase_step", m.joint_phase_step);
            so.finish();
            s.signatures.push_back(m);
        }
    }
    o.finish();
    try {
        s.validate();
    } catch (const Error& e) {
        o.fail(o.path() + ": " + e.what());
    }
    return s;
}

}  // namespace

namespace {

Config config_from_json(const json& j) {
    Obj o(j, "", true);
    Config c;
    const std::string model = o.string("model");
    if (model == "pipeline") {
        c.model = ModelKind::Pipeline;
    } else if (model == "assessor") {
        c.model = ModelKind::Assessor;
    } else {
        o.fail("'model' must be pipeline or assessor (got '" + model + "')");
    }
    const std::uint64_t seed = o.count("seed");
    const std::size_t epochs = o.count("epochs");
    const std::size_t joints = o.count("joints");
    const std::size_t hip = o.count("hip_joint", 0);

    if (c.model == ModelKind::Pipeline) {
        c.pipeline = preset_by_name(o.string("preset"), joints, o);
    } else {
        c.pipeline = PipelineSpec::recurrent_preset(joints);
        if (o.has("preset")) c.pipeline = preset_by_name(o.string("preset"), joints, o);
    }
    c.pipeline.hip_joint = hip;
    c.pipeline.decision_window = o.count("decision_window", c.pipeline.decision_window);
    c.pipeline.decision_stride = o.count("decision_stride", c.pipeline.decision_window);

    c.assessor.joints = joints;
    c.assessor.hip_joint = hip;

    if (o.has("network")) {
        Obj net = o.object("network");
        apply_network_block(net, c.pipeline);
        read_gwr_params(net, c.assessor.params.gwr);
        // Context keys only concern the assessor network.
        read_context_keys(net, c.assessor.params);
        net.finish();
    }
    if (o.has("layers")) {
        Obj layers = o.object("layers");
        if (layers.has("pose")) c.pipeline.pose_layers = read_layer_list(layers, "pose");
        if (layers.has("motion")) c.pipeline.motion_layers = read_layer_list(layers, "motion");
        if (layers.has("integration")) {
            Obj integ = layers.object("integration");
            read_layer_spec(integ, c.pipeline.integration);
        }
        layers.finish();
    }
    if (o.has("assessment")) {
        Obj a = o.object("assessment");
        c.assessor.with_motion = a.boolean("with_motion", c.assessor.with_motion);
        c.feedback.threshold = a.number("f_threshold", c.feedback.threshold);
        c.feedback.persistence = a.count("persistence", c.feedback.persistence);
        c.feedback.rollout_horizon = a.count("rollout", c.feedback.rollout_horizon);
        if (a.has("joint_threshold") && !a.at("joint_threshold").is_null()) {
            c.feedback.joint_threshold = a.number("joint_threshold");
        }
        a.finish();
    }
    if (o.has("synthetic")) {
        Obj s = o.object("synthetic");
        c.synthetic = read_synthetic(s);
    }
    if (o.has("cv")) {
        Obj cv = o.object("cv");
        const std::string protocol = cv.string("protocol", "loso");
        if (protocol == "loso") {
            c.cv.protocol = CvProtocol::LeaveOneSubjectOut;
        } else if (protocol == "kfold") {
            c.cv.protocol = CvProtocol::KFold;
        } else {
            cv.fail("'cv.protocol' must be loso or kfold");
        }
        c.cv.k = cv.count("k", c.cv.k);
        cv.finish();
    }
    if (o.has("continual")) {
        Obj ct = o.object("continual");
        for (const auto& v : ct.array("class_order")) {
            if (!v.is_number_integer()) ct.fail("'continual.class_order' must list integer label ids");
            c.class_order.push_back(v.get<int>());
        }
        ct.finish();
    }
    if (o.has("iris")) {
        Obj ir = o.object("iris");
        c.iris.epochs = ir.count("epochs", c.iris.epochs);
        if (ir.has("gwr")) {
            Obj g = ir.object("gwr");
            read_gwr_params(g, c.iris.gwr);
            g.finish();
        }
        if (ir.has("gng")) {
            Obj g = ir.object("gng");
            read_gng_params(g, c.iris.gng);
            g.finish();
        }
        ir.finish();
    }
    o.finish();

    c.set_seed(seed);
    c.set_epochs(epochs);
    if (c.synthetic && j.contains("synthetic") && j["synthetic"].contains("seed")) {
        c.synthetic->seed = j["synthetic"]["seed"].get<std::uint64_t>();
    }
    c.validate();
    return c;
}

}  // namespace

Config parse_config(std::string_view text, const std::string& source) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::exception& e) {
        throw UsageError(source + ": invalid JSON (" + e.what() + ")");
    }
    try {
        return config_from_json(j);
    } catch (const UsageError& e) {
        throw UsageError(source + ": " + e.what());
    }
}

Config load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

}  // namespace gwrnet::io
