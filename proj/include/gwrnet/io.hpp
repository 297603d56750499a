#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gwrnet/assessment.hpp"
#include "gwrnet/eval.hpp"
#include "gwrnet/hierarchy.hpp"

namespace gwrnet::io {

/// Bad command line or configuration (exit code 2).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Unreadable, malformed or inconsistent data or model files (exit code 3).
class DataError : public Error {
public:
    using Error::Error;
};

inline constexpr int kModelFormatVersion = 1;

// ---- data files ------------------------------------------------------------

/// Sequences plus the label dictionary: label id i is label_names[i].
struct Dataset {
    std::vector<Sequence> sequences;
    std::vector<std::string> label_names;
    std::size_t joints = 0;

    /// Id of `name`, if present in the dictionary.
    std::optional<int> label_id(std::string_view name) const;
    /// Name of `id`; falls back to the decimal id when the dictionary is short.
    std::string label_name(int id) const;
};

/// Parses the CSV layout `sequence_id,subject_id,label,frame,x0,y0,z0,...`.
/// Label ids follow the sorted order of the distinct label strings.
Dataset parse_dataset(std::istream& in, const std::string& source);
Dataset read_dataset(const std::string& path);

/// Re-keys labels against an existing dictionary (e.g. a model's). Unknown
/// names are dropped to unlabeled.
void relabel(Dataset& data, const std::vector<std::string>& dictionary);

/// Writes the CSV layout with `precision` fixed decimals.
void write_dataset(std::ostream& out, const Dataset& data, int precision = 9);

/// Wraps generated sequences, naming labels "c<id>".
Dataset dataset_from_sequences(std::vector<Sequence> sequences);

// ---- model files -----------------------------------------------------------

enum class ModelKind { Pipeline, Assessor };

struct ModelFile {
    ModelKind kind = ModelKind::Pipeline;
    std::vector<std::string> label_names;
    std::optional<Pipeline> pipeline;
    std::optional<Assessor> assessor;
};

std::string serialize_model(const ModelFile& model);
ModelFile parse_model(std::string_view text, const std::string& source = "model");
void save_model(const std::string& path, const ModelFile& model);
ModelFile load_model(const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);
/// 16 lowercase hex digits.
std::string hex64(std::uint64_t value);

/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view content);
std::string read_file(const std::string& path);

// ---- configuration ---------------------------------------------------------

struct IrisExperiment {
    std::size_t epochs = 30;
    GwrParams gwr = [] {
        GwrParams p;
        p.activation_threshold = 0.8;
        return p;
    }();
    GngParams gng;
};

/// Parsed configuration. Precedence, lowest first: built-in defaults, the
/// preset, the "network" block, the "layers" block, command-line flags.
struct Config {
    ModelKind model = ModelKind::Pipeline;
    std::uint64_t seed = 1;
    std::size_t epochs = 30;
    PipelineSpec pipeline;
    AssessorSpec assessor;
    FeedbackParams feedback;
    std::optional<SyntheticSpec> synthetic;
    CvOptions cv;
    std::vector<int> class_order;
    IrisExperiment iris;

    /// Applies seed/epochs overrides to every nested spec.
    void set_seed(std::uint64_t seed);
    void set_epochs(std::size_t epochs);
    /// Throws UsageError; rerun after applying overrides.
    void validate() const;
};

Config parse_config(std::string_view text, const std::string& source = "config");
Config load_config(const std::string& path);

// ---- CSV helpers -----------------------------------------------------------

/// Fixed-point formatting independent of the global locale.
std::string fixed(double value, int precision = 6);
/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(std::string_view text);

}  // namespace gwrnet::io
