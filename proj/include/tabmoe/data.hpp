#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tabmoe/rng.hpp"

namespace tabmoe {

enum class TaskKind { regression, binclass, multiclass };

struct TaskSpec {
    TaskKind kind = TaskKind::regression;
    std::size_t n_classes = 0; // 2 for binclass, C for multiclass, 0 otherwise

    bool is_classification() const noexcept { return kind != TaskKind::regression; }
    std::size_t output_width() const noexcept { return is_classification() ? n_classes : 1; }
};

enum class ColumnKind { numeric, categorical, binary, target };

struct ColumnSchema {
    std::string name;
    ColumnKind kind;
};

struct DatasetSchema {
    std::string name;
    TaskSpec task;
    std::vector<ColumnSchema> columns; // feature columns only, in file order
    std::string target_name;

    std::size_t feature_count() const noexcept { return columns.size(); }
};

/// One feature column of one split. Numeric and binary values live in
/// `numeric` (binary as 0/1); categorical values in `labels`.
struct FeatureColumn {
    ColumnKind kind;
    std::string name;
    std::vector<double> numeric;
    std::vector<std::string> labels;
};

struct Split {
    std::vector<FeatureColumn> features;
    std::vector<double> target_reg;       // regression targets
    std::vector<std::size_t> target_cls;  // class indices
    std::size_t n_rows = 0;
};

struct DatasetBundle {
    DatasetSchema schema;
    Split train, val, test;
};

/// Load a dataset described by a JSON manifest:
///   {"name", "task", "n_classes"?, "columns": [{"name","kind"}...],
///    "files": {"single": p} | {"train": p, "val": p, "test": p},
///    "split": {"ratios": [r,r,r], "seed": s}?}
/// CSV files are RFC-4180 with a header row; rows with missing values are
/// rejected with their line number. File paths resolve relative to the
/// manifest location.
DatasetBundle load_dataset(const std::filesystem::path& manifest_path);

enum class SynthKind { linear_regression, gaussian_blobs, xor_classification };

/// Synthetic generators with known Bayes-optimal scores:
///  - linear_regression: x ~ N(0,I_M), y = x'beta + noise*N(0,1) with
///    |beta| = 1, so the Bayes RMSE is `noise`.
///  - gaussian_blobs: two classes at +-(separation*noise/2)*u, per-class
///    spread noise*N(0,I); Bayes accuracy = Phi(separation/2).
///  - xor_classification: label = XOR of the signs of the first two features,
///    flipped with probability `noise`; Bayes accuracy = 1 - noise.
struct SynthSpec {
    SynthKind kind = SynthKind::linear_regression;
    std::size_t n_rows = 1000;
    std::size_t n_features = 8;
    double noise = 0.1;
    double separation = 4.0; // gaussian_blobs only
    std::uint64_t seed = 0;
    std::array<double, 3> ratios{0.64, 0.16, 0.20};
};

DatasetBundle make_synthetic(const SynthSpec& spec);

bool synth_kind_from_name(std::string_view name, SynthKind& out);

/// Write the bundle as three CSVs plus a manifest under `dir`; returns the
/// manifest path.
std::filesystem::path write_dataset(const DatasetBundle& bundle,
                                    const std::filesystem::path& dir);

std::string column_kind_name(ColumnKind kind);
std::string task_kind_name(TaskKind kind);

} // namespace tabmoe
