#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tabmoe/data.hpp"

namespace tabmoe {

/// Fitted state for one numeric feature: the empirical-CDF reference points
/// behind quantile normalization, plus the quantile bin edges used by the
/// piecewise-linear encoding when embeddings are enabled.
struct NumericColumnState {
    bool degenerate = false;            // constant training column
    std::vector<double> ref_values;     // strictly increasing after dedup
    std::vector<double> ref_levels;     // CDF levels matching ref_values
    std::vector<double> bin_edges;      // strictly increasing; empty without PLE
};

struct CategoricalColumnState {
    std::vector<std::string> vocabulary; // ordered distinct train values
};

struct ColumnState {
    ColumnKind kind;
    std::string name;
    NumericColumnState numeric;
    CategoricalColumnState categorical;
};

/// Fit-on-train / apply-everywhere feature transforms. Immutable once fitted;
/// all transforms are pure and defined for every input value, including
/// categories never seen in training.
class Preprocessor {
public:
    /// Fit from the training split only. n_bins >= 2 enables piecewise-linear
    /// bin edges for numeric features; n_bins == 0 disables them.
    static Preprocessor fit(const Split& train, const DatasetSchema& schema,
                            std::size_t n_bins = 0);

    /// Quantile normalization: piecewise-linear empirical CDF, clamped to
    /// [1e-6, 1-1e-6], then the inverse standard-normal CDF. Degenerate
    /// columns map everything to 0.
    double transform_quantile(std::size_t feature, double x) const;

    /// One-hot width including the trailing unknown slot.
    std::size_t onehot_width(std::size_t feature) const;

    /// Writes onehot_width(feature) entries; unseen values hit the unknown slot.
    void transform_onehot(std::size_t feature, const std::string& value,
                          double* out) const;

    /// Piecewise-linear encoding width (bin count after edge dedup; 1 when the
    /// column is degenerate).
    std::size_t ple_width(std::size_t feature) const;

    /// Component t = clip((x - b_t) / (b_{t+1} - b_t), 0, 1): ones below x's
    /// bin, a fraction inside it, zeros above.
    void encode_ple(std::size_t feature, double x, double* out) const;
    std::vector<double> encode_ple(std::size_t feature, double x) const;

    const std::vector<ColumnState>& columns() const noexcept { return columns_; }
    std::size_t n_bins() const noexcept { return n_bins_; }
    bool has_ple() const noexcept { return n_bins_ >= 2; }

    nlohmann::json to_json() const;
    static Preprocessor from_json(const nlohmann::json& doc);

private:
    std::vector<ColumnState> columns_;
    std::size_t n_bins_ = 0;
};

/// Empirical quantile (linear interpolation between order statistics) of a
/// sorted sample at level in [0,1].
double empirical_quantile(const std::vector<double>& sorted, double level);

} // namespace tabmoe
