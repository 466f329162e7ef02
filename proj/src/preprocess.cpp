#include "tabmoe/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "tabmoe/errors.hpp"
#include "tabmoe/numerics.hpp"

namespace tabmoe {
namespace {

constexpr double kCdfClamp = 1e-6;
constexpr std::size_t kMaxQuantileRefs = 1000;

NumericColumnState fit_numeric(const std::vector<double>& values, std::size_t n_bins) {
    NumericColumnState state;
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());

    if (sorted.front() == sorted.back()) {
        state.degenerate = true;
        return state;
    }

    // quantile map: q = min(1000, n_train) reference points at levels i/(q-1)
    const std::size_t q = std::min(kMaxQuantileRefs, sorted.size());
    std::vector<double> raw_values(q), raw_levels(q);
    for (std::size_t i = 0; i < q; ++i) {
        const double level = static_cast<double>(i) / static_cast<double>(q - 1);
        raw_levels[i] = level;
        raw_values[i] = empirical_quantile(sorted, level);
    }
    // dedup to strictly increasing values; tied references keep the midpoint
    // of their level range so the map stays monotone
    for (std::size_t i = 0; i < q;) {
        std::size_t j = i;
        while (j + 1 < q && raw_values[j + 1] == raw_values[i]) ++j;
        state.ref_values.push_back(raw_values[i]);
        state.ref_levels.push_back(0.5 * (raw_levels[i] + raw_levels[j]));
        i = j + 1;
    }

    if (n_bins >= 2) {
        std::vector<double> edges;
        for (std::size_t t = 0; t <= n_bins; ++t) {
            const double level = static_cast<double>(t) / static_cast<double>(n_bins);
            const double edge = empirical_quantile(sorted, level);
            if (edges.empty() || edge > edges.back()) edges.push_back(edge);
        }
        state.bin_edges = std::move(edges); // >= 2 entries since column is non-constant
    }
    return state;
}

} // namespace

double empirical_quantile(const std::vector<double>& sorted, double level) {
    if (sorted.empty()) throw DomainError("empirical_quantile: empty sample");
    if (level <= 0.0) return sorted.front();
    if (level >= 1.0) return sorted.back();
    const double pos = level * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

Preprocessor Preprocessor::fit(const Split& train, const DatasetSchema& schema,
                               std::size_t n_bins) {
    if (train.n_rows < 2) throw DomainError("Preprocessor::fit: need at least 2 training rows");
    if (n_bins == 1) throw DomainError("Preprocessor::fit: n_bins must be 0 or >= 2");
    if (train.features.size() != schema.columns.size()) {
        throw DimensionError("Preprocessor::fit: feature/schema column count mismatch");
    }

    Preprocessor prep;
    prep.n_bins_ = n_bins;
    prep.columns_.reserve(schema.columns.size());
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        const FeatureColumn& fc = train.features[c];
        ColumnState state;
        state.kind = fc.kind;
        state.name = fc.name;
        switch (fc.kind) {
        case ColumnKind::numeric:
            state.numeric = fit_numeric(fc.numeric, n_bins);
            break;
        case ColumnKind::categorical: {
            std::vector<std::string> vocab = fc.labels;
            std::sort(vocab.begin(), vocab.end());
            vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
            state.categorical.vocabulary = std::move(vocab);
            break;
        }
        case ColumnKind::binary:
            break; // {0,1} passthrough, nothing to fit
        case ColumnKind::target:
            throw DimensionError("Preprocessor::fit: target column among features");
        }
        prep.columns_.push_back(std::move(state));
    }
    return prep;
}

double Preprocessor::transform_quantile(std::size_t feature, double x) const {
    const NumericColumnState& st = columns_.at(feature).numeric;
    if (st.degenerate) return 0.0;

    const auto& values = st.ref_values;
    const auto& levels = st.ref_levels;
    double cdf;
    if (x <= values.front()) {
        cdf = levels.front();
    } else if (x >= values.back()) {
        cdf = levels.back();
    } else {
        const auto it = std::upper_bound(values.begin(), values.end(), x);
        const std::size_t hi = static_cast<std::size_t>(it - values.begin());
        const std::size_t lo = hi - 1;
        const double t = (x - values[lo]) / (values[hi] - values[lo]);
        cdf = levels[lo] + t * (levels[hi] - levels[lo]);
    }
    cdf = std::clamp(cdf, kCdfClamp, 1.0 - kCdfClamp);
    return inverse_normal_cdf(cdf);
}

std::size_t Preprocessor::onehot_width(std::size_t feature) const {
    return columns_.at(feature).categorical.vocabulary.size() + 1;
}

void Preprocessor::transform_onehot(std::size_t feature, const std::string& value,
                                    double* out) const {
    const auto& vocab = columns_.at(feature).categorical.vocabulary;
    const std::size_t width = vocab.size() + 1;
    std::fill(out, out + width, 0.0);
    const auto it = std::lower_bound(vocab.begin(), vocab.end(), value);
    if (it != vocab.end() && *it == value) {
        out[static_cast<std::size_t>(it - vocab.begin())] = 1.0;
    } else {
        out[width - 1] = 1.0; // unknown slot
    }
}

std::size_t Preprocessor::ple_width(std::size_t feature) const {
    const NumericColumnState& st = columns_.at(feature).numeric;
    if (st.degenerate || st.bin_edges.size() < 2) return 1;
    return st.bin_edges.size() - 1;
}

void Preprocessor::encode_ple(std::size_t feature, double x, double* out) const {
    const NumericColumnState& st = columns_.at(feature).numeric;
    if (st.degenerate || st.bin_edges.size() < 2) {
        out[0] = 0.0;
        return;
    }
    const auto& edges = st.bin_edges;
    for (std::size_t t = 0; t + 1 < edges.size(); ++t) {
        out[t] = std::clamp((x - edges[t]) / (edges[t + 1] - edges[t]), 0.0, 1.0);
    }
}

std::vector<double> Preprocessor::encode_ple(std::size_t feature, double x) const {
    std::vector<double> out(ple_width(feature));
    encode_ple(feature, x, out.data());
    return out;
}

nlohmann::json Preprocessor::to_json() const {
    nlohmann::json doc;
    doc["format"] = "tabmoe-preprocessor";
    doc["n_bins"] = n_bins_;
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& col : columns_) {
        nlohmann::json c;
        c["kind"] = column_kind_name(col.kind);
        c["name"] = col.name;
        if (col.kind == ColumnKind::numeric) {
            c["degenerate"] = col.numeric.degenerate;
            c["quantile_values"] = col.numeric.ref_values;
            c["quantile_levels"] = col.numeric.ref_levels;
            c["bin_edges"] = col.numeric.bin_edges;
        } else if (col.kind == ColumnKind::categorical) {
            c["vocabulary"] = col.categorical.vocabulary;
        }
        cols.push_back(std::move(c));
    }
    doc["columns"] = std::move(cols);
    return doc;
}

Preprocessor Preprocessor::from_json(const nlohmann::json& doc) {
    Preprocessor prep;
    try {
        if (doc.at("format").get<std::string>() != "tabmoe-preprocessor") {
            throw ValidationError("not a preprocessor document");
        }
        prep.n_bins_ = doc.at("n_bins").get<std::size_t>();
        for (const auto& c : doc.at("columns")) {
            ColumnState state;
            const std::string kind = c.at("kind").get<std::string>();
            state.name = c.at("name").get<std::string>();
            if (kind == "numeric") {
                state.kind = ColumnKind::numeric;
                state.numeric.degenerate = c.at("degenerate").get<bool>();
                state.numeric.ref_values = c.at("quantile_values").get<std::vector<double>>();
                state.numeric.ref_levels = c.at("quantile_levels").get<std::vector<double>>();
                state.numeric.bin_edges = c.at("bin_edges").get<std::vector<double>>();
            } else if (kind == "categorical") {
                state.kind = ColumnKind::categorical;
                state.categorical.vocabulary =
                    c.at("vocabulary").get<std::vector<std::string>>();
            } else if (kind == "binary") {
                state.kind = ColumnKind::binary;
            } else {
                throw ValidationError("unknown preprocessor column kind '" + kind + "'");
            }
            prep.columns_.push_back(std::move(state));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad preprocessor document: ") + e.what());
    }
    return prep;
}

} // namespace tabmoe
