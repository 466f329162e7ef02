#include "tabmoe/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tabmoe/errors.hpp"
#include "tabmoe/json_io.hpp"

namespace tabmoe {
namespace {

constexpr std::uint64_t kSplitStream = 0x53504c49; // "SPLI"

bool parse_double(const std::string& text, double& out) {
    if (text.empty()) return false;
    char* end = nullptr;
    out = std::strtod(text.c_str(), &end);
    return end == text.c_str() + text.size() && std::isfinite(out);
}

bool parse_binary(const std::string& text, double& out) {
    std::string t;
    t.reserve(text.size());
    for (char c : text) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (t == "0" || t == "false") {
        out = 0.0;
        return true;
    }
    if (t == "1" || t == "true") {
        out = 1.0;
        return true;
    }
    return false;
}

// RFC-4180: quoted fields, doubled quotes, CRLF tolerated.
std::vector<std::vector<std::string>> parse_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError("cannot open CSV file " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    std::size_t line = 1;
    for (std::size_t i = 0; i < content.size(); ++i) {
        const char c = content[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
                if (c == '\n') ++line;
            }
        } else if (c == '"') {
            if (!field.empty()) {
                throw ValidationError(path.string() + ":" + std::to_string(line) +
                                      ": quote inside unquoted field");
            }
            in_quotes = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') ++i;
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            ++line;
        } else {
            field += c;
        }
    }
    if (in_quotes) throw ValidationError(path.string() + ": unterminated quoted field");
    if (!field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError(path.string() + ": empty CSV file");
    return rows;
}

ColumnKind column_kind_from_name(const std::string& name, const std::string& context) {
    if (name == "numeric") return ColumnKind::numeric;
    if (name == "categorical") return ColumnKind::categorical;
    if (name == "binary") return ColumnKind::binary;
    if (name == "target") return ColumnKind::target;
    throw ValidationError(context + ": unknown column kind '" + name + "'");
}

struct ParsedTable {
    Split split;
};

Split parse_split(const std::filesystem::path& csv_path, const DatasetSchema& schema,
                  const std::vector<ColumnSchema>& all_columns) {
    const auto rows = parse_csv(csv_path);
    const std::vector<std::string>& header = rows.front();
    if (header.size() != all_columns.size()) {
        throw ValidationError(csv_path.string() + ": expected " +
                              std::to_string(all_columns.size()) + " columns, found " +
                              std::to_string(header.size()));
    }
    // map manifest columns onto file order by name
    std::vector<std::size_t> file_index(all_columns.size());
    for (std::size_t c = 0; c < all_columns.size(); ++c) {
        const auto it = std::find(header.begin(), header.end(), all_columns[c].name);
        if (it == header.end()) {
            throw ValidationError(csv_path.string() + ": column '" + all_columns[c].name +
                                  "' missing from CSV header");
        }
        file_index[c] = static_cast<std::size_t>(it - header.begin());
    }

    Split split;
    split.features.reserve(schema.columns.size());
    for (const auto& col : schema.columns) {
        split.features.push_back(FeatureColumn{col.kind, col.name, {}, {}});
    }

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::size_t line = r + 1;
        if (row.size() != all_columns.size()) {
            throw ValidationError(csv_path.string() + ":" + std::to_string(line) +
                                  ": expected " + std::to_string(all_columns.size()) +
                                  " fields, found " + std::to_string(row.size()));
        }
        std::size_t feature_idx = 0;
        for (std::size_t c = 0; c < all_columns.size(); ++c) {
            const std::string& cell = row[file_index[c]];
            if (cell.empty()) {
                throw ValidationError(csv_path.string() + ":" + std::to_string(line) +
                                      ": missing value in column '" + all_columns[c].name +
                                      "'");
            }
            const ColumnKind kind = all_columns[c].kind;
            if (kind == ColumnKind::target) {
                if (schema.task.kind == TaskKind::regression) {
                    double v;
                    if (!parse_double(cell, v)) {
                        throw ValidationError(csv_path.string() + ":" + std::to_string(line) +
                                              ": bad regression target '" + cell + "'");
                    }
                    split.target_reg.push_back(v);
                } else {
                    double v;
                    if (!parse_double(cell, v) || v != std::floor(v) || v < 0.0 ||
                        static_cast<std::size_t>(v) >= schema.task.n_classes) {
                        throw ValidationError(csv_path.string() + ":" + std::to_string(line) +
                                              ": target class '" + cell + "' outside [0," +
                                              std::to_string(schema.task.n_classes) + ")");
                    }
                    split.target_cls.push_back(static_cast<std::size_t>(v));
                }
                continue;
            }
            FeatureColumn& fc = split.features[feature_idx++];
            switch (kind) {
            case ColumnKind::numeric: {
                double v;
                if (!parse_double(cell, v)) {
                    throw ValidationError(csv_path.string() + ":" + std::to_string(line) +
                                          ": bad numeric value '" + cell + "' in column '" +
                                          fc.name + "'");
                }
                fc.numeric.push_back(v);
                break;
            }
            case ColumnKind::binary: {
                double v;
                if (!parse_binary(cell, v)) {
                    throw ValidationError(csv_path.string() + ":" + std::to_string(line) +
                                          ": bad binary value '" + cell + "' in column '" +
                                          fc.name + "'");
                }
                fc.numeric.push_back(v);
                break;
            }
            case ColumnKind::categorical:
                fc.labels.push_back(cell);
                break;
            case ColumnKind::target:
                break;
            }
        }
        ++split.n_rows;
    }
    return split;
}

Split take_rows(const Split& full, const std::vector<std::size_t>& rows) {
    Split out;
    out.n_rows = rows.size();
    out.features.reserve(full.features.size());
    for (const auto& fc : full.features) {
        FeatureColumn copy{fc.kind, fc.name, {}, {}};
        for (std::size_t r : rows) {
            if (fc.kind == ColumnKind::categorical) {
                copy.labels.push_back(fc.labels[r]);
            } else {
                copy.numeric.push_back(fc.numeric[r]);
            }
        }
        out.features.push_back(std::move(copy));
    }
    for (std::size_t r : rows) {
        if (!full.target_reg.empty()) out.target_reg.push_back(full.target_reg[r]);
        if (!full.target_cls.empty()) out.target_cls.push_back(full.target_cls[r]);
    }
    return out;
}

std::string csv_escape(const std::string& value) {
    if (value.find_first_of(",\"\n\r") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') {
            out += "\"\"";
        } else {
            out += c;
        }
    }
    out += '"';
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_split_csv(const std::filesystem::path& path, const DatasetSchema& schema,
                     const Split& split) {
    std::ostringstream out;
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        if (c > 0) out << ',';
        out << csv_escape(schema.columns[c].name);
    }
    out << ',' << csv_escape(schema.target_name) << '\n';
    for (std::size_t r = 0; r < split.n_rows; ++r) {
        for (std::size_t c = 0; c < split.features.size(); ++c) {
            const FeatureColumn& fc = split.features[c];
            if (c > 0) out << ',';
            if (fc.kind == ColumnKind::categorical) {
                out << csv_escape(fc.labels[r]);
            } else if (fc.kind == ColumnKind::binary) {
                out << (fc.numeric[r] != 0.0 ? '1' : '0');
            } else {
                out << format_double(fc.numeric[r]);
            }
        }
        out << ',';
        if (schema.task.kind == TaskKind::regression) {
            out << format_double(split.target_reg[r]);
        } else {
            out << split.target_cls[r];
        }
        out << '\n';
    }
    jsonio::write_file_atomic(path, out.str());
}

} // namespace

std::string column_kind_name(ColumnKind kind) {
    switch (kind) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::binary: return "binary";
    case ColumnKind::target: return "target";
    }
    return "unknown";
}

std::string task_kind_name(TaskKind kind) {
    switch (kind) {
    case TaskKind::regression: return "regression";
    case TaskKind::binclass: return "binclass";
    case TaskKind::multiclass: return "multiclass";
    }
    return "unknown";
}

DatasetBundle load_dataset(const std::filesystem::path& manifest_path) {
    const nlohmann::json manifest = jsonio::read_file(manifest_path);
    const std::filesystem::path base = manifest_path.parent_path();

    DatasetBundle bundle;
    DatasetSchema& schema = bundle.schema;
    try {
        schema.name = manifest.at("name").get<std::string>();
        const std::string task = manifest.at("task").get<std::string>();
        if (task == "regression") {
            schema.task = {TaskKind::regression, 0};
        } else if (task == "binclass") {
            schema.task = {TaskKind::binclass, 2};
        } else if (task == "multiclass") {
            schema.task = {TaskKind::multiclass, manifest.at("n_classes").get<std::size_t>()};
            if (schema.task.n_classes < 2) {
                throw ValidationError("multiclass task needs n_classes >= 2");
            }
        } else {
            throw ValidationError("unknown task '" + task + "'");
        }

        std::vector<ColumnSchema> all_columns;
        std::size_t target_count = 0;
        for (const auto& col : manifest.at("columns")) {
            ColumnSchema cs;
            cs.name = col.at("name").get<std::string>();
            cs.kind = column_kind_from_name(col.at("kind").get<std::string>(),
                                            manifest_path.string());
            if (cs.kind == ColumnKind::target) {
                ++target_count;
                schema.target_name = cs.name;
            } else {
                schema.columns.push_back(cs);
            }
            all_columns.push_back(std::move(cs));
        }
        if (target_count != 1) {
            throw ValidationError("manifest must declare exactly one target column, found " +
                                  std::to_string(target_count));
        }
        if (schema.columns.empty()) {
            throw ValidationError("manifest declares no feature columns");
        }

        const auto& files = manifest.at("files");
        if (files.contains("single")) {
            const Split full =
                parse_split(base / files.at("single").get<std::string>(), schema, all_columns);
            std::array<double, 3> ratios{0.64, 0.16, 0.20};
            std::uint64_t seed = 0;
            if (manifest.contains("split")) {
                const auto& sp = manifest.at("split");
                const auto r = sp.at("ratios").get<std::vector<double>>();
                if (r.size() != 3) throw ValidationError("split.ratios must have 3 entries");
                ratios = {r[0], r[1], r[2]};
                seed = sp.at("seed").get<std::uint64_t>();
            }
            const double ratio_sum = ratios[0] + ratios[1] + ratios[2];
            if (std::abs(ratio_sum - 1.0) > 1e-9) {
                throw ValidationError("split.ratios must sum to 1");
            }
            const std::size_t n = full.n_rows;
            const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * n));
            const auto n_val = static_cast<std::size_t>(std::llround(ratios[1] * n));
            if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
                throw ValidationError("split ratios leave an empty split for n=" +
                                      std::to_string(n));
            }
            std::vector<std::size_t> order(n);
            for (std::size_t i = 0; i < n; ++i) order[i] = i;
            Rng rng(seed, kSplitStream);
            rng.shuffle(order);
            bundle.train = take_rows(full, {order.begin(), order.begin() + n_train});
            bundle.val =
                take_rows(full, {order.begin() + n_train, order.begin() + n_train + n_val});
            bundle.test = take_rows(full, {order.begin() + n_train + n_val, order.end()});
        } else {
            bundle.train =
                parse_split(base / files.at("train").get<std::string>(), schema, all_columns);
            bundle.val =
                parse_split(base / files.at("val").get<std::string>(), schema, all_columns);
            bundle.test =
                parse_split(base / files.at("test").get<std::string>(), schema, all_columns);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("bad manifest " + manifest_path.string() + ": " + e.what());
    }
    return bundle;
}

DatasetBundle make_synthetic(const SynthSpec& spec) {
    if (spec.n_rows < 30) throw DomainError("make_synthetic: need at least 30 rows");
    if (spec.n_features < 1) throw DomainError("make_synthetic: need at least one feature");

    DatasetBundle bundle;
    DatasetSchema& schema = bundle.schema;
    schema.target_name = "y";
    const bool classification = spec.kind != SynthKind::linear_regression;
    schema.task = classification ? TaskSpec{TaskKind::binclass, 2}
                                 : TaskSpec{TaskKind::regression, 0};
    for (std::size_t j = 0; j < spec.n_features; ++j) {
        schema.columns.push_back({"f" + std::to_string(j), ColumnKind::numeric});
    }

    Rng rng(spec.seed, 0x53594e54); // "SYNT"
    const std::size_t n = spec.n_rows;
    const std::size_t m = spec.n_features;

    std::vector<std::vector<double>> x(m, std::vector<double>(n));
    std::vector<double> y_reg(classification ? 0 : n);
    std::vector<std::size_t> y_cls(classification ? n : 0);

    switch (spec.kind) {
    case SynthKind::linear_regression: {
        Rng beta_rng = rng.substream(1);
        std::vector<double> beta(m);
        double norm = 0.0;
        for (double& b : beta) {
            b = beta_rng.normal();
            norm += b * b;
        }
        norm = std::sqrt(norm);
        for (double& b : beta) b /= norm;
        for (std::size_t i = 0; i < n; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                x[j][i] = rng.normal();
                dot += x[j][i] * beta[j];
            }
            y_reg[i] = dot + spec.noise * rng.normal();
        }
        break;
    }
    case SynthKind::gaussian_blobs: {
        Rng dir_rng = rng.substream(2);
        std::vector<double> direction(m);
        double norm = 0.0;
        for (double& d : direction) {
            d = dir_rng.normal();
            norm += d * d;
        }
        norm = std::sqrt(norm);
        for (double& d : direction) d /= norm;
        const double half = 0.5 * spec.separation * spec.noise;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t label = rng.below(2);
            const double sign = label == 0 ? -1.0 : 1.0;
            for (std::size_t j = 0; j < m; ++j) {
                x[j][i] = sign * half * direction[j] + spec.noise * rng.normal();
            }
            y_cls[i] = label;
        }
        break;
    }
    case SynthKind::xor_classification: {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) x[j][i] = rng.normal();
            bool label = (x[0][i] > 0.0) != (x[std::min<std::size_t>(1, m - 1)][i] > 0.0);
            if (rng.uniform() < spec.noise) label = !label;
            y_cls[i] = label ? 1 : 0;
        }
        break;
    }
    }

    Split full;
    full.n_rows = n;
    for (std::size_t j = 0; j < m; ++j) {
        full.features.push_back(
            FeatureColumn{ColumnKind::numeric, schema.columns[j].name, std::move(x[j]), {}});
    }
    full.target_reg = std::move(y_reg);
    full.target_cls = std::move(y_cls);

    const auto n_train = static_cast<std::size_t>(std::llround(spec.ratios[0] * n));
    const auto n_val = static_cast<std::size_t>(std::llround(spec.ratios[1] * n));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
        throw DomainError("make_synthetic: ratios leave an empty split");
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng split_rng(spec.seed, kSplitStream);
    split_rng.shuffle(order);
    bundle.train = take_rows(full, {order.begin(), order.begin() + n_train});
    bundle.val = take_rows(full, {order.begin() + n_train, order.begin() + n_train + n_val});
    bundle.test = take_rows(full, {order.begin() + n_train + n_val, order.end()});

    schema.name = "synthetic";
    return bundle;
}

bool synth_kind_from_name(std::string_view name, SynthKind& out) {
    if (name == "linear-regression") {
        out = SynthKind::linear_regression;
        return true;
    }
    if (name == "gaussian-blobs") {
        out = SynthKind::gaussian_blobs;
        return true;
    }
    if (name == "xor-classification") {
        out = SynthKind::xor_classification;
        return true;
    }
    return false;
}

std::filesystem::path write_dataset(const DatasetBundle& bundle,
                                    const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_split_csv(dir / "train.csv", bundle.schema, bundle.train);
    write_split_csv(dir / "val.csv", bundle.schema, bundle.val);
    write_split_csv(dir / "test.csv", bundle.schema, bundle.test);

    nlohmann::json manifest;
    manifest["name"] = bundle.schema.name;
    manifest["task"] = task_kind_name(bundle.schema.task.kind);
    if (bundle.schema.task.kind == TaskKind::multiclass) {
        manifest["n_classes"] = bundle.schema.task.n_classes;
    }
    nlohmann::json columns = nlohmann::json::array();
    for (const auto& col : bundle.schema.columns) {
        columns.push_back({{"name", col.name}, {"kind", column_kind_name(col.kind)}});
    }
    columns.push_back({{"name", bundle.schema.target_name}, {"kind", "target"}});
    manifest["columns"] = columns;
    manifest["files"] = {{"train", "train.csv"}, {"val", "val.csv"}, {"test", "test.csv"}};

    const std::filesystem::path manifest_path = dir / "manifest.json";
    jsonio::write_file_atomic(manifest_path, jsonio::dump_pretty(manifest));
    return manifest_path;
}

} // namespace tabmoe
