#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "tabmoe/data.hpp"
#include "tabmoe/errors.hpp"
#include "tabmoe/json_io.hpp"
#include "tabmoe/numerics.hpp"

using namespace tabmoe;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("tabmoe_data_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

std::string ten_row_manifest(const std::string& csv_name) {
    return R"({
      "name": "tiny",
      "task": "regression",
      "columns": [
        {"name": "a", "kind": "numeric"},
        {"name": "b", "kind": "binary"},
        {"name": "y", "kind": "target"}
      ],
      "files": {"single": ")" +
           csv_name + R"("},
      "split": {"ratios": [0.6, 0.2, 0.2], "seed": 5}
    })";
}

const char* kTenRowCsv =
    "a,b,y\n1,0,0.1\n2,1,0.2\n3,0,0.3\n4,1,0.4\n5,0,0.5\n"
    "6,1,0.6\n7,0,0.7\n8,1,0.8\n9,0,0.9\n10,1,1.0\n";

} // namespace

TEST_CASE("single-file load splits 10 rows into 6/2/2 reproducibly") {
    const fs::path dir = temp_dir("split");
    write_text(dir / "data.csv", kTenRowCsv);
    write_text(dir / "manifest.json", ten_row_manifest("data.csv"));

    const DatasetBundle b1 = load_dataset(dir / "manifest.json");
    CHECK(b1.train.n_rows == 6);
    CHECK(b1.val.n_rows == 2);
    CHECK(b1.test.n_rows == 2);

    const DatasetBundle b2 = load_dataset(dir / "manifest.json");
    CHECK(b1.train.features[0].numeric == b2.train.features[0].numeric);
    CHECK(b1.test.features[0].numeric == b2.test.features[0].numeric);

    // splits are disjoint and cover all rows
    std::vector<double> all;
    for (const Split* s : {&b1.train, &b1.val, &b1.test}) {
        all.insert(all.end(), s->features[0].numeric.begin(), s->features[0].numeric.end());
    }
    std::sort(all.begin(), all.end());
    CHECK(all == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
}

TEST_CASE("binclass target outside {0,1} is rejected") {
    const fs::path dir = temp_dir("binclass");
    write_text(dir / "data.csv", "a,y\n1,0\n2,1\n3,2\n4,0\n5,1\n6,0\n7,1\n8,0\n9,1\n10,0\n");
    write_text(dir / "manifest.json", R"({
      "name": "bad", "task": "binclass",
      "columns": [{"name": "a", "kind": "numeric"}, {"name": "y", "kind": "target"}],
      "files": {"single": "data.csv"}
    })");
    CHECK_THROWS_AS(load_dataset(dir / "manifest.json"), ValidationError);
}

TEST_CASE("pre-split files keep their row counts") {
    const fs::path dir = temp_dir("presplit");
    write_text(dir / "train.csv", "a,y\n1,0.1\n2,0.2\n3,0.3\n");
    write_text(dir / "val.csv", "a,y\n4,0.4\n5,0.5\n");
    write_text(dir / "test.csv", "a,y\n6,0.6\n");
    write_text(dir / "manifest.json", R"({
      "name": "presplit", "task": "regression",
      "columns": [{"name": "a", "kind": "numeric"}, {"name": "y", "kind": "target"}],
      "files": {"train": "train.csv", "val": "val.csv", "test": "test.csv"}
    })");
    const DatasetBundle bundle = load_dataset(dir / "manifest.json");
    CHECK(bundle.train.n_rows == 3);
    CHECK(bundle.val.n_rows == 2);
    CHECK(bundle.test.n_rows == 1);
}

TEST_CASE("missing value errors carry the line number") {
    const fs::path dir = temp_dir("missing");
    write_text(dir / "data.csv", "a,y\n1,0.1\n,0.2\n3,0.3\n");
    write_text(dir / "manifest.json", R"({
      "name": "missing", "task": "regression",
      "columns": [{"name": "a", "kind": "numeric"}, {"name": "y", "kind": "target"}],
      "files": {"train": "data.csv", "val": "data.csv", "test": "data.csv"}
    })");
    try {
        (void)load_dataset(dir / "manifest.json");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find(":3") != std::string::npos); // header is line 1
        CHECK(msg.find("missing value") != std::string::npos);
    }
}

TEST_CASE("unknown columns and malformed manifests are schema errors") {
    const fs::path dir = temp_dir("schema");
    write_text(dir / "data.csv", "wrong,y\n1,0.1\n2,0.2\n");
    write_text(dir / "manifest.json", R"({
      "name": "schema", "task": "regression",
      "columns": [{"name": "a", "kind": "numeric"}, {"name": "y", "kind": "target"}],
      "files": {"train": "data.csv", "val": "data.csv", "test": "data.csv"}
    })");
    CHECK_THROWS_AS(load_dataset(dir / "manifest.json"), ValidationError);

    write_text(dir / "manifest2.json", R"({"name": "x", "task": "nope", "columns": [],
                                           "files": {}})");
    CHECK_THROWS_AS(load_dataset(dir / "manifest2.json"), ValidationError);
    CHECK_THROWS_AS(load_dataset(dir / "absent.json"), MissingArtifactError);
}

TEST_CASE("written datasets reload identically, quoting included") {
    SynthSpec spec;
    spec.kind = SynthKind::gaussian_blobs;
    spec.n_rows = 60;
    spec.n_features = 3;
    spec.noise = 1.0;
    spec.separation = 4.0;
    spec.seed = 9;
    DatasetBundle bundle = make_synthetic(spec);
    // add a categorical column with awkward labels to exercise RFC-4180
    for (Split* s : {&bundle.train, &bundle.val, &bundle.test}) {
        std::vector<std::string> labels;
        for (std::size_t i = 0; i < s->n_rows; ++i) {
            labels.push_back(i % 2 == 0 ? "plain" : "needs,\"quoting\"");
        }
        s->features.push_back(
            FeatureColumn{ColumnKind::categorical, "tag", {}, std::move(labels)});
    }
    bundle.schema.columns.push_back({"tag", ColumnKind::categorical});

    const fs::path dir = temp_dir("roundtrip");
    const fs::path manifest = write_dataset(bundle, dir);
    const DatasetBundle loaded = load_dataset(manifest);
    CHECK(loaded.train.n_rows == bundle.train.n_rows);
    CHECK(loaded.test.features[2].labels == bundle.test.features[2].labels);
    CHECK(loaded.train.features[0].numeric == bundle.train.features[0].numeric);
    CHECK(loaded.val.target_cls == bundle.val.target_cls);
}

TEST_CASE("noiseless linear data is fit exactly by least squares") {
    SynthSpec spec;
    spec.kind = SynthKind::linear_regression;
    spec.n_rows = 200;
    spec.n_features = 4;
    spec.noise = 0.0;
    spec.seed = 11;
    const DatasetBundle bundle = make_synthetic(spec);

    // normal equations on the training split (independent oracle)
    const std::size_t m = spec.n_features;
    const std::size_t n = bundle.train.n_rows;
    std::vector<std::vector<double>> ata(m, std::vector<double>(m, 0.0));
    std::vector<double> aty(m, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < m; ++i) {
            const double xi = bundle.train.features[i].numeric[r];
            aty[i] += xi * bundle.train.target_reg[r];
            for (std::size_t j = 0; j < m; ++j) {
                ata[i][j] += xi * bundle.train.features[j].numeric[r];
            }
        }
    }
    // Gaussian elimination
    std::vector<double> beta = aty;
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < m; ++r) {
            if (std::abs(ata[r][col]) > std::abs(ata[pivot][col])) pivot = r;
        }
        std::swap(ata[col], ata[pivot]);
        std::swap(beta[col], beta[pivot]);
        for (std::size_t r = 0; r < m; ++r) {
            if (r == col) continue;
            const double f = ata[r][col] / ata[col][col];
            for (std::size_t c = col; c < m; ++c) ata[r][c] -= f * ata[col][c];
            beta[r] -= f * beta[col];
        }
    }
    for (std::size_t i = 0; i < m; ++i) beta[i] /= ata[i][i];

    double sq = 0.0;
    for (std::size_t r = 0; r < bundle.test.n_rows; ++r) {
        double pred = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            pred += beta[i] * bundle.test.features[i].numeric[r];
        }
        const double res = pred - bundle.test.target_reg[r];
        sq += res * res;
    }
    CHECK(std::sqrt(sq / bundle.test.n_rows) < 1e-6);
}

TEST_CASE("blob separation controls the Bayes accuracy") {
    // separation s puts the Bayes error at Phi(-s/2)
    CHECK(1.0 - normal_cdf(-4.0) > 0.9999); // s = 8
    SynthSpec spec;
    spec.kind = SynthKind::gaussian_blobs;
    spec.n_rows = 4000;
    spec.n_features = 5;
    spec.noise = 1.0;
    spec.separation = 8.0;
    spec.seed = 12;
    const DatasetBundle bundle = make_synthetic(spec);
    // the oracle direction classifier should approach the Bayes rate
    // recover the direction from class-conditional means of train
    std::vector<double> mu0(5, 0.0), mu1(5, 0.0);
    std::size_t n0 = 0, n1 = 0;
    for (std::size_t r = 0; r < bundle.train.n_rows; ++r) {
        const bool one = bundle.train.target_cls[r] == 1;
        (one ? n1 : n0)++;
        for (std::size_t i = 0; i < 5; ++i) {
            (one ? mu1 : mu0)[i] += bundle.train.features[i].numeric[r];
        }
    }
    for (std::size_t i = 0; i < 5; ++i) {
        mu0[i] /= static_cast<double>(n0);
        mu1[i] /= static_cast<double>(n1);
    }
    std::size_t correct = 0;
    for (std::size_t r = 0; r < bundle.test.n_rows; ++r) {
        double d0 = 0.0, d1 = 0.0;
        for (std::size_t i = 0; i < 5; ++i) {
            const double x = bundle.test.features[i].numeric[r];
            d0 += (x - mu0[i]) * (x - mu0[i]);
            d1 += (x - mu1[i]) * (x - mu1[i]);
        }
        const std::size_t pred = d1 < d0 ? 1 : 0;
        if (pred == bundle.test.target_cls[r]) ++correct;
    }
    CHECK(static_cast<double>(correct) / bundle.test.n_rows > 0.999);
}

TEST_CASE("same seed gives identical bundles; xor labels follow the sign rule") {
    SynthSpec spec;
    spec.kind = SynthKind::xor_classification;
    spec.n_rows = 100;
    spec.n_features = 4;
    spec.noise = 0.0;
    spec.seed = 13;
    const DatasetBundle a = make_synthetic(spec);
    const DatasetBundle b = make_synthetic(spec);
    CHECK(a.train.features[0].numeric == b.train.features[0].numeric);
    CHECK(a.test.target_cls == b.test.target_cls);
    for (std::size_t r = 0; r < a.train.n_rows; ++r) {
        const bool expected = (a.train.features[0].numeric[r] > 0.0) !=
                              (a.train.features[1].numeric[r] > 0.0);
        CHECK(a.train.target_cls[r] == (expected ? 1u : 0u));
    }
    CHECK_THROWS_AS(make_synthetic(SynthSpec{.n_rows = 10}), DomainError);
}
