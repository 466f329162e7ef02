// End-to-end checks of the installed command surface, driving the real
// binary: exit codes, run-directory artifacts, byte-identical reruns.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tabmoe/json_io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "tabmoe_cli_tests";

int run_cli(const std::string& args) {
    const std::string cmd = std::string(TABMOE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) {
        if (c == '\n') ++n;
    }
    return n;
}

struct Workspace {
    Workspace() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
        REQUIRE(run_cli("synth --kind linear-regression --n 400 --m 4 --noise 0.1 --seed 7 "
                        "--out " + (kWork / "data").string()) == 0);
        std::ofstream cfg(kWork / "desk.json");
        cfg << R"({
          "search_space": {
            "d_block": {"lo": 16, "hi": 32, "step": 16},
            "n_blocks": {"lo": 1, "hi": 1},
            "d_block_per_expert": {"lo": 16, "hi": 16, "step": 16},
            "learning_rate": {"lo": 0.002, "hi": 0.02}
          },
          "max_epochs": 40
        })";
    }
    std::string dataset() const { return (kWork / "data" / "manifest.json").string(); }
    std::string desk() const { return (kWork / "desk.json").string(); }
};

} // namespace

TEST_CASE("tune: exit 0, full trial log, byte-identical rerun") {
    Workspace ws;
    const std::string base = "tune --config " + ws.desk() + " --dataset " + ws.dataset() +
                             " --family mlp --budget 2 --seed 5 --out ";
    REQUIRE(run_cli(base + (kWork / "t1").string()) == 0);
    REQUIRE(run_cli(base + (kWork / "t2").string()) == 0);

    const std::string log1 = slurp(kWork / "t1" / "trials.jsonl");
    CHECK(line_count(log1) == 2);
    CHECK(log1 == slurp(kWork / "t2" / "trials.jsonl"));
    CHECK(slurp(kWork / "t1" / "best_config.json") ==
          slurp(kWork / "t2" / "best_config.json"));
    CHECK(fs::exists(kWork / "t1" / "trials_timing.jsonl"));
}

TEST_CASE("invalid manifest exits 2 with a schema diagnostic") {
    Workspace ws;
    std::ofstream bad(kWork / "bad_manifest.json");
    bad << R"({"name": "x", "task": "regression", "columns": []})";
    bad.close();
    CHECK(run_cli("tune --dataset " + (kWork / "bad_manifest.json").string() +
                  " --family mlp --budget 1 --out " + (kWork / "t_bad").string()) == 2);
    CHECK(run_cli("tune --dataset " + (kWork / "nonexistent.json").string() +
                  " --family mlp --budget 1 --out " + (kWork / "t_bad").string()) == 3);
}

TEST_CASE("train then evaluate a tuned config; checkpoint reload is stable") {
    Workspace ws;
    REQUIRE(run_cli("tune --config " + ws.desk() + " --dataset " + ws.dataset() +
                    " --family ggmoe --budget 2 --seed 1 --out " +
                    (kWork / "tg").string()) == 0);
    REQUIRE(run_cli("train --dataset " + ws.dataset() + " --model-config " +
                    (kWork / "tg" / "best_config.json").string() + " --seed 11 --out " +
                    (kWork / "run").string()) == 0);
    CHECK(fs::exists(kWork / "run" / "checkpoint.bin"));
    CHECK(fs::exists(kWork / "run" / "preprocessor.json"));
    CHECK(fs::exists(kWork / "run" / "train_report.json"));

    REQUIRE(run_cli("evaluate --dataset " + ws.dataset() + " --run-dir " +
                    (kWork / "run").string() + " --seed 11 --out " +
                    (kWork / "eval1").string()) == 0);
    REQUIRE(run_cli("evaluate --dataset " + ws.dataset() + " --run-dir " +
                    (kWork / "run").string() + " --seed 11 --out " +
                    (kWork / "eval2").string()) == 0);
    CHECK(slurp(kWork / "eval1" / "eval_report.json") ==
          slurp(kWork / "eval2" / "eval_report.json"));

    const auto report = tabmoe::jsonio::read_file(kWork / "eval1" / "eval_report.json");
    CHECK(report.at("test_score").get<double>() > -0.5);
    CHECK(report.at("family").get<std::string>() == "ggmoe");
}

TEST_CASE("benchmark requires tuned configs and names the missing family") {
    Workspace ws;
    fs::create_directories(kWork / "tuned_missing");
    const int code = run_cli("benchmark --dataset " + ws.dataset() +
                             " --families mlp moe --tuned-dir " +
                             (kWork / "tuned_missing").string() + " --seeds 1 --out " +
                             (kWork / "b_missing").string());
    CHECK(code == 3);
}

TEST_CASE("benchmark: rank outputs exist and reruns are byte-identical") {
    Workspace ws;
    for (const std::string fam : {"mlp", "moe"}) {
        REQUIRE(run_cli("tune --config " + ws.desk() + " --dataset " + ws.dataset() +
                        " --family " + fam + " --budget 2 --seed 3 --out " +
                        (kWork / ("tune_" + fam)).string()) == 0);
        fs::create_directories(kWork / "tuned");
        fs::copy_file(kWork / ("tune_" + fam) / "best_config.json",
                      kWork / "tuned" / (fam + ".json"),
                      fs::copy_options::overwrite_existing);
    }
    const std::string base = "benchmark --dataset " + ws.dataset() +
                             " --families mlp moe --tuned-dir " +
                             (kWork / "tuned").string() + " --seeds 2 --seeds-base 0 --out ";
    REQUIRE(run_cli(base + (kWork / "b1").string() + " --workers 2") == 0);
    REQUIRE(run_cli(base + (kWork / "b2").string()) == 0);
    for (const std::string name :
         {"summary_mlp.json", "summary_moe.json", "rank_table.json", "rank_table.txt",
          "rank_chart.csv"}) {
        CHECK(slurp(kWork / "b1" / name) == slurp(kWork / "b2" / name));
    }
    CHECK(fs::exists(kWork / "b1" / "timings.json"));

    // rank command consumes the summaries the benchmark wrote
    REQUIRE(run_cli("rank --summaries " + (kWork / "b1" / "summary_mlp.json").string() +
                    " " + (kWork / "b1" / "summary_moe.json").string() + " --out " +
                    (kWork / "rank_out").string()) == 0);
    CHECK(slurp(kWork / "rank_out" / "rank_table.json") ==
          slurp(kWork / "b1" / "rank_table.json"));

    // identical entries share identical mean/sigma and therefore rank 1
    REQUIRE(run_cli("benchmark --dataset " + ws.dataset() +
                    " --families mlp mlp --tuned-dir " + (kWork / "tuned").string() +
                    " --seeds 2 --seeds-base 0 --out " + (kWork / "b_dup").string()) == 0);
    const auto dup = tabmoe::jsonio::read_file(kWork / "b_dup" / "rank_table.json");
    REQUIRE(dup.at("ranking").size() == 2);
    CHECK(dup.at("ranking").at(0).at("rank").get<std::size_t>() == 1);
    CHECK(dup.at("ranking").at(1).at("rank").get<std::size_t>() == 1);

    // the run directory records what produced it
    CHECK(fs::exists(kWork / "b1" / "run_config.json"));
}

TEST_CASE("count-params prints the exact scalar count") {
    Workspace ws;
    REQUIRE(run_cli("tune --config " + ws.desk() + " --dataset " + ws.dataset() +
                    " --family mlp --budget 1 --seed 9 --out " +
                    (kWork / "tc").string()) == 0);
    const std::string cmd = std::string(TABMOE_CLI_PATH) + " count-params --dataset " +
                            ws.dataset() + " --model-config " +
                            (kWork / "tc" / "best_config.json").string() + " > " +
                            (kWork / "count.txt").string() + " 2>/dev/null";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    const std::string text = slurp(kWork / "count.txt");
    const auto best = tabmoe::jsonio::read_file(kWork / "tc" / "best_config.json");
    const std::size_t d_block = best.at("model").at("d_block").get<std::size_t>();
    // m=4 features, one block, regression head
    const std::size_t expected = 4 * d_block + d_block + d_block + 1;
    CHECK(std::stoull(text) == expected);
}

TEST_CASE("time: inference report carries 15 repetitions") {
    Workspace ws;
    REQUIRE(run_cli("tune --config " + ws.desk() + " --dataset " + ws.dataset() +
                    " --family mlp --budget 1 --seed 2 --out " +
                    (kWork / "tt").string()) == 0);
    REQUIRE(run_cli("time --dataset " + ws.dataset() + " --model-config " +
                    (kWork / "tt" / "best_config.json").string() +
                    " --phase inference --out " + (kWork / "time_out").string()) == 0);
    const auto report = tabmoe::jsonio::read_file(kWork / "time_out" / "timing_report.json");
    CHECK(report.at("inference").at(0).at("repetitions").get<std::size_t>() == 15);
    CHECK(report.at("rows").get<std::size_t>() == 400);
}

TEST_CASE("training on absurd targets exits 4 (numeric failure)") {
    Workspace ws;
    // craft a dataset whose squared loss overflows immediately
    const fs::path dir = kWork / "diverge";
    fs::create_directories(dir);
    std::ofstream csv(dir / "data.csv");
    csv << "a,y\n";
    for (int i = 0; i < 40; ++i) csv << i << ",1e200\n";
    csv.close();
    std::ofstream manifest(dir / "manifest.json");
    manifest << R"({"name": "diverge", "task": "regression",
                    "columns": [{"name": "a", "kind": "numeric"},
                                 {"name": "y", "kind": "target"}],
                    "files": {"single": "data.csv"},
                    "split": {"ratios": [0.5, 0.25, 0.25], "seed": 1}})";
    manifest.close();
    std::ofstream model(dir / "model.json");
    model << R"({"model": {"family": "mlp", "n_blocks": 1, "d_block": 8, "dropout": 0.0},
                 "train": {"learning_rate": 0.001, "weight_decay": 0.0, "max_epochs": 3}})";
    model.close();
    CHECK(run_cli("train --dataset " + (dir / "manifest.json").string() +
                  " --model-config " + (dir / "model.json").string() + " --out " +
                  (kWork / "div_run").string()) == 4);
}
