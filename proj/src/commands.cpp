#include "tabmoe/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include "tabmoe/errors.hpp"
#include "tabmoe/json_io.hpp"
#include "tabmoe/model_io.hpp"
#include "tabmoe/pipeline.hpp"

namespace tabmoe {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kInitStream = 0x494e4954; // matches pipeline init stream

struct ModelEntry {
    std::string id;      // e.g. "e+ggmoe"
    Family family;
    bool embedding;
};

ModelEntry parse_entry(const std::string& text) {
    ModelEntry entry;
    entry.id = text;
    std::string name = text;
    entry.embedding = name.rfind("e+", 0) == 0;
    if (entry.embedding) name = name.substr(2);
    if (!family_from_name(name, entry.family)) {
        throw ValidationError("unknown model entry '" + text +
                              "' (expected mlp|moe|ggmoe with optional e+ prefix)");
    }
    return entry;
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

struct TunedConfig {
    ModelConfig model;
    TrainConfig train;
};

TunedConfig load_tuned_config(const fs::path& path) {
    const nlohmann::json doc = jsonio::read_file(path);
    TunedConfig cfg;
    try {
        cfg.model = ModelConfig::from_json(doc.at("model"));
        cfg.train = TrainConfig::from_json(doc.at("train"));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("bad tuned config " + path.string() + ": " + e.what());
    }
    return cfg;
}

DatasetBundle load_bundle(const RunConfig& cfg) {
    if (cfg.dataset.empty()) throw ValidationError("no dataset manifest given");
    return load_dataset(cfg.dataset);
}

nlohmann::json timing_json(const TimingStats& stats) {
    return {{"mean_ms", stats.mean_ms}, {"std_ms", stats.std_ms},
            {"repetitions", stats.reps_ms.size()}};
}

// Echo of everything that determines a run's outputs (worker count excluded:
// it never changes results). Rerunning with this file reproduces the run.
void echo_run_config(const RunConfig& cfg, const std::string& command,
                     const fs::path& out_dir) {
    nlohmann::json doc;
    doc["command"] = command;
    doc["dataset"] = cfg.dataset;
    doc["seed"] = cfg.seed;
    doc["mc_samples"] = cfg.mc_samples;
    if (command == "tune") {
        doc["family"] = cfg.family;
        doc["budget"] = cfg.budget;
        if (!cfg.search_space.is_null()) doc["search_space"] = cfg.search_space;
        if (cfg.batch_size) doc["batch_size"] = *cfg.batch_size;
        if (cfg.max_epochs) doc["max_epochs"] = *cfg.max_epochs;
        if (cfg.patience) doc["patience"] = *cfg.patience;
    } else if (command == "train") {
        doc["model_config"] = cfg.model_config;
    } else if (command == "evaluate") {
        doc["run_dir"] = cfg.run_dir;
    } else if (command == "benchmark") {
        doc["families"] = cfg.families;
        doc["tuned_dir"] = cfg.tuned_dir;
        doc["seeds"] = {{"count", cfg.seeds_count}, {"base", cfg.seeds_base}};
    }
    jsonio::write_file_atomic(out_dir / "run_config.json", jsonio::dump_pretty(doc));
}

IntGrid grid_from_json(const nlohmann::json& doc, const IntGrid& base) {
    IntGrid grid = base;
    if (doc.contains("lo")) grid.lo = doc.at("lo").get<std::int64_t>();
    if (doc.contains("hi")) grid.hi = doc.at("hi").get<std::int64_t>();
    if (doc.contains("step")) grid.step = doc.at("step").get<std::int64_t>();
    (void)grid.count(); // validates
    return grid;
}

void apply_space_overrides(SearchSpace& space, const nlohmann::json& doc) {
    if (doc.is_null()) return;
    try {
        if (doc.contains("n_blocks")) {
            space.n_blocks = grid_from_json(doc.at("n_blocks"), space.n_blocks);
        }
        if (doc.contains("d_block")) {
            space.d_block = grid_from_json(doc.at("d_block"), space.d_block);
        }
        if (doc.contains("d_block_per_expert") && space.d_block_per_expert) {
            space.d_block_per_expert =
                grid_from_json(doc.at("d_block_per_expert"), *space.d_block_per_expert);
        }
        if (doc.contains("dropout")) {
            space.dropout.inner = Uniform{doc.at("dropout").at("lo").get<double>(),
                                          doc.at("dropout").at("hi").get<double>()};
        }
        if (doc.contains("tau") && space.tau) {
            space.tau = Uniform{doc.at("tau").at("lo").get<double>(),
                                doc.at("tau").at("hi").get<double>()};
        }
        if (doc.contains("learning_rate")) {
            space.learning_rate = LogUniform{doc.at("learning_rate").at("lo").get<double>(),
                                             doc.at("learning_rate").at("hi").get<double>()};
        }
        if (doc.contains("weight_decay")) {
            space.weight_decay.inner =
                LogUniform{doc.at("weight_decay").at("lo").get<double>(),
                           doc.at("weight_decay").at("hi").get<double>()};
        }
        if (doc.contains("d_embedding") && space.d_embedding) {
            space.d_embedding = grid_from_json(doc.at("d_embedding"), *space.d_embedding);
        }
        if (doc.contains("n_bins") && space.n_bins) {
            space.n_bins = grid_from_json(doc.at("n_bins"), *space.n_bins);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad search_space overrides: ") + e.what());
    }
}

} // namespace

RunConfig RunConfig::from_file(const std::string& path) {
    RunConfig cfg;
    cfg.apply_json(jsonio::read_file(path));
    return cfg;
}

void RunConfig::apply_json(const nlohmann::json& doc) {
    try {
        if (doc.contains("dataset")) dataset = doc.at("dataset").get<std::string>();
        if (doc.contains("family")) family = doc.at("family").get<std::string>();
        if (doc.contains("families")) {
            families = doc.at("families").get<std::vector<std::string>>();
        }
        if (doc.contains("embedding")) embedding = doc.at("embedding").get<bool>();
        if (doc.contains("mode")) mode = doc.at("mode").get<std::string>();
        if (doc.contains("seeds")) {
            seeds_count = doc.at("seeds").at("count").get<std::size_t>();
            seeds_base = doc.at("seeds").at("base").get<std::uint64_t>();
        }
        if (doc.contains("budget")) budget = doc.at("budget").get<std::size_t>();
        if (doc.contains("mc_samples")) mc_samples = doc.at("mc_samples").get<std::size_t>();
        if (doc.contains("out")) out = doc.at("out").get<std::string>();
        if (doc.contains("workers")) workers = doc.at("workers").get<std::size_t>();
        if (doc.contains("seed")) seed = doc.at("seed").get<std::uint64_t>();
        if (doc.contains("model_config")) {
            model_config = doc.at("model_config").get<std::string>();
        }
        if (doc.contains("run_dir")) run_dir = doc.at("run_dir").get<std::string>();
        if (doc.contains("tuned_dir")) tuned_dir = doc.at("tuned_dir").get<std::string>();
        if (doc.contains("summaries")) {
            summaries = doc.at("summaries").get<std::vector<std::string>>();
        }
        if (doc.contains("phase")) phase = doc.at("phase").get<std::string>();
        if (doc.contains("synth")) {
            const auto& s = doc.at("synth");
            if (s.contains("kind")) synth_kind = s.at("kind").get<std::string>();
            if (s.contains("n")) synth_rows = s.at("n").get<std::size_t>();
            if (s.contains("m")) synth_features = s.at("m").get<std::size_t>();
            if (s.contains("noise")) synth_noise = s.at("noise").get<double>();
            if (s.contains("separation")) synth_separation = s.at("separation").get<double>();
        }
        if (doc.contains("search_space")) search_space = doc.at("search_space");
        if (doc.contains("batch_size")) batch_size = doc.at("batch_size").get<std::size_t>();
        if (doc.contains("max_epochs")) max_epochs = doc.at("max_epochs").get<std::size_t>();
        if (doc.contains("patience")) patience = doc.at("patience").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad run config: ") + e.what());
    }
    if (mc_samples < 1) throw ValidationError("mc_samples must be >= 1");
}

int cmd_tune(const RunConfig& cfg) {
    const ModelEntry entry = parse_entry(cfg.family.empty() ? "mlp" : cfg.family);
    const DatasetBundle bundle = load_bundle(cfg);
    SearchSpace space = default_space(entry.family, entry.embedding);
    apply_space_overrides(space, cfg.search_space);
    TrainOverrides overrides{cfg.batch_size, cfg.max_epochs, cfg.patience};
    Rng rng(cfg.seed, 0x54554e45); // "TUNE"
    const TrialRunner runner = make_trial_runner(bundle, cfg.mc_samples, overrides);
    const SearchOutcome outcome = run_search(space, cfg.budget, rng, runner, cfg.workers);

    std::string log;
    std::string timing_log;
    for (const TrialResult& result : outcome.trials) {
        log += jsonio::dump(result.to_json(false));
        log += '\n';
        timing_log += jsonio::dump({{"index", result.spec.index},
                                    {"wall_time_ms", result.wall_time_ms}});
        timing_log += '\n';
    }
    const fs::path out_dir = cfg.out;
    echo_run_config(cfg, "tune", out_dir);
    jsonio::write_file_atomic(out_dir / "trials.jsonl", log);
    jsonio::write_file_atomic(out_dir / "trials_timing.jsonl", timing_log);

    if (!outcome.best_index) {
        std::cerr << "tune: every trial failed; log preserved at "
                  << (out_dir / "trials.jsonl") << "\n";
        return 4;
    }
    const TrialResult& best = outcome.trials[*outcome.best_index];
    nlohmann::json best_doc;
    best_doc["model"] = best.spec.model.to_json();
    best_doc["train"] = best.spec.train.to_json();
    best_doc["meta"] = {{"family", entry.id},
                        {"dataset", bundle.schema.name},
                        {"budget", cfg.budget},
                        {"seed", cfg.seed},
                        {"best_index", best.spec.index},
                        {"best_val_score", best.val_score},
                        {"model_seed", best.spec.model_seed}};
    jsonio::write_file_atomic(out_dir / "best_config.json", jsonio::dump_pretty(best_doc));
    std::cout << "tune: best trial " << best.spec.index << " val_score " << best.val_score
              << " -> " << (out_dir / "best_config.json") << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    if (cfg.model_config.empty()) {
        throw ValidationError("train needs model_config (path to a tuned config)");
    }
    const DatasetBundle bundle = load_bundle(cfg);
    TunedConfig tuned = load_tuned_config(cfg.model_config);
    tuned.train.seed = cfg.seed;
    tuned.train.val_mc_samples = cfg.mc_samples;

    const TrainedModel trained = train_on_bundle(bundle, tuned.model, tuned.train, cfg.seed);
    const fs::path out_dir = cfg.out;
    echo_run_config(cfg, "train", out_dir);
    save_checkpoint(out_dir / "checkpoint.bin", trained.fit_result.params, cfg.seed);
    jsonio::write_file_atomic(out_dir / "preprocessor.json",
                              jsonio::dump_pretty(trained.encoded.preprocessor.to_json()));
    jsonio::write_file_atomic(out_dir / "train_report.json",
                              jsonio::dump_pretty(trained.fit_result.report.to_json()));
    if (trained.fit_result.report.status != "ok") {
        std::cerr << "train: aborted (" << trained.fit_result.report.status
                  << "), best snapshot saved\n";
        return 4;
    }
    std::cout << "train: best epoch " << trained.fit_result.report.best_epoch
              << " val_score " << trained.fit_result.report.best_val_score << " -> "
              << (out_dir / "checkpoint.bin") << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
    if (cfg.run_dir.empty()) {
        throw ValidationError("evaluate needs run_dir (train output directory)");
    }
    const DatasetBundle bundle = load_bundle(cfg);
    const fs::path run_dir = cfg.run_dir;
    const Checkpoint ckpt = load_checkpoint(run_dir / "checkpoint.bin");
    const Preprocessor prep =
        Preprocessor::from_json(jsonio::read_file(run_dir / "preprocessor.json"));

    const bool with_ple = ckpt.params.config.embedding.has_value();
    EncodedDataset encoded;
    encoded.task = bundle.schema.task;
    encoded.embedding = ckpt.params.config.embedding;
    encoded.preprocessor = prep;
    encoded.layout = layout_for(prep, bundle.schema, with_ple);
    if (encoded.layout.ple_widths() != ckpt.params.ple_widths) {
        throw ValidationError("checkpoint PLE widths do not match the preprocessor state");
    }
    encoded.test = encode_split(prep, bundle.schema, bundle.test, with_ple);

    const double score =
        test_score(ckpt.params, encoded, cfg.mc_samples, cfg.seed);
    nlohmann::json report = {{"dataset", bundle.schema.name},
                             {"family", family_name(ckpt.params.config.family)},
                             {"embedding", with_ple},
                             {"mc_samples", cfg.mc_samples},
                             {"test_score", score},
                             {"param_count", ckpt.params.scalar_count()}};
    const fs::path out_dir = cfg.out.empty() ? run_dir : fs::path(cfg.out);
    echo_run_config(cfg, "evaluate", out_dir);
    jsonio::write_file_atomic(out_dir / "eval_report.json", jsonio::dump_pretty(report));
    std::cout << "evaluate: test_score " << score << "\n";
    return 0;
}

int cmd_benchmark(const RunConfig& cfg) {
    if (cfg.families.empty()) {
        throw ValidationError("benchmark needs a non-empty families list");
    }
    if (cfg.tuned_dir.empty()) {
        throw ValidationError("benchmark needs tuned_dir with per-entry tuned configs");
    }
    const DatasetBundle bundle = load_bundle(cfg);
    const fs::path out_dir = cfg.out;
    echo_run_config(cfg, "benchmark", out_dir);

    std::vector<ScoreSummary> summaries;
    nlohmann::json timings;
    for (const std::string& entry_text : cfg.families) {
        const ModelEntry entry = parse_entry(entry_text);
        const fs::path tuned_path = fs::path(cfg.tuned_dir) / (entry.id + ".json");
        if (!fs::exists(tuned_path)) {
            throw MissingArtifactError("no tuned config for family '" + entry.id +
                                       "' at " + tuned_path.string());
        }
        TunedConfig tuned = load_tuned_config(tuned_path);
        tuned.model.task = bundle.schema.task;
        tuned.model.input_dim = bundle.schema.feature_count();
        if (entry.embedding != tuned.model.embedding.has_value()) {
            throw ValidationError("tuned config embedding flag disagrees with entry '" +
                                  entry.id + "'");
        }

        const EncodedDataset encoded = encode_dataset(bundle, tuned.model.embedding);

        // per-seed train + test score; parallel over seeds, merged by index
        std::vector<std::optional<double>> seed_scores(cfg.seeds_count);
        std::vector<double> train_times(cfg.seeds_count, 0.0);
        std::vector<ModelParams> last_params(cfg.seeds_count);
        parallel_for(cfg.seeds_count, cfg.workers, [&](std::size_t s) {
            const std::uint64_t seed = cfg.seeds_base + s;
            try {
                TrainConfig train_cfg = tuned.train;
                train_cfg.seed = seed;
                train_cfg.val_mc_samples = cfg.mc_samples;
                const ModelParams initial = init_on_encoded(encoded, tuned.model, seed);
                const FitResult fitted = fit(initial, encoded.layout, encoded.train,
                                             encoded.val, train_cfg);
                train_times[s] = fitted.report.wall_time_ms;
                if (fitted.report.status != "ok") return;
                seed_scores[s] = test_score(fitted.params, encoded, cfg.mc_samples, seed);
                last_params[s] = fitted.params;
            } catch (const Error&) {
                seed_scores[s] = std::nullopt;
            }
        });

        std::vector<double> scores;
        std::size_t failed = 0;
        const ModelParams* timing_params = nullptr;
        for (std::size_t s = 0; s < cfg.seeds_count; ++s) {
            if (seed_scores[s]) {
                scores.push_back(*seed_scores[s]);
                timing_params = &last_params[s];
            } else {
                ++failed;
            }
        }
        if (scores.empty()) {
            throw NumericError("benchmark: every seed failed for entry '" + entry.id + "'");
        }
        ScoreSummary summary = summarize(entry.id, scores, failed);
        nlohmann::json summary_doc = summary.to_json();
        summary_doc["param_count"] = count_params(tuned.model, encoded.layout);
        summary_doc["mc_samples"] = cfg.mc_samples;
        jsonio::write_file_atomic(out_dir / ("summary_" + entry.id + ".json"),
                                  jsonio::dump_pretty(summary_doc));
        summaries.push_back(std::move(summary));

        // timings: non-deterministic, kept out of the byte-stable outputs
        nlohmann::json entry_timing;
        {
            double mean_train = 0.0;
            for (double t : train_times) mean_train += t;
            entry_timing["train_ms_mean"] = mean_train / static_cast<double>(cfg.seeds_count);
        }
        std::vector<std::size_t> mc_settings = {cfg.mc_samples};
        if (entry.family == Family::ggmoe) {
            mc_settings = {1, 10};
            if (cfg.mc_samples != 1 && cfg.mc_samples != 10) {
                mc_settings.push_back(cfg.mc_samples);
            }
        }
        nlohmann::json inference = nlohmann::json::array();
        for (std::size_t mc : mc_settings) {
            const TimingStats stats = time_run(
                [&] { (void)test_score(*timing_params, encoded, mc, cfg.seeds_base); }, 15);
            nlohmann::json t = timing_json(stats);
            t["mc_samples"] = mc;
            inference.push_back(std::move(t));
        }
        entry_timing["inference"] = std::move(inference);
        timings[entry.id] = std::move(entry_timing);
    }

    const RankTable table = rank_models(summaries);
    jsonio::write_file_atomic(out_dir / "rank_table.json",
                              jsonio::dump_pretty(table.to_json()));
    jsonio::write_file_atomic(out_dir / "rank_table.txt", table.to_text());
    jsonio::write_file_atomic(out_dir / "rank_chart.csv", table.to_csv());
    jsonio::write_file_atomic(out_dir / "timings.json", jsonio::dump_pretty(timings));
    std::cout << table.to_text();
    return 0;
}

int cmd_rank(const RunConfig& cfg) {
    if (cfg.summaries.empty()) {
        throw ValidationError("rank needs at least one summary JSON path");
    }
    std::vector<ScoreSummary> summaries;
    for (const std::string& path : cfg.summaries) {
        summaries.push_back(ScoreSummary::from_json(jsonio::read_file(path)));
    }
    const RankTable table = rank_models(summaries);
    const fs::path out_dir = cfg.out;
    jsonio::write_file_atomic(out_dir / "rank_table.json",
                              jsonio::dump_pretty(table.to_json()));
    jsonio::write_file_atomic(out_dir / "rank_table.txt", table.to_text());
    jsonio::write_file_atomic(out_dir / "rank_chart.csv", table.to_csv());
    std::cout << table.to_text();
    return 0;
}

int cmd_count_params(const RunConfig& cfg) {
    if (cfg.model_config.empty()) {
        throw ValidationError("count-params needs model_config");
    }
    const DatasetBundle bundle = load_bundle(cfg);
    TunedConfig tuned = load_tuned_config(cfg.model_config);
    tuned.model.task = bundle.schema.task;
    tuned.model.input_dim = bundle.schema.feature_count();
    const EncodedDataset encoded = encode_dataset(bundle, tuned.model.embedding);
    const std::size_t count = count_params(tuned.model, encoded.layout);
    std::cout << count << "\n";
    if (!cfg.out.empty()) {
        nlohmann::json doc = {{"family", family_name(tuned.model.family)},
                              {"embedding", tuned.model.embedding.has_value()},
                              {"model_input_width",
                               encoded.layout.model_input_width(tuned.model.embedding)},
                              {"param_count", count}};
        jsonio::write_file_atomic(fs::path(cfg.out) / "param_count.json",
                                  jsonio::dump_pretty(doc));
    }
    return 0;
}

int cmd_time(const RunConfig& cfg) {
    if (cfg.model_config.empty()) throw ValidationError("time needs model_config");
    if (cfg.phase != "train" && cfg.phase != "inference") {
        throw ValidationError("time phase must be train or inference");
    }
    const DatasetBundle bundle = load_bundle(cfg);
    TunedConfig tuned = load_tuned_config(cfg.model_config);
    tuned.model.task = bundle.schema.task;
    tuned.model.input_dim = bundle.schema.feature_count();
    const EncodedDataset encoded = encode_dataset(bundle, tuned.model.embedding);

    nlohmann::json report = {{"phase", cfg.phase},
                             {"family", family_name(tuned.model.family)},
                             {"embedding", tuned.model.embedding.has_value()}};
    if (cfg.phase == "train") {
        TrainConfig train_cfg = tuned.train;
        train_cfg.seed = cfg.seed;
        train_cfg.val_mc_samples = cfg.mc_samples;
        const TimingStats stats = time_run(
            [&] {
                const ModelParams initial =
                    init_on_encoded(encoded, tuned.model, cfg.seed);
                (void)fit(initial, encoded.layout, encoded.train, encoded.val, train_cfg);
            },
            1);
        report["train"] = timing_json(stats);
    } else {
        // inference over all available rows: train + val + test
        const std::size_t total_rows =
            encoded.train.n_rows + encoded.val.n_rows + encoded.test.n_rows;
        Tensor all({total_rows, encoded.layout.encoded_width});
        double* dst = all.data();
        for (const EncodedSplit* split : {&encoded.train, &encoded.val, &encoded.test}) {
            std::copy(split->x.data(), split->x.data() + split->x.size(), dst);
            dst += split->x.size();
        }
        const ModelParams params = init_on_encoded(encoded, tuned.model, cfg.seed);
        nlohmann::json inference = nlohmann::json::array();
        std::vector<std::size_t> mc_settings = {cfg.mc_samples};
        if (tuned.model.family == Family::ggmoe) {
            mc_settings = {1, 10};
            if (cfg.mc_samples != 1 && cfg.mc_samples != 10) {
                mc_settings.push_back(cfg.mc_samples);
            }
        }
        for (std::size_t mc : mc_settings) {
            const TimingStats stats = time_run(
                [&] {
                    PredictOptions opts;
                    opts.mc_samples = mc;
                    Rng rng(cfg.seed, kInitStream);
                    opts.rng = &rng;
                    (void)predict(params, encoded.layout, all, opts);
                },
                15);
            nlohmann::json t = timing_json(stats);
            t["mc_samples"] = mc;
            inference.push_back(std::move(t));
        }
        report["rows"] = total_rows;
        report["inference"] = std::move(inference);
    }
    jsonio::write_file_atomic(fs::path(cfg.out) / "timing_report.json",
                              jsonio::dump_pretty(report));
    std::cout << "time: report written to " << (fs::path(cfg.out) / "timing_report.json")
              << "\n";
    return 0;
}

int cmd_synth(const RunConfig& cfg) {
    SynthSpec spec;
    if (!synth_kind_from_name(cfg.synth_kind, spec.kind)) {
        throw ValidationError("unknown synth kind '" + cfg.synth_kind + "'");
    }
    spec.n_rows = cfg.synth_rows;
    spec.n_features = cfg.synth_features;
    spec.noise = cfg.synth_noise;
    spec.separation = cfg.synth_separation;
    spec.seed = cfg.seed;
    const DatasetBundle bundle = make_synthetic(spec);
    const fs::path manifest = write_dataset(bundle, cfg.out);
    std::cout << "synth: wrote " << manifest << "\n";
    return 0;
}

int run_command(int (*command)(const RunConfig&), const RunConfig& cfg) {
    try {
        return command(cfg);
    } catch (const MissingArtifactError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace tabmoe
