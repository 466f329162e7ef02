// tabmoe command-line front end: data -> preprocess -> tune -> train ->
// evaluate -> rank, with JSON run configs and reproducible run directories.

#include <CLI11.hpp>

#include <iostream>

#include "tabmoe/commands.hpp"
#include "tabmoe/errors.hpp"
#include "tabmoe/kernels.hpp"

using namespace tabmoe;

int main(int argc, char** argv) {
    CLI::App app{"tabular MLP / MoE / Gumbel-gated MoE benchmark harness"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand name

    std::string config_path;
    std::string isa_name;
    RunConfig cfg;
    bool seed_set = false, out_set = false, workers_set = false;
    std::uint64_t seed_flag = 0;
    std::string out_flag;
    std::size_t workers_flag = 1;

    app.add_option("--config", config_path, "JSON run config; flags override its fields")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", seed_flag, "base random seed")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_option("--out", out_flag, "output directory")->each([&](const std::string&) {
        out_set = true;
    });
    app.add_option("--workers", workers_flag, "parallel worker count")
        ->each([&](const std::string&) { workers_set = true; });
    app.add_option("--isa", isa_name, "kernel variant: scalar|avx2|neon");

    std::string family_flag, dataset_flag, model_config_flag, run_dir_flag, tuned_dir_flag;
    std::string phase_flag;
    std::vector<std::string> families_flag, summaries_flag;
    std::size_t budget_flag = 0, mc_flag = 0, seeds_count_flag = 0;
    std::uint64_t seeds_base_flag = 0;
    bool seeds_base_set = false, embedding_flag = false;

    auto add_dataset = [&](CLI::App* sub) {
        sub->add_option("--dataset", dataset_flag, "dataset manifest path");
    };

    CLI::App* tune = app.add_subcommand("tune", "random search over the model's space");
    add_dataset(tune);
    tune->add_option("--family", family_flag, "mlp|moe|ggmoe, optional e+ prefix");
    tune->add_option("--budget", budget_flag, "number of trials (default 100)");
    tune->add_option("--mc-samples", mc_flag, "GG MoE validation MC samples");

    CLI::App* train = app.add_subcommand("train", "train one model from a tuned config");
    add_dataset(train);
    train->add_option("--model-config", model_config_flag, "tuned config JSON path");
    train->add_option("--mc-samples", mc_flag, "GG MoE validation MC samples");

    CLI::App* evaluate = app.add_subcommand("evaluate", "score a trained run on the test split");
    add_dataset(evaluate);
    evaluate->add_option("--run-dir", run_dir_flag, "directory written by train");
    evaluate->add_option("--mc-samples", mc_flag, "GG MoE inference MC samples");

    CLI::App* benchmark =
        app.add_subcommand("benchmark", "multi-seed evaluation and ranking of tuned models");
    add_dataset(benchmark);
    benchmark->add_option("--families", families_flag, "model entries, e.g. mlp e+ggmoe");
    benchmark->add_option("--tuned-dir", tuned_dir_flag,
                          "directory with <entry>.json tuned configs");
    benchmark->add_option("--seeds", seeds_count_flag, "seeds per model (default 15)");
    benchmark->add_option("--seeds-base", seeds_base_flag, "first seed")
        ->each([&](const std::string&) { seeds_base_set = true; });
    benchmark->add_option("--mc-samples", mc_flag, "GG MoE inference MC samples");

    CLI::App* rank = app.add_subcommand("rank", "rank previously written score summaries");
    rank->add_option("--summaries", summaries_flag, "summary JSON paths");

    CLI::App* count = app.add_subcommand("count-params", "exact trainable parameter count");
    add_dataset(count);
    count->add_option("--model-config", model_config_flag, "model config JSON path");

    CLI::App* time_cmd = app.add_subcommand("time", "wall-time measurements");
    add_dataset(time_cmd);
    time_cmd->add_option("--model-config", model_config_flag, "model config JSON path");
    time_cmd->add_option("--phase", phase_flag, "train|inference");
    time_cmd->add_option("--mc-samples", mc_flag, "GG MoE inference MC samples");

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string synth_kind;
    std::size_t synth_n = 0, synth_m = 0;
    double synth_noise = -1.0, synth_sep = -1.0;
    synth->add_option("--kind", synth_kind,
                      "linear-regression|gaussian-blobs|xor-classification");
    synth->add_option("--n", synth_n, "rows");
    synth->add_option("--m", synth_m, "features");
    synth->add_option("--noise", synth_noise, "noise level");
    synth->add_option("--separation", synth_sep, "blob separation in noise units");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) cfg = RunConfig::from_file(config_path);

        if (seed_set) cfg.seed = seed_flag;
        if (out_set) cfg.out = out_flag;
        if (workers_set) cfg.workers = workers_flag;
        if (!dataset_flag.empty()) cfg.dataset = dataset_flag;
        if (!family_flag.empty()) cfg.family = family_flag;
        if (!families_flag.empty()) cfg.families = families_flag;
        if (!model_config_flag.empty()) cfg.model_config = model_config_flag;
        if (!run_dir_flag.empty()) cfg.run_dir = run_dir_flag;
        if (!tuned_dir_flag.empty()) cfg.tuned_dir = tuned_dir_flag;
        if (!summaries_flag.empty()) cfg.summaries = summaries_flag;
        if (!phase_flag.empty()) cfg.phase = phase_flag;
        if (budget_flag > 0) cfg.budget = budget_flag;
        if (mc_flag > 0) cfg.mc_samples = mc_flag;
        if (seeds_count_flag > 0) cfg.seeds_count = seeds_count_flag;
        if (seeds_base_set) cfg.seeds_base = seeds_base_flag;
        if (embedding_flag) cfg.embedding = true;
        if (!synth_kind.empty()) cfg.synth_kind = synth_kind;
        if (synth_n > 0) cfg.synth_rows = synth_n;
        if (synth_m > 0) cfg.synth_features = synth_m;
        if (synth_noise >= 0.0) cfg.synth_noise = synth_noise;
        if (synth_sep >= 0.0) cfg.synth_separation = synth_sep;

        if (!isa_name.empty()) {
            kernels::Isa isa;
            if (!kernels::isa_from_name(isa_name, isa) || !kernels::select(isa)) {
                std::cerr << "error: kernel variant '" << isa_name
                          << "' not available on this machine\n";
                return 2;
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    if (tune->parsed()) return run_command(cmd_tune, cfg);
    if (train->parsed()) return run_command(cmd_train, cfg);
    if (evaluate->parsed()) return run_command(cmd_evaluate, cfg);
    if (benchmark->parsed()) return run_command(cmd_benchmark, cfg);
    if (rank->parsed()) return run_command(cmd_rank, cfg);
    if (count->parsed()) return run_command(cmd_count_params, cfg);
    if (time_cmd->parsed()) return run_command(cmd_time, cfg);
    if (synth->parsed()) return run_command(cmd_synth, cfg);
    return 2;
}
