#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabmoe/data.hpp"

namespace tabmoe {

/// Everything the CLI commands consume. Loadable from a JSON config file whose
/// keys mirror these field names; command-line flags override file values.
struct RunConfig {
    std::string dataset;                 // manifest path
    std::string family = "mlp";          // model entry, optional "e+" prefix
    std::vector<std::string> families;   // benchmark entries
    bool embedding = false;
    std::string mode;                    // informational
    std::size_t seeds_count = 15;
    std::uint64_t seeds_base = 0;
    std::size_t budget = 100;
    std::size_t mc_samples = 10;
    std::string out = "runs/out";
    std::size_t workers = 1;
    std::uint64_t seed = 0;
    std::string model_config;            // train/count-params/time: tuned config path
    std::string run_dir;                 // evaluate: directory with checkpoint + preprocessor
    std::string tuned_dir;               // benchmark: per-entry tuned configs
    std::vector<std::string> summaries;  // rank: summary JSON paths
    std::string phase = "inference";     // time: train | inference
    // synth
    std::string synth_kind = "linear-regression";
    std::size_t synth_rows = 5000;
    std::size_t synth_features = 8;
    double synth_noise = 0.1;
    double synth_separation = 4.0;

    /// tune: optional per-parameter bound overrides applied on top of the
    /// published search space ({"d_block": {"lo":16,"hi":64,"step":16}, ...}).
    nlohmann::json search_space;
    /// training-protocol overrides for desk-scale runs
    std::optional<std::size_t> batch_size;
    std::optional<std::size_t> max_epochs;
    std::optional<std::size_t> patience;

    static RunConfig from_file(const std::string& path);
    void apply_json(const nlohmann::json& doc);
};

// Exit codes: 0 success, 2 input/validation error, 3 missing artifact,
// 4 numeric failure.
int cmd_tune(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);
int cmd_benchmark(const RunConfig& cfg);
int cmd_rank(const RunConfig& cfg);
int cmd_count_params(const RunConfig& cfg);
int cmd_time(const RunConfig& cfg);
int cmd_synth(const RunConfig& cfg);

/// Maps thrown errors onto the exit-code contract.
int run_command(int (*command)(const RunConfig&), const RunConfig& cfg);

} // namespace tabmoe
