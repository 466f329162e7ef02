#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabmoe/model.hpp"
#include "tabmoe/rng.hpp"
#include "tabmoe/train.hpp"

namespace tabmoe {

/// U{lo, hi, step}: lo, lo+step, ..., up to hi.
struct IntGrid {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    std::int64_t step = 1;

    std::int64_t count() const;
    bool contains(std::int64_t v) const;
};

struct Uniform {
    double lo = 0.0;
    double hi = 1.0;
};

struct LogUniform {
    double lo = 1e-5;
    double hi = 1e-1;
};

/// Point mass at zero with probability 1/2, otherwise the inner distribution.
struct ZeroOrUniform {
    Uniform inner;
};

struct ZeroOrLogUniform {
    LogUniform inner;
};

std::int64_t sample_grid(const IntGrid& grid, Rng& rng);
double sample_uniform(const Uniform& u, Rng& rng);
double sample_log_uniform(const LogUniform& u, Rng& rng);
double sample_zero_or(const ZeroOrUniform& z, Rng& rng);
double sample_zero_or(const ZeroOrLogUniform& z, Rng& rng);

struct SearchSpace {
    Family family = Family::mlp;
    bool with_embedding = false;

    IntGrid n_blocks;
    IntGrid d_block;
    ZeroOrUniform dropout;
    std::optional<IntGrid> d_block_per_expert; // MoE families
    std::optional<Uniform> tau;                // ggmoe
    LogUniform learning_rate;
    ZeroOrLogUniform weight_decay;
    std::optional<IntGrid> d_embedding;
    std::optional<IntGrid> n_bins;
};

/// The published search spaces: block count 1..6 (1..5 with embeddings),
/// MLP width 64..1024 step 16 with lr logU[3e-5, 1e-3]; MoE width 128..1280
/// step 64, expert width {32, 64}, lr logU[3e-4, 1e-2]; ggmoe adds
/// tau ~ U[0.5, 3]; dropout {0, U[0, 0.5]}; weight decay {0, logU[1e-4, 0.1]};
/// embeddings tune d_embedding 8..32 step 4 and bins 2..128.
SearchSpace default_space(Family family, bool with_embedding);

struct TrialSpec {
    std::size_t index = 0;
    ModelConfig model;        // task/input_dim filled by the runner
    TrainConfig train;
    std::uint64_t model_seed = 0;

    nlohmann::json to_json() const;
};

enum class TrialStatus { ok, failed };

struct TrialResult {
    TrialSpec spec;
    TrialStatus status = TrialStatus::failed;
    double val_score = 0.0;
    double wall_time_ms = 0.0;
    std::size_t param_count = 0;
    std::string message;

    /// Timing is left out of the persisted trial log so a rerun with the same
    /// seed reproduces it byte for byte; wall times go to a sidecar file.
    nlohmann::json to_json(bool include_timing = true) const;
};

struct SearchOutcome {
    std::vector<TrialResult> trials;          // trial-index order
    std::optional<std::size_t> best_index;    // argmax val score, earliest on ties
};

using TrialRunner = std::function<TrialResult(const TrialSpec&)>;

/// Deterministic draw of one trial; every sampled value lies inside its
/// declared distribution. The per-parameter draw order is fixed.
TrialSpec sample_trial(const SearchSpace& space, std::size_t index, Rng& rng);

/// Seeded random search: specs are presampled from per-trial substreams of
/// `rng`, runs execute on up to `workers` threads, results merge in trial
/// order, so the outcome does not depend on scheduling. A throwing runner
/// marks the trial failed and the search continues.
SearchOutcome run_search(const SearchSpace& space, std::size_t budget, Rng& rng,
                         const TrialRunner& runner, std::size_t workers = 1);

} // namespace tabmoe
