#include "tabmoe/tune.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "tabmoe/errors.hpp"

namespace tabmoe {

std::int64_t IntGrid::count() const {
    if (step <= 0 || hi < lo) throw DomainError("IntGrid: step must be > 0 and hi >= lo");
    return (hi - lo) / step + 1;
}

bool IntGrid::contains(std::int64_t v) const {
    return v >= lo && v <= hi && (v - lo) % step == 0;
}

std::int64_t sample_grid(const IntGrid& grid, Rng& rng) {
    const std::int64_t n = grid.count();
    return grid.lo + grid.step * static_cast<std::int64_t>(rng.below(
                                     static_cast<std::uint64_t>(n)));
}

double sample_uniform(const Uniform& u, Rng& rng) {
    if (u.hi < u.lo) throw DomainError("Uniform: hi must be >= lo");
    return rng.uniform(u.lo, u.hi);
}

double sample_log_uniform(const LogUniform& u, Rng& rng) {
    if (!(u.lo > 0.0) || u.hi < u.lo) {
        throw DomainError("LogUniform: bounds must be positive with hi >= lo");
    }
    return std::exp(rng.uniform(std::log(u.lo), std::log(u.hi)));
}

double sample_zero_or(const ZeroOrUniform& z, Rng& rng) {
    if (rng.uniform() < 0.5) return 0.0;
    return sample_uniform(z.inner, rng);
}

double sample_zero_or(const ZeroOrLogUniform& z, Rng& rng) {
    if (rng.uniform() < 0.5) return 0.0;
    return sample_log_uniform(z.inner, rng);
}

SearchSpace default_space(Family family, bool with_embedding) {
    SearchSpace space;
    space.family = family;
    space.with_embedding = with_embedding;
    space.n_blocks = IntGrid{1, with_embedding ? 5 : 6, 1};
    space.dropout = ZeroOrUniform{Uniform{0.0, 0.5}};
    space.weight_decay = ZeroOrLogUniform{LogUniform{1e-4, 0.1}};
    if (family == Family::mlp) {
        space.d_block = IntGrid{64, 1024, 16};
        space.learning_rate = LogUniform{3e-5, 1e-3};
    } else {
        space.d_block = IntGrid{128, 1280, 64};
        space.d_block_per_expert = IntGrid{32, 64, 32};
        space.learning_rate = LogUniform{3e-4, 1e-2};
        if (family == Family::ggmoe) space.tau = Uniform{0.5, 3.0};
    }
    if (with_embedding) {
        space.d_embedding = IntGrid{8, 32, 4};
        space.n_bins = IntGrid{2, 128, 1};
    }
    return space;
}

nlohmann::json TrialSpec::to_json() const {
    return {{"index", index},
            {"model", model.to_json()},
            {"train", train.to_json()},
            {"model_seed", model_seed}};
}

nlohmann::json TrialResult::to_json(bool include_timing) const {
    nlohmann::json doc = {{"spec", spec.to_json()},
                          {"status", status == TrialStatus::ok ? "ok" : "failed"},
                          {"val_score", val_score},
                          {"param_count", param_count}};
    if (include_timing) doc["wall_time_ms"] = wall_time_ms;
    if (!message.empty()) doc["message"] = message;
    if (status != TrialStatus::ok) doc["val_score"] = nullptr;
    return doc;
}

TrialSpec sample_trial(const SearchSpace& space, std::size_t index, Rng& rng) {
    TrialSpec spec;
    spec.index = index;
    ModelConfig& m = spec.model;
    m.family = space.family;
    // fixed draw order: n_blocks, d_block, dropout, per-expert width, tau,
    // learning rate, weight decay, d_embedding, n_bins, seeds
    m.n_blocks = static_cast<std::size_t>(sample_grid(space.n_blocks, rng));
    m.d_block = static_cast<std::size_t>(sample_grid(space.d_block, rng));
    m.dropout = sample_zero_or(space.dropout, rng);
    if (space.d_block_per_expert) {
        m.d_block_per_expert =
            static_cast<std::size_t>(sample_grid(*space.d_block_per_expert, rng));
    }
    if (space.tau) m.tau = sample_uniform(*space.tau, rng);
    spec.train.learning_rate = sample_log_uniform(space.learning_rate, rng);
    spec.train.weight_decay = sample_zero_or(space.weight_decay, rng);
    if (space.with_embedding) {
        EmbeddingConfig emb;
        emb.d_embedding = static_cast<std::size_t>(sample_grid(*space.d_embedding, rng));
        emb.n_bins = static_cast<std::size_t>(sample_grid(*space.n_bins, rng));
        m.embedding = emb;
    }
    spec.model_seed = rng.next_u64();
    spec.train.seed = rng.next_u64();
    return spec;
}

SearchOutcome run_search(const SearchSpace& space, std::size_t budget, Rng& rng,
                         const TrialRunner& runner, std::size_t workers) {
    if (budget < 1) throw DomainError("run_search: budget must be >= 1");
    if (workers < 1) workers = 1;

    std::vector<TrialSpec> specs;
    specs.reserve(budget);
    for (std::size_t i = 0; i < budget; ++i) {
        Rng trial_rng = rng.substream(i);
        specs.push_back(sample_trial(space, i, trial_rng));
    }

    std::vector<TrialResult> results(budget);
    const auto run_one = [&](std::size_t i) {
        try {
            results[i] = runner(specs[i]); // the runner reports the spec it ran
        } catch (const std::exception& e) {
            results[i] = TrialResult{};
            results[i].spec = specs[i];
            results[i].status = TrialStatus::failed;
            results[i].message = e.what();
        }
    };

    if (workers == 1) {
        for (std::size_t i = 0; i < budget; ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const std::size_t n_threads = std::min(workers, budget);
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= budget) return;
                    run_one(i);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    SearchOutcome outcome;
    outcome.trials = std::move(results);
    for (std::size_t i = 0; i < outcome.trials.size(); ++i) {
        const TrialResult& r = outcome.trials[i];
        if (r.status != TrialStatus::ok) continue;
        if (!outcome.best_index ||
            r.val_score > outcome.trials[*outcome.best_index].val_score) {
            outcome.best_index = i; // strict improvement: earliest trial wins ties
        }
    }
    return outcome;
}

} // namespace tabmoe
