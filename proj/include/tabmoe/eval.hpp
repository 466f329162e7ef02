#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabmoe/model.hpp"

namespace tabmoe {

/// Negative RMSE (higher is better).
double score_regression(const Tensor& predictions, const Tensor& targets);

/// Fraction correct by argmax of the mixture probabilities (first index wins
/// ties, deterministically).
double score_classification(const Tensor& probs, const std::vector<std::size_t>& targets);

/// Dispatch on the task of the split.
double score_output(const PredictOutput& output, const EncodedSplit& split, TaskSpec task);

struct ScoreSummary {
    std::string model_id;
    std::vector<double> scores; // successful seeds only
    double mean = 0.0;
    double stddev = 0.0; // population (divide by n)
    std::size_t n_failed = 0;

    nlohmann::json to_json() const;
    static ScoreSummary from_json(const nlohmann::json& doc);
};

ScoreSummary summarize(std::string model_id, std::vector<double> scores,
                       std::size_t n_failed = 0);

struct RankedModel {
    std::string model_id;
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t rank = 0;
};

struct RankTable {
    std::vector<RankedModel> entries; // descending mean order

    nlohmann::json to_json() const;
    std::string to_text() const;
    std::string to_csv() const;
};

/// Significance-aware ranking: sort by mean descending (ties broken by
/// model id), then repeatedly give the first unranked model's rank to every
/// unranked model whose mean is >= leader mean - leader stddev (inclusive).
RankTable rank_models(std::vector<ScoreSummary> summaries);

/// Runs seeds base_seed .. base_seed+n-1. A runner returning nullopt (or
/// throwing) marks that seed failed and excludes it; throws NumericError when
/// every seed fails.
ScoreSummary aggregate_seeds(std::string model_id,
                             const std::function<std::optional<double>(std::uint64_t)>& run,
                             std::size_t n_seeds, std::uint64_t base_seed);

struct TimingStats {
    std::vector<double> reps_ms;
    double mean_ms = 0.0;
    double std_ms = 0.0;
};

/// Monotonic-clock timing over `repetitions` calls (15 for inference
/// measurements, 1 for training).
TimingStats time_run(const std::function<void()>& fn, std::size_t repetitions);

} // namespace tabmoe
