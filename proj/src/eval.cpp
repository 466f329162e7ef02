#include "tabmoe/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "tabmoe/errors.hpp"

namespace tabmoe {
namespace {

std::pair<double, double> mean_and_population_std(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size());
    return {mean, std::sqrt(var)};
}

std::string format_score(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace

double score_regression(const Tensor& predictions, const Tensor& targets) {
    if (predictions.size() != targets.size()) {
        throw DimensionError("score_regression length mismatch");
    }
    if (predictions.size() == 0) throw DomainError("score_regression: empty input");
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double r = predictions[i] - targets[i];
        total += r * r;
    }
    return -std::sqrt(total / static_cast<double>(predictions.size()));
}

double score_classification(const Tensor& probs, const std::vector<std::size_t>& targets) {
    if (probs.rows() != targets.size()) {
        throw DimensionError("score_classification batch mismatch");
    }
    if (targets.empty()) throw DomainError("score_classification: empty input");
    const std::size_t classes = probs.cols();
    std::size_t correct = 0;
    for (std::size_t b = 0; b < targets.size(); ++b) {
        std::size_t arg = 0;
        double best = probs(b, 0);
        for (std::size_t c = 1; c < classes; ++c) {
            if (probs(b, c) > best) {
                best = probs(b, c);
                arg = c;
            }
        }
        if (arg == targets[b]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(targets.size());
}

double score_output(const PredictOutput& output, const EncodedSplit& split, TaskSpec task) {
    if (task.is_classification()) {
        return score_classification(output.predictions, split.y_cls);
    }
    return score_regression(output.predictions, split.y_reg);
}

nlohmann::json ScoreSummary::to_json() const {
    return {{"model_id", model_id}, {"scores", scores},   {"mean", mean},
            {"stddev", stddev},     {"n_failed", n_failed}};
}

ScoreSummary ScoreSummary::from_json(const nlohmann::json& doc) {
    ScoreSummary s;
    try {
        s.model_id = doc.at("model_id").get<std::string>();
        s.scores = doc.at("scores").get<std::vector<double>>();
        s.mean = doc.at("mean").get<double>();
        s.stddev = doc.at("stddev").get<double>();
        s.n_failed = doc.at("n_failed").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad score summary: ") + e.what());
    }
    return s;
}

ScoreSummary summarize(std::string model_id, std::vector<double> scores,
                       std::size_t n_failed) {
    ScoreSummary summary;
    summary.model_id = std::move(model_id);
    summary.scores = std::move(scores);
    summary.n_failed = n_failed;
    const auto [mean, stddev] = mean_and_population_std(summary.scores);
    summary.mean = mean;
    summary.stddev = stddev;
    return summary;
}

nlohmann::json RankTable::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : entries) {
        rows.push_back({{"model_id", e.model_id},
                        {"mean", e.mean},
                        {"stddev", e.stddev},
                        {"rank", e.rank}});
    }
    return {{"ranking", rows}};
}

std::string RankTable::to_text() const {
    std::size_t name_w = 8;
    for (const auto& e : entries) name_w = std::max(name_w, e.model_id.size());
    std::ostringstream out;
    out << "rank  " << std::string(name_w, ' ') << "      mean       std\n";
    for (const auto& e : entries) {
        char line[160];
        std::snprintf(line, sizeof line, "%4zu  %-*s  %9s %9s\n", e.rank,
                      static_cast<int>(name_w), e.model_id.c_str(),
                      format_score(e.mean).c_str(), format_score(e.stddev).c_str());
        out << line;
    }
    return out.str();
}

std::string RankTable::to_csv() const {
    std::ostringstream out;
    out << "model_id,rank,mean,stddev\n";
    for (const auto& e : entries) {
        char buf[40];
        out << e.model_id << ',' << e.rank << ',';
        std::snprintf(buf, sizeof buf, "%.17g", e.mean);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", e.stddev);
        out << buf << '\n';
    }
    return out.str();
}

RankTable rank_models(std::vector<ScoreSummary> summaries) {
    if (summaries.empty()) throw DomainError("rank_models: need at least one summary");
    std::sort(summaries.begin(), summaries.end(),
              [](const ScoreSummary& a, const ScoreSummary& b) {
                  if (a.mean != b.mean) return a.mean > b.mean;
                  return a.model_id < b.model_id;
              });

    RankTable table;
    table.entries.reserve(summaries.size());
    for (const auto& s : summaries) {
        table.entries.push_back(RankedModel{s.model_id, s.mean, s.stddev, 0});
    }

    std::size_t current_rank = 1;
    std::size_t first_unranked = 0;
    while (first_unranked < table.entries.size()) {
        const double threshold =
            table.entries[first_unranked].mean - table.entries[first_unranked].stddev;
        std::size_t next = first_unranked;
        for (std::size_t i = first_unranked; i < table.entries.size(); ++i) {
            if (table.entries[i].mean >= threshold) {
                table.entries[i].rank = current_rank;
                next = i + 1;
            } else {
                break; // means are sorted descending, nothing further qualifies
            }
        }
        first_unranked = next;
        ++current_rank;
    }
    return table;
}

ScoreSummary aggregate_seeds(std::string model_id,
                             const std::function<std::optional<double>(std::uint64_t)>& run,
                             std::size_t n_seeds, std::uint64_t base_seed) {
    if (n_seeds < 1) throw DomainError("aggregate_seeds: n_seeds must be >= 1");
    std::vector<double> scores;
    std::size_t failed = 0;
    for (std::size_t s = 0; s < n_seeds; ++s) {
        std::optional<double> score;
        try {
            score = run(base_seed + s);
        } catch (const Error&) {
            score = std::nullopt;
        }
        if (score && std::isfinite(*score)) {
            scores.push_back(*score);
        } else {
            ++failed;
        }
    }
    if (scores.empty()) {
        throw NumericError("aggregate_seeds: every seed failed for " + model_id);
    }
    return summarize(std::move(model_id), std::move(scores), failed);
}

TimingStats time_run(const std::function<void()>& fn, std::size_t repetitions) {
    if (repetitions < 1) throw DomainError("time_run: repetitions must be >= 1");
    TimingStats stats;
    stats.reps_ms.reserve(repetitions);
    for (std::size_t i = 0; i < repetitions; ++i) {
        const auto start = std::chrono::steady_clock::now();
        fn();
        const auto stop = std::chrono::steady_clock::now();
        stats.reps_ms.push_back(
            std::chrono::duration<double, std::milli>(stop - start).count());
    }
    const auto [mean, stddev] = mean_and_population_std(stats.reps_ms);
    stats.mean_ms = mean;
    stats.std_ms = stddev;
    return stats;
}

} // namespace tabmoe
