#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "tabmoe/errors.hpp"
#include "tabmoe/eval.hpp"

using namespace tabmoe;

TEST_CASE("score: perfect classification, zero-residual regression, hand RMSE") {
    const Tensor probs = Tensor::matrix(2, 2, {0.9, 0.1, 0.2, 0.8});
    CHECK(score_classification(probs, {0, 1}) == 1.0);
    CHECK(score_classification(probs, {1, 0}) == 0.0);

    const Tensor y = Tensor::vector({1.0, 2.0, 3.0});
    CHECK(score_regression(y, y) == 0.0);

    CHECK(score_regression(Tensor::vector({3, 4}), Tensor::vector({0, 0})) ==
          doctest::Approx(-std::sqrt(12.5)).epsilon(1e-12));

    CHECK_THROWS_AS(score_regression(Tensor{}, Tensor{}), DomainError);
}

TEST_CASE("negative RMSE strictly decreases when a residual grows") {
    Tensor pred = Tensor::vector({1.0, 2.0, 3.0});
    const Tensor target = Tensor::vector({1.1, 2.0, 2.8});
    const double base = score_regression(pred, target);
    pred[1] = 2.5; // grow one residual magnitude
    CHECK(score_regression(pred, target) < base);
}

TEST_CASE("argmax ties resolve to the first index deterministically") {
    const Tensor probs = Tensor::matrix(1, 3, {0.4, 0.4, 0.2});
    CHECK(score_classification(probs, {0}) == 1.0);
    CHECK(score_classification(probs, {1}) == 0.0);
}

TEST_CASE("rank_models reproduces the hand-traced grouping") {
    std::vector<ScoreSummary> summaries;
    summaries.push_back({"A", {}, 0.90, 0.01, 0});
    summaries.push_back({"B", {}, 0.895, 0.02, 0});
    summaries.push_back({"C", {}, 0.80, 0.01, 0});
    const RankTable table = rank_models(summaries);
    REQUIRE(table.entries.size() == 3);
    CHECK(table.entries[0].model_id == "A");
    CHECK(table.entries[0].rank == 1);
    CHECK(table.entries[1].model_id == "B");
    CHECK(table.entries[1].rank == 1); // 0.895 >= 0.90 - 0.01
    CHECK(table.entries[2].model_id == "C");
    CHECK(table.entries[2].rank == 2);
}

TEST_CASE("single model gets rank 1; exact ties share rank via inclusive boundary") {
    const RankTable single = rank_models({{"only", {}, 0.5, 0.1, 0}});
    CHECK(single.entries[0].rank == 1);

    std::vector<ScoreSummary> tied;
    tied.push_back({"A", {}, 0.9, 0.0, 0});
    tied.push_back({"B", {}, 0.9, 0.0, 0});
    const RankTable table = rank_models(tied);
    CHECK(table.entries[0].rank == 1);
    CHECK(table.entries[1].rank == 1); // 0.9 >= 0.9 - 0
    // deterministic lexicographic order on equal means
    CHECK(table.entries[0].model_id == "A");
}

TEST_CASE("ranks are non-decreasing and rank 1 goes to the best mean") {
    Rng rng(90);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ScoreSummary> summaries;
        const std::size_t n = 2 + rng.below(8);
        for (std::size_t i = 0; i < n; ++i) {
            summaries.push_back({"m" + std::to_string(i), {}, rng.uniform(-1.0, 1.0),
                                 rng.uniform(0.0, 0.2), 0});
        }
        const RankTable table = rank_models(summaries);
        CHECK(table.entries.front().rank == 1);
        double best_mean = -2.0;
        for (const auto& s : summaries) best_mean = std::max(best_mean, s.mean);
        CHECK(table.entries.front().mean == best_mean);
        for (std::size_t i = 1; i < table.entries.size(); ++i) {
            CHECK(table.entries[i].rank >= table.entries[i - 1].rank);
        }
    }
}

TEST_CASE("ranking is invariant under positive affine rescaling of mu and sigma") {
    Rng rng(91);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<ScoreSummary> base;
        const std::size_t n = 2 + rng.below(6);
        for (std::size_t i = 0; i < n; ++i) {
            base.push_back({"m" + std::to_string(i), {}, rng.uniform(-2.0, 2.0),
                            rng.uniform(0.0, 0.5), 0});
        }
        const double a = std::exp(rng.uniform(-2.0, 2.0));
        const double b = rng.uniform(-10.0, 10.0);
        std::vector<ScoreSummary> scaled = base;
        for (auto& s : scaled) {
            s.mean = a * s.mean + b;
            s.stddev = a * s.stddev;
        }
        const RankTable t1 = rank_models(base);
        const RankTable t2 = rank_models(scaled);
        REQUIRE(t1.entries.size() == t2.entries.size());
        for (std::size_t i = 0; i < t1.entries.size(); ++i) {
            CHECK(t1.entries[i].model_id == t2.entries[i].model_id);
            CHECK(t1.entries[i].rank == t2.entries[i].rank);
        }
    }
}

TEST_CASE("aggregate_seeds: degenerate and hand-computed summaries") {
    const auto ones = [](std::uint64_t) { return std::optional<double>(1.0); };
    const ScoreSummary single = aggregate_seeds("one", ones, 1, 0);
    CHECK(single.stddev == 0.0);
    CHECK(single.scores.size() == 1);

    const auto ladder = [](std::uint64_t seed) {
        return std::optional<double>(static_cast<double>(seed));
    };
    const ScoreSummary s = aggregate_seeds("ladder", ladder, 3, 1); // scores 1,2,3
    CHECK(s.mean == doctest::Approx(2.0));
    CHECK(s.stddev == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));

    const ScoreSummary again = aggregate_seeds("ladder", ladder, 3, 1);
    CHECK(again.scores == s.scores);
    CHECK(again.mean == s.mean);
}

TEST_CASE("failed seeds are excluded and counted; all-failed throws") {
    const auto flaky = [](std::uint64_t seed) -> std::optional<double> {
        if (seed % 2 == 0) return std::nullopt;
        return 2.0;
    };
    const ScoreSummary s = aggregate_seeds("flaky", flaky, 4, 0);
    CHECK(s.scores.size() == 2);
    CHECK(s.n_failed == 2);
    CHECK(s.mean == doctest::Approx(2.0));

    const auto throwing = [](std::uint64_t) -> std::optional<double> {
        throw NumericError("boom");
    };
    CHECK_THROWS_AS(aggregate_seeds("dead", throwing, 2, 0), NumericError);
}

TEST_CASE("time_run: repetition count, bounds, and a fast no-op") {
    const TimingStats stats = time_run([] {}, 15);
    CHECK(stats.reps_ms.size() == 15);
    CHECK(stats.mean_ms < 1.0);
    const double mn = *std::min_element(stats.reps_ms.begin(), stats.reps_ms.end());
    const double mx = *std::max_element(stats.reps_ms.begin(), stats.reps_ms.end());
    CHECK(stats.mean_ms >= mn);
    CHECK(stats.mean_ms <= mx);
    CHECK_THROWS_AS(time_run([] {}, 0), DomainError);
}

TEST_CASE("summary JSON round trip") {
    const ScoreSummary s = summarize("demo", {0.5, 0.7, 0.6}, 1);
    const ScoreSummary loaded = ScoreSummary::from_json(s.to_json());
    CHECK(loaded.model_id == s.model_id);
    CHECK(loaded.scores == s.scores);
    CHECK(loaded.mean == s.mean);
    CHECK(loaded.stddev == s.stddev);
    CHECK(loaded.n_failed == 1);
}
