#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabmoe/model.hpp"

namespace tabmoe {

struct TrainConfig {
    double learning_rate = 1e-3;
    double weight_decay = 0.0;
    std::size_t batch_size = 256;
    std::size_t patience = 16;
    std::size_t max_epochs = 1000;
    double clip_norm = 1.0;
    std::uint64_t seed = 0;
    std::size_t val_mc_samples = 10; // ggmoe validation scoring

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& doc);
};

/// Adam moments; beta/epsilon fixed, only lr and weight decay are tuned.
struct OptimizerState {
    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double epsilon = 1e-8;

    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::uint64_t step = 0;

    static OptimizerState for_params(const ModelParams& params);
};

double loss_mse(const Tensor& pred, const Tensor& target);
double loss_ce(const Tensor& probs, const std::vector<std::size_t>& targets);

/// Scales all gradients by clip_norm/norm when the concatenated L2 norm
/// exceeds clip_norm. Returns the pre-clip norm.
double clip_global(std::vector<Tensor>& grads, double clip_norm);

/// Bias-corrected AdamW step with decoupled decay on weight matrices only
/// (biases, including the gate bias column, never decay).
void adamw_step(ModelParams& params, const std::vector<Tensor>& grads,
                OptimizerState& state, const TrainConfig& cfg);

/// Patience rule: stop after `patience` consecutive epochs without a strictly
/// better score.
class EarlyStopper {
public:
    explicit EarlyStopper(std::size_t patience);

    /// Feed one epoch score (higher is better); returns true when training
    /// should stop after this epoch.
    bool observe(double score);

    bool improved_last() const noexcept { return improved_last_; }
    double best_score() const noexcept { return best_score_; }
    std::size_t best_epoch() const noexcept { return best_epoch_; } // 1-based
    std::size_t epochs_seen() const noexcept { return epoch_; }

private:
    std::size_t patience_;
    std::size_t epoch_ = 0;
    std::size_t best_epoch_ = 0;
    std::size_t stale_ = 0;
    double best_score_ = -std::numeric_limits<double>::infinity();
    bool improved_last_ = false;
};

struct TrainReport {
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;
    double best_val_score = 0.0;
    std::vector<double> train_loss; // per epoch
    std::vector<double> val_scores; // per epoch, higher better
    double wall_time_ms = 0.0;
    std::string status = "ok"; // ok | diverged

    nlohmann::json to_json() const;
};

struct FitResult {
    ModelParams params; // best-validation-epoch snapshot
    TrainReport report;
};

/// Mini-batch loop: seeded shuffles, AdamW with global clipping, per-epoch
/// validation scoring (accuracy or negative RMSE), best-epoch snapshotting
/// and patience-based early stopping. A non-finite loss aborts and returns
/// the best snapshot so far with status "diverged".
FitResult fit(const ModelParams& initial, const FeatureLayout& layout,
              const EncodedSplit& train_split, const EncodedSplit& val_split,
              const TrainConfig& cfg);

} // namespace tabmoe
