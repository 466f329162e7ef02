#pragma once

#include <optional>

#include "tabmoe/data.hpp"
#include "tabmoe/eval.hpp"
#include "tabmoe/model.hpp"
#include "tabmoe/preprocess.hpp"
#include "tabmoe/train.hpp"
#include "tabmoe/tune.hpp"

namespace tabmoe {

struct EncodedDataset {
    FeatureLayout layout;
    TaskSpec task;
    EncodedSplit train, val, test;
    Preprocessor preprocessor;
    std::optional<EmbeddingConfig> embedding;
};

/// Fit the preprocessor on the training split and encode all three splits.
/// With an embedding config, numeric features become raw-value PLE blocks
/// (bins fitted on raw train values); without one they become
/// quantile-normalized scalars. Binary and one-hot columns pass through
/// either way, in schema order.
EncodedDataset encode_dataset(const DatasetBundle& bundle,
                              const std::optional<EmbeddingConfig>& embedding);

/// Encode one split with an already-fitted preprocessor (checkpoint reload
/// path).
EncodedSplit encode_split(const Preprocessor& prep, const DatasetSchema& schema,
                          const Split& split, bool with_ple);

FeatureLayout layout_for(const Preprocessor& prep, const DatasetSchema& schema,
                         bool with_ple);

/// Optional per-run replacements for the fixed training-protocol defaults.
struct TrainOverrides {
    std::optional<std::size_t> batch_size;
    std::optional<std::size_t> max_epochs;
    std::optional<std::size_t> patience;

    void apply(TrainConfig& cfg) const;
};

/// Trial runner that fits on train and scores on validation, re-encoding per
/// trial when the embedding bin count varies.
TrialRunner make_trial_runner(const DatasetBundle& bundle, std::size_t val_mc_samples = 10,
                              const TrainOverrides& overrides = {});

struct TrainedModel {
    FitResult fit_result;
    EncodedDataset encoded;
};

/// End-to-end: encode, init (model_seed), fit.
TrainedModel train_on_bundle(const DatasetBundle& bundle, const ModelConfig& model_cfg,
                             const TrainConfig& train_cfg, std::uint64_t model_seed);

/// Seeded init against an already-encoded dataset.
ModelParams init_on_encoded(const EncodedDataset& encoded, const ModelConfig& model_cfg,
                            std::uint64_t model_seed);

/// Test-split score. For GG MoE, predictions use `mc_samples` Monte Carlo
/// draws seeded by `predict_seed`.
double test_score(const ModelParams& params, const EncodedDataset& encoded,
                  std::size_t mc_samples, std::uint64_t predict_seed);

} // namespace tabmoe
