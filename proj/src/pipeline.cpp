#include "tabmoe/pipeline.hpp"

#include <chrono>

#include "tabmoe/errors.hpp"

namespace tabmoe {
namespace {

constexpr std::uint64_t kInitStream = 0x494e4954;    // "INIT"
constexpr std::uint64_t kPredictStream = 0x50524544; // "PRED"

} // namespace

FeatureLayout layout_for(const Preprocessor& prep, const DatasetSchema& schema,
                         bool with_ple) {
    FeatureLayout layout;
    std::size_t offset = 0;
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        FeatureBlock block;
        block.offset = offset;
        switch (schema.columns[c].kind) {
        case ColumnKind::numeric:
            block.is_numeric_ple = with_ple;
            block.width = with_ple ? prep.ple_width(c) : 1;
            break;
        case ColumnKind::binary:
            block.width = 1;
            break;
        case ColumnKind::categorical:
            block.width = prep.onehot_width(c);
            break;
        case ColumnKind::target:
            throw DimensionError("target column in feature schema");
        }
        offset += block.width;
        layout.blocks.push_back(block);
    }
    layout.encoded_width = offset;
    return layout;
}

EncodedSplit encode_split(const Preprocessor& prep, const DatasetSchema& schema,
                          const Split& split, bool with_ple) {
    const FeatureLayout layout = layout_for(prep, schema, with_ple);
    EncodedSplit out;
    out.n_rows = split.n_rows;
    out.x = Tensor({split.n_rows, layout.encoded_width});
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        const FeatureBlock& block = layout.blocks[c];
        const FeatureColumn& fc = split.features[c];
        for (std::size_t r = 0; r < split.n_rows; ++r) {
            double* cell = out.x.data() + r * layout.encoded_width + block.offset;
            switch (fc.kind) {
            case ColumnKind::numeric:
                if (with_ple) {
                    prep.encode_ple(c, fc.numeric[r], cell);
                } else {
                    *cell = prep.transform_quantile(c, fc.numeric[r]);
                }
                break;
            case ColumnKind::binary:
                *cell = fc.numeric[r];
                break;
            case ColumnKind::categorical:
                prep.transform_onehot(c, fc.labels[r], cell);
                break;
            case ColumnKind::target:
                break;
            }
        }
    }
    if (!split.target_reg.empty()) {
        out.y_reg = Tensor({split.n_rows}, std::vector<double>(split.target_reg));
    }
    out.y_cls = split.target_cls;
    return out;
}

EncodedDataset encode_dataset(const DatasetBundle& bundle,
                              const std::optional<EmbeddingConfig>& embedding) {
    EncodedDataset encoded;
    encoded.task = bundle.schema.task;
    encoded.embedding = embedding;
    const bool with_ple = embedding.has_value();
    encoded.preprocessor =
        Preprocessor::fit(bundle.train, bundle.schema, with_ple ? embedding->n_bins : 0);
    encoded.layout = layout_for(encoded.preprocessor, bundle.schema, with_ple);
    encoded.train = encode_split(encoded.preprocessor, bundle.schema, bundle.train, with_ple);
    encoded.val = encode_split(encoded.preprocessor, bundle.schema, bundle.val, with_ple);
    encoded.test = encode_split(encoded.preprocessor, bundle.schema, bundle.test, with_ple);
    return encoded;
}

void TrainOverrides::apply(TrainConfig& cfg) const {
    if (batch_size) cfg.batch_size = *batch_size;
    if (max_epochs) cfg.max_epochs = *max_epochs;
    if (patience) cfg.patience = *patience;
}

TrialRunner make_trial_runner(const DatasetBundle& bundle, std::size_t val_mc_samples,
                              const TrainOverrides& overrides) {
    return [&bundle, val_mc_samples, overrides](const TrialSpec& spec_in) {
        const auto started = std::chrono::steady_clock::now();
        TrialResult result;
        TrialSpec spec = spec_in;
        spec.train.val_mc_samples = val_mc_samples;
        overrides.apply(spec.train);
        result.spec = spec; // log the config that actually ran

        ModelConfig model_cfg = spec.model;
        model_cfg.task = bundle.schema.task;
        model_cfg.input_dim = bundle.schema.feature_count();

        const TrainConfig& train_cfg = spec.train;

        const EncodedDataset encoded = encode_dataset(bundle, model_cfg.embedding);
        Rng init_rng(spec.model_seed, kInitStream);
        const ModelParams initial = init_params(model_cfg, encoded.layout, init_rng);
        result.param_count = initial.scalar_count();

        const FitResult fitted =
            fit(initial, encoded.layout, encoded.train, encoded.val, train_cfg);
        result.wall_time_ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - started)
                                  .count();
        if (fitted.report.status != "ok" || fitted.report.best_epoch == 0) {
            result.status = TrialStatus::failed;
            result.message = fitted.report.status;
            return result;
        }
        result.status = TrialStatus::ok;
        result.val_score = fitted.report.best_val_score;
        return result;
    };
}

TrainedModel train_on_bundle(const DatasetBundle& bundle, const ModelConfig& model_cfg,
                             const TrainConfig& train_cfg, std::uint64_t model_seed) {
    TrainedModel trained;
    ModelConfig cfg = model_cfg;
    cfg.task = bundle.schema.task;
    cfg.input_dim = bundle.schema.feature_count();
    trained.encoded = encode_dataset(bundle, cfg.embedding);
    Rng init_rng(model_seed, kInitStream);
    const ModelParams initial = init_params(cfg, trained.encoded.layout, init_rng);
    trained.fit_result =
        fit(initial, trained.encoded.layout, trained.encoded.train, trained.encoded.val,
            train_cfg);
    return trained;
}

ModelParams init_on_encoded(const EncodedDataset& encoded, const ModelConfig& model_cfg,
                            std::uint64_t model_seed) {
    Rng init_rng(model_seed, kInitStream);
    return init_params(model_cfg, encoded.layout, init_rng);
}

double test_score(const ModelParams& params, const EncodedDataset& encoded,
                  std::size_t mc_samples, std::uint64_t predict_seed) {
    PredictOptions options;
    options.mc_samples = mc_samples;
    Rng rng(predict_seed, kPredictStream);
    options.rng = &rng;
    const PredictOutput out = predict(params, encoded.layout, encoded.test.x, options);
    return score_output(out, encoded.test, encoded.task);
}

} // namespace tabmoe
