#include "tabmoe/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "tabmoe/errors.hpp"
#include "tabmoe/eval.hpp"
#include "tabmoe/kernels.hpp"

namespace tabmoe {
namespace {

constexpr std::uint64_t kTrainStream = 0x545241494e; // "TRAIN"
constexpr std::uint64_t kValStream = 0x56414c;       // "VAL"
constexpr double kCeClamp = 1e-12;

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& order,
                   std::size_t begin, std::size_t end) {
    const std::size_t w = x.cols();
    Tensor out({end - begin, w});
    for (std::size_t r = begin; r < end; ++r) {
        const double* src = x.data() + order[r] * w;
        std::copy(src, src + w, out.data() + (r - begin) * w);
    }
    return out;
}

} // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
    if (weight_decay < 0.0) throw ValidationError("weight_decay must be non-negative");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (patience < 1) throw ValidationError("patience must be >= 1");
    if (max_epochs < 1) throw ValidationError("max_epochs must be >= 1");
    if (!(clip_norm > 0.0)) throw ValidationError("clip_norm must be positive");
    if (val_mc_samples < 1) throw ValidationError("val_mc_samples must be >= 1");
}

nlohmann::json TrainConfig::to_json() const {
    return {{"learning_rate", learning_rate}, {"weight_decay", weight_decay},
            {"batch_size", batch_size},       {"patience", patience},
            {"max_epochs", max_epochs},       {"clip_norm", clip_norm},
            {"seed", seed},                   {"val_mc_samples", val_mc_samples}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& doc) {
    TrainConfig cfg;
    try {
        cfg.learning_rate = doc.at("learning_rate").get<double>();
        cfg.weight_decay = doc.at("weight_decay").get<double>();
        if (doc.contains("batch_size")) cfg.batch_size = doc.at("batch_size").get<std::size_t>();
        if (doc.contains("patience")) cfg.patience = doc.at("patience").get<std::size_t>();
        if (doc.contains("max_epochs")) cfg.max_epochs = doc.at("max_epochs").get<std::size_t>();
        if (doc.contains("clip_norm")) cfg.clip_norm = doc.at("clip_norm").get<double>();
        if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
        if (doc.contains("val_mc_samples")) {
            cfg.val_mc_samples = doc.at("val_mc_samples").get<std::size_t>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad train config: ") + e.what());
    }
    return cfg;
}

OptimizerState OptimizerState::for_params(const ModelParams& params) {
    OptimizerState state;
    for (const Tensor* t : params.tensors()) {
        state.m.push_back(Tensor::zeros(t->shape()));
        state.v.push_back(Tensor::zeros(t->shape()));
    }
    return state;
}

double loss_mse(const Tensor& pred, const Tensor& target) {
    if (pred.size() != target.size()) throw DimensionError("loss_mse length mismatch");
    if (pred.size() == 0) throw DomainError("loss_mse: empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = pred[i] - target[i];
        total += r * r;
    }
    return total / static_cast<double>(pred.size());
}

double loss_ce(const Tensor& probs, const std::vector<std::size_t>& targets) {
    if (probs.rows() != targets.size()) throw DimensionError("loss_ce batch mismatch");
    if (targets.empty()) throw DomainError("loss_ce: empty batch");
    const std::size_t classes = probs.cols();
    double total = 0.0;
    for (std::size_t b = 0; b < targets.size(); ++b) {
        if (targets[b] >= classes) {
            throw DomainError("loss_ce: class index out of range");
        }
        total -= std::log(std::max(probs(b, targets[b]), kCeClamp));
    }
    return total / static_cast<double>(targets.size());
}

double clip_global(std::vector<Tensor>& grads, double clip_norm) {
    if (!(clip_norm > 0.0)) throw DomainError("clip_global: clip_norm must be positive");
    double total_sq = 0.0;
    for (const Tensor& g : grads) total_sq += sum_squares(g);
    const double norm = std::sqrt(total_sq);
    if (norm > clip_norm) {
        const double factor = clip_norm / norm;
        for (Tensor& g : grads) {
            kernels::active().scale(g.data(), factor, g.data(), g.size());
        }
    }
    return norm;
}

void adamw_step(ModelParams& params, const std::vector<Tensor>& grads,
                OptimizerState& state, const TrainConfig& cfg) {
    auto refs = params.param_refs();
    if (grads.size() != refs.size() || state.m.size() != refs.size()) {
        throw DimensionError("adamw_step: gradient/state count mismatch");
    }
    state.step += 1;
    const auto t = static_cast<double>(state.step);
    const double inv_bias1 = 1.0 / (1.0 - std::pow(OptimizerState::beta1, t));
    const double inv_bias2 = 1.0 / (1.0 - std::pow(OptimizerState::beta2, t));
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (!refs[i].tensor->same_shape(grads[i])) {
            throw DimensionError("adamw_step: gradient shape mismatch at tensor " +
                                 std::to_string(i));
        }
        const kernels::AdamwArgs args{
            cfg.learning_rate,
            OptimizerState::beta1,
            OptimizerState::beta2,
            OptimizerState::epsilon,
            refs[i].decay ? cfg.weight_decay : 0.0,
            inv_bias1,
            inv_bias2,
        };
        kernels::active().adamw_update(refs[i].tensor->data(), grads[i].data(),
                                       state.m[i].data(), state.v[i].data(),
                                       grads[i].size(), args);
    }
}

EarlyStopper::EarlyStopper(std::size_t patience) : patience_(patience) {
    if (patience < 1) throw DomainError("EarlyStopper: patience must be >= 1");
}

bool EarlyStopper::observe(double score) {
    ++epoch_;
    if (score > best_score_) {
        best_score_ = score;
        best_epoch_ = epoch_;
        stale_ = 0;
        improved_last_ = true;
        return false;
    }
    improved_last_ = false;
    ++stale_;
    return stale_ >= patience_;
}

nlohmann::json TrainReport::to_json() const {
    nlohmann::json doc{{"epochs_run", epochs_run},
                       {"best_epoch", best_epoch},
                       {"best_val_score", best_val_score},
                       {"train_loss", train_loss},
                       {"val_scores", val_scores},
                       {"wall_time_ms", wall_time_ms},
                       {"status", status}};
    if (!std::isfinite(best_val_score)) doc["best_val_score"] = nullptr;
    return doc;
}

FitResult fit(const ModelParams& initial, const FeatureLayout& layout,
              const EncodedSplit& train_split, const EncodedSplit& val_split,
              const TrainConfig& cfg) {
    cfg.validate();
    if (train_split.n_rows == 0 || val_split.n_rows == 0) {
        throw DomainError("fit: train and validation splits must be non-empty");
    }
    const auto started = std::chrono::steady_clock::now();

    const ModelConfig& config = initial.config;
    const bool classification = config.task.is_classification();
    ModelParams params = initial;
    OptimizerState opt = OptimizerState::for_params(params);
    Rng train_rng(cfg.seed, kTrainStream);

    FitResult result;
    result.params = params; // fallback snapshot before the first epoch completes
    TrainReport& report = result.report;
    EarlyStopper stopper(cfg.patience);

    std::vector<std::size_t> order(train_split.n_rows);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const auto validation_score = [&](const ModelParams& p) {
        PredictOptions popt;
        popt.mc_samples = cfg.val_mc_samples;
        // fixed noise stream per fit run keeps epoch scores comparable
        Rng val_rng(cfg.seed, kValStream);
        popt.rng = &val_rng;
        const PredictOutput out = predict(p, layout, val_split.x, popt);
        return score_output(out, val_split, config.task);
    };

    bool diverged = false;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs && !diverged; ++epoch) {
        train_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(begin + cfg.batch_size, order.size());
            const Tensor xb = gather_rows(train_split.x, order, begin, end);

            Tape tape;
            ForwardOptions fwd;
            fwd.train = true;
            fwd.rng = &train_rng;
            const ForwardGraph graph = build_forward(tape, params, layout, xb, fwd);

            Tape::Id loss_id;
            if (classification) {
                std::vector<std::size_t> yb(end - begin);
                for (std::size_t r = begin; r < end; ++r) {
                    yb[r - begin] = train_split.y_cls[order[r]];
                }
                loss_id = tape.ce_loss(graph.output, yb);
            } else {
                Tensor yb({end - begin});
                for (std::size_t r = begin; r < end; ++r) {
                    yb[r - begin] = train_split.y_reg[order[r]];
                }
                loss_id = tape.mse_loss(graph.output, yb);
            }

            const double batch_loss = tape.value(loss_id)[0];
            if (!std::isfinite(batch_loss)) {
                diverged = true;
                break;
            }
            loss_sum += batch_loss * static_cast<double>(end - begin);

            tape.backward(loss_id);
            std::vector<Tensor> grads;
            grads.reserve(graph.params.size());
            for (Tape::Id pid : graph.params) grads.push_back(tape.grad(pid));
            clip_global(grads, cfg.clip_norm);
            adamw_step(params, grads, opt, cfg);
        }
        if (diverged) break;

        report.train_loss.push_back(loss_sum / static_cast<double>(order.size()));
        const double val = validation_score(params);
        if (!std::isfinite(val)) {
            diverged = true;
            break;
        }
        report.val_scores.push_back(val);
        report.epochs_run = epoch;

        const bool stop = stopper.observe(val);
        if (stopper.improved_last()) {
            result.params = params; // keep the best-epoch snapshot
        }
        if (stop) break;
    }

    report.best_epoch = stopper.best_epoch();
    report.best_val_score = stopper.best_score();
    report.status = diverged ? "diverged" : "ok";
    report.wall_time_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - started)
                              .count();
    if (report.best_epoch == 0) {
        // no completed epoch; report the untouched initial parameters
        report.best_val_score = std::numeric_limits<double>::quiet_NaN();
        if (!diverged) throw NumericError("fit: no epoch completed");
    }
    return result;
}

} // namespace tabmoe
