#include "tabmoe/model.hpp"

#include <algorithm>
#include <cmath>

#include "tabmoe/errors.hpp"
#include "tabmoe/kernels.hpp"

namespace tabmoe {
namespace {

constexpr std::size_t kMaxExperts = 40;

Tensor init_linear_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    Tensor w({fan_in, fan_out});
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
    return w;
}

LinearParams init_linear(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    return LinearParams{init_linear_weight(fan_in, fan_out, rng), Tensor({fan_out})};
}

std::size_t linear_count(std::size_t fan_in, std::size_t fan_out) {
    return fan_in * fan_out + fan_out;
}

Tensor draw_gumbel_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    Tensor noise({rows, cols});
    for (std::size_t i = 0; i < noise.size(); ++i) {
        noise[i] = -std::log(-std::log(rng.uniform_open()));
    }
    return noise;
}

} // namespace

std::string family_name(Family family) {
    switch (family) {
    case Family::mlp: return "mlp";
    case Family::moe: return "moe";
    case Family::ggmoe: return "ggmoe";
    }
    return "unknown";
}

bool family_from_name(std::string_view name, Family& out) {
    if (name == "mlp") {
        out = Family::mlp;
        return true;
    }
    if (name == "moe") {
        out = Family::moe;
        return true;
    }
    if (name == "ggmoe") {
        out = Family::ggmoe;
        return true;
    }
    return false;
}

std::size_t ModelConfig::num_experts() const {
    if (!is_moe()) return 1;
    return d_block_per_expert == 0 ? 0 : d_block / d_block_per_expert;
}

std::size_t ModelConfig::expert_width() const {
    return is_moe() ? d_block_per_expert : d_block;
}

void ModelConfig::validate() const {
    if (n_blocks < 1) throw ValidationError("n_blocks must be >= 1");
    if (d_block < 1) throw ValidationError("d_block must be >= 1");
    if (!(dropout >= 0.0 && dropout <= 0.5)) {
        throw ValidationError("dropout must lie in [0, 0.5]");
    }
    if (is_moe()) {
        if (d_block_per_expert < 1) {
            throw ValidationError("d_block_per_expert must be >= 1 for MoE families");
        }
        const std::size_t k = num_experts();
        if (k < 1 || k > kMaxExperts) {
            throw ValidationError("num_experts = floor(d_block/d_block_per_expert) = " +
                                  std::to_string(k) + " outside [1, " +
                                  std::to_string(kMaxExperts) + "]");
        }
    } else {
        if (d_block_per_expert != 0) {
            throw ValidationError("d_block_per_expert is a MoE-family parameter");
        }
    }
    if (family == Family::ggmoe) {
        if (!(tau > 0.0)) throw ValidationError("ggmoe requires tau > 0");
    } else if (tau != 0.0) {
        throw ValidationError("tau is a ggmoe-only parameter");
    }
    if (embedding) {
        if (embedding->d_embedding < 1) throw ValidationError("d_embedding must be >= 1");
        if (embedding->n_bins < 2) throw ValidationError("n_bins must be >= 2");
    }
    if (task.is_classification() && task.n_classes < 2) {
        throw ValidationError("classification requires n_classes >= 2");
    }
}

nlohmann::json ModelConfig::to_json() const {
    nlohmann::json doc;
    doc["family"] = family_name(family);
    doc["n_blocks"] = n_blocks;
    doc["d_block"] = d_block;
    doc["dropout"] = dropout;
    if (is_moe()) doc["d_block_per_expert"] = d_block_per_expert;
    if (family == Family::ggmoe) doc["tau"] = tau;
    if (embedding) {
        doc["embedding"] = {{"d_embedding", embedding->d_embedding},
                            {"n_bins", embedding->n_bins}};
    }
    doc["task"] = task_kind_name(task.kind);
    if (task.kind == TaskKind::multiclass) doc["n_classes"] = task.n_classes;
    doc["input_dim"] = input_dim;
    return doc;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& doc) {
    ModelConfig cfg;
    try {
        if (!family_from_name(doc.at("family").get<std::string>(), cfg.family)) {
            throw ValidationError("unknown model family '" +
                                  doc.at("family").get<std::string>() + "'");
        }
        cfg.n_blocks = doc.at("n_blocks").get<std::size_t>();
        cfg.d_block = doc.at("d_block").get<std::size_t>();
        cfg.dropout = doc.at("dropout").get<double>();
        if (doc.contains("d_block_per_expert")) {
            cfg.d_block_per_expert = doc.at("d_block_per_expert").get<std::size_t>();
        }
        if (doc.contains("tau")) cfg.tau = doc.at("tau").get<double>();
        if (doc.contains("embedding")) {
            EmbeddingConfig emb;
            emb.d_embedding = doc.at("embedding").at("d_embedding").get<std::size_t>();
            emb.n_bins = doc.at("embedding").at("n_bins").get<std::size_t>();
            cfg.embedding = emb;
        }
        if (doc.contains("task")) {
            const std::string task = doc.at("task").get<std::string>();
            if (task == "regression") {
                cfg.task = {TaskKind::regression, 0};
            } else if (task == "binclass") {
                cfg.task = {TaskKind::binclass, 2};
            } else if (task == "multiclass") {
                cfg.task = {TaskKind::multiclass, doc.at("n_classes").get<std::size_t>()};
            } else {
                throw ValidationError("unknown task '" + task + "'");
            }
        }
        if (doc.contains("input_dim")) cfg.input_dim = doc.at("input_dim").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad model config: ") + e.what());
    }
    return cfg;
}

std::size_t FeatureLayout::model_input_width(
    const std::optional<EmbeddingConfig>& embedding) const {
    std::size_t width = 0;
    for (const auto& block : blocks) {
        if (block.is_numeric_ple) {
            if (!embedding) {
                throw DomainError("layout has PLE blocks but no embedding is configured");
            }
            width += embedding->d_embedding;
        } else {
            width += block.width;
        }
    }
    return width;
}

std::vector<std::size_t> FeatureLayout::ple_widths() const {
    std::vector<std::size_t> widths;
    for (const auto& block : blocks) {
        if (block.is_numeric_ple) widths.push_back(block.width);
    }
    return widths;
}

FeatureLayout FeatureLayout::passthrough(std::size_t width) {
    FeatureLayout layout;
    layout.blocks.push_back(FeatureBlock{false, 0, width});
    layout.encoded_width = width;
    return layout;
}

std::vector<ParamRef> ModelParams::param_refs() {
    std::vector<ParamRef> refs;
    for (auto& lin : embedding) {
        refs.push_back({&lin.weight, true});
        refs.push_back({&lin.bias, false});
    }
    for (auto& expert : experts) {
        for (auto& lin : expert.blocks) {
            refs.push_back({&lin.weight, true});
            refs.push_back({&lin.bias, false});
        }
        refs.push_back({&expert.head.weight, true});
        refs.push_back({&expert.head.bias, false});
    }
    if (gate) {
        refs.push_back({&gate->weight, true});
        refs.push_back({&gate->bias, false});
    }
    return refs;
}

std::vector<const Tensor*> ModelParams::tensors() const {
    std::vector<const Tensor*> out;
    auto& self = const_cast<ModelParams&>(*this);
    for (const ParamRef& ref : self.param_refs()) out.push_back(ref.tensor);
    return out;
}

std::size_t ModelParams::scalar_count() const {
    std::size_t total = 0;
    for (const Tensor* t : tensors()) total += t->size();
    return total;
}

ModelParams init_params(const ModelConfig& config, const FeatureLayout& layout, Rng& rng) {
    config.validate();
    ModelParams params;
    params.config = config;
    params.model_input_width = layout.model_input_width(config.embedding);
    params.ple_widths = layout.ple_widths();

    if (config.embedding) {
        if (params.ple_widths.empty()) {
            throw DomainError("embedding configured but layout has no numeric PLE blocks");
        }
        for (std::size_t w : params.ple_widths) {
            params.embedding.push_back(init_linear(w, config.embedding->d_embedding, rng));
        }
    } else if (!params.ple_widths.empty()) {
        throw DomainError("layout has PLE blocks but config has no embedding");
    }

    const std::size_t m_prime = params.model_input_width;
    const std::size_t k = config.num_experts();
    const std::size_t width = config.expert_width();
    const std::size_t out_w = config.task.output_width();
    for (std::size_t e = 0; e < k; ++e) {
        ExpertParams expert;
        std::size_t in = m_prime;
        for (std::size_t b = 0; b < config.n_blocks; ++b) {
            expert.blocks.push_back(init_linear(in, width, rng));
            in = width;
        }
        expert.head = init_linear(in, out_w, rng);
        params.experts.push_back(std::move(expert));
    }

    if (config.is_moe()) {
        params.gate = init_linear(m_prime, k, rng);
    }
    return params;
}

std::size_t count_params(const ModelConfig& config, const FeatureLayout& layout) {
    config.validate();
    const std::size_t m_prime = layout.model_input_width(config.embedding);
    std::size_t total = 0;
    if (config.embedding) {
        for (std::size_t w : layout.ple_widths()) {
            total += linear_count(w, config.embedding->d_embedding);
        }
    }
    const std::size_t k = config.num_experts();
    const std::size_t width = config.expert_width();
    const std::size_t out_w = config.task.output_width();
    std::size_t per_expert = 0;
    std::size_t in = m_prime;
    for (std::size_t b = 0; b < config.n_blocks; ++b) {
        per_expert += linear_count(in, width);
        in = width;
    }
    per_expert += linear_count(in, out_w);
    total += k * per_expert;
    if (config.is_moe()) {
        total += k * (m_prime + 1); // gate: K x (M'+1) including the bias column
    }
    return total;
}

std::size_t count_params(const ModelConfig& config, std::size_t input_width) {
    return count_params(config, FeatureLayout::passthrough(input_width));
}

ForwardGraph build_forward(Tape& tape, const ModelParams& params,
                           const FeatureLayout& layout, const Tensor& x,
                           const ForwardOptions& options) {
    const ModelConfig& config = params.config;
    if (x.cols() != layout.encoded_width) {
        throw DimensionError("input width " + std::to_string(x.cols()) +
                             " does not match encoded layout width " +
                             std::to_string(layout.encoded_width));
    }

    ForwardGraph graph;
    auto& self = const_cast<ModelParams&>(params);
    std::vector<Tensor*> ordered;
    for (const ParamRef& ref : self.param_refs()) ordered.push_back(ref.tensor);
    std::vector<Tape::Id> param_ids;
    param_ids.reserve(ordered.size());
    for (Tensor* t : ordered) param_ids.push_back(tape.param(*t));
    graph.params = param_ids;

    std::size_t next_param = 0;
    const auto take_linear = [&]() {
        const Tape::Id w = param_ids[next_param++];
        const Tape::Id b = param_ids[next_param++];
        return std::pair<Tape::Id, Tape::Id>{w, b};
    };

    const Tape::Id input = tape.input(x);

    // representation: embed numeric PLE blocks, pass the rest through
    Tape::Id rep;
    if (config.embedding) {
        std::vector<Tape::Id> parts;
        for (const FeatureBlock& block : layout.blocks) {
            const Tape::Id piece = tape.slice_cols(input, block.offset, block.width);
            if (block.is_numeric_ple) {
                const auto [w, b] = take_linear();
                parts.push_back(tape.relu(tape.add_bias(tape.matmul(piece, w), b)));
            } else {
                parts.push_back(piece);
            }
        }
        rep = parts.size() == 1 ? parts[0] : tape.concat_cols(parts);
    } else {
        rep = input;
    }

    // experts: n_blocks x (Linear -> ReLU -> Dropout), then the head
    const bool classification = config.task.is_classification();
    std::vector<Tape::Id> expert_outputs;
    for (std::size_t e = 0; e < params.experts.size(); ++e) {
        Tape::Id h = rep;
        for (std::size_t blk = 0; blk < config.n_blocks; ++blk) {
            const auto [w, b] = take_linear();
            h = tape.relu(tape.add_bias(tape.matmul(h, w), b));
            if (options.train && config.dropout > 0.0) {
                if (options.rng == nullptr) {
                    throw DomainError("train-mode forward with dropout needs an rng");
                }
                h = tape.dropout(h, config.dropout, *options.rng);
            }
        }
        const auto [hw, hb] = take_linear();
        Tape::Id out = tape.add_bias(tape.matmul(h, hw), hb);
        if (classification) out = tape.softmax_rows(out);
        expert_outputs.push_back(out);
    }

    if (!config.is_moe()) {
        graph.output = expert_outputs[0];
        return graph;
    }

    // gate logits over the same post-embedding representation
    const auto [gw, gb] = take_linear();
    Tape::Id gate_logits = tape.add_bias(tape.matmul(rep, gw), gb);
    Tape::Id gate;
    if (config.family == Family::ggmoe) {
        const std::size_t batch = x.rows();
        const std::size_t k = params.experts.size();
        Tensor noise;
        if (options.gumbel_noise != nullptr) {
            if (options.gumbel_noise->rows() != batch || options.gumbel_noise->cols() != k) {
                throw DimensionError("gumbel noise must be [batch x K]");
            }
            noise = *options.gumbel_noise;
        } else if (options.rng != nullptr) {
            noise = draw_gumbel_matrix(*options.rng, batch, k);
        } else {
            throw DomainError("ggmoe forward needs Gumbel noise (rng or explicit tensor)");
        }
        gate = tape.softmax_rows(tape.scale(tape.add_const(gate_logits, noise), 1.0 / config.tau));
    } else {
        gate = tape.softmax_rows(gate_logits);
    }

    graph.gate = gate;
    graph.has_gate = true;
    graph.output = tape.mixture(gate, expert_outputs);
    return graph;
}

namespace {

struct EvalComponents {
    std::vector<Tensor> expert_outputs; // probs for classification
    Tensor gate_logits;                 // MoE families only
};

// Inference-mode forward without a tape: dropout inactive, gate left at the
// logit stage so Monte Carlo draws can reuse it.
EvalComponents eval_components(const ModelParams& params, const FeatureLayout& layout,
                               const Tensor& x) {
    const ModelConfig& config = params.config;
    if (x.cols() != layout.encoded_width) {
        throw DimensionError("input width " + std::to_string(x.cols()) +
                             " does not match encoded layout width " +
                             std::to_string(layout.encoded_width));
    }
    const auto& kern = kernels::active();
    const std::size_t batch = x.rows();

    const auto apply_linear = [&](const Tensor& in, const LinearParams& lin) {
        Tensor out = matmul(in, lin.weight);
        const std::size_t w = out.cols();
        for (std::size_t r = 0; r < out.rows(); ++r) {
            kern.add(out.data() + r * w, lin.bias.data(), out.data() + r * w, w);
        }
        return out;
    };

    Tensor rep;
    if (config.embedding) {
        Tensor concat({batch, params.model_input_width});
        std::size_t out_off = 0;
        std::size_t emb_idx = 0;
        for (const FeatureBlock& block : layout.blocks) {
            Tensor piece({batch, block.width});
            for (std::size_t r = 0; r < batch; ++r) {
                for (std::size_t j = 0; j < block.width; ++j) {
                    piece(r, j) = x(r, block.offset + j);
                }
            }
            std::size_t out_w = block.width;
            if (block.is_numeric_ple) {
                piece = relu(apply_linear(piece, params.embedding[emb_idx++]));
                out_w = config.embedding->d_embedding;
            }
            for (std::size_t r = 0; r < batch; ++r) {
                for (std::size_t j = 0; j < out_w; ++j) {
                    concat(r, out_off + j) = piece(r, j);
                }
            }
            out_off += out_w;
        }
        rep = std::move(concat);
    } else {
        rep = x;
    }

    EvalComponents comps;
    const bool classification = config.task.is_classification();
    for (const ExpertParams& expert : params.experts) {
        Tensor h = rep;
        for (const LinearParams& lin : expert.blocks) {
            h = relu(apply_linear(h, lin));
        }
        Tensor out = apply_linear(h, expert.head);
        if (classification) out = softmax_rows(out);
        comps.expert_outputs.push_back(std::move(out));
    }
    if (config.is_moe()) {
        comps.gate_logits = apply_linear(rep, *params.gate);
    }
    return comps;
}

Tensor mix_experts(const Tensor& gate, const std::vector<Tensor>& experts) {
    const std::size_t batch = gate.rows();
    const std::size_t out_w = experts.front().cols();
    Tensor out({batch, out_w});
    const auto& kern = kernels::active();
    for (std::size_t i = 0; i < experts.size(); ++i) {
        const Tensor& e = experts[i];
        for (std::size_t b = 0; b < batch; ++b) {
            kern.axpy(gate(b, i), e.data() + b * out_w, out.data() + b * out_w, out_w);
        }
    }
    return out;
}

Tensor squeeze_regression(Tensor out) {
    return Tensor({out.rows()}, std::move(out.storage()));
}

Tensor entropy_rows(const Tensor& gate) {
    const std::size_t k = gate.cols();
    Tensor h({gate.rows()});
    for (std::size_t r = 0; r < gate.rows(); ++r) {
        h[r] = entropy(std::span<const double>(gate.data() + r * k, k));
    }
    return h;
}

} // namespace

PredictOutput predict(const ModelParams& params, const FeatureLayout& layout,
                      const Tensor& x, const PredictOptions& options) {
    const ModelConfig& config = params.config;
    EvalComponents comps = eval_components(params, layout, x);
    const bool regression = !config.task.is_classification();

    PredictOutput result;
    if (config.family == Family::mlp) {
        Tensor out = std::move(comps.expert_outputs[0]);
        result.predictions = regression ? squeeze_regression(std::move(out)) : std::move(out);
        return result;
    }

    if (config.family == Family::moe) {
        const Tensor gate = softmax_rows(comps.gate_logits);
        Tensor out = mix_experts(gate, comps.expert_outputs);
        result.predictions = regression ? squeeze_regression(std::move(out)) : std::move(out);
        result.gate_entropy = entropy_rows(gate);
        result.gate_probs = gate;
        return result;
    }

    // ggmoe: Monte Carlo over gate noise, experts and logits reused
    const std::size_t n_samples = options.mc_samples;
    if (n_samples < 1) throw DomainError("predict: mc_samples must be >= 1");
    const std::size_t batch = x.rows();
    const std::size_t k = params.experts.size();
    if (options.noise != nullptr) {
        const auto& shape = options.noise->shape();
        if (shape.size() != 3 || shape[0] != n_samples || shape[1] != batch ||
            shape[2] != k) {
            throw DimensionError("predict: explicit noise must be [mc_samples x batch x K]");
        }
    } else if (options.rng == nullptr) {
        throw DomainError("ggmoe predict needs a noise source (rng or explicit tensor)");
    }

    const std::size_t out_w = comps.expert_outputs.front().cols();
    Tensor sum_out({batch, out_w});
    Tensor sum_gate({batch, k});
    const auto& kern = kernels::active();
    for (std::size_t j = 0; j < n_samples; ++j) {
        Tensor noise_j({batch, k});
        if (options.noise != nullptr) {
            const double* src = options.noise->data() + j * batch * k;
            std::copy(src, src + batch * k, noise_j.data());
        } else {
            noise_j = draw_gumbel_matrix(*options.rng, batch, k);
        }
        const Tensor gate_j = gumbel_softmax_rows(comps.gate_logits, config.tau, noise_j);
        const Tensor out_j = mix_experts(gate_j, comps.expert_outputs);
        kern.add(sum_out.data(), out_j.data(), sum_out.data(), sum_out.size());
        kern.add(sum_gate.data(), gate_j.data(), sum_gate.data(), sum_gate.size());
    }
    const double inv_n = 1.0 / static_cast<double>(n_samples);
    Tensor out = scale(sum_out, inv_n);
    Tensor gate_mean = scale(sum_gate, inv_n);
    result.predictions = regression ? squeeze_regression(std::move(out)) : std::move(out);
    result.gate_entropy = entropy_rows(gate_mean);
    result.gate_probs = std::move(gate_mean);
    return result;
}

} // namespace tabmoe
