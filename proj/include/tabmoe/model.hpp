#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabmoe/autodiff.hpp"
#include "tabmoe/data.hpp"
#include "tabmoe/numerics.hpp"
#include "tabmoe/rng.hpp"
#include "tabmoe/tensor.hpp"

namespace tabmoe {

enum class Family { mlp, moe, ggmoe };

std::string family_name(Family family);
bool family_from_name(std::string_view name, Family& out);

struct EmbeddingConfig {
    std::size_t d_embedding = 8;
    std::size_t n_bins = 16;
};

struct ModelConfig {
    Family family = Family::mlp;
    std::size_t n_blocks = 1;
    std::size_t d_block = 64;
    double dropout = 0.0;
    std::size_t d_block_per_expert = 0; // MoE families
    double tau = 0.0;                   // ggmoe only
    std::optional<EmbeddingConfig> embedding;
    TaskSpec task;
    std::size_t input_dim = 0; // raw feature count M, bookkeeping

    bool is_moe() const noexcept { return family != Family::mlp; }
    /// floor(d_block / d_block_per_expert) for MoE families, 1 for MLP.
    std::size_t num_experts() const;
    std::size_t expert_width() const;

    /// Structural checks. K = 1 is allowed (degenerate single-expert MoE);
    /// the search spaces keep sampled configs inside 2..40.
    void validate() const;

    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& doc);
};

/// Column blocks of the encoded feature matrix, in schema order. Numeric
/// features become PLE blocks when embeddings are on; everything else passes
/// through (quantile-normalized numerics, {0,1} binaries, one-hot groups).
struct FeatureBlock {
    bool is_numeric_ple = false;
    std::size_t offset = 0;
    std::size_t width = 0;
};

struct FeatureLayout {
    std::vector<FeatureBlock> blocks;
    std::size_t encoded_width = 0;

    /// Width the model consumes: PLE blocks map to d_embedding, the rest pass
    /// through unchanged.
    std::size_t model_input_width(const std::optional<EmbeddingConfig>& embedding) const;
    std::vector<std::size_t> ple_widths() const;

    /// Trivial layout: one passthrough block of the given width.
    static FeatureLayout passthrough(std::size_t width);
};

struct LinearParams {
    Tensor weight; // [in x out]
    Tensor bias;   // [out]
};

struct ExpertParams {
    std::vector<LinearParams> blocks;
    LinearParams head;
};

struct ParamRef {
    Tensor* tensor;
    bool decay; // weight matrices decay, biases never do
};

/// Trainable state. Canonical parameter order (used by init draws, gradient
/// collection and the checkpoint payload): embedding per numeric feature
/// (weight, bias), experts in index order (per block weight, bias; then head
/// weight, bias), then the gate (weight, bias) for MoE families.
struct ModelParams {
    ModelConfig config;
    std::size_t model_input_width = 0;    // M'
    std::vector<std::size_t> ple_widths;  // per numeric feature, embedding only
    std::vector<LinearParams> embedding;  // per numeric feature
    std::vector<ExpertParams> experts;
    std::optional<LinearParams> gate;     // weight [M' x K], bias [K]

    std::vector<ParamRef> param_refs();
    std::vector<const Tensor*> tensors() const;
    std::size_t scalar_count() const;
};

/// Weights ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero; deterministic
/// in the rng state.
ModelParams init_params(const ModelConfig& config, const FeatureLayout& layout, Rng& rng);

/// Exact closed-form count of every trainable scalar, gate and embedding
/// included.
std::size_t count_params(const ModelConfig& config, const FeatureLayout& layout);
/// Convenience for embedding-free configs fed directly with `input_width`
/// columns.
std::size_t count_params(const ModelConfig& config, std::size_t input_width);

struct ForwardOptions {
    bool train = false;
    Rng* rng = nullptr;                   // dropout masks + fresh Gumbel noise
    const Tensor* gumbel_noise = nullptr; // [batch x K]; overrides rng for ggmoe
};

struct ForwardGraph {
    Tape::Id output = 0;    // regression [batch x 1], classification probs [batch x C]
    Tape::Id gate = 0;      // gate probabilities, MoE families only
    bool has_gate = false;
    std::vector<Tape::Id> params; // canonical order
};

/// Builds the differentiable forward pass on the tape. GG MoE always needs a
/// noise source (rng or explicit tensor): one Gumbel vector per row per pass.
ForwardGraph build_forward(Tape& tape, const ModelParams& params,
                           const FeatureLayout& layout, const Tensor& x,
                           const ForwardOptions& options);

struct PredictOptions {
    std::size_t mc_samples = 10;          // ggmoe Monte Carlo draws
    Rng* rng = nullptr;                   // noise source for ggmoe
    const Tensor* noise = nullptr;        // [mc_samples x batch x K] explicit noise
};

struct PredictOutput {
    Tensor predictions;                  // regression [batch]; classification [batch x C]
    std::optional<Tensor> gate_probs;    // [batch x K] (mean over draws for ggmoe)
    std::optional<Tensor> gate_entropy;  // [batch], nats
};

/// Deterministic inference. For GG MoE, expert outputs and gate logits are
/// computed once and reused across the Monte Carlo draws; the returned
/// prediction is exactly the arithmetic mean of the single-draw predictions
/// under the same noise sequence.
PredictOutput predict(const ModelParams& params, const FeatureLayout& layout,
                      const Tensor& x, const PredictOptions& options);

/// Targets of one encoded split.
struct EncodedSplit {
    Tensor x; // [n x encoded_width]
    Tensor y_reg;
    std::vector<std::size_t> y_cls;
    std::size_t n_rows = 0;
};

} // namespace tabmoe
