#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tabmoe/rng.hpp"
#include "tabmoe/tensor.hpp"

namespace tabmoe {

/// Reverse-mode tape over the fixed op set the three model families need:
/// matmul, bias add, ReLU, inverted dropout, row softmax, log, scalar scale,
/// elementwise add, constant add (Gumbel noise held fixed), column
/// slice/concat, gated mixture, and the two losses. Dropout masks and noise
/// tensors are constants of the pass. Anything outside this set is not
/// constructible through the API.
class Tape {
public:
    using Id = std::uint32_t;

    /// Constant leaf; no gradient tracked.
    Id input(Tensor value);

    /// Trainable leaf. The tape keeps a non-owning view; the tensor must stay
    /// alive and unmodified until the tape is discarded.
    Id param(const Tensor& value);

    Id matmul(Id a, Id b);
    /// [n x m] + [m] row broadcast.
    Id add_bias(Id x, Id bias);
    Id relu(Id x);
    /// Inverted dropout: scale kept entries by 1/(1-rate). rate == 0 is an
    /// identity (returns x, consumes no randomness).
    Id dropout(Id x, double rate, Rng& rng);
    Id softmax_rows(Id x);
    Id log(Id x);
    Id scale(Id x, double factor);
    Id add(Id a, Id b);
    Id add_const(Id x, const Tensor& constant);
    Id slice_cols(Id x, std::size_t offset, std::size_t width);
    Id concat_cols(std::span<const Id> parts);
    /// out[b,c] = sum_i gate[b,i] * experts[i][b,c]; gate is [batch x K].
    Id mixture(Id gate, std::span<const Id> experts);
    Id mse_loss(Id pred, const Tensor& target);
    /// Mean negative log of the probability at the target class; probabilities
    /// clamped to >= 1e-12 before the log.
    Id ce_loss(Id probs, const std::vector<std::size_t>& targets);
    Id sum(Id x);

    const Tensor& value(Id id) const;

    /// Reverse pass from a scalar root.
    void backward(Id root);

    /// Accumulated gradient (zeros when the node was never reached).
    const Tensor& grad(Id id) const;

    std::size_t node_count() const noexcept { return nodes_.size(); }

private:
    enum class Op {
        input,
        param,
        matmul,
        add_bias,
        relu,
        dropout,
        softmax_rows,
        log,
        scale,
        add,
        add_const,
        slice_cols,
        concat_cols,
        mixture,
        mse_loss,
        ce_loss,
        sum,
    };

    struct Node {
        Op op;
        Tensor value;                     // owned result (empty for param views)
        const Tensor* view = nullptr;     // non-owning leaf value
        Tensor grad;                      // lazily sized
        std::vector<Id> parents;
        Tensor aux;                       // mask / noise / loss target
        std::vector<std::size_t> indices; // ce targets, concat offsets
        double factor = 0.0;              // scale factor
        std::size_t offset = 0, width = 0;
        bool requires_grad = false;

        const Tensor& val() const noexcept { return view != nullptr ? *view : value; }
    };

    Id push(Node node);
    Node& at(Id id);
    const Node& at(Id id) const;
    Tensor& grad_buffer(Id id);
    bool any_requires(std::span<const Id> ids) const;

    void backprop_node(Id id);

    std::vector<Node> nodes_;
    bool ran_backward_ = false;
};

/// Loss and gradient views of one differentiable program, both as functions
/// of the same flat parameter list.
struct GradProgram {
    std::function<double(const std::vector<Tensor>&)> loss;
    std::function<std::vector<Tensor>(const std::vector<Tensor>&)> grad;
};

/// Central-difference check of GradProgram::grad against GradProgram::loss.
/// Returns max over parameter entries of |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|).
double fd_check(const GradProgram& program, const std::vector<Tensor>& at, double step);

} // namespace tabmoe
