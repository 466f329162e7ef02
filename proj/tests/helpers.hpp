#pragma once

// Shared test scaffolding: random tensors, hand-built models, and the
// finite-difference program wrapper used by the gradient oracles.

#include <cstring>
#include <vector>

#include "tabmoe/autodiff.hpp"
#include "tabmoe/model.hpp"
#include "tabmoe/rng.hpp"
#include "tabmoe/tensor.hpp"

namespace tabmoe::testing {

inline Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo = -1.0,
                            double hi = 1.0) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

inline bool bits_equal(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

inline std::vector<Tensor> snapshot_params(const ModelParams& params) {
    std::vector<Tensor> out;
    for (const Tensor* t : params.tensors()) out.push_back(*t);
    return out;
}

inline void assign_params(ModelParams& params, const std::vector<Tensor>& values) {
    auto refs = params.param_refs();
    for (std::size_t i = 0; i < refs.size(); ++i) *refs[i].tensor = values[i];
}

/// Loss/grad pair over the flat parameter list of one model on one batch.
/// Dropout masks and Gumbel noise are regenerated from the same seed on every
/// call, so they act as constants of the pass.
struct ModelProgram {
    ModelParams proto;
    FeatureLayout layout;
    Tensor x;
    Tensor y_reg;
    std::vector<std::size_t> y_cls;
    bool train_mode = true;
    std::uint64_t noise_seed = 0;

    double loss(const std::vector<Tensor>& values) const {
        ModelParams p = proto;
        assign_params(p, values);
        Tape tape;
        Rng rng(noise_seed, 0xFD);
        ForwardOptions opt;
        opt.train = train_mode;
        opt.rng = &rng;
        const ForwardGraph graph = build_forward(tape, p, layout, x, opt);
        const Tape::Id loss_id = proto.config.task.is_classification()
                                     ? tape.ce_loss(graph.output, y_cls)
                                     : tape.mse_loss(graph.output, y_reg);
        return tape.value(loss_id)[0];
    }

    std::vector<Tensor> grad(const std::vector<Tensor>& values) const {
        ModelParams p = proto;
        assign_params(p, values);
        Tape tape;
        Rng rng(noise_seed, 0xFD);
        ForwardOptions opt;
        opt.train = train_mode;
        opt.rng = &rng;
        const ForwardGraph graph = build_forward(tape, p, layout, x, opt);
        const Tape::Id loss_id = proto.config.task.is_classification()
                                     ? tape.ce_loss(graph.output, y_cls)
                                     : tape.mse_loss(graph.output, y_reg);
        tape.backward(loss_id);
        std::vector<Tensor> grads;
        for (Tape::Id pid : graph.params) grads.push_back(tape.grad(pid));
        return grads;
    }

    GradProgram as_grad_program() const {
        return GradProgram{
            [this](const std::vector<Tensor>& v) { return loss(v); },
            [this](const std::vector<Tensor>& v) { return grad(v); },
        };
    }
};

} // namespace tabmoe::testing
