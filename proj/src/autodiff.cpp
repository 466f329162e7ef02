#include "tabmoe/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "tabmoe/errors.hpp"
#include "tabmoe/kernels.hpp"
#include "tabmoe/numerics.hpp"

namespace tabmoe {
namespace {

constexpr double kCeClamp = 1e-12;

} // namespace

Tape::Id Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<Id>(nodes_.size() - 1);
}

Tape::Node& Tape::at(Id id) { return nodes_.at(id); }
const Tape::Node& Tape::at(Id id) const { return nodes_.at(id); }

bool Tape::any_requires(std::span<const Id> ids) const {
    return std::any_of(ids.begin(), ids.end(),
                       [this](Id id) { return at(id).requires_grad; });
}

Tensor& Tape::grad_buffer(Id id) {
    Node& n = at(id);
    if (n.grad.empty()) n.grad = Tensor::zeros(n.val().shape());
    return n.grad;
}

Tape::Id Tape::input(Tensor value) {
    Node n;
    n.op = Op::input;
    n.value = std::move(value);
    n.requires_grad = false;
    return push(std::move(n));
}

Tape::Id Tape::param(const Tensor& value) {
    Node n;
    n.op = Op::param;
    n.view = &value;
    n.requires_grad = true;
    return push(std::move(n));
}

Tape::Id Tape::matmul(Id a, Id b) {
    Node n;
    n.op = Op::matmul;
    n.value = tabmoe::matmul(at(a).val(), at(b).val());
    n.parents = {a, b};
    n.requires_grad = any_requires(n.parents);
    return push(std::move(n));
}

Tape::Id Tape::add_bias(Id x, Id bias) {
    const Tensor& xv = at(x).val();
    const Tensor& bv = at(bias).val();
    if (bv.rank() != 1 || xv.cols() != bv.size()) {
        throw DimensionError("add_bias shape mismatch: " + shape_to_string(xv.shape()) +
                             " + " + shape_to_string(bv.shape()));
    }
    Node n;
    n.op = Op::add_bias;
    Tensor out(xv.shape());
    const std::size_t m = xv.cols();
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        kernels::active().add(xv.data() + r * m, bv.data(), out.data() + r * m, m);
    }
    n.value = std::move(out);
    n.parents = {x, bias};
    n.requires_grad = any_requires(n.parents);
    return push(std::move(n));
}

Tape::Id Tape::relu(Id x) {
    Node n;
    n.op = Op::relu;
    n.value = tabmoe::relu(at(x).val());
    n.parents = {x};
    n.requires_grad = at(x).requires_grad;
    return push(std::move(n));
}

Tape::Id Tape::dropout(Id x, double rate, Rng& rng) {
    if (rate == 0.0) return x;
    if (!(rate > 0.0 && rate < 1.0)) throw DomainError("dropout rate must be in [0,1)");
    const Tensor& xv = at(x).val();
    Tensor mask(xv.shape());
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = rng.uniform() >= rate ? keep_scale : 0.0;
    }
    Node n;
    n.op = Op::dropout;
    n.value = tabmoe::mul(xv, mask);
    n.aux = std::move(mask);
    n.parents = {x};
    n.requires_grad = at(x).requires_grad;
    return push(std::move(n));
}

Tape::Id Tape::softmax_rows(Id x) {
    Node n;
    n.op = Op::softmax_rows;
    n.value = tabmoe::softmax_rows(at(x).val());
    n.parents = {x};
    n.requires_grad = at(x).requires_grad;
    return push(std::move(n));
}

Tape::Id Tape::log(Id x) {
    const Tensor& xv = at(x).val();
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::log(xv[i]);
    Node n;
    n.op = Op::log;
    n.value = std::move(out);
    n.parents = {x};
    n.requires_grad = at(x).requires_grad;
    return push(std::move(n));
}

Tape::Id Tape::scale(Id x, double factor) {
    Node n;
    n.op = Op::scale;
    n.value = tabmoe::scale(at(x).val(), factor);
    n.factor = factor;
    n.parents = {x};
    n.requires_grad = at(x).requires_grad;
    return push(std::move(n));
}

Tape::Id Tape::add(Id a, Id b) {
    Node n;
    n.op = Op::add;
    n.value = tabmoe::add(at(a).val(), at(b).val());
    n.parents = {a, b};
    n.requires_grad = any_requires(n.parents);
    return push(std::move(n));
}

Tape::Id Tape::add_const(Id x, const Tensor& constant) {
    Node n;
    n.op = Op::add_const;
    n.value = tabmoe::add(at(x).val(), constant);
    n.parents = {x};
    n.requires_grad = at(x).requires_grad;
    return push(std::move(n));
}

Tape::Id Tape::slice_cols(Id x, std::size_t offset, std::size_t width) {
    const Tensor& xv = at(x).val();
    if (offset + width > xv.cols()) throw DimensionError("slice_cols out of range");
    Tensor out({xv.rows(), width});
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        for (std::size_t j = 0; j < width; ++j) out(r, j) = xv(r, offset + j);
    }
    Node n;
    n.op = Op::slice_cols;
    n.value = std::move(out);
    n.offset = offset;
    n.width = width;
    n.parents = {x};
    n.requires_grad = at(x).requires_grad;
    return push(std::move(n));
}

Tape::Id Tape::concat_cols(std::span<const Id> parts) {
    if (parts.empty()) throw DimensionError("concat_cols requires at least one part");
    const std::size_t rows = at(parts[0]).val().rows();
    std::size_t total = 0;
    std::vector<std::size_t> offsets;
    offsets.reserve(parts.size());
    for (Id p : parts) {
        if (at(p).val().rows() != rows) throw DimensionError("concat_cols row mismatch");
        offsets.push_back(total);
        total += at(p).val().cols();
    }
    Tensor out({rows, total});
    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
        const Tensor& part = at(parts[pi]).val();
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < part.cols(); ++j) {
                out(r, offsets[pi] + j) = part(r, j);
            }
        }
    }
    Node n;
    n.op = Op::concat_cols;
    n.value = std::move(out);
    n.indices = std::move(offsets);
    n.parents.assign(parts.begin(), parts.end());
    n.requires_grad = any_requires(n.parents);
    return push(std::move(n));
}

Tape::Id Tape::mixture(Id gate, std::span<const Id> experts) {
    const Tensor& g = at(gate).val();
    if (experts.empty()) throw DimensionError("mixture requires at least one expert");
    if (g.cols() != experts.size()) {
        throw DimensionError("mixture: gate width " + std::to_string(g.cols()) +
                             " != expert count " + std::to_string(experts.size()));
    }
    const std::size_t batch = g.rows();
    const std::size_t out_w = at(experts[0]).val().cols();
    Tensor out({batch, out_w});
    for (std::size_t i = 0; i < experts.size(); ++i) {
        const Tensor& e = at(experts[i]).val();
        if (e.rows() != batch || e.cols() != out_w) {
            throw DimensionError("mixture: expert output shape mismatch");
        }
        for (std::size_t b = 0; b < batch; ++b) {
            kernels::active().axpy(g(b, i), e.data() + b * out_w, out.data() + b * out_w,
                                   out_w);
        }
    }
    Node n;
    n.op = Op::mixture;
    n.value = std::move(out);
    n.parents.reserve(experts.size() + 1);
    n.parents.push_back(gate);
    n.parents.insert(n.parents.end(), experts.begin(), experts.end());
    n.requires_grad = any_requires(n.parents);
    return push(std::move(n));
}

Tape::Id Tape::mse_loss(Id pred, const Tensor& target) {
    const Tensor& p = at(pred).val();
    if (p.size() != target.size()) throw DimensionError("mse_loss length mismatch");
    if (p.size() == 0) throw DomainError("mse_loss: empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double r = p[i] - target[i];
        total += r * r;
    }
    Node n;
    n.op = Op::mse_loss;
    n.value = Tensor({1}, {total / static_cast<double>(p.size())});
    n.aux = target;
    n.parents = {pred};
    n.requires_grad = at(pred).requires_grad;
    return push(std::move(n));
}

Tape::Id Tape::ce_loss(Id probs, const std::vector<std::size_t>& targets) {
    const Tensor& p = at(probs).val();
    if (p.rows() != targets.size()) throw DimensionError("ce_loss batch mismatch");
    if (targets.empty()) throw DomainError("ce_loss: empty batch");
    const std::size_t classes = p.cols();
    double total = 0.0;
    for (std::size_t b = 0; b < targets.size(); ++b) {
        if (targets[b] >= classes) {
            throw DomainError("ce_loss: class index " + std::to_string(targets[b]) +
                              " out of range [0," + std::to_string(classes) + ")");
        }
        total -= std::log(std::max(p(b, targets[b]), kCeClamp));
    }
    Node n;
    n.op = Op::ce_loss;
    n.value = Tensor({1}, {total / static_cast<double>(targets.size())});
    n.indices = targets;
    n.parents = {probs};
    n.requires_grad = at(probs).requires_grad;
    return push(std::move(n));
}

Tape::Id Tape::sum(Id x) {
    Node n;
    n.op = Op::sum;
    n.value = Tensor({1}, {tabmoe::sum(at(x).val())});
    n.parents = {x};
    n.requires_grad = at(x).requires_grad;
    return push(std::move(n));
}

const Tensor& Tape::value(Id id) const { return at(id).val(); }

const Tensor& Tape::grad(Id id) const {
    const Node& n = at(id);
    if (n.grad.empty()) {
        static thread_local Tensor zeros;
        zeros = Tensor::zeros(n.val().shape());
        return zeros;
    }
    return n.grad;
}

void Tape::backward(Id root) {
    if (at(root).val().size() != 1) {
        throw DomainError("backward requires a scalar root");
    }
    grad_buffer(root)[0] = 1.0;
    for (Id id = root + 1; id-- > 0;) {
        const Node& n = at(id);
        if (!n.requires_grad || n.grad.empty()) continue;
        backprop_node(id);
    }
    ran_backward_ = true;
}

void Tape::backprop_node(Id id) {
    Node& n = at(id);
    const Tensor& g = n.grad;
    const auto& kern = kernels::active();

    switch (n.op) {
    case Op::input:
    case Op::param:
        break;

    case Op::matmul: {
        const Id a = n.parents[0], b = n.parents[1];
        const Tensor& av = at(a).val();
        const Tensor& bv = at(b).val();
        if (at(a).requires_grad) {
            const Tensor bt = transpose(bv);
            kern.matmul_acc(g.data(), bt.data(), grad_buffer(a).data(), g.rows(),
                            g.cols(), bt.cols());
        }
        if (at(b).requires_grad) {
            const Tensor at_ = transpose(av);
            kern.matmul_acc(at_.data(), g.data(), grad_buffer(b).data(), at_.rows(),
                            at_.cols(), g.cols());
        }
        break;
    }

    case Op::add_bias: {
        const Id x = n.parents[0], bias = n.parents[1];
        if (at(x).requires_grad) {
            kern.axpy(1.0, g.data(), grad_buffer(x).data(), g.size());
        }
        if (at(bias).requires_grad) {
            Tensor& bg = grad_buffer(bias);
            const std::size_t m = g.cols();
            for (std::size_t r = 0; r < g.rows(); ++r) {
                kern.add(bg.data(), g.data() + r * m, bg.data(), m);
            }
        }
        break;
    }

    case Op::relu: {
        const Id x = n.parents[0];
        if (at(x).requires_grad) {
            kern.relu_backward(at(x).val().data(), g.data(), grad_buffer(x).data(),
                               g.size());
        }
        break;
    }

    case Op::dropout: {
        const Id x = n.parents[0];
        if (at(x).requires_grad) {
            kern.mul_acc(g.data(), n.aux.data(), grad_buffer(x).data(), g.size());
        }
        break;
    }

    case Op::softmax_rows: {
        const Id x = n.parents[0];
        if (!at(x).requires_grad) break;
        Tensor& xg = grad_buffer(x);
        const Tensor& p = n.value;
        const std::size_t k = p.shape().back();
        const std::size_t rows = p.size() / k;
        for (std::size_t r = 0; r < rows; ++r) {
            const double* pr = p.data() + r * k;
            const double* gr = g.data() + r * k;
            double dot = 0.0;
            for (std::size_t i = 0; i < k; ++i) dot += gr[i] * pr[i];
            double* xr = xg.data() + r * k;
            for (std::size_t i = 0; i < k; ++i) xr[i] += pr[i] * (gr[i] - dot);
        }
        break;
    }

    case Op::log: {
        const Id x = n.parents[0];
        if (!at(x).requires_grad) break;
        Tensor& xg = grad_buffer(x);
        const Tensor& xv = at(x).val();
        for (std::size_t i = 0; i < g.size(); ++i) xg[i] += g[i] / xv[i];
        break;
    }

    case Op::scale: {
        const Id x = n.parents[0];
        if (at(x).requires_grad) {
            kern.axpy(n.factor, g.data(), grad_buffer(x).data(), g.size());
        }
        break;
    }

    case Op::add: {
        for (Id p : n.parents) {
            if (at(p).requires_grad) {
                kern.axpy(1.0, g.data(), grad_buffer(p).data(), g.size());
            }
        }
        break;
    }

    case Op::add_const: {
        const Id x = n.parents[0];
        if (at(x).requires_grad) {
            kern.axpy(1.0, g.data(), grad_buffer(x).data(), g.size());
        }
        break;
    }

    case Op::slice_cols: {
        const Id x = n.parents[0];
        if (!at(x).requires_grad) break;
        Tensor& xg = grad_buffer(x);
        const std::size_t stride = at(x).val().cols();
        for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t j = 0; j < n.width; ++j) {
                xg[r * stride + n.offset + j] += g(r, j);
            }
        }
        break;
    }

    case Op::concat_cols: {
        for (std::size_t pi = 0; pi < n.parents.size(); ++pi) {
            const Id p = n.parents[pi];
            if (!at(p).requires_grad) continue;
            Tensor& pg = grad_buffer(p);
            const std::size_t w = at(p).val().cols();
            const std::size_t off = n.indices[pi];
            for (std::size_t r = 0; r < g.rows(); ++r) {
                for (std::size_t j = 0; j < w; ++j) pg(r, j) += g(r, off + j);
            }
        }
        break;
    }

    case Op::mixture: {
        const Id gate = n.parents[0];
        const Tensor& gv = at(gate).val();
        const std::size_t n_experts = n.parents.size() - 1;
        const std::size_t out_w = g.cols();
        for (std::size_t i = 0; i < n_experts; ++i) {
            const Id e = n.parents[1 + i];
            const Tensor& ev = at(e).val();
            if (at(gate).requires_grad) {
                Tensor& gg = grad_buffer(gate);
                for (std::size_t b = 0; b < g.rows(); ++b) {
                    double dot = 0.0;
                    const double* gr = g.data() + b * out_w;
                    const double* er = ev.data() + b * out_w;
                    for (std::size_t c = 0; c < out_w; ++c) dot += gr[c] * er[c];
                    gg(b, i) += dot;
                }
            }
            if (at(e).requires_grad) {
                Tensor& eg = grad_buffer(e);
                for (std::size_t b = 0; b < g.rows(); ++b) {
                    kern.axpy(gv(b, i), g.data() + b * out_w, eg.data() + b * out_w,
                              out_w);
                }
            }
        }
        break;
    }

    case Op::mse_loss: {
        const Id pred = n.parents[0];
        if (!at(pred).requires_grad) break;
        Tensor& pg = grad_buffer(pred);
        const Tensor& pv = at(pred).val();
        const double inv_n = 1.0 / static_cast<double>(pv.size());
        const double gl = g[0];
        for (std::size_t i = 0; i < pv.size(); ++i) {
            pg[i] += gl * 2.0 * (pv[i] - n.aux[i]) * inv_n;
        }
        break;
    }

    case Op::ce_loss: {
        const Id probs = n.parents[0];
        if (!at(probs).requires_grad) break;
        Tensor& pg = grad_buffer(probs);
        const Tensor& pv = at(probs).val();
        const double inv_n = 1.0 / static_cast<double>(n.indices.size());
        const double gl = g[0];
        for (std::size_t b = 0; b < n.indices.size(); ++b) {
            const double p = pv(b, n.indices[b]);
            // the clamp is flat below kCeClamp, so its derivative there is 0
            if (p > kCeClamp) {
                pg(b, n.indices[b]) -= gl * inv_n / p;
            }
        }
        break;
    }

    case Op::sum: {
        const Id x = n.parents[0];
        if (!at(x).requires_grad) break;
        Tensor& xg = grad_buffer(x);
        const double gl = g[0];
        for (std::size_t i = 0; i < xg.size(); ++i) xg[i] += gl;
        break;
    }
    }
}

double fd_check(const GradProgram& program, const std::vector<Tensor>& at, double step) {
    if (!(step > 0.0)) throw DomainError("fd_check: step must be positive");
    const std::vector<Tensor> analytic = program.grad(at);
    if (analytic.size() != at.size()) {
        throw DimensionError("fd_check: gradient count mismatch");
    }
    std::vector<Tensor> work = at;
    double worst = 0.0;
    for (std::size_t t = 0; t < work.size(); ++t) {
        for (std::size_t i = 0; i < work[t].size(); ++i) {
            const double original = work[t][i];
            work[t][i] = original + step;
            const double up = program.loss(work);
            work[t][i] = original - step;
            const double down = program.loss(work);
            work[t][i] = original;
            const double g_fd = (up - down) / (2.0 * step);
            const double g_ad = analytic[t][i];
            const double rel =
                std::abs(g_ad - g_fd) / std::max(1e-8, std::abs(g_ad) + std::abs(g_fd));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

} // namespace tabmoe
