#include <cmath>
#include <cstring>

#include "kernels_impl.hpp"

// Reference kernels. These define the numeric contract: plain loops, no FMA,
// accumulation strictly in ascending index order.

namespace tabmoe::kernels::scalar {
namespace {

void matmul_inner(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n) {
    // i-k-j order: for each (i,j) the k-sum is accumulated ascending, which
    // the column-vectorized SIMD variants reproduce exactly.
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aik = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += aik * brow[j];
            }
        }
    }
}

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
    std::memset(c, 0, m * n * sizeof(double));
    matmul_inner(a, b, c, m, k, n);
}

void matmul_acc(const double* a, const double* b, double* c,
                std::size_t m, std::size_t k, std::size_t n) {
    matmul_inner(a, b, c, m, k, n);
}

void add(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] += a[i] * b[i];
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(const double* x, double alpha, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

void relu(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* grad_out, double* grad_in,
                   std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > 0.0) grad_in[i] += grad_out[i];
    }
}

void adamw_update(double* param, const double* grad, double* m, double* v,
                  std::size_t n, const AdamwArgs& args) {
    const double one_minus_b1 = 1.0 - args.beta1;
    const double one_minus_b2 = 1.0 - args.beta2;
    const double decay = 1.0 - args.lr * args.weight_decay;
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i];
        m[i] = args.beta1 * m[i] + one_minus_b1 * g;
        v[i] = args.beta2 * v[i] + one_minus_b2 * (g * g);
        const double m_hat = m[i] * args.inv_bias1;
        const double v_hat = v[i] * args.inv_bias2;
        param[i] = param[i] * decay - args.lr * (m_hat / (std::sqrt(v_hat) + args.eps));
    }
}

} // namespace

const Kernels& table() {
    static const Kernels k = {
        Isa::scalar, "scalar",
        matmul, matmul_acc,
        add,    sub,    mul, mul_acc,
        axpy,   scale,  relu, relu_backward,
        adamw_update,
    };
    return k;
}

} // namespace tabmoe::kernels::scalar
