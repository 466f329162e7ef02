#if defined(TABMOE_HAVE_NEON)

#include <arm_neon.h>
#include <cmath>
#include <cstring>

#include "kernels_impl.hpp"

// NEON variants, 2 doubles per lane. Same bit-exactness contract as the AVX2
// TU: outputs-only vectorization, no fused multiply-add, blend-style masking.

namespace tabmoe::kernels::neon {
namespace {

constexpr std::size_t W = 2;

void matmul_inner(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n) {
    const std::size_t n_vec = n - n % W;
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const float64x2_t aik = vdupq_n_f64(arow[p]);
            const double* brow = b + p * n;
            std::size_t j = 0;
            for (; j < n_vec; j += W) {
                const float64x2_t prod = vmulq_f64(aik, vld1q_f64(brow + j));
                vst1q_f64(crow + j, vaddq_f64(vld1q_f64(crow + j), prod));
            }
            const double aik_s = arow[p];
            for (; j < n; ++j) crow[j] += aik_s * brow[j];
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
    std::size_t i = 0;
    for (; i + W <= n; i += W)
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + W <= n; i += W)
        vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + W <= n; i += W)
        vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const float64x2_t prod = vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(out + i), prod));
    }
    for (; i < n; ++i) out[i] += a[i] * b[i];
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const float64x2_t prod = vmulq_f64(va, vld1q_f64(x + i));
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), prod));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(const double* x, double alpha, double* out, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + W <= n; i += W)
        vst1q_f64(out + i, vmulq_f64(va, vld1q_f64(x + i)));
    for (; i < n; ++i) out[i] = alpha * x[i];
}

void relu(const double* x, double* out, std::size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const float64x2_t v = vld1q_f64(x + i);
        const uint64x2_t mask = vcgtq_f64(v, zero);
        vst1q_f64(out + i, vbslq_f64(mask, v, zero));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* grad_out, double* grad_in,
                   std::size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const uint64x2_t mask = vcgtq_f64(vld1q_f64(x + i), zero);
        const float64x2_t gin = vld1q_f64(grad_in + i);
        const float64x2_t sum = vaddq_f64(gin, vld1q_f64(grad_out + i));
        vst1q_f64(grad_in + i, vbslq_f64(mask, sum, gin));
    }
    for (; i < n; ++i) {
        if (x[i] > 0.0) grad_in[i] += grad_out[i];
    }
}

void adamw_update(double* param, const double* grad, double* m, double* v,
                  std::size_t n, const AdamwArgs& args) {
    const float64x2_t b1 = vdupq_n_f64(args.beta1);
    const float64x2_t b2 = vdupq_n_f64(args.beta2);
    const float64x2_t omb1 = vdupq_n_f64(1.0 - args.beta1);
    const float64x2_t omb2 = vdupq_n_f64(1.0 - args.beta2);
    const float64x2_t inv1 = vdupq_n_f64(args.inv_bias1);
    const float64x2_t inv2 = vdupq_n_f64(args.inv_bias2);
    const float64x2_t lr = vdupq_n_f64(args.lr);
    const float64x2_t eps = vdupq_n_f64(args.eps);
    const float64x2_t decay = vdupq_n_f64(1.0 - args.lr * args.weight_decay);
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const float64x2_t g = vld1q_f64(grad + i);
        const float64x2_t mi = vaddq_f64(vmulq_f64(b1, vld1q_f64(m + i)),
                                         vmulq_f64(omb1, g));
        const float64x2_t vi = vaddq_f64(vmulq_f64(b2, vld1q_f64(v + i)),
                                         vmulq_f64(omb2, vmulq_f64(g, g)));
        vst1q_f64(m + i, mi);
        vst1q_f64(v + i, vi);
        const float64x2_t m_hat = vmulq_f64(mi, inv1);
        const float64x2_t v_hat = vmulq_f64(vi, inv2);
        const float64x2_t denom = vaddq_f64(vsqrtq_f64(v_hat), eps);
        const float64x2_t step = vmulq_f64(lr, vdivq_f64(m_hat, denom));
        const float64x2_t p = vmulq_f64(vld1q_f64(param + i), decay);
        vst1q_f64(param + i, vsubq_f64(p, step));
    }
    const double one_minus_b1 = 1.0 - args.beta1;
    const double one_minus_b2 = 1.0 - args.beta2;
    const double decay_s = 1.0 - args.lr * args.weight_decay;
    for (; i < n; ++i) {
        const double g = grad[i];
        m[i] = args.beta1 * m[i] + one_minus_b1 * g;
        v[i] = args.beta2 * v[i] + one_minus_b2 * (g * g);
        const double m_hat = m[i] * args.inv_bias1;
        const double v_hat = v[i] * args.inv_bias2;
        param[i] = param[i] * decay_s - args.lr * (m_hat / (std::sqrt(v_hat) + args.eps));
    }
}

} // namespace

const Kernels& table() {
    static const Kernels k = {
        Isa::neon, "neon",
        matmul, matmul_acc,
        add,    sub,    mul, mul_acc,
        axpy,   scale,  relu, relu_backward,
        adamw_update,
    };
    return k;
}

} // namespace tabmoe::kernels::neon

#endif // TABMOE_HAVE_NEON
