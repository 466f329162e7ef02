#if defined(TABMOE_HAVE_AVX2)

#include <cmath>
#include <cstring>
#include <immintrin.h>

#include "kernels_impl.hpp"

// AVX2 variants, 4 doubles per lane. Bit-exact with the scalar reference:
// vectorization runs across independent outputs only, mul/add stay unfused
// (this TU is built with -mno-fma), and masked updates blend instead of
// adding zeros so signed-zero bits survive.

namespace tabmoe::kernels::avx2 {
namespace {

constexpr std::size_t W = 4;

// One row tail: j-vectorized accumulation, k ascending per output element.
void matmul_row(const double* arow, const double* b, double* crow,
                std::size_t k, std::size_t n) {
    const std::size_t n_vec = n - n % W;
    for (std::size_t p = 0; p < k; ++p) {
        const __m256d aik = _mm256_set1_pd(arow[p]);
        const double* brow = b + p * n;
        std::size_t j = 0;
        for (; j < n_vec; j += W) {
            const __m256d prod = _mm256_mul_pd(aik, _mm256_loadu_pd(brow + j));
            _mm256_storeu_pd(crow + j, _mm256_add_pd(_mm256_loadu_pd(crow + j), prod));
        }
        const double aik_s = arow[p];
        for (; j < n; ++j) crow[j] += aik_s * brow[j];
    }
}

// 4x8 register-blocked kernel. Each c[i][j] still accumulates its k-sum in
// ascending order with separate mul/add, so results stay bit-identical to the
// scalar reference; the blocking only keeps accumulators in registers.
void matmul_inner(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n) {
    constexpr std::size_t MR = 4; // rows per tile
    const std::size_t m_vec = m - m % MR;
    const std::size_t n_vec = n - n % (2 * W);

    for (std::size_t i = 0; i < m_vec; i += MR) {
        const double* a0 = a + (i + 0) * k;
        const double* a1 = a + (i + 1) * k;
        const double* a2 = a + (i + 2) * k;
        const double* a3 = a + (i + 3) * k;
        std::size_t j = 0;
        for (; j < n_vec; j += 2 * W) {
            __m256d acc00 = _mm256_loadu_pd(c + (i + 0) * n + j);
            __m256d acc01 = _mm256_loadu_pd(c + (i + 0) * n + j + W);
            __m256d acc10 = _mm256_loadu_pd(c + (i + 1) * n + j);
            __m256d acc11 = _mm256_loadu_pd(c + (i + 1) * n + j + W);
            __m256d acc20 = _mm256_loadu_pd(c + (i + 2) * n + j);
            __m256d acc21 = _mm256_loadu_pd(c + (i + 2) * n + j + W);
            __m256d acc30 = _mm256_loadu_pd(c + (i + 3) * n + j);
            __m256d acc31 = _mm256_loadu_pd(c + (i + 3) * n + j + W);
            for (std::size_t p = 0; p < k; ++p) {
                const double* brow = b + p * n + j;
                const __m256d b0 = _mm256_loadu_pd(brow);
                const __m256d b1 = _mm256_loadu_pd(brow + W);
                const __m256d v0 = _mm256_set1_pd(a0[p]);
                acc00 = _mm256_add_pd(acc00, _mm256_mul_pd(v0, b0));
                acc01 = _mm256_add_pd(acc01, _mm256_mul_pd(v0, b1));
                const __m256d v1 = _mm256_set1_pd(a1[p]);
                acc10 = _mm256_add_pd(acc10, _mm256_mul_pd(v1, b0));
                acc11 = _mm256_add_pd(acc11, _mm256_mul_pd(v1, b1));
                const __m256d v2 = _mm256_set1_pd(a2[p]);
                acc20 = _mm256_add_pd(acc20, _mm256_mul_pd(v2, b0));
                acc21 = _mm256_add_pd(acc21, _mm256_mul_pd(v2, b1));
                const __m256d v3 = _mm256_set1_pd(a3[p]);
                acc30 = _mm256_add_pd(acc30, _mm256_mul_pd(v3, b0));
                acc31 = _mm256_add_pd(acc31, _mm256_mul_pd(v3, b1));
            }
            _mm256_storeu_pd(c + (i + 0) * n + j, acc00);
            _mm256_storeu_pd(c + (i + 0) * n + j + W, acc01);
            _mm256_storeu_pd(c + (i + 1) * n + j, acc10);
            _mm256_storeu_pd(c + (i + 1) * n + j + W, acc11);
            _mm256_storeu_pd(c + (i + 2) * n + j, acc20);
            _mm256_storeu_pd(c + (i + 2) * n + j + W, acc21);
            _mm256_storeu_pd(c + (i + 3) * n + j, acc30);
            _mm256_storeu_pd(c + (i + 3) * n + j + W, acc31);
        }
        if (j < n) {
            // trailing columns, one vector or scalar at a time
            for (std::size_t r = 0; r < MR; ++r) {
                const double* arow = a + (i + r) * k;
                double* crow = c + (i + r) * n;
                for (std::size_t p = 0; p < k; ++p) {
                    const double aik = arow[p];
                    const double* brow = b + p * n;
                    std::size_t jj = j;
                    for (; jj + W <= n; jj += W) {
                        const __m256d prod =
                            _mm256_mul_pd(_mm256_set1_pd(aik), _mm256_loadu_pd(brow + jj));
                        _mm256_storeu_pd(crow + jj,
                                         _mm256_add_pd(_mm256_loadu_pd(crow + jj), prod));
                    }
                    for (; jj < n; ++jj) crow[jj] += aik * brow[jj];
                }
            }
        }
    }
    for (std::size_t i = m_vec; i < m; ++i) {
        matmul_row(a + i * k, b, c + i * n, k, n);
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
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + W <= n; i += W)
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + W <= n; i += W)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), prod));
    }
    for (; i < n; ++i) out[i] += a[i] * b[i];
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(const double* x, double alpha, double* out, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + W <= n; i += W)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) out[i] = alpha * x[i];
}

void relu(const double* x, double* out, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d v = _mm256_loadu_pd(x + i);
        const __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_blendv_pd(zero, v, mask));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* grad_out, double* grad_in,
                   std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        const __m256d gin = _mm256_loadu_pd(grad_in + i);
        const __m256d sum = _mm256_add_pd(gin, _mm256_loadu_pd(grad_out + i));
        _mm256_storeu_pd(grad_in + i, _mm256_blendv_pd(gin, sum, mask));
    }
    for (; i < n; ++i) {
        if (x[i] > 0.0) grad_in[i] += grad_out[i];
    }
}

void adamw_update(double* param, const double* grad, double* m, double* v,
                  std::size_t n, const AdamwArgs& args) {
    const __m256d b1 = _mm256_set1_pd(args.beta1);
    const __m256d b2 = _mm256_set1_pd(args.beta2);
    const __m256d omb1 = _mm256_set1_pd(1.0 - args.beta1);
    const __m256d omb2 = _mm256_set1_pd(1.0 - args.beta2);
    const __m256d inv1 = _mm256_set1_pd(args.inv_bias1);
    const __m256d inv2 = _mm256_set1_pd(args.inv_bias2);
    const __m256d lr = _mm256_set1_pd(args.lr);
    const __m256d eps = _mm256_set1_pd(args.eps);
    const __m256d decay = _mm256_set1_pd(1.0 - args.lr * args.weight_decay);
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d g = _mm256_loadu_pd(grad + i);
        const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)),
                                         _mm256_mul_pd(omb1, g));
        const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                         _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        const __m256d m_hat = _mm256_mul_pd(mi, inv1);
        const __m256d v_hat = _mm256_mul_pd(vi, inv2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps);
        const __m256d step = _mm256_mul_pd(lr, _mm256_div_pd(m_hat, denom));
        const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(param + i), decay);
        _mm256_storeu_pd(param + i, _mm256_sub_pd(p, step));
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
        Isa::avx2, "avx2",
        matmul, matmul_acc,
        add,    sub,    mul, mul_acc,
        axpy,   scale,  relu, relu_backward,
        adamw_update,
    };
    return k;
}

} // namespace tabmoe::kernels::avx2

#endif // TABMOE_HAVE_AVX2
