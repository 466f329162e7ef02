#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace tabmoe::kernels {

// Data-parallel inner loops behind tensor arithmetic. Every entry has a
// scalar reference implementation that defines the semantics; SIMD variants
// (AVX2 on x86-64, NEON on aarch64) must reproduce it bit for bit, which the
// equivalence tests assert with exact comparisons. To keep that guarantee,
// SIMD kernels vectorize only across independent outputs (matmul runs over
// output columns so each accumulation keeps the scalar summation order) and
// none of them use FMA. Reduction-shaped ops (sums, norms, softmax rows) stay
// scalar in numerics so runtime dispatch can never change a result.

enum class Isa { scalar, avx2, neon };

struct AdamwArgs {
    double lr;
    double beta1;
    double beta2;
    double eps;
    double weight_decay; // 0 for bias tensors
    double inv_bias1;    // 1 / (1 - beta1^t)
    double inv_bias2;    // 1 / (1 - beta2^t)
};

struct Kernels {
    Isa isa;
    const char* name;

    // c = a*b, row-major [m x k] * [k x n]
    void (*matmul)(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n);
    // c += a*b
    void (*matmul_acc)(const double* a, const double* b, double* c,
                       std::size_t m, std::size_t k, std::size_t n);

    void (*add)(const double* a, const double* b, double* out, std::size_t n);
    void (*sub)(const double* a, const double* b, double* out, std::size_t n);
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);
    // out += a*b elementwise
    void (*mul_acc)(const double* a, const double* b, double* out, std::size_t n);
    // y += alpha*x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    void (*scale)(const double* x, double alpha, double* out, std::size_t n);
    void (*relu)(const double* x, double* out, std::size_t n);
    // grad_in += grad_out where x > 0
    void (*relu_backward)(const double* x, const double* grad_out, double* grad_in,
                          std::size_t n);
    void (*adamw_update)(double* param, const double* grad, double* m, double* v,
                         std::size_t n, const AdamwArgs& args);
};

/// Currently selected kernel table. First call picks the best ISA the CPU
/// supports, honouring the TABMOE_ISA env var (scalar|avx2|neon) if set.
const Kernels& active();

/// Force a specific variant. Returns false (and leaves the selection alone)
/// when the variant is not compiled in or the CPU lacks it.
bool select(Isa isa);

Isa best_available();
std::vector<Isa> available();

/// Table for a specific ISA (equivalence tests); throws DomainError if absent.
const Kernels& table(Isa isa);

std::string_view isa_name(Isa isa);
bool isa_from_name(std::string_view name, Isa& out);

} // namespace tabmoe::kernels
