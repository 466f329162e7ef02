#pragma once

#include <cstddef>
#include <vector>

#include "tabmoe/rng.hpp"
#include "tabmoe/tensor.hpp"

namespace tabmoe {

/// Probability vector over K outcomes: entries in [0,1], sum within 1e-12 of 1.
struct ProbVec {
    std::vector<double> weights;

    std::size_t size() const noexcept { return weights.size(); }
    double operator[](std::size_t i) const noexcept { return weights[i]; }
    bool valid(double tol = 1e-12) const noexcept;
};

/// Row-wise exp-normalize with max subtraction; stable for logits up to ~1e3
/// magnitude. The last axis is the distribution axis.
Tensor softmax_rows(const Tensor& logits);

/// Softmax of a single logit vector.
ProbVec softmax(const std::vector<double>& logits);

/// n draws of -log(-log(U)), U uniform on (0,1) clamped away from the ends
/// by 2^-53.
Tensor sample_gumbel(Rng& rng, std::size_t n);

/// softmax((logits + s) / tau) with fresh i.i.d. Gumbel(0,1) noise s.
/// tau must be positive.
ProbVec gumbel_softmax(const std::vector<double>& logits, double tau, Rng& rng);

/// Same with caller-provided noise (noise held fixed during training passes).
ProbVec gumbel_softmax_with_noise(const std::vector<double>& logits, double tau,
                                  const std::vector<double>& noise);

/// Row-wise (logits + noise) / tau softmax for a [batch x K] tensor; noise has
/// the same shape.
Tensor gumbel_softmax_rows(const Tensor& logits, double tau, const Tensor& noise);

/// Shannon entropy in nats, 0*log 0 := 0; result clamped into [0, log K]
/// against floating-point overshoot.
double entropy(const ProbVec& p);
double entropy(std::span<const double> weights);

/// Inverse standard normal CDF, accurate to ~1e-15 over (0, 1).
double inverse_normal_cdf(double p);

/// Standard normal CDF.
double normal_cdf(double x);

// Small kernel-backed helpers shared across modules.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor relu(const Tensor& a);
double sum(const Tensor& a);
double sum_squares(const Tensor& a);

} // namespace tabmoe
