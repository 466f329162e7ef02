#include "tabmoe/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "tabmoe/errors.hpp"
#include "tabmoe/kernels.hpp"

namespace tabmoe {
namespace {

void softmax_row(const double* logits, double* out, std::size_t k) {
    double max_logit = logits[0];
    for (std::size_t i = 1; i < k; ++i) max_logit = std::max(max_logit, logits[i]);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        out[i] = std::exp(logits[i] - max_logit);
        total += out[i];
    }
    for (std::size_t i = 0; i < k; ++i) out[i] /= total;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + " shape mismatch: " +
                             shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
    }
}

} // namespace

bool ProbVec::valid(double tol) const noexcept {
    if (weights.empty()) return false;
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0 && w <= 1.0)) return false;
        total += w;
    }
    return std::abs(total - 1.0) <= tol;
}

Tensor softmax_rows(const Tensor& logits) {
    if (logits.rank() == 0 || logits.shape().back() < 1) {
        throw DimensionError("softmax requires a non-empty last axis");
    }
    const std::size_t k = logits.shape().back();
    const std::size_t rows = logits.size() / k;
    Tensor out(logits.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        softmax_row(logits.data() + r * k, out.data() + r * k, k);
    }
    return out;
}

ProbVec softmax(const std::vector<double>& logits) {
    if (logits.empty()) throw DimensionError("softmax requires at least one logit");
    ProbVec p;
    p.weights.resize(logits.size());
    softmax_row(logits.data(), p.weights.data(), logits.size());
    return p;
}

Tensor sample_gumbel(Rng& rng, std::size_t n) {
    if (n == 0) throw DomainError("sample_gumbel: n must be positive");
    Tensor out({n});
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = -std::log(-std::log(rng.uniform_open()));
    }
    return out;
}

ProbVec gumbel_softmax(const std::vector<double>& logits, double tau, Rng& rng) {
    if (!(tau > 0.0)) throw DomainError("gumbel_softmax: tau must be positive");
    std::vector<double> noise(logits.size());
    for (double& s : noise) s = -std::log(-std::log(rng.uniform_open()));
    return gumbel_softmax_with_noise(logits, tau, noise);
}

ProbVec gumbel_softmax_with_noise(const std::vector<double>& logits, double tau,
                                  const std::vector<double>& noise) {
    if (!(tau > 0.0)) throw DomainError("gumbel_softmax: tau must be positive");
    if (noise.size() != logits.size()) {
        throw DimensionError("gumbel_softmax: noise length mismatch");
    }
    std::vector<double> perturbed(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        perturbed[i] = (logits[i] + noise[i]) / tau;
    }
    return softmax(perturbed);
}

Tensor gumbel_softmax_rows(const Tensor& logits, double tau, const Tensor& noise) {
    if (!(tau > 0.0)) throw DomainError("gumbel_softmax: tau must be positive");
    check_same_shape(logits, noise, "gumbel_softmax");
    Tensor perturbed(logits.shape());
    const double inv_tau = 1.0 / tau;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        perturbed[i] = (logits[i] + noise[i]) * inv_tau;
    }
    return softmax_rows(perturbed);
}

double entropy(std::span<const double> weights) {
    double h = 0.0;
    for (double w : weights) {
        if (w > 0.0) h -= w * std::log(w);
    }
    // clamp floating-point overshoot into the theoretical range
    const double max_h = std::log(static_cast<double>(weights.size()));
    return std::clamp(h, 0.0, max_h);
}

double entropy(const ProbVec& p) {
    return entropy(std::span<const double>(p.weights.data(), p.weights.size()));
}

// Acklam's rational approximation with one Halley refinement step.
double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("inverse_normal_cdf: p must be in (0,1)");

    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};

    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Halley refinement
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor out(a.shape());
    kernels::active().add(a.data(), b.data(), out.data(), a.size());
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    Tensor out(a.shape());
    kernels::active().sub(a.data(), b.data(), out.data(), a.size());
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    Tensor out(a.shape());
    kernels::active().mul(a.data(), b.data(), out.data(), a.size());
    return out;
}

Tensor scale(const Tensor& a, double factor) {
    Tensor out(a.shape());
    kernels::active().scale(a.data(), factor, out.data(), a.size());
    return out;
}

Tensor relu(const Tensor& a) {
    Tensor out(a.shape());
    kernels::active().relu(a.data(), out.data(), a.size());
    return out;
}

double sum(const Tensor& a) {
    double total = 0.0;
    for (double v : a.span()) total += v;
    return total;
}

double sum_squares(const Tensor& a) {
    double total = 0.0;
    for (double v : a.span()) total += v * v;
    return total;
}

} // namespace tabmoe
