#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tabmoe/errors.hpp"

namespace tabmoe {

/// Dense row-major array of 64-bit reals. The only numeric currency of the
/// library; value semantics throughout.
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<std::size_t> shape);

    /// Takes ownership of `data`; length must equal the shape product.
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    /// Construction from external input: rejects NaN/Inf entries.
    static Tensor from_values(std::vector<std::size_t> shape, std::vector<double> data);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::size_t extent(std::size_t axis) const;

    /// 2-D accessors; throw DimensionError when rank != 2.
    std::size_t rows() const;
    std::size_t cols() const;

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> span() noexcept { return {data_.data(), data_.size()}; }
    std::span<const double> span() const noexcept { return {data_.data(), data_.size()}; }
    std::vector<double>& storage() noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }
    bool all_finite() const noexcept;

    void fill(double value);

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
    std::size_t cols_ = 0; // cached last extent for 2-D indexing
};

std::string shape_to_string(const std::vector<std::size_t>& shape);

/// C = A * B. Inner extents must match; DimensionError names both shapes.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Row-major transpose of a 2-D tensor.
Tensor transpose(const Tensor& a);

} // namespace tabmoe
