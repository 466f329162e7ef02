#include "tabmoe/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "tabmoe/kernels.hpp"

namespace tabmoe {
namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return shape.empty() ? 0 : n;
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
    for (std::size_t e : shape_) {
        if (e == 0) throw DimensionError("tensor extents must be positive");
    }
    cols_ = shape_.empty() ? 0 : shape_.back();
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    for (std::size_t e : shape_) {
        if (e == 0) throw DimensionError("tensor extents must be positive");
    }
    if (data_.size() != shape_product(shape_)) {
        throw DimensionError("data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_to_string(shape_));
    }
    cols_ = shape_.empty() ? 0 : shape_.back();
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

Tensor Tensor::vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::from_values(std::vector<std::size_t> shape, std::vector<double> data) {
    Tensor t(std::move(shape), std::move(data));
    if (!t.all_finite()) {
        throw ValidationError("non-finite value in tensor input");
    }
    return t;
}

std::size_t Tensor::extent(std::size_t axis) const {
    if (axis >= shape_.size()) throw DimensionError("axis out of range");
    return shape_[axis];
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw DimensionError("rows() requires a 2-D tensor, got " + shape_to_string(shape_));
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw DimensionError("cols() requires a 2-D tensor, got " + shape_to_string(shape_));
    return shape_[1];
}

bool Tensor::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(double value) {
    for (double& v : data_) v = value;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
        throw DimensionError("matmul shape mismatch: " + shape_to_string(a.shape()) +
                             " x " + shape_to_string(b.shape()));
    }
    Tensor c({a.rows(), b.cols()});
    kernels::active().matmul(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    return c;
}

Tensor transpose(const Tensor& a) {
    const std::size_t r = a.rows();
    const std::size_t c = a.cols();
    Tensor t({c, r});
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) t(j, i) = a(i, j);
    }
    return t;
}

} // namespace tabmoe
