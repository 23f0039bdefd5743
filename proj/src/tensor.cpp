#include "cignn/tensor.hpp"

#include <cmath>
#include <sstream>

#include "cignn/errors.hpp"

namespace cignn {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    for (std::size_t d : shape_) {
        if (d == 0) {
            throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape_));
        }
    }
    data_.assign(shape_product(shape_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values) : Tensor(std::move(shape)) {
    if (values.size() != data_.size()) {
        throw DimensionError("tensor shape " + shape_string() + " holds " + std::to_string(data_.size()) +
                             " values, got " + std::to_string(values.size()));
    }
    data_ = std::move(values);
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = v;
    }
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

std::string Tensor::shape_string(const std::vector<std::size_t>& shape) {
    std::ostringstream out;
    out << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        out << (i == 0 ? "" : ",") << shape[i];
    }
    out << ")";
    return out.str();
}

std::string Tensor::shape_string() const { return shape_string(shape_); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                             b.shape_string());
    }
}

void require_finite(const Tensor& t, const char* op) {
    if (!t.all_finite()) {
        throw NumericError(std::string(op) + ": non-finite value in result");
    }
}

}  // namespace cignn
