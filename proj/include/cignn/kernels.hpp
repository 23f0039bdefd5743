#pragma once

#include <vector>

#include "cignn/tensor.hpp"

namespace cignn::kernels {

/// Matrix product with optional operand transposes. Inputs must be rank 2.
/// Parallelized over output rows when the work is large enough; each output
/// element is written by exactly one thread with a fixed-order inner loop, so
/// results are bit-identical for any thread count.
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);

void add(const Tensor& a, const Tensor& b, Tensor& out);
void sub(const Tensor& a, const Tensor& b, Tensor& out);
void mul(const Tensor& a, const Tensor& b, Tensor& out);
void scale(const Tensor& a, double s, Tensor& out);
void sigmoid(const Tensor& a, Tensor& out);
void tanh(const Tensor& a, Tensor& out);

double sum(const Tensor& a);

/// Applies an n x n matrix along the node axis of a (channels, nodes,
/// features) tensor: out[c,:,p] = M * x[c,:,p] (or M^T with transpose_m).
Tensor node_matrix_apply(const Tensor& m, const Tensor& x, bool transpose_m = false);

/// Numerically stable logistic function.
double sigmoid_scalar(double x);

}  // namespace cignn::kernels
