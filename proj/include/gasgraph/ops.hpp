#pragma once

#include <cstddef>
#include <vector>

#include "gasgraph/sparse.hpp"
#include "gasgraph/tensor.hpp"

// Differentiable primitives. Every function returns a fresh tensor and, when
// any operand requires a gradient, appends one entry to the thread's tape.
// Shape errors throw DimensionError naming both shapes; a non-finite result
// throws NumericError.
namespace gasgraph {

// Elementwise with NumPy-style broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor square(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
/// tanh approximation of GELU.
Tensor gelu(const Tensor& a);

/// (n,k) x (k,m) -> (n,m)
Tensor matmul(const Tensor& a, const Tensor& b);
/// (B,n,k) x (B,k,m) -> (B,n,m)
Tensor bmm(const Tensor& a, const Tensor& b);
/// Constant sparse (r,n) times dense (n,c) -> (r,c).
Tensor spmm(const SparseMatrix& a, const Tensor& x);

Tensor transpose(const Tensor& a);
Tensor swap_axes(const Tensor& a, std::size_t axis0, std::size_t axis1);
Tensor reshape(const Tensor& a, Shape shape);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
/// Inserts a new leading axis.
Tensor stack(const std::vector<Tensor>& parts);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length);

/// Sum of all entries, shape (1).
Tensor sum(const Tensor& a);
/// Sum along an axis, which is removed (a rank-1 input yields shape (1)).
Tensor sum(const Tensor& a, std::size_t axis);
Tensor mean(const Tensor& a);
Tensor mean(const Tensor& a, std::size_t axis);

Tensor softmax(const Tensor& a, std::size_t axis);
/// Zero-mean, unit-variance normalization over the last axis (no affine).
Tensor layer_norm(const Tensor& a, double eps = 1e-5);
/// Euclidean norm along an axis, which is removed.
Tensor l2_norm(const Tensor& a, std::size_t axis);
/// Capsule squash along an axis: v = |s|^2/(1+|s|^2) * s/|s|, v(0) = 0.
Tensor squash(const Tensor& a, std::size_t axis);

}  // namespace gasgraph
