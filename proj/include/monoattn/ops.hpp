#pragma once

#include <cstdint>
#include <vector>

#include "monoattn/tensor.hpp"

namespace monoattn {

using Mask = std::vector<std::uint8_t>;

// Matrix products (2-D tensors). Suffixes follow BLAS: nt multiplies by the
// transpose of b, tn by the transpose of a.
Tensor matmul(const Tensor& a, const Tensor& b);      // [m×k]·[k×n] -> [m×n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);   // [m×k]·[n×k]^T -> [m×n]
Tensor matmul_tn(const Tensor& a, const Tensor& b);   // [k×m]^T·[k×n] -> [m×n]

// Elementwise.
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor neg(const Tensor& x);

// Elementwise pairs. Shapes must match exactly, with one exception: a 2-D
// `a` [m×n] accepts a 1-D `b` [n] broadcast across rows (bias add).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// Scalar-constant variants (the constant is not differentiated).
Tensor scale(const Tensor& x, double c);
Tensor add_const(const Tensor& x, double c);

// Stable masked softmax over a 1-D tensor. Masked-out positions are exactly
// zero; the rest sum to 1. At least one mask entry must be set.
Tensor softmax_masked(const Tensor& x, const Mask& mask);
Tensor softmax(const Tensor& x);

// Row slicing/gathering on the leading axis (1-D or 2-D for slice_rows,
// 2-D for take_rows). Backward scatters into the source rows.
Tensor slice_rows(const Tensor& x, int lo, int hi);
Tensor take_rows(const Tensor& x, const std::vector<int>& rows);

// Reductions.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor sum_axis(const Tensor& x, int axis);  // 2-D only; axis 0 -> [n], 1 -> [m]

// Assembly.
Tensor concat(const std::vector<Tensor>& parts);      // 1-D parts -> 1-D
Tensor stack_rows(const std::vector<Tensor>& rows);   // n × [d] -> [n×d]
Tensor expand(const Tensor& x, int n);                // [1] -> [n]; backward sums
Tensor reshape(const Tensor& x, std::vector<int> shape);

// -log softmax(logits)[target], computed via log-sum-exp.
Tensor cross_entropy(const Tensor& logits, int target);

Tensor dot(const Tensor& a, const Tensor& b);  // sum(a*b) over 1-D tensors

}  // namespace monoattn
