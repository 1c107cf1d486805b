#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "hill/diffcore/tensor.hpp"

namespace hill::ad {

// Elementwise binary ops accept equal shapes, or b.shape == a.shape[1:]
// (b broadcast along a's leading axis). Nothing else broadcasts.
template <class T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> squared_difference(const Tensor<T>& a, const Tensor<T>& b);

// [n,k] x [k,m] -> [n,m]
template <class T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

template <class T> Tensor<T> relu(const Tensor<T>& x);
template <class T> Tensor<T> tanh(const Tensor<T>& x);
// sqrt and abs use subgradient 0 at exactly 0.
template <class T> Tensor<T> sqrt(const Tensor<T>& x);
template <class T> Tensor<T> abs(const Tensor<T>& x);

template <class T> Tensor<T> scale(const Tensor<T>& x, double factor);
template <class T> Tensor<T> add_scalar(const Tensor<T>& x, double offset);

// Full reductions -> shape [1].
template <class T> Tensor<T> sum(const Tensor<T>& x);
template <class T> Tensor<T> mean(const Tensor<T>& x);
// Reductions over the leading axis: [n, ...] -> [...].
template <class T> Tensor<T> sum_rows(const Tensor<T>& x);
template <class T> Tensor<T> mean_rows(const Tensor<T>& x);

// Euclidean norm along the last axis: [..., m] -> [...] ([m] -> [1]).
template <class T> Tensor<T> norm_last(const Tensor<T>& x);

// Concatenation along the leading axis.
template <class T> Tensor<T> concat(std::span<const Tensor<T>> parts);
template <class T> Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> rows);
template <class T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);

// Mean softmax cross-entropy of logits [B, C] against integer labels.
template <class T> Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

// Valid (unpadded) stride-1 convolution: x [B, Cin, L], w [Cout, Cin, K], b [Cout]
// -> [B, Cout, L-K+1].
template <class T> Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);
// Non-overlapping max pool along the last axis; trailing remainder dropped.
template <class T> Tensor<T> max_pool1d(const Tensor<T>& x, std::size_t window);

// Extra arguments for ops dispatched by name.
struct OpAttrs {
    double scalar = 0.0;
    std::vector<std::size_t> indices;
    std::vector<int> labels;
    std::size_t window = 0;
    Shape shape;
};

// Name-based dispatch over the supported op set (see supported_ops()).
template <class T>
Tensor<T> forward(std::string_view op_id, std::span<const Tensor<T>> operands, const OpAttrs& attrs = {});

std::span<const std::string_view> supported_ops() noexcept;

}  // namespace hill::ad
