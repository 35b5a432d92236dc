#pragma once

#include <span>
#include <vector>

#include "dvx/geom/grid.hpp"
#include "dvx/nn/tensor.hpp"

namespace dvx::nn {

// Elementwise; operands must have identical shapes (no implicit broadcasting).
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T s);
template <typename T> Tensor<T> relu(const Tensor<T>& a);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& a);

template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);
template <typename T> Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b, int axis);
/// Stacks two same-shape tensors along a new trailing axis of size 2.
template <typename T> Tensor<T> stack_last(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> slice(const Tensor<T>& a, int axis, int begin, int end);

/// Max-shifted softmax along `axis`.
template <typename T> Tensor<T> softmax(const Tensor<T>& a, int axis);
/// Maximum over the trailing `axes` dimensions. The gradient goes to the first maximal entry.
template <typename T> Tensor<T> max_trailing(const Tensor<T>& a, int axes);
/// x has shape [H, W, ...], s has shape [H, W]; every element of cell (i, j) is scaled by s(i, j).
template <typename T> Tensor<T> scale_cells(const Tensor<T>& x, const Tensor<T>& s);

/// Cross-correlation of an H x W x Cin map with a k x k x Cin x Cout kernel, zero "same" padding
/// (k / 2), output ceil(H / stride) x ceil(W / stride) x Cout. `bias` may be undefined.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias, int stride = 1);

/// out(p) = feature(p + offset(p)) with bilinear interpolation; offsets are (row, col) in cell
/// units, sample positions clamp to the map border. Differentiable in both arguments.
template <typename T> Tensor<T> bilinear_sample(const Tensor<T>& feature, const Tensor<T>& offsets);

/// scale * sum over cells of weight(cell) * sum over trailing entries |a - b|.
/// a and b have shape [H, W, ...]; `cell_weights` has H * W entries.
template <typename T>
Tensor<T> weighted_l1(const Tensor<T>& a, const Tensor<T>& b, std::span<const T> cell_weights, T scale);

/// (1 / (H W)) * sum_{m,n} |a - b|(m, n, :) * mask(m, n), mask broadcast over channels.
template <typename T> Tensor<T> masked_l1(const Tensor<T>& a, const Tensor<T>& b, const geom::BitMask2D& mask);

/// Sigmoid focal loss summed over elements and divided by `normalizer`. `targets` are 0/1.
template <typename T>
Tensor<T> sigmoid_focal_loss(const Tensor<T>& logits, std::span<const T> targets, T alpha, T gamma, T normalizer);

/// Converts between numeric modes without history.
template <typename To, typename From> Tensor<To> cast(const Tensor<From>& a);

}  // namespace dvx::nn
