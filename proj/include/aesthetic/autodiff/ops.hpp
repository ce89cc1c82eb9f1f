#pragma once

#include <cstddef>
#include <vector>

#include "aesthetic/autodiff/tape.hpp"
#include "aesthetic/autodiff/tensor.hpp"

// Differentiable operations. There is no implicit broadcasting: operands of
// elementwise ops must have identical shapes; use repeat_outer/repeat_inner to
// broadcast explicitly.
namespace aesthetic::ops {

enum class Padding { same, valid };

// [m,k] x [k,n] -> [m,n]
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> sub(Var<T> a, Var<T> b);
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Var<T> a, double factor);
template <typename T>
Var<T> square(Var<T> a);

template <typename T>
Var<T> relu(Var<T> a);
template <typename T>
Var<T> tanh(Var<T> a);

/// Numerically stable softmax along `axis`.
template <typename T>
Var<T> softmax(Var<T> a, std::size_t axis);

template <typename T>
Var<T> reshape(Var<T> a, Shape shape);

/// Prepends an axis of length `count`: [d...] -> [count, d...].
template <typename T>
Var<T> repeat_outer(Var<T> a, std::size_t count);

/// Appends an axis of length `count`: [d...] -> [d..., count].
template <typename T>
Var<T> repeat_inner(Var<T> a, std::size_t count);

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis);

template <typename T>
Var<T> sum_all(Var<T> a);
template <typename T>
Var<T> mean_all(Var<T> a);
/// Removes `axis` by summation.
template <typename T>
Var<T> sum_axis(Var<T> a, std::size_t axis);

/// Input [N,H,W,C] or [H,W,C]; kernels [KH,KW,C,F]. Output keeps the rank of
/// the input with F channels.
template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernels, std::size_t stride, Padding padding);

/// Non-overlapping window x window average over the spatial axes of
/// [N,H,W,C] or [H,W,C]. H and W must be divisible by the window.
template <typename T>
Var<T> mean_pool2d(Var<T> input, std::size_t window);

/// [N,H,W,C] -> [N,C] or [H,W,C] -> [C].
template <typename T>
Var<T> global_avg_pool(Var<T> input);

/// Mean of squared differences; both operands must have the same shape.
template <typename T>
Var<T> mse(Var<T> prediction, Var<T> target);

/// mean + sigma * noise with the noise treated as a constant.
template <typename T>
Var<T> gaussian_reparam_sample(Var<T> mean, double sigma, const BasicTensor<T>& noise);

/// Copy of the value with no gradient path.
template <typename T>
Var<T> detach(Var<T> a);

}  // namespace aesthetic::ops
