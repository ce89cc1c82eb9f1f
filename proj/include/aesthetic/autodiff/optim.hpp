#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aesthetic/autodiff/tensor.hpp"

namespace aesthetic {

struct AdamConfig {
  double learning_rate = 4e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment accumulators, one per parameter, plus the step count.
template <typename T>
struct AdamState {
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;
  std::uint64_t step = 0;

  /// Zero state shaped like `params`.
  static AdamState like(std::span<BasicTensor<T>* const> params);
};

/// One bias-corrected Adam update using each parameter's `grad` buffer.
/// Throws ShapeError when the state does not match the parameters and
/// NumericError on non-finite gradients (before touching any parameter).
template <typename T>
void adam_step(std::span<BasicTensor<T>* const> params, AdamState<T>& state,
               const AdamConfig& config);

/// Rescales the gradient buffers jointly so their global L2 norm does not
/// exceed `max_norm`. Returns the norm measured before clipping.
template <typename T>
double clip_global_norm(std::span<std::vector<T>* const> grads, double max_norm);

template <typename T>
double global_norm(std::span<std::vector<T>* const> grads);

}  // namespace aesthetic
