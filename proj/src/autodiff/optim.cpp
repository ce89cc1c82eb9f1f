#include "aesthetic/autodiff/optim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace aesthetic {

template <typename T>
AdamState<T> AdamState<T>::like(std::span<BasicTensor<T>* const> params) {
  AdamState state;
  for (const auto* p : params) {
    state.first_moment.emplace_back(p->numel(), T(0));
    state.second_moment.emplace_back(p->numel(), T(0));
  }
  return state;
}

template <typename T>
void adam_step(std::span<BasicTensor<T>* const> params, AdamState<T>& state,
               const AdamConfig& config) {
  if (!(config.learning_rate > 0.0)) throw std::invalid_argument("adam_step: learning rate must be > 0");
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state holds " + std::to_string(state.first_moment.size()) +
                     " slots for " + std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto* p = params[i];
    if (p->grad.size() != p->numel()) {
      throw ShapeError("adam_step: parameter " + std::to_string(i) + " has no gradient buffer");
    }
    if (state.first_moment[i].size() != p->numel() || state.second_moment[i].size() != p->numel()) {
      throw ShapeError("adam_step: state shape mismatch for parameter " + std::to_string(i));
    }
    if (!all_finite(p->grad)) {
      throw NumericError("adam_step: non-finite gradient for parameter " + std::to_string(i));
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  const T b1 = static_cast<T>(config.beta1);
  const T b2 = static_cast<T>(config.beta2);
  const T step_size = static_cast<T>(config.learning_rate / bc1);
  const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
  const T eps = static_cast<T>(config.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto* p = params[i];
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < p->numel(); ++j) {
      const T g = p->grad[j];
      m[j] = b1 * m[j] + (T(1) - b1) * g;
      v[j] = b2 * v[j] + (T(1) - b2) * g * g;
      p->data[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_bc2 + eps);
    }
  }
}

template <typename T>
double global_norm(std::span<std::vector<T>* const> grads) {
  double sq = 0.0;
  for (const auto* g : grads) {
    for (T v : *g) {
      if (!std::isfinite(v)) throw NumericError("clip_global_norm: non-finite gradient");
      sq += static_cast<double>(v) * static_cast<double>(v);
    }
  }
  return std::sqrt(sq);
}

template <typename T>
double clip_global_norm(std::span<std::vector<T>* const> grads, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("clip_global_norm: max_norm must be > 0");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    // Shrink by a few ulps more so the clipped norm lands at or below
    // max_norm after rounding; a second application is then a no-op.
    const double margin = 1.0 - 4.0 * std::numeric_limits<T>::epsilon();
    const T factor = static_cast<T>(max_norm / norm * margin);
    for (auto* g : grads) {
      for (T& v : *g) v *= factor;
    }
  }
  return norm;
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(std::span<BasicTensor<float>* const>, AdamState<float>&, const AdamConfig&);
template void adam_step(std::span<BasicTensor<double>* const>, AdamState<double>&, const AdamConfig&);
template double global_norm(std::span<std::vector<float>* const>);
template double global_norm(std::span<std::vector<double>* const>);
template double clip_global_norm(std::span<std::vector<float>* const>, double);
template double clip_global_norm(std::span<std::vector<double>* const>, double);

}  // namespace aesthetic
