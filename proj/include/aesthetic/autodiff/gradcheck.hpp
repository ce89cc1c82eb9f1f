#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aesthetic/autodiff/tape.hpp"

namespace aesthetic {

/// Builds a scalar on `tape` from one Var per input tensor.
using ScalarFn = std::function<Var<double>(Tape<double>& tape, const std::vector<Var<double>>& inputs)>;

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  double seconds = 0.0;
};

/// Compares reverse-mode gradients with central differences, element by
/// element. Per input the error is ||analytic - numeric|| / max(||analytic||,
/// ||numeric||, 1e-6); the maximum over inputs is returned.
double max_gradient_error(const ScalarFn& fn, const std::vector<Tensor64>& inputs,
                          double step = 1e-5);

/// Same, but the central differences are taken of `reference`. Used when
/// `fn` contains stop-gradients: `reference` freezes the detached values.
double max_gradient_error(const ScalarFn& fn, const ScalarFn& reference, const std::vector<Tensor64>& inputs,
                          double step = 1e-5);

/// Finite-difference checks for every differentiable op on random small
/// shapes.
std::vector<GradCheckResult> op_gradient_checks(std::uint64_t seed);

}  // namespace aesthetic
