#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace aesthetic {

using Shape = std::vector<std::size_t>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation produces or receives NaN/Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
bool all_finite(const std::vector<T>& values) {
  // NaN and Inf are exactly the values with an all-ones exponent. Testing the
  // bits without early exit lets the loop vectorize.
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  constexpr Bits exponent = sizeof(T) == 4 ? Bits(0x7f800000u) : Bits(0x7ff0000000000000ull);
  Bits bad = 0;
  for (T v : values) bad |= Bits((std::bit_cast<Bits>(v) & exponent) == exponent);
  return bad == 0;
}

/// Dense row-major array. Parameters set `requires_grad` and receive
/// gradients in `grad` (same length as `data`) after a backward pass.
template <typename T>
struct BasicTensor {
  Shape shape;
  std::vector<T> data;
  bool requires_grad = false;
  std::vector<T> grad;

  BasicTensor() = default;
  BasicTensor(Shape s, std::vector<T> d, bool needs_grad = false)
      : shape(std::move(s)), data(std::move(d)), requires_grad(needs_grad) {
    if (shape_numel(shape) != data.size()) {
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    }
  }

  static BasicTensor zeros(Shape s, bool needs_grad = false) {
    const std::size_t n = shape_numel(s);
    return BasicTensor(std::move(s), std::vector<T>(n, T(0)), needs_grad);
  }

  static BasicTensor full(Shape s, T value) {
    const std::size_t n = shape_numel(s);
    return BasicTensor(std::move(s), std::vector<T>(n, value));
  }

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  bool has_grad() const { return !grad.empty(); }

  void zero_grad() {
    if (requires_grad) grad.assign(data.size(), T(0));
  }

  template <typename U>
  BasicTensor<U> cast() const {
    BasicTensor<U> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    out.requires_grad = requires_grad;
    out.grad.assign(grad.begin(), grad.end());
    return out;
  }
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

}  // namespace aesthetic
