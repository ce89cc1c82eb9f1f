#include "aesthetic/autodiff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

namespace aesthetic {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace aesthetic

namespace aesthetic::ops {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
void require_same_tape(Var<T> a, Var<T> b, const char* op) {
  if (&a.tape() != &b.tape()) throw TapeError(std::string(op) + ": operands on different tapes");
}

template <typename T>
void require_same_shape(Var<T> a, Var<T> b, const char* op) {
  require_same_tape(a, b, op);
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

// Splits a shape around `axis` into (outer, length, inner).
struct AxisSplit {
  std::size_t outer = 1, length = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " invalid for shape " +
                     shape_str(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.length = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

struct Spatial {
  std::size_t n, h, w, c;
  bool batched;
};

Spatial spatial_dims(const Shape& s, const char* op) {
  if (s.size() == 4) return {s[0], s[1], s[2], s[3], true};
  if (s.size() == 3) return {1, s[0], s[1], s[2], false};
  throw ShapeError(std::string(op) + ": expected [N,H,W,C] or [H,W,C], got " + shape_str(s));
}

Shape spatial_shape(const Spatial& d, std::size_t h, std::size_t w, std::size_t c) {
  if (d.batched) return {d.n, h, w, c};
  return {h, w, c};
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  require_same_tape(a, b, "matmul");
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(sa) + " x " + shape_str(sb));
  }
  const std::size_t m = sa[0], k = sa[1], n = sb[1];
  std::vector<T> out(m * n);
  MatMap<T>(out.data(), m, n).noalias() =
      ConstMatMap<T>(a.value().data(), m, k) * ConstMatMap<T>(b.value().data(), k, n);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("matmul", {m, n}, std::move(out), {ia, ib},
                         [ia, ib, m, k, n](Tape<T>& t, std::size_t self) {
                           ConstMatMap<T> g(t.node(self).grad.data(), m, n);
                           if (T* ga = t.grad_sink(ia)) {
                             MatMap<T>(ga, m, k).noalias() +=
                                 g * ConstMatMap<T>(t.node(ib).value.data(), k, n).transpose();
                           }
                           if (T* gb = t.grad_sink(ib)) {
                             MatMap<T>(gb, k, n).noalias() +=
                                 ConstMatMap<T>(t.node(ia).value.data(), m, k).transpose() * g;
                           }
                         });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_shape(a, b, "add");
  const auto va = a.value(), vb = b.value();
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("add", a.shape(), std::move(out), {ia, ib},
                         [ia, ib](Tape<T>& t, std::size_t self) {
                           const auto& g = t.node(self).grad;
                           for (std::size_t in : {ia, ib}) {
                             if (T* gx = t.grad_sink(in)) {
                               for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                             }
                           }
                         });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  require_same_shape(a, b, "sub");
  const auto va = a.value(), vb = b.value();
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] - vb[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("sub", a.shape(), std::move(out), {ia, ib},
                         [ia, ib](Tape<T>& t, std::size_t self) {
                           const auto& g = t.node(self).grad;
                           if (T* ga = t.grad_sink(ia)) {
                             for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                           }
                           if (T* gb = t.grad_sink(ib)) {
                             for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                           }
                         });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same_shape(a, b, "mul");
  const auto va = a.value(), vb = b.value();
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("mul", a.shape(), std::move(out), {ia, ib},
                         [ia, ib](Tape<T>& t, std::size_t self) {
                           const auto& g = t.node(self).grad;
                           if (T* ga = t.grad_sink(ia)) {
                             const auto& vb = t.node(ib).value;
                             for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
                           }
                           if (T* gb = t.grad_sink(ib)) {
                             const auto& va = t.node(ia).value;
                             for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
                           }
                         });
}

template <typename T>
Var<T> scale(Var<T> a, double factor) {
  const T f = static_cast<T>(factor);
  const auto va = a.value();
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * f;
  const std::size_t ia = a.id();
  return a.tape().record("scale", a.shape(), std::move(out), {ia},
                         [ia, f](Tape<T>& t, std::size_t self) {
                           const auto& g = t.node(self).grad;
                           T* gx = t.grad_sink(ia);
                           for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * f;
                         });
}

template <typename T>
Var<T> square(Var<T> a) {
  const auto va = a.value();
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * va[i];
  const std::size_t ia = a.id();
  return a.tape().record("square", a.shape(), std::move(out), {ia},
                         [ia](Tape<T>& t, std::size_t self) {
                           const auto& g = t.node(self).grad;
                           const auto& x = t.node(ia).value;
                           T* gx = t.grad_sink(ia);
                           for (std::size_t i = 0; i < g.size(); ++i) gx[i] += T(2) * x[i] * g[i];
                         });
}

template <typename T>
Var<T> relu(Var<T> a) {
  const auto va = a.value();
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] > T(0) ? va[i] : T(0);
  const std::size_t ia = a.id();
  return a.tape().record("relu", a.shape(), std::move(out), {ia},
                         [ia](Tape<T>& t, std::size_t self) {
                           const auto& g = t.node(self).grad;
                           const auto& x = t.node(ia).value;
                           T* gx = t.grad_sink(ia);
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             if (x[i] > T(0)) gx[i] += g[i];
                           }
                         });
}

template <typename T>
Var<T> tanh(Var<T> a) {
  const auto va = a.value();
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(va[i]);
  const std::size_t ia = a.id();
  return a.tape().record("tanh", a.shape(), std::move(out), {ia},
                         [ia](Tape<T>& t, std::size_t self) {
                           const auto& node = t.node(self);
                           T* gx = t.grad_sink(ia);
                           for (std::size_t i = 0; i < node.grad.size(); ++i) {
                             const T y = node.value[i];
                             gx[i] += node.grad[i] * (T(1) - y * y);
                           }
                         });
}

template <typename T>
Var<T> softmax(Var<T> a, std::size_t axis) {
  const AxisSplit s = split_axis(a.shape(), axis, "softmax");
  const auto x = a.value();
  std::vector<T> out(x.size());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.length * s.inner + in;
      T mx = x[base];
      for (std::size_t l = 1; l < s.length; ++l) mx = std::max(mx, x[base + l * s.inner]);
      T total = 0;
      for (std::size_t l = 0; l < s.length; ++l) {
        const T e = std::exp(x[base + l * s.inner] - mx);
        out[base + l * s.inner] = e;
        total += e;
      }
      for (std::size_t l = 0; l < s.length; ++l) out[base + l * s.inner] /= total;
    }
  }
  const std::size_t ia = a.id();
  return a.tape().record("softmax", a.shape(), std::move(out), {ia},
                         [ia, s](Tape<T>& t, std::size_t self) {
                           const auto& node = t.node(self);
                           const auto& y = node.value;
                           const auto& g = node.grad;
                           T* gx = t.grad_sink(ia);
                           for (std::size_t o = 0; o < s.outer; ++o) {
                             for (std::size_t in = 0; in < s.inner; ++in) {
                               const std::size_t base = o * s.length * s.inner + in;
                               T dot = 0;
                               for (std::size_t l = 0; l < s.length; ++l) {
                                 const std::size_t i = base + l * s.inner;
                                 dot += g[i] * y[i];
                               }
                               for (std::size_t l = 0; l < s.length; ++l) {
                                 const std::size_t i = base + l * s.inner;
                                 gx[i] += y[i] * (g[i] - dot);
                               }
                             }
                           }
                         });
}

template <typename T>
Var<T> reshape(Var<T> a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  const auto v = a.value();
  const std::size_t ia = a.id();
  return a.tape().record("reshape", std::move(shape), std::vector<T>(v.begin(), v.end()), {ia},
                         [ia](Tape<T>& t, std::size_t self) {
                           const auto& g = t.node(self).grad;
                           T* gx = t.grad_sink(ia);
                           for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                         });
}

template <typename T>
Var<T> repeat_outer(Var<T> a, std::size_t count) {
  if (count == 0) throw ShapeError("repeat_outer: count must be positive");
  const auto v = a.value();
  const std::size_t n = v.size();
  std::vector<T> out;
  out.reserve(n * count);
  for (std::size_t r = 0; r < count; ++r) out.insert(out.end(), v.begin(), v.end());
  Shape shape = a.shape();
  shape.insert(shape.begin(), count);
  const std::size_t ia = a.id();
  return a.tape().record("repeat_outer", std::move(shape), std::move(out), {ia},
                         [ia, n, count](Tape<T>& t, std::size_t self) {
                           const auto& g = t.node(self).grad;
                           T* gx = t.grad_sink(ia);
                           for (std::size_t r = 0; r < count; ++r) {
                             for (std::size_t i = 0; i < n; ++i) gx[i] += g[r * n + i];
                           }
                         });
}

template <typename T>
Var<T> repeat_inner(Var<T> a, std::size_t count) {
  if (count == 0) throw ShapeError("repeat_inner: count must be positive");
  const auto v = a.value();
  const std::size_t n = v.size();
  std::vector<T> out(n * count);
  for (std::size_t i = 0; i < n; ++i) std::fill_n(out.begin() + i * count, count, v[i]);
  Shape shape = a.shape();
  shape.push_back(count);
  const std::size_t ia = a.id();
  return a.tape().record("repeat_inner", std::move(shape), std::move(out), {ia},
                         [ia, n, count](Tape<T>& t, std::size_t self) {
                           const auto& g = t.node(self).grad;
                           T* gx = t.grad_sink(ia);
                           for (std::size_t i = 0; i < n; ++i) {
                             T acc = 0;
                             for (std::size_t r = 0; r < count; ++r) acc += g[i * count + r];
                             gx[i] += acc;
                           }
                         });
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts.front().shape();
  const AxisSplit s0 = split_axis(first, axis, "concat");
  std::vector<std::size_t> lengths;
  std::vector<std::size_t> ids;
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_same_tape(parts.front(), p, "concat");
    const Shape& sh = p.shape();
    if (sh.size() != first.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t d = 0; d < sh.size(); ++d) {
      if (d != axis && sh[d] != first[d]) {
        throw ShapeError("concat: shape mismatch " + shape_str(sh) + " vs " + shape_str(first));
      }
    }
    lengths.push_back(sh[axis]);
    ids.push_back(p.id());
    total += sh[axis];
  }
  Shape shape = first;
  shape[axis] = total;
  std::vector<T> out(s0.outer * total * s0.inner);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto v = parts[p].value();
    const std::size_t chunk = lengths[p] * s0.inner;
    for (std::size_t o = 0; o < s0.outer; ++o) {
      std::copy_n(v.begin() + o * chunk, chunk, out.begin() + o * total * s0.inner + offset);
    }
    offset += chunk;
  }
  const std::size_t outer = s0.outer, inner = s0.inner;
  return parts.front().tape().record(
      "concat", std::move(shape), std::move(out), ids,
      [ids, lengths, outer, inner, total](Tape<T>& t, std::size_t self) {
        const auto& g = t.node(self).grad;
        std::size_t offset = 0;
        for (std::size_t p = 0; p < ids.size(); ++p) {
          const std::size_t chunk = lengths[p] * inner;
          if (T* gx = t.grad_sink(ids[p])) {
            for (std::size_t o = 0; o < outer; ++o) {
              const T* src = g.data() + o * total * inner + offset;
              for (std::size_t i = 0; i < chunk; ++i) gx[o * chunk + i] += src[i];
            }
          }
          offset += chunk;
        }
      });
}

template <typename T>
Var<T> sum_all(Var<T> a) {
  T total = 0;
  for (T v : a.value()) total += v;
  const std::size_t ia = a.id();
  return a.tape().record("sum_all", {}, {total}, {ia}, [ia](Tape<T>& t, std::size_t self) {
    const T g = t.node(self).grad[0];
    T* gx = t.grad_sink(ia);
    const std::size_t n = t.node(ia).value.size();
    for (std::size_t i = 0; i < n; ++i) gx[i] += g;
  });
}

template <typename T>
Var<T> mean_all(Var<T> a) {
  if (a.numel() == 0) throw ShapeError("mean_all: empty tensor");
  return scale(sum_all(a), 1.0 / static_cast<double>(a.numel()));
}

template <typename T>
Var<T> sum_axis(Var<T> a, std::size_t axis) {
  const AxisSplit s = split_axis(a.shape(), axis, "sum_axis");
  const auto x = a.value();
  std::vector<T> out(s.outer * s.inner, T(0));
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t l = 0; l < s.length; ++l) {
      const T* src = x.data() + (o * s.length + l) * s.inner;
      T* dst = out.data() + o * s.inner;
      for (std::size_t in = 0; in < s.inner; ++in) dst[in] += src[in];
    }
  }
  Shape shape = a.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  const std::size_t ia = a.id();
  return a.tape().record("sum_axis", std::move(shape), std::move(out), {ia},
                         [ia, s](Tape<T>& t, std::size_t self) {
                           const auto& g = t.node(self).grad;
                           T* gx = t.grad_sink(ia);
                           for (std::size_t o = 0; o < s.outer; ++o) {
                             for (std::size_t l = 0; l < s.length; ++l) {
                               T* dst = gx + (o * s.length + l) * s.inner;
                               const T* src = g.data() + o * s.inner;
                               for (std::size_t in = 0; in < s.inner; ++in) dst[in] += src[in];
                             }
                           }
                         });
}

template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernels, std::size_t stride, Padding padding) {
  require_same_tape(input, kernels, "conv2d");
  const Spatial d = spatial_dims(input.shape(), "conv2d");
  const Shape& ks = kernels.shape();
  if (ks.size() != 4) throw ShapeError("conv2d: kernels must be [KH,KW,C,F], got " + shape_str(ks));
  if (ks[2] != d.c) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(ks[2]) + " channels, input has " +
                     std::to_string(d.c));
  }
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  const std::size_t kh = ks[0], kw = ks[1], f = ks[3];
  std::size_t oh = 0, ow = 0;
  std::ptrdiff_t pad_top = 0, pad_left = 0;
  if (padding == Padding::same) {
    oh = (d.h + stride - 1) / stride;
    ow = (d.w + stride - 1) / stride;
    const std::ptrdiff_t ph = std::max<std::ptrdiff_t>(
        0, static_cast<std::ptrdiff_t>((oh - 1) * stride + kh) - static_cast<std::ptrdiff_t>(d.h));
    const std::ptrdiff_t pw = std::max<std::ptrdiff_t>(
        0, static_cast<std::ptrdiff_t>((ow - 1) * stride + kw) - static_cast<std::ptrdiff_t>(d.w));
    pad_top = ph / 2;
    pad_left = pw / 2;
  } else {
    if (d.h < kh || d.w < kw) throw ShapeError("conv2d: kernel larger than input with valid padding");
    oh = (d.h - kh) / stride + 1;
    ow = (d.w - kw) / stride + 1;
  }
  const std::size_t rows = d.n * oh * ow;
  const std::size_t patch = kh * kw * d.c;
  auto cols = std::make_shared<std::vector<T>>(rows * patch, T(0));
  const auto x = input.value();
  // im2col
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t xo = 0; xo < ow; ++xo) {
        T* row = cols->data() + ((n * oh + y) * ow + xo) * patch;
        for (std::size_t ky = 0; ky < kh; ++ky) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * stride + ky) - pad_top;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
          for (std::size_t kx = 0; kx < kw; ++kx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(xo * stride + kx) - pad_left;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
            const T* src = x.data() + ((n * d.h + static_cast<std::size_t>(iy)) * d.w +
                                       static_cast<std::size_t>(ix)) * d.c;
            std::copy_n(src, d.c, row + (ky * kw + kx) * d.c);
          }
        }
      }
    }
  }
  std::vector<T> out(rows * f);
  MatMap<T>(out.data(), rows, f).noalias() =
      ConstMatMap<T>(cols->data(), rows, patch) * ConstMatMap<T>(kernels.value().data(), patch, f);
  const std::size_t ii = input.id(), ik = kernels.id();
  return input.tape().record(
      "conv2d", spatial_shape(d, oh, ow, f), std::move(out), {ii, ik},
      [=](Tape<T>& t, std::size_t self) {
        ConstMatMap<T> g(t.node(self).grad.data(), rows, f);
        if (T* gk = t.grad_sink(ik)) {
          MatMap<T>(gk, patch, f).noalias() += ConstMatMap<T>(cols->data(), rows, patch).transpose() * g;
        }
        if (T* gx = t.grad_sink(ii)) {
          RowMat<T> dcols = g * ConstMatMap<T>(t.node(ik).value.data(), patch, f).transpose();
          for (std::size_t n = 0; n < d.n; ++n) {
            for (std::size_t y = 0; y < oh; ++y) {
              for (std::size_t xo = 0; xo < ow; ++xo) {
                const T* row = dcols.data() + ((n * oh + y) * ow + xo) * patch;
                for (std::size_t ky = 0; ky < kh; ++ky) {
                  const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * stride + ky) - pad_top;
                  if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
                  for (std::size_t kx = 0; kx < kw; ++kx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(xo * stride + kx) - pad_left;
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
                    T* dst = gx + ((n * d.h + static_cast<std::size_t>(iy)) * d.w +
                                   static_cast<std::size_t>(ix)) * d.c;
                    const T* src = row + (ky * kw + kx) * d.c;
                    for (std::size_t c = 0; c < d.c; ++c) dst[c] += src[c];
                  }
                }
              }
            }
          }
        }
      });
}

template <typename T>
Var<T> mean_pool2d(Var<T> input, std::size_t window) {
  const Spatial d = spatial_dims(input.shape(), "mean_pool2d");
  if (window == 0 || d.h % window != 0 || d.w % window != 0) {
    throw ShapeError("mean_pool2d: window " + std::to_string(window) + " does not tile " +
                     shape_str(input.shape()));
  }
  const std::size_t oh = d.h / window, ow = d.w / window;
  const T inv = T(1) / static_cast<T>(window * window);
  const auto x = input.value();
  std::vector<T> out(d.n * oh * ow * d.c, T(0));
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t y = 0; y < d.h; ++y) {
      for (std::size_t xi = 0; xi < d.w; ++xi) {
        const T* src = x.data() + ((n * d.h + y) * d.w + xi) * d.c;
        T* dst = out.data() + ((n * oh + y / window) * ow + xi / window) * d.c;
        for (std::size_t c = 0; c < d.c; ++c) dst[c] += src[c] * inv;
      }
    }
  }
  const std::size_t ii = input.id();
  return input.tape().record("mean_pool2d", spatial_shape(d, oh, ow, d.c), std::move(out), {ii},
                             [=](Tape<T>& t, std::size_t self) {
                               const auto& g = t.node(self).grad;
                               T* gx = t.grad_sink(ii);
                               for (std::size_t n = 0; n < d.n; ++n) {
                                 for (std::size_t y = 0; y < d.h; ++y) {
                                   for (std::size_t xi = 0; xi < d.w; ++xi) {
                                     T* dst = gx + ((n * d.h + y) * d.w + xi) * d.c;
                                     const T* src = g.data() +
                                                    ((n * oh + y / window) * ow + xi / window) * d.c;
                                     for (std::size_t c = 0; c < d.c; ++c) dst[c] += src[c] * inv;
                                   }
                                 }
                               }
                             });
}

template <typename T>
Var<T> global_avg_pool(Var<T> input) {
  const Spatial d = spatial_dims(input.shape(), "global_avg_pool");
  const std::size_t cells = d.h * d.w;
  const T inv = T(1) / static_cast<T>(cells);
  const auto x = input.value();
  std::vector<T> out(d.n * d.c, T(0));
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t p = 0; p < cells; ++p) {
      const T* src = x.data() + (n * cells + p) * d.c;
      for (std::size_t c = 0; c < d.c; ++c) out[n * d.c + c] += src[c];
    }
    for (std::size_t c = 0; c < d.c; ++c) out[n * d.c + c] *= inv;
  }
  Shape shape = d.batched ? Shape{d.n, d.c} : Shape{d.c};
  const std::size_t ii = input.id();
  return input.tape().record("global_avg_pool", std::move(shape), std::move(out), {ii},
                             [=](Tape<T>& t, std::size_t self) {
                               const auto& g = t.node(self).grad;
                               T* gx = t.grad_sink(ii);
                               for (std::size_t n = 0; n < d.n; ++n) {
                                 for (std::size_t p = 0; p < cells; ++p) {
                                   T* dst = gx + (n * cells + p) * d.c;
                                   for (std::size_t c = 0; c < d.c; ++c) dst[c] += g[n * d.c + c] * inv;
                                 }
                               }
                             });
}

template <typename T>
Var<T> mse(Var<T> prediction, Var<T> target) {
  require_same_shape(prediction, target, "mse");
  if (prediction.numel() == 0) throw ShapeError("mse: empty operands");
  return mean_all(square(sub(prediction, target)));
}

template <typename T>
Var<T> gaussian_reparam_sample(Var<T> mean, double sigma, const BasicTensor<T>& noise) {
  if (noise.shape != mean.shape()) {
    throw ShapeError("gaussian_reparam_sample: noise shape " + shape_str(noise.shape) +
                     " does not match mean shape " + shape_str(mean.shape()));
  }
  if (!(sigma >= 0.0)) throw std::invalid_argument("gaussian_reparam_sample: sigma must be >= 0");
  if (!all_finite(noise.data)) throw NumericError("gaussian_reparam_sample: non-finite noise");
  const T s = static_cast<T>(sigma);
  const auto mu = mean.value();
  std::vector<T> out(mu.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mu[i] + s * noise.data[i];
  const std::size_t im = mean.id();
  return mean.tape().record("gaussian_reparam_sample", mean.shape(), std::move(out), {im},
                            [im](Tape<T>& t, std::size_t self) {
                              const auto& g = t.node(self).grad;
                              T* gx = t.grad_sink(im);
                              for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                            });
}

template <typename T>
Var<T> detach(Var<T> a) {
  const auto v = a.value();
  return a.tape().constant(a.shape(), std::vector<T>(v.begin(), v.end()));
}

#define AESTHETIC_INSTANTIATE_OPS(T)                                                  \
  template Var<T> matmul(Var<T>, Var<T>);                                             \
  template Var<T> add(Var<T>, Var<T>);                                                \
  template Var<T> sub(Var<T>, Var<T>);                                                \
  template Var<T> mul(Var<T>, Var<T>);                                                \
  template Var<T> scale(Var<T>, double);                                              \
  template Var<T> square(Var<T>);                                                     \
  template Var<T> relu(Var<T>);                                                       \
  template Var<T> tanh(Var<T>);                                                       \
  template Var<T> softmax(Var<T>, std::size_t);                                       \
  template Var<T> reshape(Var<T>, Shape);                                             \
  template Var<T> repeat_outer(Var<T>, std::size_t);                                  \
  template Var<T> repeat_inner(Var<T>, std::size_t);                                  \
  template Var<T> concat(const std::vector<Var<T>>&, std::size_t);                    \
  template Var<T> sum_all(Var<T>);                                                    \
  template Var<T> mean_all(Var<T>);                                                   \
  template Var<T> sum_axis(Var<T>, std::size_t);                                      \
  template Var<T> conv2d(Var<T>, Var<T>, std::size_t, Padding);                       \
  template Var<T> mean_pool2d(Var<T>, std::size_t);                                   \
  template Var<T> global_avg_pool(Var<T>);                                            \
  template Var<T> mse(Var<T>, Var<T>);                                                \
  template Var<T> gaussian_reparam_sample(Var<T>, double, const BasicTensor<T>&);     \
  template Var<T> detach(Var<T>);

AESTHETIC_INSTANTIATE_OPS(float)
AESTHETIC_INSTANTIATE_OPS(double)

}  // namespace aesthetic::ops
