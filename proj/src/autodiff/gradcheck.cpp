#include "aesthetic/autodiff/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "aesthetic/autodiff/ops.hpp"
#include "aesthetic/autodiff/rng.hpp"

namespace aesthetic {
namespace {

double evaluate(const ScalarFn& fn, std::vector<Tensor64>& inputs) {
  Tape<double> tape;
  std::vector<Var<double>> vars;
  for (auto& t : inputs) vars.push_back(tape.constant(t));
  return fn(tape, vars).item();
}

Tensor64 random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor64 t = Tensor64::zeros(std::move(shape));
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero so +-step never crosses a relu kink.
Tensor64 kink_free_tensor(Rng& rng, Shape shape) {
  Tensor64 t = Tensor64::zeros(std::move(shape));
  for (double& v : t.data) {
    const double mag = rng.uniform(0.05, 1.0);
    v = rng.bernoulli(0.5) ? mag : -mag;
  }
  return t;
}

// Contracts an arbitrary output with a fixed random projection so every
// output element contributes to the scalar.
Var<double> project(Var<double> out, std::uint64_t seed) {
  Rng rng(seed);
  Tensor64 r = random_tensor(rng, out.shape());
  return ops::sum_all(ops::mul(out, out.tape().constant(r)));
}

}  // namespace

double max_gradient_error(const ScalarFn& fn, const std::vector<Tensor64>& inputs, double step) {
  return max_gradient_error(fn, fn, inputs, step);
}

double max_gradient_error(const ScalarFn& fn, const ScalarFn& reference, const std::vector<Tensor64>& inputs,
                          double step) {
  std::vector<Tensor64> params = inputs;
  for (auto& p : params) {
    p.requires_grad = true;
    p.zero_grad();
  }
  {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (auto& p : params) vars.push_back(tape.parameter(p));
    backward(fn(tape, vars));
  }
  double worst = 0.0;
  std::vector<Tensor64> probe = inputs;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0;
    for (std::size_t j = 0; j < probe[i].numel(); ++j) {
      const double original = probe[i].data[j];
      probe[i].data[j] = original + step;
      const double up = evaluate(reference, probe);
      probe[i].data[j] = original - step;
      const double down = evaluate(reference, probe);
      probe[i].data[j] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = params[i].grad[j];
      diff_sq += (analytic - numeric) * (analytic - numeric);
      a_sq += analytic * analytic;
      n_sq += numeric * numeric;
    }
    const double denom = std::max({std::sqrt(a_sq), std::sqrt(n_sq), 1e-6});
    worst = std::max(worst, std::sqrt(diff_sq) / denom);
  }
  return worst;
}

std::vector<GradCheckResult> op_gradient_checks(std::uint64_t seed) {
  using V = Var<double>;
  using VV = std::vector<V>;
  Rng rng(seed);
  std::vector<GradCheckResult> results;
  auto run = [&](std::string name, const ScalarFn& fn, std::vector<Tensor64> inputs) {
    const auto start = std::chrono::steady_clock::now();
    GradCheckResult r;
    r.name = std::move(name);
    r.max_rel_error = max_gradient_error(fn, inputs);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results.push_back(r);
  };
  const std::uint64_t proj = rng.next_u64();

  run("matmul", [&](Tape<double>&, const VV& in) { return project(ops::matmul(in[0], in[1]), proj); },
      {random_tensor(rng, {3, 4}), random_tensor(rng, {4, 5})});
  run("add", [&](Tape<double>&, const VV& in) { return project(ops::add(in[0], in[1]), proj); },
      {random_tensor(rng, {2, 3}), random_tensor(rng, {2, 3})});
  run("sub", [&](Tape<double>&, const VV& in) { return project(ops::sub(in[0], in[1]), proj); },
      {random_tensor(rng, {2, 3}), random_tensor(rng, {2, 3})});
  run("mul", [&](Tape<double>&, const VV& in) { return project(ops::mul(in[0], in[1]), proj); },
      {random_tensor(rng, {2, 3}), random_tensor(rng, {2, 3})});
  run("relu", [&](Tape<double>&, const VV& in) { return project(ops::relu(in[0]), proj); },
      {kink_free_tensor(rng, {4, 5})});
  run("tanh", [&](Tape<double>&, const VV& in) { return project(ops::tanh(in[0]), proj); },
      {random_tensor(rng, {4, 5}, -2.0, 2.0)});
  run("softmax", [&](Tape<double>&, const VV& in) { return project(ops::softmax(in[0], 1), proj); },
      {random_tensor(rng, {3, 6}, -2.0, 2.0)});
  run("softmax_axis0", [&](Tape<double>&, const VV& in) { return project(ops::softmax(in[0], 0), proj); },
      {random_tensor(rng, {4, 3}, -2.0, 2.0)});
  run("conv2d_same",
      [&](Tape<double>&, const VV& in) {
        return project(ops::conv2d(in[0], in[1], 1, ops::Padding::same), proj);
      },
      {random_tensor(rng, {2, 5, 5, 3}), random_tensor(rng, {3, 3, 3, 4})});
  run("conv2d_strided",
      [&](Tape<double>&, const VV& in) {
        return project(ops::conv2d(in[0], in[1], 2, ops::Padding::same), proj);
      },
      {random_tensor(rng, {1, 6, 6, 2}), random_tensor(rng, {3, 3, 2, 3})});
  run("conv2d_valid",
      [&](Tape<double>&, const VV& in) {
        return project(ops::conv2d(in[0], in[1], 1, ops::Padding::valid), proj);
      },
      {random_tensor(rng, {5, 6, 2}), random_tensor(rng, {2, 3, 2, 3})});
  run("mean_pool2d", [&](Tape<double>&, const VV& in) { return project(ops::mean_pool2d(in[0], 2), proj); },
      {random_tensor(rng, {2, 4, 6, 3})});
  run("global_avg_pool",
      [&](Tape<double>&, const VV& in) { return project(ops::global_avg_pool(in[0]), proj); },
      {random_tensor(rng, {2, 3, 4, 5})});
  run("mse", [&](Tape<double>&, const VV& in) { return ops::mse(in[0], in[1]); },
      {random_tensor(rng, {7}), random_tensor(rng, {7})});
  {
    Tensor64 noise = random_tensor(rng, {2, 4});
    run("gaussian_reparam_sample",
        [&, noise](Tape<double>&, const VV& in) {
          return project(ops::gaussian_reparam_sample(in[0], 0.1, noise), proj);
        },
        {random_tensor(rng, {2, 4})});
  }
  run("sum_axis", [&](Tape<double>&, const VV& in) { return project(ops::sum_axis(in[0], 1), proj); },
      {random_tensor(rng, {2, 3, 4})});
  run("repeat_outer", [&](Tape<double>&, const VV& in) { return project(ops::repeat_outer(in[0], 3), proj); },
      {random_tensor(rng, {4})});
  run("repeat_inner", [&](Tape<double>&, const VV& in) { return project(ops::repeat_inner(in[0], 3), proj); },
      {random_tensor(rng, {2, 4})});
  run("concat", [&](Tape<double>&, const VV& in) { return project(ops::concat<double>({in[0], in[1]}, 1), proj); },
      {random_tensor(rng, {3, 2}), random_tensor(rng, {3, 4})});
  run("reshape", [&](Tape<double>&, const VV& in) { return project(ops::reshape(in[0], {6, 2}), proj); },
      {random_tensor(rng, {3, 4})});
  run("square_scale", [&](Tape<double>&, const VV& in) { return project(ops::scale(ops::square(in[0]), -0.7), proj); },
      {random_tensor(rng, {5})});
  // softmax -> weighted sum -> MSE, the shape of the decomposition head.
  run("softmax_weighted_mse",
      [&](Tape<double>& tape, const VV& in) {
        auto w = ops::softmax(in[0], 1);
        auto s = ops::tanh(in[1]);
        auto overall = ops::sum_axis(ops::mul(w, s), 1);
        Tensor64 target({2}, {0.3, -0.4});
        return ops::mse(overall, tape.constant(target));
      },
      {random_tensor(rng, {2, 5}), random_tensor(rng, {2, 5})});
  return results;
}

}  // namespace aesthetic
