#include "aesthetic/train/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "aesthetic/autodiff/ops.hpp"

namespace aesthetic {

namespace {

template <typename T>
void require_batch(Var<T> a, Var<T> b, std::size_t rank, const char* op) {
  if (a.shape().size() != rank || a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                     " do not match (expected rank " + std::to_string(rank) + ")");
  }
  if (a.shape()[0] == 0) throw std::invalid_argument(std::string(op) + ": empty batch");
}

}  // namespace

template <typename T>
Var<T> loss_aes(Var<T> predictions, Var<T> labels) {
  require_batch(predictions, labels, 1, "loss_aes");
  return ops::mse(predictions, labels);
}

template <typename T>
Var<T> loss_att(Var<T> predictions, Var<T> labels) {
  require_batch(predictions, labels, 2, "loss_att");
  const double n = static_cast<double>(predictions.shape()[0]);
  return ops::scale(ops::sum_all(ops::square(ops::sub(predictions, labels))), 1.0 / n);
}

template <typename T>
Var<T> loss_mi(Var<T> attended_means, Var<T> posterior_means, double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("loss_mi: sigma must be positive");
  require_batch(attended_means, posterior_means, 2, "loss_mi");
  const double n = static_cast<double>(attended_means.shape()[0]);
  const auto sq = ops::sum_all(ops::square(ops::sub(attended_means, posterior_means)));
  return ops::scale(sq, -1.0 / (2.0 * sigma * sigma * n));
}

template <typename T>
Var<T> posterior_nll(Var<T> scores, Var<T> means, double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("posterior_nll: sigma must be positive");
  require_batch(scores, means, 2, "posterior_nll");
  const double n = static_cast<double>(scores.shape()[0]);
  return ops::scale(ops::sum_all(ops::square(ops::sub(scores, means))), 1.0 / (2.0 * sigma * sigma * n));
}

double total_loss(double l_aes, double l_att, double l_mi, const TrainingConfig& config) {
  if (!std::isfinite(l_aes) || !std::isfinite(l_att) || !std::isfinite(l_mi)) {
    throw NumericError("total_loss: non-finite component");
  }
  return l_aes + config.lambda_att * l_att + config.lambda_mi * l_mi;
}

template <typename T>
Var<T> total_loss(Var<T> l_aes, Var<T> l_att, Var<T> l_mi, const TrainingConfig& config) {
  return ops::add(ops::add(l_aes, ops::scale(l_att, config.lambda_att)), ops::scale(l_mi, config.lambda_mi));
}

#define AESTHETIC_INSTANTIATE_LOSSES(T)                                            \
  template Var<T> loss_aes(Var<T>, Var<T>);                                        \
  template Var<T> loss_att(Var<T>, Var<T>);                                        \
  template Var<T> loss_mi(Var<T>, Var<T>, double);                                 \
  template Var<T> posterior_nll(Var<T>, Var<T>, double);                           \
  template Var<T> total_loss(Var<T>, Var<T>, Var<T>, const TrainingConfig&);

AESTHETIC_INSTANTIATE_LOSSES(float)
AESTHETIC_INSTANTIATE_LOSSES(double)

}  // namespace aesthetic
