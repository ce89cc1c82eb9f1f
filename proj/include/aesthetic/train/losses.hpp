#pragma once

#include "aesthetic/autodiff/tape.hpp"
#include "aesthetic/train/config.hpp"

namespace aesthetic {

/// Mean over the batch of (label - prediction)^2; shapes [N].
template <typename T>
Var<T> loss_aes(Var<T> predictions, Var<T> labels);

/// Mean over the batch of the per-sample sum of squared attribute errors;
/// shapes [N,K].
template <typename T>
Var<T> loss_att(Var<T> predictions, Var<T> labels);

/// Minus the batch mean of sum_k KL[N(mu_p, s^2) || N(mu_q, s^2)]
/// = -(mu_p - mu_q)^2 / (2 s^2), summed over attributes. Always <= 0.
template <typename T>
Var<T> loss_mi(Var<T> attended_means, Var<T> posterior_means, double sigma);

/// Batch mean of the summed Gaussian negative log-likelihood of `scores`
/// under N(means, s^2), constant terms dropped.
template <typename T>
Var<T> posterior_nll(Var<T> scores, Var<T> means, double sigma);

/// l_aes + lambda_att * l_att + lambda_mi * l_mi. Throws NumericError on
/// non-finite input.
double total_loss(double l_aes, double l_att, double l_mi, const TrainingConfig& config);
template <typename T>
Var<T> total_loss(Var<T> l_aes, Var<T> l_att, Var<T> l_mi, const TrainingConfig& config);

}  // namespace aesthetic
