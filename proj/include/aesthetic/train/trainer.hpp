#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aesthetic/autodiff/gradcheck.hpp"
#include "aesthetic/autodiff/optim.hpp"
#include "aesthetic/data/dataset.hpp"
#include "aesthetic/model/network.hpp"
#include "aesthetic/train/config.hpp"
#include "aesthetic/train/losses.hpp"

namespace aesthetic {

/// Batch in tensor form: images [N,S,S,3], overall [N], attributes [N,K].
template <typename T>
struct Batch {
  BasicTensor<T> images;
  BasicTensor<T> overall;
  BasicTensor<T> attributes;
};

template <typename T>
Batch<T> make_batch(const AestheticNet<T>& net, const Dataset& data, std::span<const std::size_t> indices);

template <typename T>
struct ObjectiveTerms {
  Var<T> l_aes;
  Var<T> l_att;
  Var<T> l_mi;
  Var<T> total;      // l_aes + lambda_att l_att + lambda_mi l_mi
  Var<T> objective;  // what is differentiated (adds the posterior fit term in fit_posterior mode)
  ForwardPass<T> forward;
};

/// Builds every loss for one batch on `bind`'s tape. `noise` ([N,K] standard
/// normals) is used in stochastic mode and ignored otherwise.
template <typename T>
ObjectiveTerms<T> build_objective(const AestheticNet<T>& net, Binder<T>& bind, const Batch<T>& batch,
                                  const BasicTensor<T>* noise, const TrainingConfig& config);

struct StepLosses {
  double l_aes = 0, l_att = 0, l_mi = 0, total = 0, objective = 0;
  double grad_norm = 0;  // before clipping
};

/// Patience rule: stop once `patience` consecutive epochs fail to improve on
/// the best loss so far.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}
  /// Returns true when training should stop after this epoch.
  bool update(double loss);
  bool last_improved() const { return last_improved_; }
  double best() const { return best_; }
  std::size_t stale_epochs() const { return stale_; }

 private:
  std::size_t patience_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t stale_ = 0;
  bool last_improved_ = false;
};

struct Metrics {
  double overall_mse = 0;
  std::array<double, kNumAttributes> attribute_mse{};
  double ranking_accuracy = 0;
  double kl_gap = 0;  // mean over samples and attributes of (mu_p - mu_q)^2 / (2 sigma^2)
  double l_aes = 0;   // deterministic losses on the set
  double l_att = 0;
  double l_mi = 0;
  double total = 0;
};

nlohmann::json to_json(const Metrics& m);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double l_aes = 0, l_att = 0, l_mi = 0, total = 0;
  double monitored = 0;   // loss used by early stopping
  bool improved = false;
  std::optional<Metrics> validation;
  double seconds = 0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t stopping_epoch = 0;
  bool stopped_early = false;
  std::size_t best_epoch = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t steps = 0;
  double wall_seconds = 0;

  /// One JSON object per epoch, then a summary line.
  std::string to_jsonl() const;
};

/// The epoch loop shared by fit() and scripted runs: calls `run_epoch(e)`
/// for e = 1.., applies the patience rule to `record.monitored`, and calls
/// `on_improve(e)` whenever the monitored loss reaches a new best.
TrainReport run_training_loop(std::size_t max_epochs, std::size_t patience,
                              const std::function<EpochRecord(std::size_t)>& run_epoch,
                              const std::function<void(std::size_t)>& on_improve = {});

/// Owns the optimizer state for one model.
class Trainer {
 public:
  Trainer(AestheticNet<float>& net, TrainingConfig config);

  /// One Adam step on the given samples. Noise comes from the stream
  /// (seed, step index).
  StepLosses step(const Dataset& data, std::span<const std::size_t> indices);

  /// One pass over `data` in shuffled mini-batches; returns mean losses.
  StepLosses epoch(const Dataset& data, std::size_t epoch_index);

  const AdamState<float>& optimizer() const { return adam_; }
  std::uint64_t steps() const { return adam_.step; }
  const TrainingConfig& config() const { return config_; }

 private:
  AestheticNet<float>& net_;
  TrainingConfig config_;
  AdamState<float> adam_;
  std::vector<BasicTensor<float>*> params_;
  std::vector<std::vector<float>*> grads_;
};

struct FitResult {
  TrainReport report;
  AestheticNet<float> best;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains `net` in place (final parameters) and returns the best-loss model.
/// Deterministic given config.seed. Throws NumericError on divergence.
FitResult fit(AestheticNet<float>& net, const Dataset& train, const Dataset& validation,
              const TrainingConfig& config, const EpochCallback& on_epoch = {});

/// Deterministic (mean-score) metrics. Ranking accuracy is measured on
/// `pairs` random pairs with distinct ground-truth overall scores; a
/// predicted tie counts as ranking the lower-index sample higher.
Metrics eval_metrics(const AestheticNet<float>& net, const Dataset& data, std::size_t pairs = 1000,
                     std::uint64_t seed = 0, const TrainingConfig& config = {});

/// Pairwise ranking accuracy of `predicted` against `truth` (same rule as
/// eval_metrics).
double ranking_accuracy(std::span<const double> predicted, std::span<const double> truth, std::size_t pairs,
                        std::uint64_t seed);

/// Finite-difference check of the full objective with respect to each
/// parameter group of a tiny double-precision model.
std::vector<GradCheckResult> objective_gradient_checks(std::uint64_t seed, MiPhiMode mode = MiPhiMode::as_written);

/// Keeps freed activation buffers inside the heap between steps (glibc).
void tune_allocator_for_training();

}  // namespace aesthetic
