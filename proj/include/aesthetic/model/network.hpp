#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "aesthetic/autodiff/tape.hpp"
#include "aesthetic/image.hpp"
#include "aesthetic/model/config.hpp"
#include "aesthetic/model/report.hpp"

namespace aesthetic {

/// Named parameter tensors in a fixed registration order. Element addresses
/// are stable for the lifetime of the set.
template <typename T>
class ParameterSet {
 public:
  BasicTensor<T>& add(std::string name, Shape shape);
  BasicTensor<T>& at(std::string_view name);
  const BasicTensor<T>& at(std::string_view name) const;
  bool contains(std::string_view name) const { return index_.contains(std::string(name)); }

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  std::size_t total_elements() const;

  BasicTensor<T>& operator[](std::size_t i) { return tensors_[i]; }
  const BasicTensor<T>& operator[](std::size_t i) const { return tensors_[i]; }

  std::vector<BasicTensor<T>*> pointers();
  std::vector<std::vector<T>*> gradients();
  void zero_grad();

 private:
  std::vector<std::string> names_;
  std::deque<BasicTensor<T>> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Puts parameters on a tape at most once per name. A read-only binder
/// records constants; a trainable one binds the tensors so backward() fills
/// their gradients.
template <typename T>
class Binder {
 public:
  Binder(Tape<T>& tape, const ParameterSet<T>& params) : tape_(tape), const_params_(&params) {}
  Binder(Tape<T>& tape, ParameterSet<T>& params) : tape_(tape), const_params_(&params), params_(&params) {}

  Var<T> operator()(const std::string& name);
  /// Uses `v` for `name` instead of the stored tensor (gradient probes).
  void provide(const std::string& name, Var<T> v) { bound_.insert_or_assign(name, v); }
  Tape<T>& tape() { return tape_; }

 private:
  Tape<T>& tape_;
  const ParameterSet<T>* const_params_;
  ParameterSet<T>* params_ = nullptr;
  std::unordered_map<std::string, Var<T>> bound_;
};

enum class InitScheme {
  /// Final attention and hyper-network layers start at zero (uniform masks
  /// and mixing weights), posterior heads start at zero.
  training,
  /// Every tensor random, including biases; used for gradient probes.
  generic,
};

/// Tape handles produced by one batched forward pass.
template <typename T>
struct ForwardPass {
  Var<T> features;                // [N,h,w,C]
  std::vector<Var<T>> masks;      // K entries of [N, h*w]
  Var<T> attribute_means;         // [N,K]
  Var<T> posterior_means;         // [N,K]
  Var<T> weights;                 // [N,K]
  Var<T> overall;                 // [N]
};

/// Feature extractor, per-attribute attention and score heads, variational
/// posterior heads and the hyper-network mixer.
template <typename T>
class AestheticNet {
 public:
  explicit AestheticNet(ModelConfig config);
  static AestheticNet initialized(ModelConfig config, std::uint64_t seed,
                                  InitScheme scheme = InitScheme::training);

  const ModelConfig& config() const { return config_; }
  ParameterSet<T>& parameters() { return params_; }
  const ParameterSet<T>& parameters() const { return params_; }

  /// Images [N,S,S,3] -> features [N,h,w,C].
  Var<T> extract_features(Binder<T>& bind, Var<T> images) const;
  /// Features -> attention mask [N, h*w] for one attribute.
  Var<T> attend(Binder<T>& bind, Var<T> features, std::size_t attribute) const;
  /// Broadcasts the mask over channels and multiplies: [N,h,w,C].
  Var<T> apply_mask(Var<T> features, Var<T> mask) const;
  /// Masked features -> score mean in (-1,1), shape [N,1].
  Var<T> estimate_attribute(Binder<T>& bind, Var<T> masked, std::size_t attribute) const;
  /// Mask-free posterior mean from pooled features, shape [N,1].
  Var<T> posterior_estimate(Binder<T>& bind, Var<T> features, std::size_t attribute) const;
  /// Mixing weights [N,K], rows on the probability simplex.
  Var<T> mix_weights(Binder<T>& bind, Var<T> features) const;

  ForwardPass<T> forward(Binder<T>& bind, Var<T> images) const;

  /// Deterministic evaluation (score means, no sampling).
  EvaluationReport evaluate(const Image& image) const;
  std::vector<EvaluationReport> evaluate_batch(std::span<const Image> images) const;

  template <typename U>
  AestheticNet<U> cast() const {
    AestheticNet<U> out(config_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      out.parameters()[i].data.assign(params_[i].data.begin(), params_[i].data.end());
    }
    return out;
  }

  /// Stacks images into an [N,S,S,3] tensor, validating size and range.
  BasicTensor<T> to_batch(std::span<const Image> images) const;

 private:
  Var<T> linear(Binder<T>& bind, Var<T> x, const std::string& prefix) const;

  ModelConfig config_;
  ParameterSet<T> params_;
};

/// Sum_i w_i * s_i per row: weights and scores [N,K] -> [N].
template <typename T>
Var<T> overall_score(Var<T> weights, Var<T> scores);

/// Plain-number form of the same mixture. Throws ShapeError on length mismatch.
double overall_score(std::span<const double> weights, std::span<const double> scores);

/// Parameter-name prefixes of the five trainable groups.
std::vector<std::string> parameter_groups();
std::string parameter_group(std::string_view name);

}  // namespace aesthetic
