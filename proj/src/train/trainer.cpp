#include "aesthetic/train/trainer.hpp"

#include <cmath>
#include <stdexcept>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "aesthetic/autodiff/ops.hpp"
#include "aesthetic/autodiff/rng.hpp"

namespace aesthetic {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Stream families so shuffling and sampling noise never share a sequence.
std::uint64_t noise_seed(std::uint64_t seed) { return splitmix64(seed ^ 0x6E6F697365ULL); }
std::uint64_t shuffle_seed(std::uint64_t seed) { return splitmix64(seed ^ 0x73687566ULL); }

template <typename T>
BasicTensor<T> normal_tensor(Shape shape, Rng& rng) {
  BasicTensor<T> t = BasicTensor<T>::zeros(std::move(shape));
  for (T& v : t.data) v = static_cast<T>(rng.normal());
  return t;
}

constexpr std::size_t kEvalChunk = 64;

}  // namespace

template <typename T>
Batch<T> make_batch(const AestheticNet<T>& net, const Dataset& data, std::span<const std::size_t> indices) {
  const std::size_t s = net.config().image_size;
  const std::size_t k = net.config().num_attributes();
  const std::size_t n = indices.size();
  if (n == 0) throw std::invalid_argument("make_batch: empty batch");
  Batch<T> b{BasicTensor<T>::zeros({n, s, s, 3}), BasicTensor<T>::zeros({n}), BasicTensor<T>::zeros({n, k})};
  for (std::size_t r = 0; r < n; ++r) {
    const ImageSample& sample = data.at(indices[r]);
    if (sample.image.width != s || sample.image.height != s) {
      throw ShapeError("sample " + sample.provenance + " is " + std::to_string(sample.image.width) + "x" +
                       std::to_string(sample.image.height) + ", model expects " + std::to_string(s));
    }
    std::copy(sample.image.pixels.begin(), sample.image.pixels.end(), b.images.data.begin() + r * s * s * 3);
    b.overall.data[r] = static_cast<T>(sample.overall);
    for (std::size_t i = 0; i < k; ++i) b.attributes.data[r * k + i] = static_cast<T>(sample.attributes[i]);
  }
  return b;
}

template <typename T>
ObjectiveTerms<T> build_objective(const AestheticNet<T>& net, Binder<T>& bind, const Batch<T>& batch,
                                  const BasicTensor<T>* noise, const TrainingConfig& config) {
  Tape<T>& tape = bind.tape();
  const double sigma = net.config().sigma;
  ObjectiveTerms<T> t;
  t.forward = net.forward(bind, tape.constant(batch.images));
  const ForwardPass<T>& fp = t.forward;

  Var<T> scores = fp.attribute_means;
  if (config.sampling == SamplingMode::stochastic) {
    if (noise == nullptr) throw std::invalid_argument("stochastic objective needs a noise tensor");
    scores = ops::gaussian_reparam_sample(scores, sigma, *noise);
  }
  const Var<T> overall = overall_score(fp.weights, scores);
  t.l_aes = loss_aes(overall, tape.constant(batch.overall));
  t.l_att = loss_att(scores, tape.constant(batch.attributes));
  if (config.mi_phi_mode == MiPhiMode::as_written) {
    t.l_mi = loss_mi(fp.attribute_means, fp.posterior_means, sigma);
    t.total = total_loss(t.l_aes, t.l_att, t.l_mi, config);
    t.objective = t.total;
  } else {
    t.l_mi = loss_mi(fp.attribute_means, ops::detach(fp.posterior_means), sigma);
    t.total = total_loss(t.l_aes, t.l_att, t.l_mi, config);
    // Only the posterior heads see the fit: features and targets are detached.
    // Scaling the likelihood by sigma^2 keeps its minimiser but stops its
    // 1/sigma^2 gradient from dominating the global clipping norm.
    const Var<T> frozen = ops::detach(fp.features);
    std::vector<Var<T>> fitted;
    for (std::size_t k = 0; k < net.config().num_attributes(); ++k) {
      fitted.push_back(net.posterior_estimate(bind, frozen, k));
    }
    const Var<T> fit = ops::scale(posterior_nll(ops::detach(scores), ops::concat(fitted, 1), sigma), sigma * sigma);
    t.objective = ops::add(t.total, fit);
  }
  return t;
}

bool EarlyStopping::update(double loss) {
  last_improved_ = loss < best_;
  if (last_improved_) {
    best_ = loss;
    stale_ = 0;
  } else {
    ++stale_;
  }
  return stale_ >= patience_;
}

nlohmann::json to_json(const Metrics& m) {
  nlohmann::json per = nlohmann::json::object();
  for (std::size_t i = 0; i < kNumAttributes; ++i) per[std::string(kAttributeNames[i])] = m.attribute_mse[i];
  return {{"overall_mse", m.overall_mse}, {"attribute_mse", std::move(per)}, {"ranking_accuracy", m.ranking_accuracy},
          {"kl_gap", m.kl_gap},           {"l_aes", m.l_aes},                {"l_att", m.l_att},
          {"l_mi", m.l_mi},               {"total", m.total}};
}

std::string TrainReport::to_jsonl() const {
  std::string out;
  for (const auto& e : epochs) {
    nlohmann::json j = {{"epoch", e.epoch},   {"l_aes", e.l_aes},         {"l_att", e.l_att},
                        {"l_mi", e.l_mi},     {"total", e.total},         {"monitored", e.monitored},
                        {"improved", e.improved}, {"seconds", e.seconds}};
    if (e.validation) j["validation"] = to_json(*e.validation);
    out += j.dump() + "\n";
  }
  nlohmann::json summary = {{"summary", true},          {"stopping_epoch", stopping_epoch},
                            {"stopped_early", stopped_early}, {"best_epoch", best_epoch},
                            {"best_loss", best_loss},    {"steps", steps},
                            {"wall_seconds", wall_seconds}};
  out += summary.dump() + "\n";
  return out;
}

TrainReport run_training_loop(std::size_t max_epochs, std::size_t patience,
                              const std::function<EpochRecord(std::size_t)>& run_epoch,
                              const std::function<void(std::size_t)>& on_improve) {
  const auto start = Clock::now();
  TrainReport report;
  EarlyStopping stopper(patience);
  for (std::size_t e = 1; e <= max_epochs; ++e) {
    EpochRecord rec = run_epoch(e);
    rec.epoch = e;
    if (!std::isfinite(rec.monitored)) {
      throw NumericError("training diverged: monitored loss is " + std::to_string(rec.monitored) + " at epoch " +
                         std::to_string(e));
    }
    const bool stop = stopper.update(rec.monitored);
    rec.improved = stopper.last_improved();
    if (rec.improved) {
      report.best_epoch = e;
      report.best_loss = rec.monitored;
      if (on_improve) on_improve(e);
    }
    report.epochs.push_back(rec);
    report.stopping_epoch = e;
    if (stop) {
      report.stopped_early = true;
      break;
    }
  }
  report.wall_seconds = seconds_since(start);
  return report;
}

Trainer::Trainer(AestheticNet<float>& net, TrainingConfig config) : net_(net), config_(std::move(config)) {
  config_.validate();
  params_ = net_.parameters().pointers();
  grads_ = net_.parameters().gradients();
  adam_ = AdamState<float>::like(params_);
}

StepLosses Trainer::step(const Dataset& data, std::span<const std::size_t> indices) {
  const Batch<float> batch = make_batch(net_, data, indices);
  std::optional<BasicTensor<float>> noise;
  if (config_.sampling == SamplingMode::stochastic) {
    Rng rng = Rng::stream(noise_seed(config_.seed), adam_.step);
    noise = normal_tensor<float>({indices.size(), net_.config().num_attributes()}, rng);
  }
  net_.parameters().zero_grad();
  StepLosses out;
  {
    Tape<float> tape;
    Binder<float> bind(tape, net_.parameters());
    const auto terms = build_objective(net_, bind, batch, noise ? &*noise : nullptr, config_);
    backward(terms.objective);
    out.l_aes = terms.l_aes.item();
    out.l_att = terms.l_att.item();
    out.l_mi = terms.l_mi.item();
    out.total = terms.total.item();
    out.objective = terms.objective.item();
  }
  out.grad_norm = clip_global_norm<float>(grads_, config_.clip_norm);
  adam_step<float>(params_, adam_, AdamConfig{.learning_rate = config_.learning_rate});
  return out;
}

StepLosses Trainer::epoch(const Dataset& data, std::size_t epoch_index) {
  if (data.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = Rng::stream(shuffle_seed(config_.seed), epoch_index);
  rng.shuffle(order);
  StepLosses mean;
  for (std::size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
    const std::size_t end = std::min(order.size(), begin + config_.batch_size);
    const StepLosses s = step(data, std::span(order).subspan(begin, end - begin));
    const double w = static_cast<double>(end - begin) / static_cast<double>(order.size());
    mean.l_aes += w * s.l_aes;
    mean.l_att += w * s.l_att;
    mean.l_mi += w * s.l_mi;
    mean.total += w * s.total;
    mean.objective += w * s.objective;
    mean.grad_norm = std::max(mean.grad_norm, s.grad_norm);
  }
  return mean;
}

FitResult fit(AestheticNet<float>& net, const Dataset& train, const Dataset& validation,
              const TrainingConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train.empty()) throw std::invalid_argument("fit: empty training set");
  if (config.monitor == MonitorSplit::validation && validation.empty()) {
    throw std::invalid_argument("fit: monitoring the validation loss needs a validation set");
  }
  tune_allocator_for_training();
  Trainer trainer(net, config);
  FitResult result{TrainReport{}, net};
  result.report = run_training_loop(
      config.max_epochs, config.patience,
      [&](std::size_t e) {
        const auto start = Clock::now();
        StepLosses losses;
        try {
          losses = trainer.epoch(train, e);
        } catch (const NumericError& err) {
          throw NumericError("training diverged in epoch " + std::to_string(e) + " (step " +
                             std::to_string(trainer.steps()) + "): " + err.what());
        }
        EpochRecord rec;
        rec.epoch = e;
        rec.l_aes = losses.l_aes;
        rec.l_att = losses.l_att;
        rec.l_mi = losses.l_mi;
        rec.total = losses.total;
        if (!validation.empty()) rec.validation = eval_metrics(net, validation, 1000, config.seed, config);
        rec.monitored = config.monitor == MonitorSplit::train ? rec.total : rec.validation->total;
        rec.seconds = seconds_since(start);
        if (on_epoch) on_epoch(rec);
        return rec;
      },
      [&](std::size_t) { result.best = net; });
  result.report.steps = trainer.steps();
  return result;
}

double ranking_accuracy(std::span<const double> predicted, std::span<const double> truth, std::size_t pairs,
                        std::uint64_t seed) {
  const std::size_t n = truth.size();
  if (n < 2) throw std::invalid_argument("ranking accuracy needs at least two samples");
  if (predicted.size() != n) throw ShapeError("ranking accuracy: prediction count differs from truth count");
  if (pairs == 0) throw std::invalid_argument("ranking accuracy: pair count must be positive");
  Rng rng(seed);
  std::size_t correct = 0;
  for (std::size_t p = 0; p < pairs; ++p) {
    std::size_t i = 0, j = 0;
    for (std::size_t tries = 0;; ++tries) {
      if (tries == 10000) throw std::invalid_argument("ranking accuracy: ground-truth scores are all tied");
      i = rng.below(n);
      j = rng.below(n);
      if (i != j && truth[i] != truth[j]) break;
    }
    const bool predicted_i_first = predicted[i] > predicted[j] || (predicted[i] == predicted[j] && i < j);
    const bool truth_i_first = truth[i] > truth[j];
    if (predicted_i_first == truth_i_first) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs);
}

Metrics eval_metrics(const AestheticNet<float>& net, const Dataset& data, std::size_t pairs, std::uint64_t seed,
                     const TrainingConfig& config) {
  if (data.size() < 2) throw std::invalid_argument("eval_metrics needs at least two samples");
  TrainingConfig eval = config;
  eval.sampling = SamplingMode::deterministic;
  const std::size_t k = net.config().num_attributes();
  const double sigma = net.config().sigma;
  Metrics m;
  std::vector<double> predicted, truth;
  double kl = 0.0;
  for (std::size_t begin = 0; begin < data.size(); begin += kEvalChunk) {
    const std::size_t end = std::min(data.size(), begin + kEvalChunk);
    std::vector<std::size_t> idx(end - begin);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = begin + i;
    const Batch<float> batch = make_batch(net, data, idx);
    Tape<float> tape;
    Binder<float> bind(tape, net.parameters());
    const auto t = build_objective<float>(net, bind, batch, nullptr, eval);
    const double w = static_cast<double>(idx.size());
    m.l_aes += w * t.l_aes.item();
    m.l_att += w * t.l_att.item();
    m.l_mi += w * t.l_mi.item();
    m.total += w * t.total.item();
    const auto overall = t.forward.overall.value();
    const auto mu_p = t.forward.attribute_means.value();
    const auto mu_q = t.forward.posterior_means.value();
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const ImageSample& s = data[idx[r]];
      predicted.push_back(overall[r]);
      truth.push_back(s.overall);
      m.overall_mse += (overall[r] - s.overall) * (overall[r] - s.overall);
      for (std::size_t a = 0; a < k; ++a) {
        const double e = mu_p[r * k + a] - s.attributes[a];
        m.attribute_mse[a] += e * e;
        const double gap = mu_p[r * k + a] - mu_q[r * k + a];
        kl += gap * gap / (2.0 * sigma * sigma);
      }
    }
  }
  const double n = static_cast<double>(data.size());
  m.l_aes /= n;
  m.l_att /= n;
  m.l_mi /= n;
  m.total /= n;
  m.overall_mse /= n;
  for (double& a : m.attribute_mse) a /= n;
  m.kl_gap = kl / (n * static_cast<double>(k));
  m.ranking_accuracy = ranking_accuracy(predicted, truth, pairs, seed);
  return m;
}

std::vector<GradCheckResult> objective_gradient_checks(std::uint64_t seed, MiPhiMode mode) {
  ModelConfig mc;
  mc.image_size = 8;
  mc.feature_size = 2;
  mc.extractor_channels = {3, 4};
  mc.attention_hidden = 4;
  mc.attribute_hidden = 3;
  mc.hyper_hidden = {5, 3};
  mc.sigma = 0.5;
  const auto net = AestheticNet<double>::initialized(mc, seed, InitScheme::generic);

  Rng rng(splitmix64(seed));
  const std::size_t n = 2, k = mc.num_attributes();
  Batch<double> batch{BasicTensor<double>::zeros({n, 8, 8, 3}), BasicTensor<double>::zeros({n}),
                      BasicTensor<double>::zeros({n, k})};
  for (double& v : batch.images.data) v = rng.uniform();
  for (double& v : batch.overall.data) v = rng.uniform(-1, 1);
  for (double& v : batch.attributes.data) v = rng.uniform(-1, 1);
  const auto noise = normal_tensor<double>({n, k}, rng);

  TrainingConfig tc;
  tc.mi_phi_mode = mode;
  tc.lambda_mi = 0.5;  // large enough that the MI term is visible in the gradient
  tc.sampling = SamplingMode::stochastic;  // the noise path covers the mean path too

  BasicTensor<double> base_features, base_posterior, base_scores;
  {
    Tape<double> tape;
    Binder<double> bind(tape, net.parameters());
    const ForwardPass<double> fp = net.forward(bind, tape.constant(batch.images));
    base_features = fp.features.to_tensor();
    base_posterior = fp.posterior_means.to_tensor();
    base_scores = ops::gaussian_reparam_sample(fp.attribute_means, mc.sigma, noise).to_tensor();
  }

  std::vector<GradCheckResult> results;
  for (const auto& group : parameter_groups()) {
    std::vector<std::string> names;
    std::vector<Tensor64> inputs;
    for (std::size_t i = 0; i < net.parameters().size(); ++i) {
      if (parameter_group(net.parameters().names()[i]) != group) continue;
      names.push_back(net.parameters().names()[i]);
      inputs.push_back(net.parameters()[i]);
    }
    const ScalarFn fn = [&](Tape<double>& tape, const std::vector<Var<double>>& vars) {
      Binder<double> bind(tape, net.parameters());
      for (std::size_t i = 0; i < names.size(); ++i) bind.provide(names[i], vars[i]);
      return build_objective(net, bind, batch, &noise, tc).objective;
    };
    // The detached quantities, frozen at the unperturbed parameters.
    const ScalarFn frozen = [&](Tape<double>& tape, const std::vector<Var<double>>& vars) {
      Binder<double> bind(tape, net.parameters());
      for (std::size_t i = 0; i < names.size(); ++i) bind.provide(names[i], vars[i]);
      const ForwardPass<double> fp = net.forward(bind, tape.constant(batch.images));
      const Var<double> scores = ops::gaussian_reparam_sample(fp.attribute_means, mc.sigma, noise);
      const Var<double> l_aes = loss_aes(overall_score(fp.weights, scores), tape.constant(batch.overall));
      const Var<double> l_att = loss_att(scores, tape.constant(batch.attributes));
      const Var<double> l_mi = loss_mi(fp.attribute_means, tape.constant(base_posterior), mc.sigma);
      const Var<double> features = tape.constant(base_features);
      std::vector<Var<double>> fitted;
      for (std::size_t a = 0; a < k; ++a) fitted.push_back(net.posterior_estimate(bind, features, a));
      const Var<double> fit = posterior_nll(tape.constant(base_scores), ops::concat(fitted, 1), mc.sigma);
      return ops::add(total_loss(l_aes, l_att, l_mi, tc), ops::scale(fit, mc.sigma * mc.sigma));
    };
    const auto start = Clock::now();
    GradCheckResult r;
    r.name = "objective/" + group;
    r.max_rel_error = mode == MiPhiMode::as_written ? max_gradient_error(fn, inputs)
                                                    : max_gradient_error(fn, frozen, inputs);
    r.seconds = seconds_since(start);
    results.push_back(r);
  }
  return results;
}

void tune_allocator_for_training() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 1024 * 1024 * 1024);
#endif
}

template Batch<float> make_batch(const AestheticNet<float>&, const Dataset&, std::span<const std::size_t>);
template Batch<double> make_batch(const AestheticNet<double>&, const Dataset&, std::span<const std::size_t>);
template ObjectiveTerms<float> build_objective(const AestheticNet<float>&, Binder<float>&, const Batch<float>&,
                                               const BasicTensor<float>*, const TrainingConfig&);
template ObjectiveTerms<double> build_objective(const AestheticNet<double>&, Binder<double>&, const Batch<double>&,
                                                const BasicTensor<double>*, const TrainingConfig&);

}  // namespace aesthetic
