#include "aesthetic/model/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aesthetic/autodiff/ops.hpp"
#include "aesthetic/autodiff/rng.hpp"

namespace aesthetic {

// ---- ParameterSet ------------------------------------------------------------

template <typename T>
BasicTensor<T>& ParameterSet<T>::add(std::string name, Shape shape) {
  if (index_.contains(name)) throw std::invalid_argument("duplicate parameter " + name);
  index_.emplace(name, names_.size());
  names_.push_back(std::move(name));
  tensors_.push_back(BasicTensor<T>::zeros(std::move(shape), true));
  return tensors_.back();
}

template <typename T>
BasicTensor<T>& ParameterSet<T>::at(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw std::out_of_range("unknown parameter " + std::string(name));
  return tensors_[it->second];
}

template <typename T>
const BasicTensor<T>& ParameterSet<T>::at(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw std::out_of_range("unknown parameter " + std::string(name));
  return tensors_[it->second];
}

template <typename T>
std::size_t ParameterSet<T>::total_elements() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.numel();
  return n;
}

template <typename T>
std::vector<BasicTensor<T>*> ParameterSet<T>::pointers() {
  std::vector<BasicTensor<T>*> out;
  for (auto& t : tensors_) out.push_back(&t);
  return out;
}

template <typename T>
std::vector<std::vector<T>*> ParameterSet<T>::gradients() {
  std::vector<std::vector<T>*> out;
  for (auto& t : tensors_) {
    if (t.grad.size() != t.numel()) t.grad.assign(t.numel(), T(0));
    out.push_back(&t.grad);
  }
  return out;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& t : tensors_) t.grad.assign(t.numel(), T(0));
}

// ---- Binder --------------------------------------------------------------------

template <typename T>
Var<T> Binder<T>::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  Var<T> v = params_ ? tape_.parameter(params_->at(name)) : tape_.constant(const_params_->at(name));
  bound_.emplace(name, v);
  return v;
}

// ---- naming ----------------------------------------------------------------------

namespace {

std::string conv_name(std::size_t block, const char* part) {
  return "extractor.conv" + std::to_string(block) + "." + part;
}

std::string head_name(const char* head, std::size_t attribute, const char* layer) {
  return std::string(head) + "." + std::to_string(attribute) + "." + layer;
}

void register_linear(auto& params, const std::string& prefix, std::size_t in, std::size_t out) {
  params.add(prefix + ".weight", {in, out});
  params.add(prefix + ".bias", {out});
}

}  // namespace

std::vector<std::string> parameter_groups() {
  return {"extractor", "attention", "attribute", "hyper", "posterior"};
}

std::string parameter_group(std::string_view name) {
  return std::string(name.substr(0, name.find('.')));
}

// ---- AestheticNet ------------------------------------------------------------------

template <typename T>
AestheticNet<T>::AestheticNet(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto& ch = config_.extractor_channels;
  std::size_t in = 3;
  for (std::size_t b = 0; b < ch.size(); ++b) {
    params_.add(conv_name(b, "weight"), {3, 3, in, ch[b]});
    params_.add(conv_name(b, "bias"), {ch[b]});
    in = ch[b];
  }
  const std::size_t c = config_.feature_channels();
  const std::size_t k = config_.num_attributes();
  for (std::size_t a = 0; a < k; ++a) {
    register_linear(params_, head_name("attention", a, "hidden"), c, config_.attention_hidden);
    register_linear(params_, head_name("attention", a, "out"), config_.attention_hidden, 1);
  }
  for (std::size_t a = 0; a < k; ++a) {
    register_linear(params_, head_name("attribute", a, "hidden"), c, config_.attribute_hidden);
    register_linear(params_, head_name("attribute", a, "out"), config_.attribute_hidden, 1);
  }
  for (std::size_t a = 0; a < k; ++a) {
    register_linear(params_, head_name("posterior", a, "out"), c, 1);
  }
  std::size_t width = c;
  for (std::size_t l = 0; l < config_.hyper_hidden.size(); ++l) {
    register_linear(params_, "hyper.fc" + std::to_string(l), width, config_.hyper_hidden[l]);
    width = config_.hyper_hidden[l];
  }
  register_linear(params_, "hyper.out", width, k);
}

template <typename T>
AestheticNet<T> AestheticNet<T>::initialized(ModelConfig config, std::uint64_t seed, InitScheme scheme) {
  AestheticNet net(std::move(config));
  Rng rng(seed);
  auto& params = net.params_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.names()[i];
    BasicTensor<T>& t = params[i];
    if (scheme == InitScheme::generic) {
      const double fan_in = t.rank() >= 2 ? static_cast<double>(t.numel() / t.shape.back()) : 1.0;
      const double std = t.rank() >= 2 ? std::sqrt(2.0 / fan_in) : 0.3;
      for (T& v : t.data) v = static_cast<T>(rng.normal() * std);
      continue;
    }
    const bool is_bias = name.ends_with(".bias");
    const bool zero_layer = name.starts_with("attention.") && name.find(".out.") != std::string::npos;
    const bool zero_hyper = name.starts_with("hyper.out");
    const bool zero_posterior = name.starts_with("posterior.");
    if (is_bias || zero_layer || zero_hyper || zero_posterior) continue;
    const double fan_in = static_cast<double>(t.numel() / t.shape.back());
    double std = std::sqrt(2.0 / fan_in);  // He initialisation for relu layers
    if (name.starts_with("attribute.") && name.find(".out.") != std::string::npos) {
      std = std::sqrt(1.0 / fan_in);
    }
    for (T& v : t.data) v = static_cast<T>(rng.normal() * std);
  }
  return net;
}

template <typename T>
Var<T> AestheticNet<T>::linear(Binder<T>& bind, Var<T> x, const std::string& prefix) const {
  const std::size_t rows = x.shape()[0];
  Var<T> y = ops::matmul(x, bind(prefix + ".weight"));
  return ops::add(y, ops::repeat_outer(bind(prefix + ".bias"), rows));
}

template <typename T>
Var<T> AestheticNet<T>::extract_features(Binder<T>& bind, Var<T> images) const {
  const Shape& s = images.shape();
  if (s.size() != 4 || s[1] != config_.image_size || s[2] != config_.image_size || s[3] != 3) {
    throw ShapeError("extract_features: expected [N," + std::to_string(config_.image_size) + "," +
                     std::to_string(config_.image_size) + ",3], got " + shape_str(s));
  }
  const auto windows = config_.pool_windows();
  Var<T> x = images;
  for (std::size_t b = 0; b < config_.extractor_channels.size(); ++b) {
    x = ops::conv2d(x, bind(conv_name(b, "weight")), 1, ops::Padding::same);
    const Shape shape = x.shape();
    const std::size_t rows = shape[0] * shape[1] * shape[2];
    x = ops::reshape(x, {rows, shape[3]});
    x = ops::relu(ops::add(x, ops::repeat_outer(bind(conv_name(b, "bias")), rows)));
    x = ops::reshape(x, shape);
    if (windows[b] > 1) x = ops::mean_pool2d(x, windows[b]);
  }
  return x;
}

namespace {

void check_attribute(std::size_t attribute, std::size_t k) {
  if (attribute >= k) {
    throw std::out_of_range("attribute index " + std::to_string(attribute) + " outside [0," +
                            std::to_string(k) + ")");
  }
}

}  // namespace

template <typename T>
Var<T> AestheticNet<T>::attend(Binder<T>& bind, Var<T> features, std::size_t attribute) const {
  check_attribute(attribute, config_.num_attributes());
  const Shape& s = features.shape();
  const std::size_t n = s[0], cells = s[1] * s[2];
  Var<T> x = ops::reshape(features, {n * cells, s[3]});
  x = ops::relu(linear(bind, x, head_name("attention", attribute, "hidden")));
  x = linear(bind, x, head_name("attention", attribute, "out"));
  return ops::softmax(ops::reshape(x, {n, cells}), 1);
}

template <typename T>
Var<T> AestheticNet<T>::apply_mask(Var<T> features, Var<T> mask) const {
  const Shape& s = features.shape();
  if (s.size() != 4 || mask.shape() != Shape{s[0], s[1] * s[2]}) {
    throw ShapeError("apply_mask: mask " + shape_str(mask.shape()) + " does not cover features " +
                     shape_str(s));
  }
  Var<T> wide = ops::reshape(ops::repeat_inner(mask, s[3]), s);
  return ops::mul(features, wide);
}

template <typename T>
Var<T> AestheticNet<T>::estimate_attribute(Binder<T>& bind, Var<T> masked, std::size_t attribute) const {
  check_attribute(attribute, config_.num_attributes());
  const Shape& s = masked.shape();
  // Attention-weighted spatial pooling: the mask sums to one per image.
  Var<T> pooled = ops::sum_axis(ops::reshape(masked, {s[0], s[1] * s[2], s[3]}), 1);
  Var<T> h = ops::relu(linear(bind, pooled, head_name("attribute", attribute, "hidden")));
  return ops::tanh(linear(bind, h, head_name("attribute", attribute, "out")));
}

template <typename T>
Var<T> AestheticNet<T>::posterior_estimate(Binder<T>& bind, Var<T> features, std::size_t attribute) const {
  check_attribute(attribute, config_.num_attributes());
  Var<T> pooled = ops::global_avg_pool(features);
  return ops::tanh(linear(bind, pooled, head_name("posterior", attribute, "out")));
}

template <typename T>
Var<T> AestheticNet<T>::mix_weights(Binder<T>& bind, Var<T> features) const {
  Var<T> x = ops::global_avg_pool(features);
  for (std::size_t l = 0; l < config_.hyper_hidden.size(); ++l) {
    x = ops::relu(linear(bind, x, "hyper.fc" + std::to_string(l)));
  }
  return ops::softmax(linear(bind, x, "hyper.out"), 1);
}

template <typename T>
ForwardPass<T> AestheticNet<T>::forward(Binder<T>& bind, Var<T> images) const {
  ForwardPass<T> out;
  out.features = extract_features(bind, images);
  std::vector<Var<T>> scores, posteriors;
  for (std::size_t a = 0; a < config_.num_attributes(); ++a) {
    Var<T> mask = attend(bind, out.features, a);
    out.masks.push_back(mask);
    scores.push_back(estimate_attribute(bind, apply_mask(out.features, mask), a));
    posteriors.push_back(posterior_estimate(bind, out.features, a));
  }
  out.attribute_means = ops::concat(scores, 1);
  out.posterior_means = ops::concat(posteriors, 1);
  out.weights = mix_weights(bind, out.features);
  out.overall = overall_score(out.weights, out.attribute_means);
  return out;
}

template <typename T>
BasicTensor<T> AestheticNet<T>::to_batch(std::span<const Image> images) const {
  const std::size_t s = config_.image_size;
  BasicTensor<T> batch = BasicTensor<T>::zeros({images.size(), s, s, 3});
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& img = images[i];
    if (img.width != s || img.height != s || img.pixels.size() != s * s * 3) {
      throw ShapeError("image is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                       ", model expects " + std::to_string(s) + "x" + std::to_string(s));
    }
    for (std::size_t j = 0; j < img.pixels.size(); ++j) {
      const float v = img.pixels[j];
      if (!(v >= 0.f && v <= 1.f)) throw std::invalid_argument("image values must lie in [0,1]");
      batch.data[i * s * s * 3 + j] = static_cast<T>(v);
    }
  }
  return batch;
}

template <typename T>
EvaluationReport AestheticNet<T>::evaluate(const Image& image) const {
  return evaluate_batch(std::span<const Image>(&image, 1)).front();
}

template <typename T>
std::vector<EvaluationReport> AestheticNet<T>::evaluate_batch(std::span<const Image> images) const {
  if (images.empty()) return {};
  Tape<T> tape;
  Binder<T> bind(tape, params_);
  const ForwardPass<T> fp = forward(bind, tape.constant(to_batch(images)));
  const std::size_t k = config_.num_attributes();
  const std::size_t cells = config_.feature_cells();
  std::vector<EvaluationReport> reports(images.size());
  for (std::size_t n = 0; n < images.size(); ++n) {
    EvaluationReport& r = reports[n];
    r.overall = static_cast<double>(fp.overall.value()[n]);
    for (std::size_t a = 0; a < k; ++a) {
      AttributeEvaluation e;
      e.name = config_.attribute_names[a];
      e.index = a;
      e.score = static_cast<double>(fp.attribute_means.value()[n * k + a]);
      e.weight = static_cast<double>(fp.weights.value()[n * k + a]);
      e.mask.height = config_.feature_size;
      e.mask.width = config_.feature_size;
      const auto m = fp.masks[a].value();
      e.mask.values.assign(m.begin() + static_cast<std::ptrdiff_t>(n * cells),
                           m.begin() + static_cast<std::ptrdiff_t>((n + 1) * cells));
      r.attributes.push_back(std::move(e));
    }
    sort_by_weight(r.attributes);
  }
  return reports;
}

template <typename T>
Var<T> overall_score(Var<T> weights, Var<T> scores) {
  if (weights.shape().size() != 2) throw ShapeError("overall_score: weights must be [N,K]");
  return ops::sum_axis(ops::mul(weights, scores), 1);
}

double overall_score(std::span<const double> weights, std::span<const double> scores) {
  if (weights.size() != scores.size()) {
    throw ShapeError("overall_score: " + std::to_string(weights.size()) + " weights for " +
                     std::to_string(scores.size()) + " scores");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) total += weights[i] * scores[i];
  return total;
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template class Binder<float>;
template class Binder<double>;
template class AestheticNet<float>;
template class AestheticNet<double>;
template Var<float> overall_score(Var<float>, Var<float>);
template Var<double> overall_score(Var<double>, Var<double>);

}  // namespace aesthetic
