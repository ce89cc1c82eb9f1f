#include "aesthetic/model/config.hpp"

#include <stdexcept>

namespace aesthetic {

std::size_t attribute_index(std::string_view name) {
  for (std::size_t i = 0; i < kAttributeNames.size(); ++i) {
    if (kAttributeNames[i] == name) return i;
  }
  return kNumAttributes;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("ModelConfig: " + msg); };
  if (attribute_names.size() != kNumAttributes) {
    fail("expected " + std::to_string(kNumAttributes) + " attributes, got " +
         std::to_string(attribute_names.size()));
  }
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    if (attribute_names[i] != kAttributeNames[i]) fail("attribute " + std::to_string(i) + " must be " +
                                                       std::string(kAttributeNames[i]));
  }
  if (!(sigma > 0.0)) fail("sigma must be positive");
  if (extractor_channels.empty()) fail("extractor needs at least one block");
  for (std::size_t c : extractor_channels) {
    if (c == 0) fail("extractor channel counts must be positive");
  }
  if (attention_hidden == 0 || attribute_hidden == 0) fail("hidden sizes must be positive");
  if (hyper_hidden.empty()) fail("hyper-network needs at least one hidden layer");
  for (std::size_t h : hyper_hidden) {
    if (h == 0) fail("hyper-network hidden sizes must be positive");
  }
  if (feature_size == 0 || image_size % feature_size != 0) fail("image_size must be a multiple of feature_size");
  std::size_t ratio = image_size / feature_size;
  while (ratio > 1 && ratio % 2 == 0) ratio /= 2;
  if (ratio != 1) fail("image_size / feature_size must be a power of two");
}

std::vector<std::size_t> ModelConfig::pool_windows() const {
  std::vector<std::size_t> windows(extractor_channels.size(), 1);
  std::size_t ratio = image_size / feature_size;
  std::size_t block = 0;
  while (ratio > 1) {
    windows[block % windows.size()] *= 2;
    ratio /= 2;
    ++block;
  }
  return windows;
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"image_size", c.image_size},
                     {"feature_size", c.feature_size},
                     {"extractor_channels", c.extractor_channels},
                     {"attention_hidden", c.attention_hidden},
                     {"attribute_hidden", c.attribute_hidden},
                     {"hyper_hidden", c.hyper_hidden},
                     {"sigma", c.sigma},
                     {"attribute_names", c.attribute_names}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  c.image_size = j.value("image_size", d.image_size);
  c.feature_size = j.value("feature_size", d.feature_size);
  c.extractor_channels = j.value("extractor_channels", d.extractor_channels);
  c.attention_hidden = j.value("attention_hidden", d.attention_hidden);
  c.attribute_hidden = j.value("attribute_hidden", d.attribute_hidden);
  c.hyper_hidden = j.value("hyper_hidden", d.hyper_hidden);
  c.sigma = j.value("sigma", d.sigma);
  c.attribute_names = j.value("attribute_names", d.attribute_names);
}

}  // namespace aesthetic
