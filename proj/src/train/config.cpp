#include "aesthetic/train/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace aesthetic {

namespace {

template <typename E>
E parse_enum(const nlohmann::json& j, const char* key, std::initializer_list<std::pair<const char*, E>> options) {
  const std::string value = j.at(key).get<std::string>();
  for (const auto& [name, e] : options) {
    if (value == name) return e;
  }
  throw std::invalid_argument(std::string("TrainingConfig: bad value '") + value + "' for " + key);
}

}  // namespace

std::string to_string(SamplingMode m) { return m == SamplingMode::stochastic ? "stochastic" : "deterministic"; }
std::string to_string(MiPhiMode m) { return m == MiPhiMode::as_written ? "as_written" : "fit_posterior"; }
std::string to_string(MonitorSplit m) { return m == MonitorSplit::train ? "train" : "validation"; }

void TrainingConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("TrainingConfig: " + m); };
  if (!(lambda_att >= 0) || !(lambda_mi >= 0)) fail("loss weights must be non-negative");
  if (!(learning_rate > 0)) fail("learning_rate must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
  if (max_epochs == 0) fail("max_epochs must be positive");
  if (patience == 0) fail("patience must be positive");
  if (patience > max_epochs) fail("patience may not exceed max_epochs");
  if (!(clip_norm > 0)) fail("clip_norm must be positive");
}

void to_json(nlohmann::json& j, const TrainingConfig& c) {
  j = {{"lambda_att", c.lambda_att},   {"lambda_mi", c.lambda_mi},     {"learning_rate", c.learning_rate},
       {"batch_size", c.batch_size},   {"max_epochs", c.max_epochs},   {"patience", c.patience},
       {"clip_norm", c.clip_norm},     {"seed", c.seed},               {"sampling", to_string(c.sampling)},
       {"mi_phi_mode", to_string(c.mi_phi_mode)}, {"monitor", to_string(c.monitor)}};
}

void from_json(const nlohmann::json& j, TrainingConfig& c) {
  static const std::set<std::string> known = {"lambda_att", "lambda_mi", "learning_rate", "batch_size",
                                              "max_epochs", "patience",  "clip_norm",     "seed",
                                              "sampling",   "mi_phi_mode", "monitor"};
  if (!j.is_object()) throw std::invalid_argument("TrainingConfig: expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("TrainingConfig: unknown key '" + key + "'");
  }
  TrainingConfig d;
  c.lambda_att = j.value("lambda_att", d.lambda_att);
  c.lambda_mi = j.value("lambda_mi", d.lambda_mi);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.max_epochs = j.value("max_epochs", d.max_epochs);
  c.patience = j.value("patience", d.patience);
  c.clip_norm = j.value("clip_norm", d.clip_norm);
  c.seed = j.value("seed", d.seed);
  c.sampling = j.contains("sampling") ? parse_enum<SamplingMode>(j, "sampling", {{"stochastic", SamplingMode::stochastic},
                                                                                {"deterministic", SamplingMode::deterministic}})
                                      : d.sampling;
  c.mi_phi_mode = j.contains("mi_phi_mode")
                      ? parse_enum<MiPhiMode>(j, "mi_phi_mode", {{"as_written", MiPhiMode::as_written},
                                                                 {"fit_posterior", MiPhiMode::fit_posterior}})
                      : d.mi_phi_mode;
  c.monitor = j.contains("monitor") ? parse_enum<MonitorSplit>(j, "monitor", {{"train", MonitorSplit::train},
                                                                             {"validation", MonitorSplit::validation}})
                                    : d.monitor;
}

TrainingConfig load_training_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read training config " + path.string());
  TrainingConfig c;
  try {
    c = nlohmann::json::parse(in).get<TrainingConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("training config " + path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

}  // namespace aesthetic
