#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

namespace aesthetic {

enum class SamplingMode { stochastic, deterministic };

/// How the posterior heads are trained.
///  as_written: they minimise the MI loss jointly with everything else.
///  fit_posterior: they fit the (detached) sampled scores from detached
///  features by Gaussian likelihood, while the rest of the network sees the
///  MI loss against a detached posterior mean.
enum class MiPhiMode { as_written, fit_posterior };

enum class MonitorSplit { train, validation };

struct TrainingConfig {
  double lambda_att = 0.09;
  double lambda_mi = 0.001;
  double learning_rate = 4e-4;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 15;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  SamplingMode sampling = SamplingMode::deterministic;
  MiPhiMode mi_phi_mode = MiPhiMode::as_written;
  MonitorSplit monitor = MonitorSplit::train;

  /// Throws std::invalid_argument. Lambdas may be zero, everything else
  /// must be positive, and patience may not exceed max_epochs.
  void validate() const;
  bool operator==(const TrainingConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainingConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, TrainingConfig& c);
TrainingConfig load_training_config(const std::filesystem::path& path);

std::string to_string(SamplingMode m);
std::string to_string(MiPhiMode m);
std::string to_string(MonitorSplit m);

}  // namespace aesthetic
