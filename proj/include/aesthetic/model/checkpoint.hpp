#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "aesthetic/autodiff/optim.hpp"
#include "aesthetic/model/network.hpp"

namespace aesthetic {

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { io, version_mismatch, corrupt, config_mismatch };
  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct LoadedCheckpoint {
  AestheticNet<float> model;
  std::optional<AdamState<float>> optimizer;
};

// File layout: "AESMODEL", u32 version, u64 header length, JSON header
// (config, parameter names and shapes, optimizer step if present), then
// float32 buffers in header order, followed by Adam moments when present.
// All integers and floats little-endian.
std::string serialize_checkpoint(const AestheticNet<float>& model,
                                 const AdamState<float>* optimizer = nullptr);
LoadedCheckpoint deserialize_checkpoint(const std::string& bytes,
                                        const std::optional<ModelConfig>& expected = std::nullopt);

void save_checkpoint(const AestheticNet<float>& model, const std::filesystem::path& path,
                     const AdamState<float>* optimizer = nullptr);

/// When `expected` is given the stored config must equal it; otherwise the
/// stored config must be valid. Both failures are config_mismatch.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 const std::optional<ModelConfig>& expected = std::nullopt);

}  // namespace aesthetic
