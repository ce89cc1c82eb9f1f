#include "aesthetic/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace aesthetic {

namespace {

constexpr char kMagic[8] = {'A', 'E', 'S', 'M', 'O', 'D', 'E', 'L'};

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

void put_floats(std::string& out, const std::vector<float>& values) {
  for (float v : values) put_le(out, std::bit_cast<std::uint32_t>(v));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(CheckpointError::Kind::corrupt,
                            std::string("checkpoint truncated while reading ") + what);
    }
  }

  template <typename U>
  U le(const char* what) {
    need(sizeof(U), what);
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      value |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return value;
  }

  std::string raw(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void floats(std::vector<float>& out, const char* what) {
    need(out.size() * 4, what);
    for (float& v : out) v = std::bit_cast<float>(le<std::uint32_t>(what));
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const AestheticNet<float>& model, const AdamState<float>* optimizer) {
  const auto& params = model.parameters();
  nlohmann::json header;
  header["config"] = model.config();
  nlohmann::json list = nlohmann::json::array();
  for (std::size_t i = 0; i < params.size(); ++i) {
    list.push_back({{"name", params.names()[i]}, {"shape", params[i].shape}});
  }
  header["parameters"] = std::move(list);
  if (optimizer) {
    if (optimizer->first_moment.size() != params.size() || optimizer->second_moment.size() != params.size()) {
      throw ShapeError("optimizer state does not match the model parameters");
    }
    header["optimizer"] = {{"kind", "adam"}, {"step", optimizer->step}};
  }
  const std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  for (std::size_t i = 0; i < params.size(); ++i) put_floats(out, params[i].data);
  if (optimizer) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (optimizer->first_moment[i].size() != params[i].numel() ||
          optimizer->second_moment[i].size() != params[i].numel()) {
        throw ShapeError("optimizer moment size mismatch for " + params.names()[i]);
      }
      put_floats(out, optimizer->first_moment[i]);
      put_floats(out, optimizer->second_moment[i]);
    }
  }
  return out;
}

LoadedCheckpoint deserialize_checkpoint(const std::string& bytes, const std::optional<ModelConfig>& expected) {
  using Kind = CheckpointError::Kind;
  Reader in(bytes);
  if (in.raw(sizeof(kMagic), "magic") != std::string(kMagic, sizeof(kMagic))) {
    throw CheckpointError(Kind::corrupt, "not a model checkpoint (bad magic)");
  }
  const auto version = in.le<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(Kind::version_mismatch, "checkpoint format version " + std::to_string(version) +
                                                      ", expected " + std::to_string(kCheckpointVersion));
  }
  const auto header_len = in.le<std::uint64_t>("header length");
  nlohmann::json header;
  ModelConfig config;
  try {
    header = nlohmann::json::parse(in.raw(header_len, "header"));
    config = header.at("config").get<ModelConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(Kind::corrupt, std::string("checkpoint header unreadable: ") + e.what());
  }

  if (expected && !(config == *expected)) {
    throw CheckpointError(Kind::config_mismatch,
                          "checkpoint config " + nlohmann::json(config).dump() + " differs from expected");
  }
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(Kind::config_mismatch, e.what());
  }

  LoadedCheckpoint result{AestheticNet<float>(config), std::nullopt};
  auto& params = result.model.parameters();
  const auto& listed = header.at("parameters");
  if (!listed.is_array() || listed.size() != params.size()) {
    throw CheckpointError(Kind::config_mismatch, "checkpoint parameter list does not match its config");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    try {
      if (listed[i].at("name").get<std::string>() != params.names()[i] ||
          listed[i].at("shape").get<Shape>() != params[i].shape) {
        throw CheckpointError(Kind::config_mismatch, "parameter " + std::to_string(i) + " (" +
                                                         params.names()[i] + ") has a different name or shape");
      }
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError(Kind::corrupt, std::string("bad parameter entry: ") + e.what());
    }
    in.floats(params[i].data, "parameter data");
  }
  if (header.contains("optimizer")) {
    AdamState<float> state;
    state.step = header["optimizer"].value("step", std::uint64_t{0});
    for (std::size_t i = 0; i < params.size(); ++i) {
      std::vector<float> m(params[i].numel()), v(params[i].numel());
      in.floats(m, "optimizer state");
      in.floats(v, "optimizer state");
      state.first_moment.push_back(std::move(m));
      state.second_moment.push_back(std::move(v));
    }
    result.optimizer = std::move(state);
  }
  if (!in.done()) throw CheckpointError(Kind::corrupt, "trailing bytes after checkpoint data");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!all_finite(params[i].data)) {
      throw CheckpointError(Kind::corrupt, "non-finite values in " + params.names()[i]);
    }
  }
  return result;
}

void save_checkpoint(const AestheticNet<float>& model, const std::filesystem::path& path,
                     const AdamState<float>* optimizer) {
  const std::string bytes = serialize_checkpoint(model, optimizer);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Kind::io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointError::Kind::io, "write failed for " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const std::optional<ModelConfig>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str(), expected);
}

}  // namespace aesthetic
