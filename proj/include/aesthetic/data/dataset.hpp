#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "aesthetic/data/scene.hpp"
#include "aesthetic/image.hpp"
#include "aesthetic/model/config.hpp"

namespace aesthetic {

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ImageSample {
  Image image;
  double overall = 0.0;
  std::array<double, kNumAttributes> attributes{};
  std::string provenance;            // image path, or "scene:<index>"
  std::optional<SceneSpec> scene;    // present for generated samples
};

using Dataset = std::vector<ImageSample>;

struct ManifestRow {
  std::string path;  // relative to the manifest's directory unless absolute
  double overall = 0.0;
  std::array<double, kNumAttributes> attributes{};
  bool operator==(const ManifestRow&) const = default;
};

/// `path,overall,<11 attribute names in canonical order>`
std::string manifest_header();

/// Shortest decimal that parses back to the same double.
std::string format_score(double v);

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);
/// Validates the header, column count and score range; errors name the line.
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

/// Reads the manifest and its images, resizing to `image_size` (bilinear).
Dataset load_manifest(const std::filesystem::path& path, std::size_t image_size);

/// In-memory synthetic samples `first .. first+n-1` of the run `seed`.
Dataset synthesize(std::size_t n, std::uint64_t seed, std::size_t image_size, std::size_t first = 0);

/// Writes images/NNNNNN.png, manifest.csv and scenes.jsonl under `dir`.
/// Returns the manifest path.
std::filesystem::path generate_dataset(const std::filesystem::path& dir, std::size_t n, std::uint64_t seed,
                                       std::size_t image_size = 64);

/// Deterministic shuffled split; the first part holds round(fraction * n).
/// Throws std::invalid_argument when either side would be empty.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double fraction,
                                                                            std::uint64_t seed);
std::pair<Dataset, Dataset> split(const Dataset& data, double fraction, std::uint64_t seed);

}  // namespace aesthetic
