#include "aesthetic/data/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "aesthetic/image_io.hpp"

namespace aesthetic {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

double parse_score(const std::string& text, std::size_t line_no, const std::string& column) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ManifestError("manifest line " + std::to_string(line_no) + ": column " + column + " value '" + text +
                        "' is not a number");
  }
  if (!(v >= -1.0 && v <= 1.0)) {
    throw ManifestError("manifest line " + std::to_string(line_no) + ": column " + column + " value " + text +
                        " outside [-1,1]");
  }
  return v;
}

ImageSample sample_from_scene(const SceneSpec& spec, std::size_t index, std::size_t image_size) {
  ImageSample s;
  s.image = render_scene(spec, image_size);
  const OracleScores o = oracle_scores(spec);
  s.overall = o.overall;
  s.attributes = o.attributes;
  s.provenance = "scene:" + std::to_string(index);
  s.scene = spec;
  return s;
}

}  // namespace

std::string manifest_header() {
  std::string h = "path,overall";
  for (auto name : kAttributeNames) {
    h += ',';
    h += name;
  }
  return h;
}

std::string format_score(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ManifestError("cannot write manifest " + path.string());
  out << manifest_header() << '\n';
  for (const auto& r : rows) {
    if (r.path.find_first_of(",\n") != std::string::npos) {
      throw ManifestError("image path may not contain commas or newlines: " + r.path);
    }
    out << r.path << ',' << format_score(r.overall);
    for (double a : r.attributes) out << ',' << format_score(a);
    out << '\n';
  }
  if (!out) throw ManifestError("write failed for " + path.string());
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError("cannot read manifest " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ManifestError("manifest " + path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != manifest_header()) {
    throw ManifestError("manifest header mismatch: expected '" + manifest_header() + "'");
  }
  const auto columns = split_csv(manifest_header());
  std::vector<ManifestRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != columns.size()) {
      throw ManifestError("manifest line " + std::to_string(line_no) + ": expected " +
                          std::to_string(columns.size()) + " columns, got " + std::to_string(fields.size()));
    }
    ManifestRow r;
    r.path = fields[0];
    if (r.path.empty()) throw ManifestError("manifest line " + std::to_string(line_no) + ": empty path");
    r.overall = parse_score(fields[1], line_no, columns[1]);
    for (std::size_t i = 0; i < kNumAttributes; ++i) r.attributes[i] = parse_score(fields[i + 2], line_no, columns[i + 2]);
    rows.push_back(std::move(r));
  }
  return rows;
}

Dataset load_manifest(const std::filesystem::path& path, std::size_t image_size) {
  const auto rows = read_manifest(path);
  const auto base = path.parent_path();
  Dataset data;
  data.reserve(rows.size());
  for (const auto& r : rows) {
    const std::filesystem::path p = std::filesystem::path(r.path).is_absolute() ? std::filesystem::path(r.path) : base / r.path;
    if (!std::filesystem::exists(p)) throw ManifestError("manifest references missing image " + p.string());
    ImageSample s;
    s.image = resize_bilinear(read_image(p), image_size, image_size);
    s.overall = r.overall;
    s.attributes = r.attributes;
    s.provenance = r.path;
    data.push_back(std::move(s));
  }
  return data;
}

Dataset synthesize(std::size_t n, std::uint64_t seed, std::size_t image_size, std::size_t first) {
  Dataset data;
  data.reserve(n);
  for (std::size_t i = first; i < first + n; ++i) data.push_back(sample_from_scene(generate_scene(seed, i), i, image_size));
  return data;
}

std::filesystem::path generate_dataset(const std::filesystem::path& dir, std::size_t n, std::uint64_t seed,
                                       std::size_t image_size) {
  std::filesystem::create_directories(dir / "images");
  std::vector<ManifestRow> rows;
  std::ofstream scenes(dir / "scenes.jsonl", std::ios::binary | std::ios::trunc);
  if (!scenes) throw ManifestError("cannot write " + (dir / "scenes.jsonl").string());
  for (std::size_t i = 0; i < n; ++i) {
    const SceneSpec spec = generate_scene(seed, i);
    const ImageSample s = sample_from_scene(spec, i, image_size);
    char name[32];
    std::snprintf(name, sizeof name, "images/%06zu.png", i);
    write_file(dir / name, encode_png(s.image));
    rows.push_back({name, s.overall, s.attributes});
    nlohmann::json j = {{"path", name}, {"scene", spec}};
    scenes << j.dump() << '\n';
  }
  const auto manifest = dir / "manifest.csv";
  write_manifest(manifest, rows);
  return manifest;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double fraction,
                                                                            std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split fraction must lie in (0,1)");
  const auto first = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (first == 0 || first == n) throw std::invalid_argument("split leaves one side empty");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  return {std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first)),
          std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(first), order.end())};
}

std::pair<Dataset, Dataset> split(const Dataset& data, double fraction, std::uint64_t seed) {
  const auto [a, b] = split_indices(data.size(), fraction, seed);
  std::pair<Dataset, Dataset> out;
  for (std::size_t i : a) out.first.push_back(data[i]);
  for (std::size_t i : b) out.second.push_back(data[i]);
  return out;
}

}  // namespace aesthetic
