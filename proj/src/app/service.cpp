#include "aesthetic/app/service.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>

#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include "aesthetic/autodiff/rng.hpp"
#include "aesthetic/image_io.hpp"

namespace aesthetic::app {

namespace {

HttpResult json_result(const nlohmann::json& j, int status = 200) {
  return {status, "application/json", j.dump()};
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

std::optional<nlohmann::json> parse_object(const std::string& body) {
  try {
    auto j = nlohmann::json::parse(body);
    if (j.is_object()) return j;
  } catch (const nlohmann::json::exception&) {
  }
  return std::nullopt;
}

}  // namespace

HttpResult error_result(int status, const std::string& code, const std::string& message) {
  return json_result({{"schema_version", kSchemaVersion}, {"error", {{"code", code}, {"message", message}}}}, status);
}

SessionStore::SessionStore(std::size_t capacity) : capacity_(capacity), salt_(std::random_device{}()) {
  if (capacity_ == 0) throw std::invalid_argument("session capacity must be positive");
}

std::string SessionStore::put(Session session) {
  auto shared = std::make_shared<const Session>(std::move(session));
  std::lock_guard lock(mutex_);
  // splitmix64 is a bijection, so distinct counters give distinct ids.
  const std::string id = hex64(splitmix64(salt_ + next_++));
  order_.push_front(id);
  slots_.emplace(id, Slot{std::move(shared), order_.begin()});
  while (slots_.size() > capacity_) {
    slots_.erase(order_.back());
    order_.pop_back();
  }
  return id;
}

std::shared_ptr<const Session> SessionStore::get(const std::string& id) {
  std::lock_guard lock(mutex_);
  const auto it = slots_.find(id);
  if (it == slots_.end()) return nullptr;
  order_.splice(order_.begin(), order_, it->second.position);
  return it->second.session;
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mutex_);
  return slots_.size();
}

void to_json(nlohmann::json& j, const ServiceConfig& c) {
  j = {{"session_capacity", c.session_capacity},
       {"max_upload_bytes", c.max_upload_bytes},
       {"heuristics", c.heuristics}};
}

void from_json(const nlohmann::json& j, ServiceConfig& c) {
  ServiceConfig out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "session_capacity") {
      out.session_capacity = it.value().get<std::size_t>();
    } else if (it.key() == "max_upload_bytes") {
      out.max_upload_bytes = it.value().get<std::size_t>();
    } else if (it.key() == "heuristics") {
      out.heuristics = it.value().get<guidance::HeuristicConfig>();
    } else {
      throw std::invalid_argument("service config: unknown key '" + it.key() + "'");
    }
  }
  if (out.session_capacity == 0 || out.max_upload_bytes == 0) {
    throw std::invalid_argument("service config: capacities must be positive");
  }
  c = out;
}

Service::Service(ServiceConfig config, const guidance::TemplateCatalog& catalog)
    : config_(std::move(config)), catalog_(catalog), sessions_(config_.session_capacity) {
  config_.heuristics.validate();
}

void Service::set_model(std::shared_ptr<const AestheticNet<float>> model) {
  std::lock_guard lock(model_mutex_);
  model_ = std::move(model);
}

std::shared_ptr<const AestheticNet<float>> Service::model() const {
  std::lock_guard lock(model_mutex_);
  return model_;
}

HttpResult Service::evaluate(const std::string& image_bytes) {
  const auto net = model();
  if (!net) return error_result(503, "model_not_loaded", "no model is loaded");
  if (image_bytes.size() > config_.max_upload_bytes) {
    return error_result(413, "payload_too_large",
                        "image is " + std::to_string(image_bytes.size()) + " bytes, limit " +
                            std::to_string(config_.max_upload_bytes));
  }
  if (image_bytes.empty()) return error_result(400, "missing_image", "request carries no image");
  Session session;
  try {
    session.image = decode_image(image_bytes);
  } catch (const ImageDecodeError& e) {
    return error_result(400, "invalid_image", e.what());
  }
  const std::size_t s = net->config().image_size;
  session.report = net->evaluate(resize_bilinear(session.image, s, s));
  session.created = std::chrono::system_clock::now();

  const auto prompt = guidance::build_prompt(session.report, session.image, config_.heuristics, catalog_);
  const auto entries = guidance::detailed_report(session.report, &session.image, config_.heuristics, catalog_);
  const EvaluationReport report = session.report;
  const std::size_t width = session.image.width, height = session.image.height;
  const std::string id = sessions_.put(std::move(session));

  nlohmann::json attrs = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json a = guidance::to_json(e);
    a["raw_score"] = report.by_index(e.index).score;
    a["heatmap_url"] = "/api/heatmap/" + id + "/" + e.attribute + ".png";
    attrs.push_back(std::move(a));
  }
  const double overall = std::clamp(report.overall, -1.0, 1.0);
  return json_result({{"schema_version", kSchemaVersion},
                      {"image_id", id},
                      {"width", width},
                      {"height", height},
                      {"overall", {{"raw", report.overall}, {"display", guidance::to_display_score(overall)}}},
                      {"attributes", std::move(attrs)},
                      {"prompt", prompt ? guidance::to_json(*prompt) : nlohmann::json(nullptr)}});
}

HttpResult Service::evaluate_json(const std::string& body) {
  const auto j = parse_object(body);
  if (!j || !j->contains("image_base64") || !(*j)["image_base64"].is_string()) {
    return error_result(400, "bad_request", "expected a JSON object with an 'image_base64' string");
  }
  const std::string& encoded = (*j)["image_base64"].get_ref<const std::string&>();
  // Decoded size is about 3/4 of the encoded size; reject early.
  if (encoded.size() / 4 * 3 > config_.max_upload_bytes + 3) {
    return error_result(413, "payload_too_large", "encoded image exceeds the upload limit");
  }
  std::string bytes;
  try {
    bytes = decode_base64(encoded);
  } catch (const std::invalid_argument& e) {
    return error_result(400, "invalid_base64", e.what());
  }
  return evaluate(bytes);
}

std::vector<std::uint8_t> heatmap_pixels(const AttentionMask& mask, std::size_t width, std::size_t height) {
  if (mask.height == 0 || mask.width == 0 || mask.values.size() != mask.height * mask.width) {
    throw std::invalid_argument("heatmap: malformed mask");
  }
  const float peak = *std::max_element(mask.values.begin(), mask.values.end());
  std::vector<std::uint8_t> cells(mask.values.size(), 0);
  if (peak > 0) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      cells[i] = static_cast<std::uint8_t>(std::lround(255.0 * mask.values[i] / peak));
    }
  }
  std::vector<std::uint8_t> out(width * height);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t r = std::min(mask.height - 1, y * mask.height / height);
    for (std::size_t x = 0; x < width; ++x) {
      out[y * width + x] = cells[r * mask.width + std::min(mask.width - 1, x * mask.width / width)];
    }
  }
  return out;
}

HttpResult Service::heatmap(const std::string& image_id, const std::string& attribute) {
  const auto session = sessions_.get(image_id);
  if (!session) return error_result(404, "unknown_session", "no session '" + image_id + "'");
  const std::size_t index = attribute_index(attribute);
  if (index == kNumAttributes) return error_result(404, "unknown_attribute", "no attribute '" + attribute + "'");
  const Image& img = session->image;
  const auto pixels = heatmap_pixels(session->report.by_index(index).mask, img.width, img.height);
  return {200, "image/png", encode_png_gray(img.width, img.height, pixels)};
}

HttpResult Service::region(const std::string& body) {
  const auto j = parse_object(body);
  if (!j || !j->contains("image_id") || !(*j)["image_id"].is_string() || !j->contains("rect")) {
    return error_result(400, "bad_request", "expected {\"image_id\": string, \"rect\": {x0,y0,x1,y1}}");
  }
  guidance::RegionQuery query;
  query.image_id = (*j)["image_id"].get<std::string>();
  try {
    const auto& r = (*j)["rect"];
    query.rect = {r.at("x0").get<double>(), r.at("y0").get<double>(), r.at("x1").get<double>(),
                  r.at("y1").get<double>()};
  } catch (const nlohmann::json::exception&) {
    return error_result(400, "bad_request", "rect needs numeric x0, y0, x1, y1");
  }
  const auto session = sessions_.get(query.image_id);
  if (!session) return error_result(404, "unknown_session", "no session '" + query.image_id + "'");
  try {
    guidance::validate_region(query.rect);
  } catch (const std::invalid_argument& e) {
    return error_result(422, "invalid_region", e.what());
  }
  nlohmann::json out = guidance::to_json(guidance::regional_suggestion(session->report, query, catalog_));
  out["schema_version"] = kSchemaVersion;
  out["image_id"] = query.image_id;
  return json_result(out);
}

HttpResult Service::model_info() const {
  const auto net = model();
  nlohmann::json j = {{"schema_version", kSchemaVersion},
                      {"loaded", net != nullptr},
                      {"attributes", kAttributeNames},
                      {"poll_interval", config_.heuristics.poll_interval},
                      {"heuristics", config_.heuristics},
                      {"max_upload_bytes", config_.max_upload_bytes}};
  if (net) {
    j["config"] = net->config();
    j["parameter_count"] = net->parameters().total_elements();
  }
  return json_result(j);
}

HttpResult Service::health() const {
  return json_result({{"schema_version", kSchemaVersion},
                      {"status", "ok"},
                      {"model_loaded", model() != nullptr},
                      {"sessions", sessions_.size()}});
}

std::string decode_base64(const std::string& text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (c == ' ' || c == '\n' || c == '\r' || c == '\t') continue;
    const bool valid = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '+' ||
                       c == '/' || c == '=';
    if (!valid) throw std::invalid_argument("base64: invalid character");
    clean.push_back(c);
  }
  if (clean.size() % 4 != 0) throw std::invalid_argument("base64: length is not a multiple of 4");
  std::size_t pad = 0;
  while (pad < clean.size() && clean[clean.size() - 1 - pad] == '=') ++pad;
  if (pad > 2 || clean.find('=') < clean.size() - pad) throw std::invalid_argument("base64: misplaced padding");
  clean.replace(clean.size() - pad, pad, pad, 'A');
  using namespace boost::archive::iterators;
  using Decoder = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
  std::string out(Decoder(clean.cbegin()), Decoder(clean.cend()));
  out.resize(out.size() - pad);
  return out;
}

int port_from_environment(int fallback) {
  const char* env = std::getenv("AESTHETIC_PORT");
  if (env == nullptr || *env == '\0') return fallback;
  char* end = nullptr;
  const long port = std::strtol(env, &end, 10);
  if (*end != '\0' || port < 0 || port > 65535) return fallback;
  return static_cast<int>(port);
}

}  // namespace aesthetic::app
