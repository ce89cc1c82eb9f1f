#pragma once

#include <chrono>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "aesthetic/guidance/guidance.hpp"
#include "aesthetic/image.hpp"
#include "aesthetic/model/network.hpp"
#include "json.hpp"

namespace aesthetic::app {

inline constexpr int kSchemaVersion = 1;

struct HttpResult {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

/// Error envelope: {"schema_version", "error": {"code", "message"}}.
HttpResult error_result(int status, const std::string& code, const std::string& message);

struct Session {
  Image image;  // as uploaded, before resizing to the model input
  EvaluationReport report;
  std::chrono::system_clock::time_point created;
};

/// Bounded id -> session map with least-recently-used eviction. Internally
/// synchronised; entries are immutable once stored.
class SessionStore {
 public:
  explicit SessionStore(std::size_t capacity = 256);

  std::string put(Session session);
  /// Marks the entry as recently used; nullptr when unknown or evicted.
  std::shared_ptr<const Session> get(const std::string& id);
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }

 private:
  using Order = std::list<std::string>;
  struct Slot {
    std::shared_ptr<const Session> session;
    Order::iterator position;
  };

  std::size_t capacity_;
  std::uint64_t next_ = 0;
  std::uint64_t salt_;
  mutable std::mutex mutex_;
  Order order_;  // most recent first
  std::unordered_map<std::string, Slot> slots_;
};

struct ServiceConfig {
  std::size_t session_capacity = 256;
  std::size_t max_upload_bytes = 8 * 1024 * 1024;
  guidance::HeuristicConfig heuristics;
};

void to_json(nlohmann::json& j, const ServiceConfig& c);
/// Unknown keys are rejected.
void from_json(const nlohmann::json& j, ServiceConfig& c);

/// Transport-independent request handlers. Thread-safe.
class Service {
 public:
  explicit Service(ServiceConfig config = {},
                   const guidance::TemplateCatalog& catalog = guidance::TemplateCatalog::builtin());

  void set_model(std::shared_ptr<const AestheticNet<float>> model);
  std::shared_ptr<const AestheticNet<float>> model() const;

  /// Encoded PNG or JPEG bytes.
  HttpResult evaluate(const std::string& image_bytes);
  /// Request body {"image_base64": "..."}.
  HttpResult evaluate_json(const std::string& body);
  HttpResult heatmap(const std::string& image_id, const std::string& attribute);
  /// Request body {"image_id": "...", "rect": {"x0","y0","x1","y1"}}.
  HttpResult region(const std::string& body);
  HttpResult model_info() const;
  HttpResult health() const;

  SessionStore& sessions() { return sessions_; }
  const ServiceConfig& config() const { return config_; }

 private:
  ServiceConfig config_;
  const guidance::TemplateCatalog& catalog_;
  mutable std::mutex model_mutex_;
  std::shared_ptr<const AestheticNet<float>> model_;
  SessionStore sessions_;
};

/// Nearest-cell upsampling to width x height, scaled so the largest
/// attention value maps to 255.
std::vector<std::uint8_t> heatmap_pixels(const AttentionMask& mask, std::size_t width, std::size_t height);

/// Strict base64 (RFC 4648 alphabet, whitespace ignored). Throws
/// std::invalid_argument on malformed input.
std::string decode_base64(const std::string& text);

/// Port from AESTHETIC_PORT when set and valid, else `fallback`.
int port_from_environment(int fallback);

/// Blocks serving the HTTP API until stop() is called from another thread.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  /// Binds; returns the bound port (useful with port 0). Throws on failure.
  int bind(const std::string& host, int port);
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace aesthetic::app
