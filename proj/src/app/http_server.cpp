#include <stdexcept>

#include "aesthetic/app/service.hpp"
#include "httplib.h"

namespace aesthetic::app {

namespace {

void apply(const HttpResult& r, httplib::Response& res) {
  res.status = r.status;
  res.set_content(r.body, r.content_type);
}

}  // namespace

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;

  explicit Impl(Service& s) : service(s) {
    // Oversized uploads must reach the handler so it can answer with the
    // JSON envelope; base64 bodies are a third larger than the image.
    server.set_payload_max_length(service.config().max_upload_bytes * 4);

    server.Post("/api/evaluate", [this](const httplib::Request& req, httplib::Response& res) {
      if (req.is_multipart_form_data()) {
        if (!req.has_file("image")) {
          apply(error_result(400, "missing_image", "multipart form needs an 'image' field"), res);
          return;
        }
        apply(service.evaluate(req.get_file_value("image").content), res);
      } else if (req.get_header_value("Content-Type").rfind("application/json", 0) == 0) {
        apply(service.evaluate_json(req.body), res);
      } else {
        apply(service.evaluate(req.body), res);
      }
    });
    server.Get(R"(/api/heatmap/([^/]+)/([A-Za-z_]+)\.png)", [this](const httplib::Request& req, httplib::Response& res) {
      apply(service.heatmap(req.matches[1], req.matches[2]), res);
    });
    server.Post("/api/region", [this](const httplib::Request& req, httplib::Response& res) {
      apply(service.region(req.body), res);
    });
    server.Get("/api/model", [this](const httplib::Request&, httplib::Response& res) { apply(service.model_info(), res); });
    server.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) { apply(service.health(), res); });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string what = "unexpected error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      apply(error_result(500, "internal_error", what), res);
    });
    // Routing failures (404, 405, 413 from the transport) get the same envelope.
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      std::string code = "http_" + std::to_string(res.status);
      if (res.status == 404) code = "not_found";
      if (res.status == 413) code = "payload_too_large";
      apply(error_result(res.status, code, httplib::status_message(res.status)), res);
    });
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() {
  if (!impl_->server.listen_after_bind()) throw std::runtime_error("server stopped with an error");
}

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace aesthetic::app
