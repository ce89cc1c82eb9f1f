#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>
#include <thread>

#include "aesthetic/app/cli.hpp"
#include "aesthetic/app/service.hpp"
#include "aesthetic/autodiff/rng.hpp"
#include "aesthetic/data/scene.hpp"
#include "aesthetic/image_io.hpp"
#include "aesthetic/model/checkpoint.hpp"
#include "httplib.h"
#include "support/fixtures.hpp"

using namespace aesthetic;
using namespace aesthetic::app;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.image_size = 16;
  c.feature_size = 4;
  c.extractor_channels = {4, 8};
  c.attention_hidden = 8;
  c.attribute_hidden = 4;
  c.hyper_hidden = {6, 4};
  return c;
}

std::shared_ptr<const AestheticNet<float>> tiny_model(std::uint64_t seed = 3) {
  return std::make_shared<const AestheticNet<float>>(
      AestheticNet<float>::initialized(tiny_config(), seed, InitScheme::generic));
}

std::string scene_png(std::uint64_t index, std::size_t size = 40) {
  return encode_png(render_scene(generate_scene(11, index), size));
}

std::string encode_base64(const std::string& bytes) {
  static const char* table = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const auto n = (std::uint32_t(std::uint8_t(bytes[i])) << 16) | (std::uint32_t(std::uint8_t(bytes[i + 1])) << 8) |
                   std::uint8_t(bytes[i + 2]);
    for (int s = 18; s >= 0; s -= 6) out.push_back(table[(n >> s) & 63]);
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t n = std::uint32_t(std::uint8_t(bytes[i])) << 16;
    if (rest == 2) n |= std::uint32_t(std::uint8_t(bytes[i + 1])) << 8;
    out.push_back(table[(n >> 18) & 63]);
    out.push_back(table[(n >> 12) & 63]);
    out.push_back(rest == 2 ? table[(n >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

Session dummy_session() {
  Session s;
  s.image = Image(4, 4);
  s.report = fixtures::make_report(0.1, {});
  return s;
}

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr) {
  std::vector<const char*> argv{"aesguide"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  return code;
}

class TempDir : public ::testing::Test {
 protected:
  std::filesystem::path dir;
  void SetUp() override {
    dir = std::filesystem::temp_directory_path() /
          ("aesthetic_app_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
  }
  void TearDown() override { std::filesystem::remove_all(dir); }
};

}  // namespace

TEST(SessionStore, PutGetAndDistinctIds) {
  SessionStore store(8);
  std::set<std::string> ids;
  for (int i = 0; i < 8; ++i) ids.insert(store.put(dummy_session()));
  EXPECT_EQ(ids.size(), 8u);
  for (const auto& id : ids) {
    EXPECT_EQ(id.size(), 16u);
    EXPECT_TRUE(std::all_of(id.begin(), id.end(), [](char c) { return std::isxdigit(c) && !std::isupper(c); }));
    EXPECT_NE(store.get(id), nullptr);
  }
  EXPECT_EQ(store.get("nope"), nullptr);
  EXPECT_THROW(SessionStore(0), std::invalid_argument);
}

TEST(SessionStore, EvictsLeastRecentlyUsed) {
  SessionStore store(3);
  const auto a = store.put(dummy_session());
  const auto b = store.put(dummy_session());
  const auto c = store.put(dummy_session());
  ASSERT_NE(store.get(a), nullptr);  // a is now the most recent
  const auto d = store.put(dummy_session());
  EXPECT_EQ(store.size(), 3u);
  EXPECT_EQ(store.get(b), nullptr);
  EXPECT_NE(store.get(a), nullptr);
  EXPECT_NE(store.get(c), nullptr);
  EXPECT_NE(store.get(d), nullptr);
}

TEST(SessionStore, ConcurrentPutsKeepCapacity) {
  SessionStore store(64);
  std::vector<std::thread> threads;
  std::vector<std::vector<std::string>> ids(8);
  for (std::size_t t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 200; ++i) {
        ids[t].push_back(store.put(dummy_session()));
        store.get(ids[t].front());
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(store.size(), 64u);
  std::set<std::string> all;
  for (const auto& v : ids) all.insert(v.begin(), v.end());
  EXPECT_EQ(all.size(), 1600u);
}

TEST(Base64, KnownVectorsAndErrors) {
  EXPECT_EQ(decode_base64(""), "");
  EXPECT_EQ(decode_base64("TWFu"), "Man");
  EXPECT_EQ(decode_base64("TWE="), "Ma");
  EXPECT_EQ(decode_base64("TQ=="), "M");
  EXPECT_EQ(decode_base64("TW\nFu"), "Man");
  EXPECT_THROW(decode_base64("TWF"), std::invalid_argument);
  EXPECT_THROW(decode_base64("TW=u"), std::invalid_argument);
  EXPECT_THROW(decode_base64("T==="), std::invalid_argument);
  EXPECT_THROW(decode_base64("TW*u"), std::invalid_argument);
  Rng rng(5);
  for (int n = 0; n < 40; ++n) {
    std::string bytes;
    for (int i = 0; i < n; ++i) bytes.push_back(static_cast<char>(rng.next_u64() & 0xFF));
    EXPECT_EQ(decode_base64(encode_base64(bytes)), bytes);
  }
}

TEST(Heatmap, UniformMaskIsAllWhite) {
  const auto px = heatmap_pixels(fixtures::uniform_mask(4, 4), 10, 6);
  ASSERT_EQ(px.size(), 60u);
  EXPECT_TRUE(std::all_of(px.begin(), px.end(), [](std::uint8_t v) { return v == 255; }));
}

TEST(Heatmap, OneHotCellUpsamplesToItsBlock) {
  AttentionMask m{4, 4, std::vector<float>(16, 0.0f)};
  m.values[1 * 4 + 2] = 1.0f;  // row 1, column 2
  const auto px = heatmap_pixels(m, 8, 8);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) {
      const bool inside = y / 2 == 1 && x / 2 == 2;
      EXPECT_EQ(px[y * 8 + x], inside ? 255 : 0) << x << "," << y;
    }
}

TEST(Heatmap, PreservesCellOrder) {
  Rng rng(9);
  AttentionMask m{4, 4, {}};
  for (int i = 0; i < 16; ++i) m.values.push_back(static_cast<float>(rng.uniform(0.0, 1.0)));
  const auto px = heatmap_pixels(m, 4, 4);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j)
      if (m.values[i] > m.values[j]) {
        EXPECT_GE(px[i], px[j]);
      }
  EXPECT_THROW(heatmap_pixels(AttentionMask{2, 2, {1.0f}}, 4, 4), std::invalid_argument);
}

TEST(Service, NoModelGives503) {
  Service service;
  const auto r = service.evaluate(scene_png(0));
  EXPECT_EQ(r.status, 503);
  EXPECT_EQ(r.json()["error"]["code"], "model_not_loaded");
  EXPECT_FALSE(service.model_info().json()["loaded"].get<bool>());
  EXPECT_FALSE(service.health().json()["model_loaded"].get<bool>());
}

TEST(Service, EvaluateResponseShape) {
  Service service;
  service.set_model(tiny_model());
  const auto r = service.evaluate(scene_png(1));
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = r.json();
  EXPECT_EQ(j["schema_version"], kSchemaVersion);
  EXPECT_EQ(j["width"], 40);
  EXPECT_EQ(j["height"], 40);
  const std::string id = j["image_id"];
  ASSERT_EQ(j["attributes"].size(), kNumAttributes);

  double weighted = 0, weight_sum = 0, prev_weight = 2;
  std::set<std::string> names;
  for (const auto& a : j["attributes"]) {
    const double w = a["weight"];
    EXPECT_LE(w, prev_weight);
    prev_weight = w;
    weighted += w * a["raw_score"].get<double>();
    weight_sum += w;
    const double display = a["display_score"];
    EXPECT_NEAR(display, 1.0 + 99.0 * (a["raw_score"].get<double>() + 1.0) / 2.0, 1e-9);
    EXPECT_EQ(a["heatmap_url"], "/api/heatmap/" + id + "/" + a["attribute"].get<std::string>() + ".png");
    names.insert(a["attribute"]);
  }
  EXPECT_EQ(names.size(), kNumAttributes);
  EXPECT_NEAR(weight_sum, 1.0, 1e-5);
  EXPECT_NEAR(j["overall"]["raw"].get<double>(), weighted, 1e-5);
  EXPECT_TRUE(j.contains("prompt"));
}

TEST(Service, EvaluateIsPureButIssuesNewIds) {
  Service service;
  service.set_model(tiny_model());
  const std::string png = scene_png(2);
  auto a = service.evaluate(png).json();
  auto b = service.evaluate(png).json();
  EXPECT_NE(a["image_id"], b["image_id"]);
  EXPECT_EQ(a["overall"], b["overall"]);
  for (auto* j : {&a, &b})
    for (auto& attr : (*j)["attributes"]) attr.erase("heatmap_url");
  EXPECT_EQ(a["attributes"], b["attributes"]);
  EXPECT_EQ(a["prompt"], b["prompt"]);
}

TEST(Service, JpegAndBase64InputsAgreeWithDirectBytes) {
  Service service;
  service.set_model(tiny_model());
  const std::string png = scene_png(3);
  const auto direct = service.evaluate(png).json();
  const auto viajson = service.evaluate_json(nlohmann::json{{"image_base64", encode_base64(png)}}.dump()).json();
  EXPECT_EQ(direct["overall"], viajson["overall"]);
  const auto jpeg = service.evaluate(encode_jpeg(render_scene(generate_scene(11, 3), 40)));
  EXPECT_EQ(jpeg.status, 200);
}

TEST(Service, BadUploadsGiveErrorCodes) {
  ServiceConfig config;
  config.max_upload_bytes = 2000;
  Service service(config);
  service.set_model(tiny_model());

  auto r = service.evaluate("definitely not an image");
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.json()["error"]["code"], "invalid_image");
  EXPECT_EQ(r.json()["schema_version"], kSchemaVersion);

  std::string png = scene_png(4);
  png.resize(png.size() / 2);
  EXPECT_EQ(service.evaluate(png).json()["error"]["code"], "invalid_image");

  EXPECT_EQ(service.evaluate("").json()["error"]["code"], "missing_image");

  r = service.evaluate(std::string(2001, 'x'));
  EXPECT_EQ(r.status, 413);
  EXPECT_EQ(r.json()["error"]["code"], "payload_too_large");

  EXPECT_EQ(service.evaluate_json("{").json()["error"]["code"], "bad_request");
  EXPECT_EQ(service.evaluate_json(R"({"image_base64": 5})").json()["error"]["code"], "bad_request");
  EXPECT_EQ(service.evaluate_json(R"({"image_base64": "%%%%"})").json()["error"]["code"], "invalid_base64");
  EXPECT_EQ(service.evaluate_json(nlohmann::json{{"image_base64", std::string(4000, 'A')}}.dump()).status, 413);
}

TEST(Service, HeatmapEndpoint) {
  Service service;
  service.set_model(tiny_model());
  const auto j = service.evaluate(scene_png(5, 24)).json();
  const std::string id = j["image_id"];

  const auto r = service.heatmap(id, "object");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.content_type, "image/png");
  const Image img = decode_image(r.body);
  EXPECT_EQ(img.width, 24u);
  EXPECT_EQ(img.height, 24u);
  float peak = 0;
  for (float v : img.pixels) peak = std::max(peak, v);
  EXPECT_FLOAT_EQ(peak, 1.0f);

  EXPECT_EQ(service.heatmap("missing", "object").status, 404);
  EXPECT_EQ(service.heatmap("missing", "object").json()["error"]["code"], "unknown_session");
  EXPECT_EQ(service.heatmap(id, "sharpness").json()["error"]["code"], "unknown_attribute");
}

TEST(Service, RegionEndpoint) {
  Service service;
  service.set_model(tiny_model());
  const std::string id = service.evaluate(scene_png(6)).json()["image_id"];

  const auto full = service.region(nlohmann::json{{"image_id", id}, {"rect", {{"x0", 0}, {"y0", 0}, {"x1", 1}, {"y1", 1}}}}.dump());
  ASSERT_EQ(full.status, 200) << full.body;
  const auto fj = full.json();
  EXPECT_EQ(fj["image_id"], id);
  EXPECT_EQ(fj["severity"], "suggestion");
  EXPECT_FALSE(fj["text"].get<std::string>().empty());

  const auto small = service.region(
      nlohmann::json{{"image_id", id}, {"rect", {{"x0", 0.1}, {"y0", 0.2}, {"x1", 0.4}, {"y1", 0.5}}}}.dump());
  EXPECT_EQ(small.status, 200);

  auto bad = service.region(nlohmann::json{{"image_id", id}, {"rect", {{"x0", 0.5}, {"y0", 0}, {"x1", 0.5}, {"y1", 1}}}}.dump());
  EXPECT_EQ(bad.status, 422);
  EXPECT_EQ(bad.json()["error"]["code"], "invalid_region");
  bad = service.region(nlohmann::json{{"image_id", id}, {"rect", {{"x0", -0.1}, {"y0", 0}, {"x1", 0.5}, {"y1", 1}}}}.dump());
  EXPECT_EQ(bad.status, 422);
  EXPECT_EQ(service.region(nlohmann::json{{"image_id", "zzz"}, {"rect", {{"x0", 0}, {"y0", 0}, {"x1", 1}, {"y1", 1}}}}.dump()).status,
            404);
  EXPECT_EQ(service.region(R"({"image_id": "x"})").status, 400);
  EXPECT_EQ(service.region(R"({"image_id": "x", "rect": {"x0": "a"}})").status, 400);
  EXPECT_EQ(service.region("[]").status, 400);
}

TEST(Service, ModelInfoAndHealth) {
  Service service;
  service.set_model(tiny_model());
  const auto info = service.model_info().json();
  EXPECT_TRUE(info["loaded"].get<bool>());
  EXPECT_EQ(info["attributes"].size(), kNumAttributes);
  EXPECT_EQ(info["config"]["image_size"], 16);
  EXPECT_DOUBLE_EQ(info["poll_interval"].get<double>(), 0.5);
  EXPECT_GT(info["parameter_count"].get<std::size_t>(), 0u);
  const auto health = service.health().json();
  EXPECT_EQ(health["status"], "ok");
  EXPECT_EQ(health["sessions"], 0);
}

TEST(ServiceConfig, JsonRoundTripAndValidation) {
  ServiceConfig c;
  c.session_capacity = 7;
  c.max_upload_bytes = 99;
  c.heuristics.poll_interval = 1.5;
  const ServiceConfig back = nlohmann::json(c).get<ServiceConfig>();
  EXPECT_EQ(back.session_capacity, 7u);
  EXPECT_EQ(back.max_upload_bytes, 99u);
  EXPECT_EQ(back.heuristics, c.heuristics);
  const auto unknown = nlohmann::json::parse(R"({"sessions": 3})");
  const auto zero = nlohmann::json::parse(R"({"session_capacity": 0})");
  EXPECT_THROW((void)unknown.get<ServiceConfig>(), std::invalid_argument);
  EXPECT_THROW((void)zero.get<ServiceConfig>(), std::invalid_argument);
}

TEST(PortFromEnvironment, ParsesOrFallsBack) {
  ::unsetenv("AESTHETIC_PORT");
  EXPECT_EQ(port_from_environment(8080), 8080);
  ::setenv("AESTHETIC_PORT", "9123", 1);
  EXPECT_EQ(port_from_environment(8080), 9123);
  ::setenv("AESTHETIC_PORT", "12ab", 1);
  EXPECT_EQ(port_from_environment(8080), 8080);
  ::setenv("AESTHETIC_PORT", "70000", 1);
  EXPECT_EQ(port_from_environment(8080), 8080);
  ::unsetenv("AESTHETIC_PORT");
}

TEST(HttpServer, RoundTripOverLoopback) {
  Service service;
  service.set_model(tiny_model());
  HttpServer server(service);
  const int port = server.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread thread([&] { server.listen(); });

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/api/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  httplib::MultipartFormDataItems items = {{"image", scene_png(7), "scene.png", "image/png"}};
  auto eval = client.Post("/api/evaluate", items);
  ASSERT_TRUE(eval);
  ASSERT_EQ(eval->status, 200) << eval->body;
  const auto j = nlohmann::json::parse(eval->body);
  const std::string id = j["image_id"];

  auto raw = client.Post("/api/evaluate", scene_png(7), "image/png");
  ASSERT_TRUE(raw);
  EXPECT_EQ(nlohmann::json::parse(raw->body)["overall"], j["overall"]);

  auto b64 = client.Post("/api/evaluate", nlohmann::json{{"image_base64", encode_base64(scene_png(7))}}.dump(),
                         "application/json");
  ASSERT_TRUE(b64);
  EXPECT_EQ(nlohmann::json::parse(b64->body)["overall"], j["overall"]);

  auto heat = client.Get(j["attributes"][0]["heatmap_url"].get<std::string>());
  ASSERT_TRUE(heat);
  EXPECT_EQ(heat->status, 200);
  EXPECT_EQ(heat->get_header_value("Content-Type"), "image/png");

  auto region = client.Post("/api/region",
                            nlohmann::json{{"image_id", id}, {"rect", {{"x0", 0}, {"y0", 0}, {"x1", 0.5}, {"y1", 0.5}}}}.dump(),
                            "application/json");
  ASSERT_TRUE(region);
  EXPECT_EQ(region->status, 200);

  auto missing = client.Get("/api/unknown");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(nlohmann::json::parse(missing->body)["error"]["code"], "not_found");

  auto bad = client.Post("/api/evaluate", "garbage", "application/octet-stream");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);

  auto model = client.Get("/api/model");
  ASSERT_TRUE(model);
  EXPECT_TRUE(nlohmann::json::parse(model->body)["loaded"].get<bool>());

  server.stop();
  thread.join();
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli({}), 2);
  EXPECT_EQ(run_cli({"gen-data", "--bogus"}), 2);
  EXPECT_EQ(run_cli({"frobnicate"}), 2);
  EXPECT_EQ(run_cli({"gen-data"}), 2);  // --out is required
  EXPECT_EQ(run_cli({"--help"}), 0);
}

TEST_F(TempDir, CliGenDataIsDeterministic) {
  ASSERT_EQ(run_cli({"gen-data", "--n", "6", "--seed", "4", "--size", "24", "--out", (dir / "a").string()}), 0);
  ASSERT_EQ(run_cli({"gen-data", "--n", "6", "--seed", "4", "--size", "24", "--out", (dir / "b").string()}), 0);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), dir / "a");
    EXPECT_EQ(read_file(e.path()), read_file(dir / "b" / rel)) << rel;
    ++files;
  }
  EXPECT_EQ(files, 6u + 2u);
}

TEST_F(TempDir, CliReportMatchesDecomposition) {
  const auto net = tiny_model(8);
  save_checkpoint(*net, dir / "m.ckpt");
  write_file(dir / "img.png", scene_png(9, 32));
  std::string text;
  ASSERT_EQ(run_cli({"report", "--ckpt", (dir / "m.ckpt").string(), "--image", (dir / "img.png").string(), "--out-dir",
                     (dir / "rep").string()},
                    &text),
            0);
  const auto j = nlohmann::json::parse(read_file(dir / "rep" / "report.json"));
  EXPECT_EQ(j, nlohmann::json::parse(text));
  double weighted = 0;
  for (const auto& a : j["attributes"]) weighted += a["weight"].get<double>() * a["score"].get<double>();
  EXPECT_NEAR(j["overall"].get<double>(), weighted, 1e-5);
  EXPECT_EQ(j["detailed"].size(), kNumAttributes);
  for (const auto name : kAttributeNames) {
    const Image heat = read_image(dir / "rep" / (std::string(name) + ".png"));
    EXPECT_EQ(heat.width, 32u);
  }
}

TEST_F(TempDir, CliTrainThenEval) {
  ASSERT_EQ(run_cli({"gen-data", "--n", "12", "--seed", "2", "--size", "16", "--out", (dir / "d").string()}), 0);
  write_file(dir / "tc.json", R"({"max_epochs": 2, "patience": 1, "batch_size": 4})");
  write_file(dir / "mc.json", nlohmann::json(tiny_config()).dump());
  std::string text;
  ASSERT_EQ(run_cli({"train", "--data", (dir / "d" / "manifest.csv").string(), "--config", (dir / "tc.json").string(),
                     "--model-config", (dir / "mc.json").string(), "--out", (dir / "m.ckpt").string(), "--report",
                     (dir / "r.jsonl").string(), "--val-fraction", "0.25"},
                    &text),
            0)
      << text;
  EXPECT_TRUE(std::filesystem::exists(dir / "r.jsonl"));
  ASSERT_EQ(run_cli({"eval", "--ckpt", (dir / "m.ckpt").string(), "--data", (dir / "d" / "manifest.csv").string(),
                     "--metrics-out", (dir / "met.json").string()}),
            0);
  const auto metrics = nlohmann::json::parse(read_file(dir / "met.json"));
  EXPECT_TRUE(metrics.contains("ranking_accuracy"));
  EXPECT_EQ(run_cli({"eval", "--ckpt", (dir / "missing.ckpt").string(), "--data", (dir / "d" / "manifest.csv").string()}),
            2);
  write_file(dir / "broken.ckpt", "not a checkpoint");
  EXPECT_EQ(run_cli({"eval", "--ckpt", (dir / "broken.ckpt").string(), "--data", (dir / "d" / "manifest.csv").string()}),
            1);
}

TEST(Cli, GradcheckPasses) {
  std::string text;
  EXPECT_EQ(run_cli({"gradcheck"}, &text), 0) << text;
  EXPECT_NE(text.find("all gradients agree"), std::string::npos);
}
