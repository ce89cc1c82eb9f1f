#include "aesthetic/app/cli.hpp"

#include <csignal>
#include <fstream>
#include <iomanip>
#include <vector>

#include "CLI11.hpp"
#include "aesthetic/app/service.hpp"
#include "aesthetic/data/dataset.hpp"
#include "aesthetic/image_io.hpp"
#include "aesthetic/model/checkpoint.hpp"
#include "aesthetic/train/trainer.hpp"

namespace aesthetic::app {

namespace {

constexpr double kGradTolerance = 1e-4;

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_file(path, text);
}

struct GenDataArgs {
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::string out;
  std::size_t size = 64;
};

int run_gen_data(const GenDataArgs& a, std::ostream& out) {
  const auto manifest = generate_dataset(a.out, a.n, a.seed, a.size);
  out << "wrote " << a.n << " images and " << manifest.string() << "\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string config;
  std::string model_config;
  std::string out;
  std::string report;
  double val_fraction = 0.1;
};

int run_train(const TrainArgs& a, std::ostream& out) {
  TrainingConfig tc;
  if (!a.config.empty()) tc = load_training_config(a.config);
  ModelConfig mc;
  if (!a.model_config.empty()) mc = read_json_file(a.model_config).get<ModelConfig>();
  mc.validate();
  tc.validate();

  const Dataset all = load_manifest(a.data, mc.image_size);
  auto [validation, train] = split(all, a.val_fraction, tc.seed);
  out << "training on " << train.size() << " samples, validating on " << validation.size() << "\n";

  tune_allocator_for_training();
  auto net = AestheticNet<float>::initialized(mc, tc.seed);
  const FitResult result = fit(net, train, validation, tc, [&out](const EpochRecord& r) {
    out << "epoch " << r.epoch << " total " << r.total << " aes " << r.l_aes << " att " << r.l_att << " mi "
        << r.l_mi;
    if (r.validation) out << " val_rank " << r.validation->ranking_accuracy;
    out << (r.improved ? " *" : "") << "\n";
  });
  save_checkpoint(result.best, a.out);
  if (!a.report.empty()) write_text(a.report, result.report.to_jsonl());
  out << "best epoch " << result.report.best_epoch << " of " << result.report.stopping_epoch
      << (result.report.stopped_early ? " (early stop)" : "") << ", checkpoint " << a.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string metrics_out;
  std::size_t pairs = 1000;
};

int run_eval(const EvalArgs& a, std::ostream& out) {
  const LoadedCheckpoint loaded = load_checkpoint(a.ckpt);
  const Dataset data = load_manifest(a.data, loaded.model.config().image_size);
  const nlohmann::json metrics = to_json(eval_metrics(loaded.model, data, a.pairs));
  if (!a.metrics_out.empty()) write_text(a.metrics_out, metrics.dump(2) + "\n");
  out << metrics.dump(2) << "\n";
  return 0;
}

int run_gradcheck(std::uint64_t seed, std::ostream& out) {
  std::vector<GradCheckResult> all = op_gradient_checks(seed);
  for (MiPhiMode mode : {MiPhiMode::as_written, MiPhiMode::fit_posterior}) {
    for (GradCheckResult r : objective_gradient_checks(seed, mode)) {
      r.name = to_string(mode) + ":" + r.name;
      all.push_back(std::move(r));
    }
  }
  bool ok = true;
  for (const auto& r : all) {
    const bool pass = r.max_rel_error < kGradTolerance;
    ok = ok && pass;
    out << (pass ? "ok   " : "FAIL ") << std::left << std::setw(44) << r.name << std::scientific
        << std::setprecision(2) << r.max_rel_error << std::defaultfloat << "\n";
  }
  out << (ok ? "all gradients agree" : "gradient mismatch") << " (" << all.size() << " checks)\n";
  return ok ? 0 : 1;
}

struct ReportArgs {
  std::string ckpt;
  std::string image;
  std::string out_dir;
};

int run_report(const ReportArgs& a, std::ostream& out) {
  const LoadedCheckpoint loaded = load_checkpoint(a.ckpt);
  const Image image = read_image(a.image);
  const std::size_t s = loaded.model.config().image_size;
  const EvaluationReport report = loaded.model.evaluate(resize_bilinear(image, s, s));

  nlohmann::json j = to_json(report);
  nlohmann::json detailed = nlohmann::json::array();
  for (const auto& e : guidance::detailed_report(report, &image)) detailed.push_back(guidance::to_json(e));
  j["detailed"] = std::move(detailed);
  const auto prompt = guidance::build_prompt(report, image);
  j["prompt"] = prompt ? guidance::to_json(*prompt) : nlohmann::json(nullptr);

  if (!a.out_dir.empty()) {
    const std::filesystem::path dir(a.out_dir);
    std::filesystem::create_directories(dir);
    for (const auto& attr : report.attributes) {
      write_file(dir / (attr.name + ".png"),
                 encode_png_gray(image.width, image.height, heatmap_pixels(attr.mask, image.width, image.height)));
    }
    write_text(dir / "report.json", j.dump(2) + "\n");
  }
  out << j.dump(2) << "\n";
  return 0;
}

struct ServeArgs {
  std::string ckpt;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string config;
  std::string templates;
};

HttpServer* g_server = nullptr;

extern "C" void stop_on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int run_serve(const ServeArgs& a, bool port_given, std::ostream& out) {
  ServiceConfig sc;
  if (!a.config.empty()) sc = read_json_file(a.config).get<ServiceConfig>();
  const guidance::TemplateCatalog catalog =
      a.templates.empty() ? guidance::TemplateCatalog::builtin() : guidance::TemplateCatalog::load(a.templates);
  Service service(sc, catalog);
  if (!a.ckpt.empty()) {
    service.set_model(std::make_shared<const AestheticNet<float>>(load_checkpoint(a.ckpt).model));
  }
  HttpServer server(service);
  const int port = server.bind(a.host, port_given ? a.port : port_from_environment(a.port));
  out << "listening on http://" << a.host << ":" << port << (a.ckpt.empty() ? " (no model loaded)" : "")
      << std::endl;
  g_server = &server;
  std::signal(SIGINT, stop_on_signal);
  std::signal(SIGTERM, stop_on_signal);
  server.listen();
  g_server = nullptr;
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attribute-level aesthetic evaluation and guidance", "aesguide"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Render a synthetic dataset with oracle scores");
  gen_cmd->add_option("--n", gen.n, "Number of images")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--size", gen.size, "Image side in pixels")->check(CLI::Range(8, 4096));

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a manifest");
  train_cmd->add_option("--data", train.data, "manifest.csv")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--config", train.config, "Training config JSON")->check(CLI::ExistingFile);
  train_cmd->add_option("--model-config", train.model_config, "Model config JSON")->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train.out, "Checkpoint path")->required();
  train_cmd->add_option("--report", train.report, "Per-epoch JSONL report path");
  train_cmd->add_option("--val-fraction", train.val_fraction, "Held-out fraction")->check(CLI::Range(0.0, 1.0));

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint against a manifest");
  eval_cmd->add_option("--ckpt", eval.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", eval.data, "manifest.csv")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--metrics-out", eval.metrics_out, "Write metrics JSON here");
  eval_cmd->add_option("--pairs", eval.pairs, "Ranking pairs")->check(CLI::PositiveNumber);

  std::uint64_t grad_seed = 7;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every op and the objective");
  grad_cmd->add_option("--seed", grad_seed, "Probe seed");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Evaluate one image and write heatmaps");
  report_cmd->add_option("--ckpt", report.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--image", report.image, "PNG or JPEG")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--out-dir", report.out_dir, "Directory for report.json and heatmaps");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the JSON API");
  serve_cmd->add_option("--ckpt", serve.ckpt, "Checkpoint")->check(CLI::ExistingFile);
  auto* port_opt = serve_cmd->add_option("--port", serve.port, "Port (default AESTHETIC_PORT or 8080)")
                       ->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--host", serve.host, "Bind address");
  serve_cmd->add_option("--config", serve.config, "Service config JSON")->check(CLI::ExistingFile);
  serve_cmd->add_option("--templates", serve.templates, "Guidance template catalog")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 2;
  }

  try {
    if (*gen_cmd) return run_gen_data(gen, out);
    if (*train_cmd) return run_train(train, out);
    if (*eval_cmd) return run_eval(eval, out);
    if (*grad_cmd) return run_gradcheck(grad_seed, out);
    if (*report_cmd) return run_report(report, out);
    if (*serve_cmd) return run_serve(serve, port_opt->count() > 0, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace aesthetic::app
