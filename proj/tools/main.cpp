#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "refverify/analysis.hpp"
#include "refverify/backends.hpp"
#include "refverify/cache.hpp"
#include "refverify/config.hpp"
#include "refverify/curves.hpp"
#include "refverify/errors.hpp"
#include "refverify/evalharness.hpp"
#include "refverify/http_clients.hpp"
#include "refverify/image_io.hpp"
#include "refverify/pipeline.hpp"

namespace fs = std::filesystem;
using namespace refverify;

namespace {

// Exit codes: 0 success, 1 usage/config, 2 backend/transport, 3 abstain.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitBackend = 2;
constexpr int kExitAbstain = 3;

struct Backends {
  std::unique_ptr<DetectorBackend> detector;
  std::unique_ptr<VlmBackend> vlm_raw;
  std::unique_ptr<ResponseCache> cache;
  std::unique_ptr<CachingVlm> vlm_cached;

  VlmBackend& vlm() { return vlm_cached ? static_cast<VlmBackend&>(*vlm_cached) : *vlm_raw; }
};

Backends make_backends(const AppConfig& config, const std::string& fixtures_dir,
                       const std::string& cache_dir_flag) {
  Backends backends;

  if (!fixtures_dir.empty()) {
    backends.vlm_raw = std::make_unique<ReplayVlm>(fixtures_dir);
  } else if (!config.vlm_base_url.empty()) {
    EndpointConfig endpoint;
    endpoint.base_url = config.vlm_base_url;
    endpoint.api_key = config.vlm_api_key;
    endpoint.retry.max_retries = config.vlm_retries;
    endpoint.max_concurrent = config.concurrency_limit;
    backends.vlm_raw = std::make_unique<HttpVlmClient>(endpoint);
  } else {
    throw ConfigError("no VLM backend configured: set vlm.base_url or pass --fixtures");
  }

  const std::string fixture_detector =
      !fixtures_dir.empty() && fs::exists(fs::path(fixtures_dir) / "detector.json")
          ? (fs::path(fixtures_dir) / "detector.json").string()
          : config.detector_fixture_path;
  if (!fixture_detector.empty()) {
    backends.detector = std::make_unique<FixtureDetector>(fixture_detector);
  } else if (!config.detector_base_url.empty()) {
    EndpointConfig endpoint;
    endpoint.base_url = config.detector_base_url;
    endpoint.retry.max_retries = config.detector_retries;
    endpoint.max_concurrent = config.concurrency_limit;
    backends.detector = std::make_unique<HttpDetectorClient>(endpoint);
  } else {
    throw ConfigError(
        "no detector configured: set detector.base_url, detector.fixture_path, or provide "
        "detector.json in --fixtures");
  }

  const std::string cache_dir = !cache_dir_flag.empty() ? cache_dir_flag : config.cache_dir;
  if (!cache_dir.empty()) {
    backends.cache = std::make_unique<ResponseCache>(cache_dir);
    backends.vlm_cached = std::make_unique<CachingVlm>(*backends.vlm_raw, *backends.cache);
  }
  return backends;
}

PipelineConfig pipeline_config_from(const AppConfig& config) {
  PipelineConfig pc;
  pc.model_id = config.vlm_model_id;
  pc.temperature = config.vlm_temperature;
  pc.proposal_cap = config.proposal_cap;
  return pc;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << content;
}

int cmd_run(const AppConfig& config, const std::string& image_path, const std::string& expr,
            const std::string& fixtures, const std::string& cache_dir) {
  Backends backends = make_backends(config, fixtures, cache_dir);
  const RasterImage image = read_image(image_path);
  PipelineConfig pc = pipeline_config_from(config);
  pc.image_id = image_path;
  const RecOutcome outcome =
      run_verification_first(image, expr, *backends.detector, backends.vlm(), pc);
  std::cout << outcome_to_json(outcome).dump(2) << '\n';
  return outcome.box ? kExitOk : kExitAbstain;
}

int cmd_eval(const AppConfig& config, const std::string& dataset, const std::string& variant_name,
             const std::string& box_format, const std::string& out_base,
             const std::string& fixtures, const std::string& cache_dir, int workers_flag) {
  Backends backends = make_backends(config, fixtures, cache_dir);
  const std::vector<EvalItem> items = ingest_dataset(dataset, box_format_from_name(box_format));
  if (items.empty()) throw ConfigError("dataset '" + dataset + "' has no items");

  EvalOptions options;
  options.variant = variant_from_name(variant_name);
  options.pipeline = pipeline_config_from(config);
  options.workers = workers_flag > 0 ? workers_flag : config.workers;

  const EvalReport report = run_eval(items, *backends.detector, backends.vlm(), options);
  const std::string json = report_to_json(report).dump(2) + "\n";
  std::cout << json;
  if (!out_base.empty()) {
    write_text_file(out_base + ".json", json);
    write_text_file(out_base + ".txt", report_to_text(report));
    std::cerr << "report written to " << out_base << ".json / .txt\n";
  }
  return kExitOk;
}

int cmd_simulate(double p, double q1, double q2, uint64_t trials, uint64_t seed) {
  const TwoCandidateParams params(p, q1, q2);
  const McEstimate est = mc_two_candidate(params, trials, seed);
  nlohmann::ordered_json j;
  j["p"] = p;
  j["q1"] = q1;
  j["q2"] = q2;
  j["trials"] = trials;
  j["seed"] = seed;
  j["closed_form"] = a_ver(params);
  j["empirical"] = est.accuracy;
  j["std_error"] = est.std_error;
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_analyze(const std::string& kind_name, double grid_step, std::vector<double> q2_values,
                const std::string& out_base) {
  const CurveKind kind = curve_kind_from_name(kind_name);
  if (q2_values.empty()) q2_values = {0.1, 0.2, 0.3, 0.4, 0.45};
  const std::vector<CurveSample> samples = emit_curves(kind, grid_step, q2_values);

  const std::string csv_path = out_base + ".csv";
  const std::string svg_path = out_base + ".svg";
  write_text_file(csv_path, curves_to_csv(samples));
  write_text_file(svg_path, curves_to_svg(samples, kind_name));

  nlohmann::ordered_json j;
  j["kind"] = kind_name;
  j["samples"] = samples.size();
  j["csv"] = csv_path;
  j["svg"] = svg_path;
  if (kind == CurveKind::GainVsQ) {
    const GridMax peak = gain_grid_argmax(grid_step);
    j["gain_argmax"] = peak.argmax;
    j["gain_max"] = peak.max;
  }
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_overlay(const std::string& image_path, const std::string& out_path,
                const std::vector<std::string>& box_specs, bool xywh) {
  if (box_specs.empty()) throw ConfigError("overlay requires at least one --box");
  std::vector<BoundingBox> boxes;
  for (const auto& spec : box_specs) {
    double v[4];
    if (std::sscanf(spec.c_str(), "%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2], &v[3]) != 4)
      throw ConfigError("--box expects 'a,b,c,d', got '" + spec + "'");
    boxes.push_back(xywh ? BoundingBox::from_xywh(v[0], v[1], v[2], v[3])
                         : BoundingBox(v[0], v[1], v[2], v[3]));
  }
  const RasterImage image = read_image(image_path);
  write_png(out_path, render_indexed_boxes(image, boxes));
  nlohmann::ordered_json j;
  j["out"] = out_path;
  j["boxes"] = boxes.size();
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verification-first referring-expression grounding toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key = value config file");

  // run
  auto* run = app.add_subcommand("run", "Ground one expression in one image");
  std::string run_image, run_expr, run_fixtures, run_cache;
  run->add_option("--image", run_image, "input image (PNG or JPEG)")->required();
  run->add_option("--expr", run_expr, "referring expression")->required();
  run->add_option("--fixtures", run_fixtures, "recorded-wire fixture directory");
  run->add_option("--cache-dir", run_cache, "response cache directory");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a JSONL dataset");
  std::string eval_dataset, eval_variant = "verify", eval_format = "xywh", eval_out,
              eval_fixtures, eval_cache;
  int eval_workers = 0;
  eval->add_option("--dataset", eval_dataset, "JSONL dataset file")->required();
  eval->add_option("--variant", eval_variant, "verify | select1 | select-mv3");
  eval->add_option("--box-format", eval_format, "dataset box format: xywh | xyxy");
  eval->add_option("--out", eval_out, "report base path (writes .json and .txt)");
  eval->add_option("--fixtures", eval_fixtures, "recorded-wire fixture directory");
  eval->add_option("--cache-dir", eval_cache, "response cache directory");
  eval->add_option("--workers", eval_workers, "concurrent items");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo vs closed-form accuracy");
  double sim_p = 0.5, sim_q1 = 0.7, sim_q2 = 0.3;
  uint64_t sim_trials = 200000, sim_seed = 1;
  simulate->add_option("--p", sim_p, "selection success probability");
  simulate->add_option("--q1", sim_q1, "target True rate");
  simulate->add_option("--q2", sim_q2, "distractor True rate");
  simulate->add_option("--trials", sim_trials, "trial count");
  simulate->add_option("--seed", sim_seed, "rng seed");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Emit threshold/gain curves as CSV + SVG");
  std::string an_kind, an_out;
  double an_step = 0.001;
  std::vector<double> an_q2;
  analyze->add_option("--kind", an_kind, "threshold_vs_q1 | threshold_vs_q | gain_vs_q")
      ->required();
  analyze->add_option("--grid-step", an_step, "grid step in (0, 0.1]");
  analyze->add_option("--q2", an_q2, "q2 series values (threshold_vs_q1)");
  analyze->add_option("--out", an_out, "output base path (writes .csv and .svg)")->required();

  // overlay
  auto* overlay = app.add_subcommand("overlay", "Debug-render indexed boxes onto an image");
  std::string ov_image, ov_out;
  std::vector<std::string> ov_boxes;
  bool ov_xywh = false;
  overlay->add_option("--image", ov_image, "input image")->required();
  overlay->add_option("--out", ov_out, "output PNG path")->required();
  overlay->add_option("--box", ov_boxes, "box as 'x0,y0,x1,y1' (repeatable)");
  overlay->add_flag("--xywh", ov_xywh, "interpret --box values as x,y,w,h");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const std::optional<std::string> cfg =
        config_path.empty() ? std::nullopt : std::make_optional(config_path);
    const AppConfig config = load_app_config(cfg);

    if (run->parsed()) return cmd_run(config, run_image, run_expr, run_fixtures, run_cache);
    if (eval->parsed())
      return cmd_eval(config, eval_dataset, eval_variant, eval_format, eval_out, eval_fixtures,
                      eval_cache, eval_workers);
    if (simulate->parsed()) return cmd_simulate(sim_p, sim_q1, sim_q2, sim_trials, sim_seed);
    if (analyze->parsed()) return cmd_analyze(an_kind, an_step, an_q2, an_out);
    if (overlay->parsed()) return cmd_overlay(ov_image, ov_out, ov_boxes, ov_xywh);
    return kExitUsage;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const ProtocolError& e) {
    std::cerr << "backend error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const PipelineError& e) {
    std::cerr << "pipeline error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBackend;
  }
}
