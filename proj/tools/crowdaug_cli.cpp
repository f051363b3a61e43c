// crowdaug: synthetic crowd-counting dataset generator.
//
//   crowdaug ingest   --config cfg.json tracks.csv        -> agent_specs.json
//   crowdaug simulate --config cfg.json agent_specs.json  -> framelog.csv, run_report.json
//   crowdaug render   --config cfg.json framelog.csv      -> frames/frame_%06d.png
//   crowdaug annotate --config cfg.json framelog.csv      -> annotations.csv, counts.csv
//   crowdaug density  --config cfg.json annotations.csv   -> density/frame_%06d.dmap
//   crowdaug compose  --config cfg.json real.json cg.json -> train_manifest.json
//   crowdaug eval     pred_counts.csv gt_counts.csv       -> metrics.json
//   crowdaug pipeline --config cfg.json                   -> full dataset directory
//
// Exit codes: 0 success, 1 I/O failure, 2 validation failure, 3 internal error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "crowdaug/pipeline.hpp"

namespace fs = std::filesystem;
using namespace crowdaug;

namespace {

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::io:
      return 1;
    case ErrorCategory::validation:
      return 2;
    case ErrorCategory::internal:
      return 3;
  }
  return 3;
}

int report_error(const std::string& kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << std::endl;
  return code;
}

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  unsigned jobs = 1;
  std::vector<std::string> inputs;
};

PipelineConfig load(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  PipelineConfig cfg = load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) {
    cfg.output_dir = fs::absolute(o.out);
  } else {
    cfg.output_dir = cfg.resolve(cfg.output_dir);
  }
  return cfg;
}

const std::string& input(const Options& o, std::size_t i, const char* what) {
  if (o.inputs.size() <= i) throw ConfigError(std::string("missing input: ") + what);
  return o.inputs[i];
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic crowd-counting dataset generator"};
  app.require_subcommand(1);
  Options opts;

  const auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opts.config, "Pipeline config (JSON)");
    if (needs_config) c->required();
    sub->add_option("--out", opts.out, "Output directory (overrides config)");
    sub->add_option("--seed", opts.seed, "Global seed (overrides config)");
    sub->add_flag("--quiet", opts.quiet, "Suppress progress output");
    sub->add_option("--jobs", opts.jobs, "Worker threads for per-frame stages")->check(CLI::PositiveNumber);
    sub->add_option("inputs", opts.inputs, "Input files");
  };

  auto* ingest = app.add_subcommand("ingest", "Derive agent specs from tracked trajectories");
  auto* simulate = app.add_subcommand("simulate", "Run a simulator on agent specs or a route scenario");
  auto* render = app.add_subcommand("render", "Render frame images from a frame log");
  auto* annotate = app.add_subcommand("annotate", "Project a frame log into image-space ground truth");
  auto* density = app.add_subcommand("density", "Build density maps from annotations");
  auto* compose = app.add_subcommand("compose", "Mix real and CG manifests into a training set");
  auto* eval = app.add_subcommand("eval", "Score predicted counts against ground truth");
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage from one config");
  for (auto* sub : {ingest, simulate, render, annotate, density, compose, pipeline}) add_common(sub, true);
  add_common(eval, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("UsageError", e.what(), 2);
  }

  try {
    if (eval->parsed()) {
      const fs::path out = opts.out.empty() ? fs::path("metrics.json") : fs::path(opts.out);
      const auto r = pipeline::eval(input(opts, 0, "pred_counts.csv"), input(opts, 1, "gt_counts.csv"), out);
      if (!opts.quiet) std::cout << nlohmann::json{{"mae", r.mae}, {"mse", r.mse}, {"n", r.n}}.dump() << '\n';
      return 0;
    }

    const PipelineConfig cfg = load(opts);
    const fs::path out = cfg.output_dir;
    pipeline::ensure_dir(out);
    if (ingest->parsed()) {
      const auto specs = pipeline::ingest(cfg, input(opts, 0, "tracks.csv"), out / "agent_specs.json");
      if (!opts.quiet) std::cout << specs.size() << " agent specs -> " << (out / "agent_specs.json").string() << '\n';
    } else if (simulate->parsed()) {
      const auto log = pipeline::simulate(cfg, input(opts, 0, "agent_specs.json | scenario.json"), out);
      if (!opts.quiet) std::cout << log.frame_count() << " frames -> " << (out / "framelog.csv").string() << '\n';
    } else if (render->parsed()) {
      const auto n = pipeline::render(cfg, input(opts, 0, "framelog.csv"), out / "frames", opts.jobs);
      if (!opts.quiet) std::cout << n << " images -> " << (out / "frames").string() << '\n';
    } else if (annotate->parsed()) {
      const auto r = pipeline::annotate_log(cfg, input(opts, 0, "framelog.csv"), out);
      if (!opts.quiet) std::cout << r.frames.size() << " annotated frames -> " << (out / "annotations.csv").string() << '\n';
    } else if (density->parsed()) {
      const auto n = pipeline::density(cfg, input(opts, 0, "annotations.csv"), out / "density", opts.jobs);
      if (!opts.quiet) std::cout << n << " density maps -> " << (out / "density").string() << '\n';
    } else if (compose->parsed()) {
      const auto m = pipeline::compose(cfg, input(opts, 0, "real_manifest.json"), input(opts, 1, "cg_manifest.json"),
                                       out / "train_manifest.json");
      if (!opts.quiet) std::cout << m.entries.size() << " entries -> " << (out / "train_manifest.json").string() << '\n';
    } else if (pipeline->parsed()) {
      const auto s = pipeline::run_pipeline(cfg, out, opts.jobs);
      if (!opts.quiet) std::cout << s.agents << " agents, " << s.frames << " frames -> " << out.string() << '\n';
    }
  } catch (const Error& e) {
    return report_error(e.kind(), e.what(), exit_code(e.category()));
  } catch (const fs::filesystem_error& e) {
    return report_error("IoError", e.what(), 1);
  } catch (const std::exception& e) {
    return report_error("InternalError", e.what(), 3);
  }
  return 0;
}
