#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "crowdaug/annotate.hpp"
#include "crowdaug/biocrowds.hpp"
#include "crowdaug/config.hpp"
#include "crowdaug/dataset.hpp"
#include "crowdaug/density.hpp"
#include "crowdaug/framelog.hpp"
#include "crowdaug/render.hpp"
#include "crowdaug/routesim.hpp"
#include "crowdaug/trajectory.hpp"

namespace crowdaug::pipeline {

namespace fs = std::filesystem;

// Runs fn(i) for i in [0, n) on `jobs` threads; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (unsigned t = 0; t < jobs; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::string frame_name(std::size_t frame, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "frame_%06zu.%s", frame, ext);
  return buf;
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");
}

// Creates `dir` and removes frame_*.<ext> files left by an earlier run.
inline void prepare_frame_dir(const fs::path& dir, const std::string& ext) {
  ensure_dir(dir);
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(dir, ec)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.starts_with("frame_") && e.path().extension() == "." + ext) {
      fs::remove(e.path(), ec);
    }
  }
  if (ec) throw IoError("cannot clear '" + dir.string() + "': " + ec.message());
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return in;
}

inline FrameLog load_framelog(const fs::path& path) {
  auto in = open_input(path);
  return read_framelog(in);
}

// tracks.csv -> agent_specs.json
inline std::vector<AgentSpec> ingest(const PipelineConfig& cfg, const fs::path& tracks_csv, const fs::path& out_json) {
  auto in = open_input(tracks_csv);
  const auto tracks = parse_tracks(in);
  auto specs = derive_agent_specs(tracks, cfg.mapping, cfg.replication, cfg.jitter_m, derive_seed(cfg.seed, "ingest"));
  write_text(out_json, nlohmann::json(specs).dump(2) + "\n");
  return specs;
}

inline nlohmann::json kernel_report(const PipelineConfig& cfg) {
  nlohmann::json k = {{"k", cfg.kernel.k},
                      {"beta", cfg.kernel.beta},
                      {"sigma_default", cfg.kernel.sigma_default},
                      {"truncation", cfg.kernel.truncation}};
  nlohmann::json assumptions = nlohmann::json::array();
  if (cfg.kernel_defaults) {
    assumptions.push_back("density kernel k, beta, sigma_default and truncation are built-in defaults, not values "
                          "taken from a reference experiment");
  }
  return {{"kernel", k}, {"assumptions", assumptions}};
}

// agent_specs.json (BioCrowds) or scenario.json (route simulator) -> framelog.csv + run_report.json
inline FrameLog simulate(const PipelineConfig& cfg, const fs::path& input, const fs::path& out_dir) {
  ensure_dir(out_dir);
  const nlohmann::json doc = read_json_file(input);
  FrameLog log;
  nlohmann::json report;
  report["seed"] = cfg.seed;
  if (doc.is_array()) {
    std::vector<AgentSpec> specs;
    try {
      specs = doc.get<std::vector<AgentSpec>>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("agent specs: ") + e.what());
    }
    auto sim_cfg = cfg.biocrowds;
    sim_cfg.seed = derive_seed(cfg.seed, "simulate");
    const auto result = biocrowds::run(std::move(specs), sim_cfg);
    log = result.log;
    report["simulator"] = "biocrowds";
    report["config"] = biocrowds::echo_config(sim_cfg);
    report["marker_count"] = result.marker_count;
    report["terminated"] = result.terminated;
    report["agents"] = doc.size();
    nlohmann::json warnings = nlohmann::json::array();
    for (const auto& w : result.warnings) warnings.push_back(biocrowds::to_json(w));
    report["warnings"] = warnings;
  } else if (doc.is_object() && doc.contains("contexts")) {
    const auto scenario = routesim::parse_scenario(doc);
    if (const auto findings = routesim::validate_graph(scenario.graph); !findings.valid()) {
      throw InvalidGraphError(findings.summary());
    }
    const std::uint64_t seed = derive_seed(cfg.seed ^ scenario.seed, "simulate");
    const auto run = routesim::run(scenario.graph, scenario.plan, scenario.params, seed);
    log = run.state.log;
    log.frame_rate = 30.0;
    report["simulator"] = "routesim";
    report["config"] = {{"repulsion_gain", scenario.params.repulsion_gain},
                        {"repulsion_range", scenario.params.repulsion_range},
                        {"lateral_bias", scenario.params.lateral_bias},
                        {"waypoint_tolerance", scenario.params.waypoint_tolerance},
                        {"max_frames", scenario.params.max_frames}};
    report["agents"] = run.state.agents.size();
    report["terminated"] = run.terminated;
    nlohmann::json warnings = nlohmann::json::array();
    if (!run.terminated) {
      warnings.push_back({{"kind", "non_termination"}, {"frame", run.state.frame}, {"message", "max_frames reached"}});
    }
    report["warnings"] = warnings;
    report["route_choices"] = run.state.route_choices;
  } else {
    throw ConfigError("simulate input must be an agent-spec array or a route scenario object");
  }
  report["frames"] = log.frame_count();
  report["frame_rate"] = log.frame_rate;
  report["density"] = kernel_report(cfg);

  std::ostringstream csv;
  write_framelog(csv, log);
  write_text(out_dir / "framelog.csv", csv.str());
  write_text(out_dir / "run_report.json", report.dump(2) + "\n");
  return log;
}

// framelog.csv -> frames/frame_%06d.png
inline std::size_t render(const PipelineConfig& cfg, const fs::path& framelog_csv, const fs::path& frames_dir,
                          unsigned jobs) {
  const FrameLog log = load_framelog(framelog_csv);
  prepare_frame_dir(frames_dir, "png");
  const CameraModel& camera = cfg.camera_model();
  parallel_for(log.frame_count(), jobs, [&](std::size_t f) {
    write_image(render_frame(camera, log.frames[f], cfg.render), frames_dir / frame_name(f, "png"));
  });
  return log.frame_count();
}

// framelog.csv -> annotations.csv + counts.csv + annotation_report.json
inline AnnotationResult annotate_log(const PipelineConfig& cfg, const fs::path& framelog_csv, const fs::path& out_dir) {
  const FrameLog log = load_framelog(framelog_csv);
  ensure_dir(out_dir);
  auto result = annotate(cfg.camera_model(), log);
  std::ostringstream ann, counts;
  write_annotations(ann, result.frames);
  write_counts(counts, result.frames);
  write_text(out_dir / "annotations.csv", ann.str());
  write_text(out_dir / "counts.csv", counts.str());
  const nlohmann::json report = {{"frames", result.frames.size()},
                                 {"excluded_behind_camera", result.excluded.behind_camera},
                                 {"excluded_outside_image", result.excluded.outside_image}};
  write_text(out_dir / "annotation_report.json", report.dump(2) + "\n");
  return result;
}

// annotations.csv -> density/frame_%06d.dmap. The frame range comes from a
// sibling counts.csv when present, so trailing empty frames are kept.
inline std::size_t density(const PipelineConfig& cfg, const fs::path& annotations_csv, const fs::path& density_dir,
                           unsigned jobs) {
  std::int64_t frame_count = -1;
  if (const fs::path counts = annotations_csv.parent_path() / "counts.csv"; fs::exists(counts)) {
    auto in = open_input(counts);
    frame_count = static_cast<std::int64_t>(read_counts(in).size());
  }
  const auto anns = read_annotations(annotations_csv, frame_count);
  prepare_frame_dir(density_dir, "dmap");
  const CameraModel& camera = cfg.camera_model();
  parallel_for(anns.size(), jobs, [&](std::size_t f) {
    const auto map = build_density_map(anns[f], static_cast<std::uint32_t>(camera.width()),
                                       static_cast<std::uint32_t>(camera.height()), cfg.kernel);
    write_density(map, density_dir / frame_name(f, "dmap"));
  });
  return anns.size();
}

// Manifest of a generated CG dataset laid out by run_pipeline.
inline Manifest cg_manifest(const fs::path& dataset_dir, std::size_t frames) {
  Manifest m{fs::absolute(dataset_dir).lexically_normal(), {}};
  for (std::size_t f = 0; f < frames; ++f) {
    m.entries.push_back({fs::path("frames") / frame_name(f, "png"), "annotations.csv",
                         fs::path("density") / frame_name(f, "dmap"), Source::cg, Split::train,
                         static_cast<std::int64_t>(f)});
  }
  return m;
}

inline Manifest compose(const PipelineConfig& cfg, const fs::path& real_manifest, const fs::path& cg_manifest_path,
                        const fs::path& out_json) {
  MixSpec mix = cfg.mix;
  mix.seed = derive_seed(cfg.seed, "compose");
  const Manifest out = compose_training_set(read_manifest(real_manifest), read_manifest(cg_manifest_path), mix);
  write_manifest(out, out_json);
  return out;
}

// pred_counts.csv + gt_counts.csv (`frame,count`) -> metrics.json; frames must match one to one.
inline MetricReport eval(const fs::path& pred_csv, const fs::path& gt_csv, const fs::path& out_json) {
  auto pin = open_input(pred_csv);
  auto gin = open_input(gt_csv);
  auto pred = read_counts(pin);
  auto gt = read_counts(gin);
  const auto by_frame = [](const FrameCount& a, const FrameCount& b) { return a.frame < b.frame; };
  std::sort(pred.begin(), pred.end(), by_frame);
  std::sort(gt.begin(), gt.end(), by_frame);
  if (pred.size() != gt.size()) {
    throw LengthMismatchError("prediction has " + std::to_string(pred.size()) + " frames, ground truth " +
                              std::to_string(gt.size()));
  }
  std::vector<double> p, g;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].frame != gt[i].frame) {
      throw LengthMismatchError("frame sets differ (frame " + std::to_string(pred[i].frame) + " vs " +
                                std::to_string(gt[i].frame) + ")");
    }
    p.push_back(pred[i].count);
    g.push_back(gt[i].count);
  }
  const MetricReport r = evaluate(p, g);
  if (!out_json.empty()) {
    write_text(out_json, nlohmann::json{{"mae", r.mae}, {"mse", r.mse}, {"n", r.n}}.dump(2) + "\n");
  }
  return r;
}

struct PipelineSummary {
  std::size_t frames = 0;
  std::size_t agents = 0;
};

// ingest -> simulate -> render -> annotate -> density -> manifest [-> compose]
inline PipelineSummary run_pipeline(const PipelineConfig& cfg, const fs::path& out_dir, unsigned jobs) {
  ensure_dir(out_dir);
  PipelineSummary summary;
  fs::path sim_input;
  if (cfg.simulator == SimulatorKind::biocrowds) {
    if (!cfg.tracks) throw ConfigError("biocrowds pipeline needs 'tracks'");
    sim_input = out_dir / "agent_specs.json";
    summary.agents = ingest(cfg, cfg.resolve(*cfg.tracks), sim_input).size();
  } else {
    if (!cfg.scenario) throw ConfigError("routesim pipeline needs 'scenario'");
    sim_input = out_dir / "scenario.json";
    write_text(sim_input, cfg.scenario_json.dump(2) + "\n");
  }
  const FrameLog log = simulate(cfg, sim_input, out_dir);
  summary.frames = log.frame_count();
  if (cfg.simulator == SimulatorKind::routesim) {
    std::set<std::int64_t> ids;
    for (const auto& f : log.frames) {
      for (const auto& a : f) ids.insert(a.agent_id);
    }
    summary.agents = ids.size();
  }
  render(cfg, out_dir / "framelog.csv", out_dir / "frames", jobs);
  annotate_log(cfg, out_dir / "framelog.csv", out_dir);
  density(cfg, out_dir / "annotations.csv", out_dir / "density", jobs);
  write_manifest(cg_manifest(out_dir, summary.frames), out_dir / "manifest.json");
  if (cfg.real_manifest) {
    compose(cfg, cfg.resolve(*cfg.real_manifest), out_dir / "manifest.json", out_dir / "train_manifest.json");
  }
  return summary;
}

}  // namespace crowdaug::pipeline
