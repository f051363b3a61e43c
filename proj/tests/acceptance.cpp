// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "crowdaug/annotate.hpp"
#include "crowdaug/biocrowds.hpp"
#include "crowdaug/dataset.hpp"
#include "crowdaug/density.hpp"
#include "crowdaug/pipeline.hpp"
#include "crowdaug/render.hpp"
#include "crowdaug/routesim.hpp"
#include "crowdaug/trajectory.hpp"
#include "support.hpp"

using namespace crowdaug;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Criterion 1: density mass equals head count on every frame of a 500-frame dataset.
Outcome density_mass() {
  const auto g = support::fork_graph();
  routesim::PopulationPlan plan;
  plan.entries.push_back({"entry", 400, 0, 480});
  const auto run = routesim::run(g, plan, {}, 101);
  const GroundMapping mapping(0.0125, {});
  const auto camera = top_view_camera(mapping, 8.0, 640, 320);
  const auto anns = annotate(camera, run.state.log).frames;
  if (anns.size() < 500) return {false, "only " + std::to_string(anns.size()) + " frames generated"};
  double worst = 0.0;
  std::size_t heads = 0;
  for (std::size_t f = 0; f < 500; ++f) {
    const auto map = build_density_map(anns[f], 640, 320, {});
    worst = std::max(worst, std::abs(map.mass() - static_cast<double>(anns[f].count())));
    heads += anns[f].count();
  }
  return {worst <= 1e-3, "500 frames, " + std::to_string(heads) + " heads, max |mass - count| = " +
                             fmt("%.3g", worst)};
}

// Criterion 2: rendered disc centroids sit on their annotations and counts match the in-view agents.
Outcome ground_truth_consistency() {
  const GroundMapping mapping(0.0125, {});
  const auto camera = top_view_camera(mapping, 8.0, 640, 480);
  RenderConfig cfg;
  const double r_px = cfg.agent_radius_m / mapping.meters_per_pixel;
  const double inset = cfg.agent_radius_m + 2 * mapping.meters_per_pixel;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> x_in(inset, 8.0 - inset), y_in(inset, 6.0 - inset);
  std::uniform_real_distribution<double> x_out(9.0, 12.0);
  double worst = 0.0;
  std::size_t agents = 0, count_errors = 0;
  for (int frame = 0; frame < 100; ++frame) {
    std::vector<AgentPosition> log;
    const int visible = 1 + static_cast<int>(rng() % 12);
    while (static_cast<int>(log.size()) < visible) {
      const WorldPoint p{x_in(rng), y_in(rng), 0.0};
      bool isolated = true;
      for (const auto& a : log) isolated = isolated && distance(a.position, p) >= 1.0;
      if (isolated) log.push_back({static_cast<std::int64_t>(log.size()), p});
    }
    const int hidden = static_cast<int>(rng() % 4);
    for (int k = 0; k < hidden; ++k) log.push_back({100 + k, {x_out(rng), y_in(rng), 0.0}});

    FrameLog fl;
    fl.frames.push_back(log);
    const auto ann = annotate(camera, fl).frames[0];
    std::size_t oracle = 0;
    for (const auto& a : log) oracle += a.position.x >= 0 && a.position.x < 8.0 && a.position.y >= 0 && a.position.y < 6.0;
    count_errors += ann.count() != oracle;

    const auto img = render_frame(camera, log, cfg);
    for (const auto& e : ann.entries) {
      const Rgb color = cfg.palette[static_cast<std::size_t>(e.agent_id) % cfg.palette.size()];
      const int reach = static_cast<int>(std::ceil(r_px)) + 2;
      const auto c = support::intensity_centroid(img, cfg.background_color, color,
                                                 static_cast<int>(e.position.u) - reach,
                                                 static_cast<int>(e.position.v) - reach,
                                                 static_cast<int>(e.position.u) + reach,
                                                 static_cast<int>(e.position.v) + reach);
      worst = std::max(worst, std::hypot(c.u - e.position.u, c.v - e.position.v));
      ++agents;
    }
  }
  return {worst < 0.5 && count_errors == 0, "100 frames, " + std::to_string(agents) + " agents, max centroid offset " +
                                                fmt("%.3f px", worst) + ", count mismatches " +
                                                std::to_string(count_errors)};
}

// Criterion 3: 22 straight tracks -> specs -> BioCrowds reproduces speeds and endpoints.
Outcome parametrization_fidelity() {
  const GroundMapping mapping(0.05, {});
  std::ostringstream csv;
  csv << "frame,id,u,v\n";
  for (int id = 0; id < 22; ++id) {
    // Lanes 1.2 m apart, alternating direction, 8 m long, 160 to 240 frames.
    const double y = (2.0 + 1.2 * id) / mapping.meters_per_pixel;
    const double x0 = 3.0 / mapping.meters_per_pixel, x1 = 11.0 / mapping.meters_per_pixel;
    const int frames = 160 + 4 * id;
    const int first = 3 * id;
    for (int f = 0; f <= frames; ++f) {
      const double t = static_cast<double>(f) / frames;
      const double u = id % 2 == 0 ? x0 + t * (x1 - x0) : x1 + t * (x0 - x1);
      csv << first + f << ',' << id + 1 << ',' << u << ',' << y << '\n';
    }
  }
  std::istringstream in(csv.str());
  const auto tracks = parse_tracks(in);
  const auto specs = derive_agent_specs(tracks, mapping, 1.0, 0.0, 0);

  // Worst relative speed deviation and endpoint error at a given marker density.
  const auto measure = [&](double marker_density) -> std::optional<std::pair<double, double>> {
    auto cfg = support::open_field(4);
    cfg.world_bounds = {0.0, 0.0, 14.0, 30.0};
    cfg.marker_density = marker_density;
    const auto result = biocrowds::run(specs, cfg);
    if (!result.terminated) return std::nullopt;
    std::map<std::int64_t, std::vector<WorldPoint>> paths;
    for (const auto& frame : result.log.frames) {
      for (const auto& a : frame) paths[a.agent_id].push_back(a.position);
    }
    double worst_speed = 0.0, worst_end = 0.0;
    for (const auto& s : specs) {
      const auto& path = paths[s.agent_id];
      if (path.size() < 2) return std::nullopt;
      double length = 0.0;
      for (std::size_t i = 1; i < path.size(); ++i) length += distance(path[i - 1], path[i]);
      const double mean_speed = length / static_cast<double>(path.size() - 1);
      worst_speed = std::max(worst_speed, std::abs(mean_speed - s.speed) / s.speed);
      worst_end = std::max(worst_end, distance(path.back(), s.goal));
    }
    return std::pair{worst_speed, worst_end};
  };

  // The sample pipeline density; the library default is reported alongside.
  const auto sample = measure(16.0);
  const auto fallback = measure(biocrowds::SimConfig{}.marker_density);
  if (!sample) return {false, "simulation did not terminate or an agent never moved"};
  std::string detail = "22 agents at 16 markers/m2, max speed deviation " + fmt("%.2f%%", 100 * sample->first) +
                       ", max endpoint error " + fmt("%.3f m", sample->second);
  if (fallback) {
    detail += " (default 4 markers/m2: " + fmt("%.2f%%", 100 * fallback->first) + ", " +
              fmt("%.3f m", fallback->second) + ")";
  }
  return {sample->first <= 0.10 && sample->second <= 0.3, detail};
}

// Criterion 4: BioCrowds partition, speed bound and separation over 20 agents x 10 seeds.
Outcome biocrowds_invariants() {
  std::size_t frames = 0, separated = 0, violations = 0, steps = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto specs = support::random_agents(20, seed);
    auto cfg = support::open_field(seed);
    cfg.max_frames = 600;
    biocrowds::Simulation sim(specs, cfg);
    std::map<std::int64_t, double> speed;
    for (const auto& s : specs) speed[s.agent_id] = s.speed;
    while (!sim.finished() && sim.frame() < cfg.max_frames) {
      std::map<std::int64_t, Vec2> before;
      for (const auto& a : sim.agents()) before[a.agent_id] = a.position;
      sim.step();
      std::set<std::uint32_t> seen;
      for (const auto& [id, markers] : sim.last_assignment()) {
        for (auto m : markers) violations += !seen.insert(m).second;
      }
      for (const auto& a : sim.agents()) {
        if (!before.count(a.agent_id)) continue;
        violations += norm(a.position - before[a.agent_id]) > speed[a.agent_id] + 1e-9;
        ++steps;
      }
    }
    for (const auto& f : sim.log().frames) {
      if (f.size() < 2) continue;
      ++frames;
      separated += support::min_separation(f) >= 0.2;
    }
  }
  const double share = frames ? static_cast<double>(separated) / static_cast<double>(frames) : 0.0;
  return {violations == 0 && share >= 0.95, std::to_string(steps) + " agent-steps, " + std::to_string(violations) +
                                                " violations, separated in " + fmt("%.1f%%", 100 * share) +
                                                " of " + std::to_string(frames) + " frames"};
}

// Criterion 5: 1000 agents through a 0.5/0.5 fork; conservation every frame.
Outcome routesim_statistics() {
  const auto g = support::fork_graph(0.5);
  routesim::PopulationPlan plan;
  plan.entries.push_back({"entry", 1000, 0, 6000});
  const auto r = routesim::run(g, plan, {}, 2024);
  bool conserved = true;
  for (const auto& c : r.state.counts) conserved = conserved && c.spawned == c.active + c.exited;
  const auto& last = r.state.counts.back();
  const double north = static_cast<double>(r.state.route_choices[1]);
  const double south = static_cast<double>(r.state.route_choices[2]);
  const double share = north / (north + south);
  // Pearson chi-square against the configured split, 1 degree of freedom.
  const double expect = (north + south) / 2.0;
  const double chi2 = ((north - expect) * (north - expect) + (south - expect) * (south - expect)) / expect;
  const bool ok = r.terminated && conserved && last.exited == 1000 && north + south == 1000 &&
                  std::abs(share - 0.5) <= 0.05;
  return {ok, std::to_string(static_cast<int>(north)) + " north / " + std::to_string(static_cast<int>(south)) +
                  " south (share " + fmt("%.3f", share) + ", chi2 " + fmt("%.2f", chi2) + "), " +
                  std::to_string(r.state.counts.size()) + " frames conserved: " + (conserved ? "yes" : "no")};
}

Manifest synthetic_manifest(Source source, std::size_t n, std::size_t train) {
  Manifest m{"/corpus", {}};
  for (std::size_t i = 0; i < n; ++i) {
    const std::string stem = to_string(source) + "/" + std::to_string(i);
    m.entries.push_back({stem + ".png", stem + ".csv", stem + ".dmap", source, i < train ? Split::train : Split::test,
                         static_cast<std::int64_t>(i)});
  }
  return m;
}

// Criterion 6: composition arithmetic and no CG in test.
Outcome composition_arithmetic() {
  const auto real = synthetic_manifest(Source::real, 2000, 800);
  const auto count_cg = [](const Manifest& m) {
    return std::count_if(m.entries.begin(), m.entries.end(), [](const auto& e) { return e.source == Source::cg; });
  };
  const auto bio = compose_training_set(real, synthetic_manifest(Source::cg, 735, 735), {20.0, 1}, false);
  const auto sim = compose_training_set(real, synthetic_manifest(Source::cg, 1545, 1545), {100.0, 1}, false);
  bool leak = false;
  for (double p = 0; p <= 100; p += 12.5) {
    for (const auto& e : compose_training_set(real, synthetic_manifest(Source::cg, 735, 735), {p, 7}, false).entries) {
      leak = leak || (e.split == Split::test && e.source == Source::cg);
    }
  }
  const auto a = count_cg(bio), b = count_cg(sim);
  return {a == 147 && b == 1545 && !leak, "20% of 735 -> " + std::to_string(a) + ", 100% of 1545 -> " +
                                              std::to_string(b) + ", CG in test: " + (leak ? "yes" : "no")};
}

// Criterion 7: mae/mse against a brute-force reimplementation.
Outcome metric_oracle() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> noise(0.0, 4.0);
  double worst = 0.0;
  bool bound = true;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng() % 200;
    std::vector<double> pred(n), gt(n);
    for (std::size_t i = 0; i < n; ++i) {
      gt[i] = std::floor(std::abs(noise(rng)) * 5);
      pred[i] = gt[i] + noise(rng);
    }
    long double abs_sum = 0, sq_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const long double d = static_cast<long double>(pred[i]) - gt[i];
      abs_sum += d < 0 ? -d : d;
      sq_sum += d * d;
    }
    const double ref_mae = static_cast<double>(abs_sum / n), ref_mse = static_cast<double>(sq_sum / n);
    const auto rep = evaluate(pred, gt);
    worst = std::max({worst, std::abs(rep.mae - ref_mae), std::abs(rep.mse - ref_mse)});
    bound = bound && rep.mae <= std::sqrt(rep.mse) * (1 + 1e-15) + 1e-15;
  }
  return {worst <= 1e-12 && bound,
          "1000 vectors, max deviation " + fmt("%.2e", worst) + ", mae <= sqrt(mse): " + (bound ? "yes" : "no")};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[fs::relative(e.path(), dir).generic_string()] = {std::istreambuf_iterator<char>(in), {}};
  }
  return files;
}

// Criterion 8: the bundled sample pipelines are bit-identical across runs.
Outcome end_to_end_determinism() {
  const fs::path work = fs::temp_directory_path() / "crowdaug_acceptance";
  std::string detail;
  bool ok = true;
  for (const char* name : {"biocrowds_pipeline.json", "routesim_pipeline.json"}) {
    const auto cfg = load_config(fs::path(CROWDAUG_SOURCE_DIR) / "data" / "sample" / name);
    const fs::path a = work / (std::string(name) + ".a"), b = work / (std::string(name) + ".b");
    fs::remove_all(a);
    fs::remove_all(b);
    const auto summary = pipeline::run_pipeline(cfg, a, 1);
    pipeline::run_pipeline(cfg, b, 2);
    const auto sa = snapshot(a);
    const bool same = sa == snapshot(b);
    ok = ok && same;
    detail += std::string(detail.empty() ? "" : "; ") + name + ": " + std::to_string(sa.size()) + " files, " +
              std::to_string(summary.frames) + " frames, " + (same ? "identical" : "DIFFERENT");
  }
  fs::remove_all(work);
  return {ok, detail};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {"density mass conservation", 60, density_mass},
      {"ground-truth consistency", 60, ground_truth_consistency},
      {"parametrization fidelity", 60, parametrization_fidelity},
      {"biocrowds invariants", 120, biocrowds_invariants},
      {"routesim statistics", 120, routesim_statistics},
      {"composition arithmetic", 5, composition_arithmetic},
      {"metric oracle", 5, metric_oracle},
      {"end-to-end determinism", 180, end_to_end_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs <= c.budget_s;
    failures += !pass;
    std::printf("%s  %-28s %s [%.1f s of %.0f s]\n", pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs,
                c.budget_s);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
