#pragma once

// Scenario builders and oracles shared by the unit tests and the acceptance binary.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "crowdaug/biocrowds.hpp"
#include "crowdaug/render.hpp"
#include "crowdaug/routesim.hpp"
#include "crowdaug/trajectory.hpp"

namespace crowdaug::support {

// n agents with random starts and goals inside a square field, all endpoints at
// least `min_gap` apart and `margin` from the field border.
inline std::vector<AgentSpec> random_agents(std::size_t n, std::uint64_t seed, double side = 10.0,
                                            double margin = 0.75, double min_gap = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(margin, side - margin);
  std::uniform_real_distribution<double> speed(0.03, 0.05);
  std::vector<WorldPoint> taken;
  const auto fresh = [&] {
    while (true) {
      const WorldPoint p{coord(rng), coord(rng), 0.0};
      bool ok = true;
      for (const auto& q : taken) ok = ok && distance(p, q) >= min_gap;
      if (ok) {
        taken.push_back(p);
        return p;
      }
    }
  };
  std::vector<AgentSpec> specs;
  for (std::size_t i = 0; i < n; ++i) {
    AgentSpec s;
    s.agent_id = static_cast<std::int64_t>(i);
    s.source_person_id = s.agent_id;
    s.start = fresh();
    s.goal = fresh();
    s.speed = speed(rng);
    s.spawn_frame = static_cast<std::int64_t>(rng() % 30);
    s.despawn_frame = s.spawn_frame + static_cast<std::int64_t>(std::ceil(distance(s.start, s.goal) / s.speed));
    specs.push_back(s);
  }
  return specs;
}

inline biocrowds::SimConfig open_field(std::uint64_t seed, double side = 10.0) {
  biocrowds::SimConfig c;
  c.world_bounds = {0.0, 0.0, side, side};
  c.seed = seed;
  c.max_frames = 3000;
  return c;
}

// Minimum pairwise distance among the agents logged in one frame (inf if < 2).
inline double min_separation(const std::vector<AgentPosition>& frame) {
  double best = INFINITY;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    for (std::size_t j = i + 1; j < frame.size(); ++j) {
      best = std::min(best, distance(frame[i].position, frame[j].position));
    }
  }
  return best;
}

inline routesim::Context box(std::string id, double x0, double y0, double x1, double y1, bool entry = false,
                             bool exit = false) {
  return {std::move(id), ConvexPolygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}), entry, exit};
}

// Entry box -> hall (decision node) -> one of two exits.
inline routesim::NavGraph fork_graph(double p_north = 0.5) {
  routesim::NavGraph g;
  g.contexts = {box("entry", 0, 0, 2, 4, true), box("hall", 2, 0, 6, 4), box("north", 6, 0, 8, 2, false, true),
                box("south", 6, 2, 8, 4, false, true)};
  g.routes = {{"entry", "hall", {2, 2}}, {"hall", "north", {6, 1}}, {"hall", "south", {6, 3}}};
  g.decisions["hall"] = {p_north, 1.0 - p_north};
  return g;
}

// Coverage-weighted centroid of the pixels inside `window` (x0, y0, x1, y1
// inclusive) that differ from `background`, by independent pixel scan. The
// weight is the fraction of the way each pixel moved from background to
// `color`, estimated from the channel with the largest contrast.
struct Centroid {
  double u = 0.0;
  double v = 0.0;
  double mass = 0.0;
};

inline Centroid intensity_centroid(const FrameImage& img, Rgb background, Rgb color, int x0, int y0, int x1,
                                   int y1) {
  const int dr = color.r - background.r, dg = color.g - background.g, db = color.b - background.b;
  int channel = 0, contrast = std::abs(dr);
  if (std::abs(dg) > contrast) channel = 1, contrast = std::abs(dg);
  if (std::abs(db) > contrast) channel = 2, contrast = std::abs(db);
  const int delta[3] = {dr, dg, db};
  const int base[3] = {background.r, background.g, background.b};
  Centroid c;
  for (int y = std::max(0, y0); y <= std::min(img.height - 1, y1); ++y) {
    for (int x = std::max(0, x0); x <= std::min(img.width - 1, x1); ++x) {
      const Rgb p = img.at(x, y);
      const int value[3] = {p.r, p.g, p.b};
      const double w = static_cast<double>(value[channel] - base[channel]) / delta[channel];
      if (w <= 0.0) continue;
      c.u += w * (x + 0.5);
      c.v += w * (y + 0.5);
      c.mass += w;
    }
  }
  if (c.mass > 0.0) {
    c.u /= c.mass;
    c.v /= c.mass;
  }
  return c;
}

}  // namespace crowdaug::support
