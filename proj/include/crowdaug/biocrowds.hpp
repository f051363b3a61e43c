#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "crowdaug/errors.hpp"
#include "crowdaug/framelog.hpp"
#include "crowdaug/planar.hpp"
#include "crowdaug/random.hpp"
#include "crowdaug/trajectory.hpp"

namespace crowdaug::biocrowds {

// Ground markers bucketed on a uniform grid for radius queries.
class MarkerField {
 public:
  MarkerField(std::vector<Vec2> markers, const Rect& bounds, double cell_size, double density)
      : markers_(std::move(markers)), bounds_(bounds), cell_size_(cell_size), density_(density) {
    if (!(cell_size > 0.0)) throw PreconditionError("marker grid cell size must be positive");
    nx_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(bounds.width() / cell_size)));
    ny_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(bounds.height() / cell_size)));
    buckets_.resize(static_cast<std::size_t>(nx_ * ny_));
    for (std::size_t i = 0; i < markers_.size(); ++i) {
      buckets_[bucket_of(markers_[i])].push_back(static_cast<std::uint32_t>(i));
    }
  }

  const std::vector<Vec2>& markers() const { return markers_; }
  const Rect& bounds() const { return bounds_; }
  double cell_size() const { return cell_size_; }
  double density() const { return density_; }
  std::size_t size() const { return markers_.size(); }

  std::int64_t cell_x(double x) const {
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((x - bounds_.xmin) / cell_size_)), 0, nx_ - 1);
  }
  std::int64_t cell_y(double y) const {
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((y - bounds_.ymin) / cell_size_)), 0, ny_ - 1);
  }
  std::size_t bucket_of(const Vec2& p) const { return static_cast<std::size_t>(cell_y(p.y) * nx_ + cell_x(p.x)); }
  const std::vector<std::uint32_t>& bucket(std::size_t index) const { return buckets_[index]; }

  // Calls fn(marker_index, distance) for every marker within `radius` of p.
  template <typename Fn>
  void for_each_within(const Vec2& p, double radius, Fn&& fn) const {
    const std::int64_t x0 = cell_x(p.x - radius), x1 = cell_x(p.x + radius);
    const std::int64_t y0 = cell_y(p.y - radius), y1 = cell_y(p.y + radius);
    for (std::int64_t cy = y0; cy <= y1; ++cy) {
      for (std::int64_t cx = x0; cx <= x1; ++cx) {
        for (std::uint32_t idx : buckets_[static_cast<std::size_t>(cy * nx_ + cx)]) {
          const double d = norm(markers_[idx] - p);
          if (d <= radius) fn(idx, d);
        }
      }
    }
  }

 private:
  std::vector<Vec2> markers_;
  Rect bounds_;
  double cell_size_;
  double density_;
  std::int64_t nx_ = 1;
  std::int64_t ny_ = 1;
  std::vector<std::vector<std::uint32_t>> buckets_;
};

// Stratified jittered sampling: one marker per subcell of area 1/density,
// dropped if it falls outside the bounds or inside an obstacle polygon.
inline MarkerField seed_markers(const Rect& bounds, double density, std::uint64_t seed,
                                const std::vector<Polygon>& obstacles = {}, double cell_size = 1.0) {
  if (!(bounds.width() > 0.0) || !(bounds.height() > 0.0)) {
    throw PreconditionError("marker bounds must have positive area");
  }
  if (!(density > 0.0)) throw PreconditionError("marker density must be positive");
  const double side = 1.0 / std::sqrt(density);
  const auto nx = static_cast<std::int64_t>(std::ceil(bounds.width() / side - 1e-9));
  const auto ny = static_cast<std::int64_t>(std::ceil(bounds.height() / side - 1e-9));
  Rng rng(seed);
  std::vector<Vec2> markers;
  markers.reserve(static_cast<std::size_t>(nx * ny));
  for (std::int64_t j = 0; j < ny; ++j) {
    for (std::int64_t i = 0; i < nx; ++i) {
      const double jx = uniform01(rng);
      const double jy = uniform01(rng);
      const Vec2 p{bounds.xmin + (static_cast<double>(i) + jx) * side,
                   bounds.ymin + (static_cast<double>(j) + jy) * side};
      if (!bounds.contains(p)) continue;
      if (std::any_of(obstacles.begin(), obstacles.end(), [&](const Polygon& o) { return o.contains(p); })) {
        continue;
      }
      markers.push_back(p);
    }
  }
  return MarkerField(std::move(markers), bounds, cell_size, density);
}

// Marker weighting strategy: receives the goal offset g and marker offset v.
using MarkerWeight = double (*)(const Vec2& goal_offset, const Vec2& marker_offset);

// (1 + cos(g, v)) / (1 + |v|): favours markers aligned with the goal and near the agent.
inline double goal_alignment_weight(const Vec2& g, const Vec2& v) {
  const double gv = norm(g) * norm(v);
  const double cos_theta = gv > 0.0 ? dot(g, v) / gv : 0.0;
  return (1.0 + cos_theta) / (1.0 + norm(v));
}

struct SimConfig {
  double perception_radius = 1.0;
  double marker_density = 4.0;
  double arrival_tolerance = 0.15;
  std::int64_t max_frames = 10000;
  Rect world_bounds{0.0, 0.0, 10.0, 10.0};
  std::vector<Polygon> obstacles;
  std::uint64_t seed = 0;
  double frame_rate = 30.0;
  MarkerWeight weight = goal_alignment_weight;

  void validate() const {
    if (!(perception_radius > 0.0)) throw ConfigError("perception_radius must be > 0");
    if (!(marker_density > 0.0)) throw ConfigError("marker_density must be > 0");
    if (!(arrival_tolerance > 0.0)) throw ConfigError("arrival_tolerance must be > 0");
    if (max_frames < 0) throw ConfigError("max_frames must be >= 0");
    if (!(world_bounds.width() > 0.0) || !(world_bounds.height() > 0.0)) {
      throw ConfigError("world_bounds must have positive area");
    }
  }
};

struct SimAgent {
  std::int64_t agent_id = 0;
  Vec2 position{};
  std::size_t spec_index = 0;
  bool active = true;
  bool warned_late = false;
};

using Assignment = std::map<std::int64_t, std::vector<std::uint32_t>>;

// Each marker within R of some agent goes to its nearest agent; distance ties
// (within 1e-12 m) go to the lower agent id. Every agent gets an entry.
inline Assignment assign_markers(const MarkerField& field, const std::vector<SimAgent>& agents, double radius) {
  constexpr double kTie = 1e-12;
  constexpr std::int64_t kNone = -1;
  struct Claim {
    double distance;
    std::int64_t owner;
    std::size_t slot;
  };
  std::vector<Claim> claims(field.size(), Claim{0.0, kNone, 0});

  std::vector<std::size_t> order(agents.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return agents[a].agent_id < agents[b].agent_id; });

  for (std::size_t slot : order) {
    const SimAgent& agent = agents[slot];
    field.for_each_within(agent.position, radius, [&](std::uint32_t idx, double d) {
      Claim& c = claims[idx];
      if (c.owner == kNone || d < c.distance - kTie ||
          (std::abs(d - c.distance) < kTie && agent.agent_id < c.owner)) {
        c = {d, agent.agent_id, slot};
      }
    });
  }

  Assignment result;
  for (const auto& agent : agents) result[agent.agent_id];
  for (std::size_t idx = 0; idx < claims.size(); ++idx) {
    if (claims[idx].owner != kNone) result[claims[idx].owner].push_back(static_cast<std::uint32_t>(idx));
  }
  return result;
}

struct Motion {
  Vec2 velocity{};  // meters per frame
  bool arrived = false;
};

// Weighted sum of marker offsets, clamped to the agent's speed and to the
// remaining distance to the goal.
inline Motion compute_motion(const Vec2& position, double speed, const std::vector<std::uint32_t>& assigned,
                             const Vec2& goal, const MarkerField& field, double arrival_tolerance,
                             MarkerWeight weight = goal_alignment_weight) {
  const Vec2 g = goal - position;
  const double goal_distance = norm(g);
  if (goal_distance <= arrival_tolerance) return {{}, true};
  if (assigned.empty()) return {};

  double total = 0.0;
  std::vector<double> w(assigned.size());
  for (std::size_t k = 0; k < assigned.size(); ++k) {
    w[k] = weight(g, field.markers()[assigned[k]] - position);
    total += w[k];
  }
  if (!(total > 0.0)) return {};
  Vec2 m{};
  for (std::size_t k = 0; k < assigned.size(); ++k) {
    m += (field.markers()[assigned[k]] - position) * (w[k] / total);
  }
  return {clamp_length(m, std::min(speed, goal_distance)), false};
}

struct SimWarning {
  std::string kind;  // "late_agent" or "non_termination"
  std::int64_t agent_id = -1;
  std::int64_t frame = 0;
  std::string message;
};

struct RunResult {
  FrameLog log;
  std::vector<SimWarning> warnings;
  bool terminated = true;
  std::size_t marker_count = 0;
};

// Single-owner simulation state, advanced one frame at a time by step().
class Simulation {
 public:
  Simulation(std::vector<AgentSpec> specs, SimConfig config)
      : specs_(std::move(specs)),
        config_(std::move(config)),
        field_((config_.validate(), seed_markers(config_.world_bounds, config_.marker_density, config_.seed,
                                                 config_.obstacles, config_.perception_radius))) {
    log_.frame_rate = config_.frame_rate;
    for (const auto& s : specs_) {
      if (!(s.speed >= 0.0) || s.spawn_frame > s.despawn_frame || s.spawn_frame < 0) {
        throw PreconditionError("invalid agent spec " + std::to_string(s.agent_id));
      }
    }
    spawn_order_.resize(specs_.size());
    for (std::size_t i = 0; i < spawn_order_.size(); ++i) spawn_order_[i] = i;
    std::stable_sort(spawn_order_.begin(), spawn_order_.end(), [&](std::size_t a, std::size_t b) {
      return specs_[a].spawn_frame < specs_[b].spawn_frame;
    });
  }

  const MarkerField& field() const { return field_; }
  const FrameLog& log() const { return log_; }
  const std::vector<SimAgent>& agents() const { return agents_; }
  const std::vector<SimWarning>& warnings() const { return warnings_; }
  const Assignment& last_assignment() const { return last_assignment_; }
  std::int64_t frame() const { return frame_; }
  const SimConfig& config() const { return config_; }

  bool finished() const { return next_spawn_ == spawn_order_.size() && agents_.empty(); }

  void step() {
    if (frame_ >= config_.max_frames) throw PreconditionError("step past max_frames");
    while (next_spawn_ < spawn_order_.size() && specs_[spawn_order_[next_spawn_]].spawn_frame <= frame_) {
      const std::size_t idx = spawn_order_[next_spawn_++];
      agents_.push_back({specs_[idx].agent_id, ground(specs_[idx].start), idx, true, false});
    }

    auto& entries = log_.frames.emplace_back();
    entries.reserve(agents_.size());
    for (const auto& a : agents_) entries.push_back({a.agent_id, lift(a.position)});

    last_assignment_ = assign_markers(field_, agents_, config_.perception_radius);
    std::vector<Vec2> velocity(agents_.size());
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      const AgentSpec& spec = specs_[agents_[i].spec_index];
      const Motion motion = compute_motion(agents_[i].position, spec.speed, last_assignment_.at(agents_[i].agent_id),
                                           ground(spec.goal), field_, config_.arrival_tolerance, config_.weight);
      agents_[i].active = !motion.arrived;
      velocity[i] = motion.velocity;
    }
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      agents_[i].position += velocity[i];
      const AgentSpec& spec = specs_[agents_[i].spec_index];
      const double late_after = static_cast<double>(spec.despawn_frame) +
                                0.25 * static_cast<double>(spec.despawn_frame - spec.spawn_frame);
      if (agents_[i].active && !agents_[i].warned_late && static_cast<double>(frame_) > late_after) {
        agents_[i].warned_late = true;
        warnings_.push_back({"late_agent", agents_[i].agent_id, frame_,
                             "agent still active more than 25% past its despawn frame " +
                                 std::to_string(spec.despawn_frame)});
      }
    }
    std::erase_if(agents_, [](const SimAgent& a) { return !a.active; });
    ++frame_;
  }

  RunResult run() {
    while (!finished() && frame_ < config_.max_frames) step();
    RunResult result{log_, warnings_, finished(), field_.size()};
    if (!result.terminated) {
      result.warnings.push_back({"non_termination", -1, frame_,
                                 std::to_string(agents_.size() + (spawn_order_.size() - next_spawn_)) +
                                     " agents still active or pending at max_frames"});
    }
    return result;
  }

 private:
  std::vector<AgentSpec> specs_;
  SimConfig config_;
  MarkerField field_;
  std::vector<std::size_t> spawn_order_;
  std::size_t next_spawn_ = 0;
  std::vector<SimAgent> agents_;
  std::vector<SimWarning> warnings_;
  Assignment last_assignment_;
  FrameLog log_;
  std::int64_t frame_ = 0;
};

inline RunResult run(std::vector<AgentSpec> specs, SimConfig config) {
  return Simulation(std::move(specs), std::move(config)).run();
}

inline nlohmann::json to_json(const SimWarning& w) {
  return {{"kind", w.kind}, {"agent_id", w.agent_id}, {"frame", w.frame}, {"message", w.message}};
}

inline nlohmann::json echo_config(const SimConfig& c) {
  nlohmann::json obstacles = nlohmann::json::array();
  for (const auto& poly : c.obstacles) {
    nlohmann::json verts = nlohmann::json::array();
    for (const auto& v : poly.vertices) verts.push_back({v.x, v.y});
    obstacles.push_back(verts);
  }
  return {{"perception_radius", c.perception_radius},
          {"marker_density", c.marker_density},
          {"arrival_tolerance", c.arrival_tolerance},
          {"max_frames", c.max_frames},
          {"world_bounds", {c.world_bounds.xmin, c.world_bounds.ymin, c.world_bounds.xmax, c.world_bounds.ymax}},
          {"obstacles", obstacles},
          {"frame_rate", c.frame_rate},
          {"weight", "goal_alignment"}};
}

}  // namespace crowdaug::biocrowds
