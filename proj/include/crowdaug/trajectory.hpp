#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "crowdaug/csv.hpp"
#include "crowdaug/errors.hpp"
#include "crowdaug/geometry.hpp"
#include "crowdaug/random.hpp"

namespace crowdaug {

struct TrackSample {
  std::int64_t frame = 0;
  ImagePoint position{};
};

// One tracked person; samples strictly increasing in frame.
struct TrackedTrajectory {
  std::int64_t person_id = 0;
  std::vector<TrackSample> samples;

  std::int64_t first_frame() const { return samples.front().frame; }
  std::int64_t last_frame() const { return samples.back().frame; }
};

// Simulation parameters for one virtual pedestrian, taken from one real track.
struct AgentSpec {
  std::int64_t agent_id = 0;
  WorldPoint start{};
  WorldPoint goal{};
  double speed = 0.0;  // meters per frame
  std::int64_t spawn_frame = 0;
  std::int64_t despawn_frame = 0;
  std::int64_t source_person_id = 0;

  friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

// Parses `frame,id,u,v` CSV (LF or CRLF). The annotation header
// `frame,agent_id,u,v` is accepted too so generated ground truth can be fed back.
inline std::vector<TrackedTrajectory> parse_tracks(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != 4 || csv::trim(fields[0]) != "frame" ||
        (csv::trim(fields[1]) != "id" && csv::trim(fields[1]) != "agent_id") ||
        csv::trim(fields[2]) != "u" || csv::trim(fields[3]) != "v") {
      throw ParseError("expected header 'frame,id,u,v', got '" + line + "'", line_no);
    }
    have_header = true;
    break;
  }
  if (!have_header) throw ParseError("missing header 'frame,id,u,v'");

  std::map<std::int64_t, std::vector<TrackSample>> by_id;
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != 4) {
      throw ParseError("expected 4 fields, got " + std::to_string(fields.size()), line_no);
    }
    const std::int64_t frame = csv::parse_int(fields[0], line_no, "frame");
    const std::int64_t id = csv::parse_int(fields[1], line_no, "id");
    const double u = csv::parse_double(fields[2], line_no, "u");
    const double v = csv::parse_double(fields[3], line_no, "v");
    if (frame < 0) throw ParseError("frame index must be non-negative", line_no);
    if (!seen.emplace(frame, id).second) {
      throw DuplicateRecordError("line " + std::to_string(line_no) + ": repeated record (frame " +
                                 std::to_string(frame) + ", id " + std::to_string(id) + ")");
    }
    by_id[id].push_back({frame, {u, v}});
  }

  std::vector<TrackedTrajectory> tracks;
  tracks.reserve(by_id.size());
  for (auto& [id, samples] : by_id) {
    std::stable_sort(samples.begin(), samples.end(),
                     [](const TrackSample& a, const TrackSample& b) { return a.frame < b.frame; });
    for (std::size_t i = 1; i < samples.size(); ++i) {
      if (samples[i].frame <= samples[i - 1].frame) {
        throw NonMonotonicError("track " + std::to_string(id) + " has tied frames at " +
                                std::to_string(samples[i].frame));
      }
    }
    tracks.push_back({id, std::move(samples)});
  }
  return tracks;
}

// Mean per-frame path length in world units: total polyline length / frame span.
inline double track_speed(const TrackedTrajectory& track, const GroundMapping& mapping) {
  const std::int64_t span = track.last_frame() - track.first_frame();
  if (span <= 0) return 0.0;
  double length = 0.0;
  WorldPoint prev = pixels_to_meters(mapping, track.samples.front().position);
  for (std::size_t i = 1; i < track.samples.size(); ++i) {
    const WorldPoint cur = pixels_to_meters(mapping, track.samples[i].position);
    length += distance(prev, cur);
    prev = cur;
  }
  return length / static_cast<double>(span);
}

// Number of agents for a replication factor, rounding half away from zero.
inline std::size_t replicated_count(double replication, std::size_t tracks) {
  return static_cast<std::size_t>(std::llround(replication * static_cast<double>(tracks)));
}

// One spec per track (n_B = n at replication 1); extra replicas cycle over the
// tracks and get start/goal jittered inside a disc of radius jitter_m.
inline std::vector<AgentSpec> derive_agent_specs(const std::vector<TrackedTrajectory>& tracks,
                                                 const GroundMapping& mapping, double replication,
                                                 double jitter_m, std::uint64_t seed) {
  if (!(replication >= 0.0) || !std::isfinite(replication)) {
    throw PreconditionError("replication must be a finite value >= 0");
  }
  if (!(jitter_m >= 0.0)) throw PreconditionError("jitter must be >= 0");
  const std::size_t count = tracks.empty() ? 0 : replicated_count(replication, tracks.size());
  if (replication > 0.0 && tracks.empty()) {
    throw EmptyInputError("cannot derive agents from an empty track set");
  }

  std::vector<AgentSpec> specs;
  specs.reserve(count);
  Rng rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    const TrackedTrajectory& track = tracks[k % tracks.size()];
    if (track.samples.empty()) throw PreconditionError("track without samples");
    AgentSpec spec;
    spec.agent_id = static_cast<std::int64_t>(k);
    spec.source_person_id = track.person_id;
    spec.start = pixels_to_meters(mapping, track.samples.front().position);
    spec.goal = pixels_to_meters(mapping, track.samples.back().position);
    spec.speed = track_speed(track, mapping);
    spec.spawn_frame = track.first_frame();
    spec.despawn_frame = track.last_frame();
    if (k >= tracks.size() && jitter_m > 0.0) {
      const bool stationary = track.samples.size() == 1;
      const auto [sx, sy] = uniform_disc(rng, jitter_m);
      spec.start.x += sx;
      spec.start.y += sy;
      if (stationary) {
        spec.goal = spec.start;
      } else {
        const auto [gx, gy] = uniform_disc(rng, jitter_m);
        spec.goal.x += gx;
        spec.goal.y += gy;
      }
    }
    specs.push_back(spec);
  }
  return specs;
}

inline void to_json(nlohmann::json& j, const AgentSpec& s) {
  j = nlohmann::json{{"agent_id", s.agent_id},
                     {"start", {s.start.x, s.start.y, s.start.z}},
                     {"goal", {s.goal.x, s.goal.y, s.goal.z}},
                     {"speed", s.speed},
                     {"spawn_frame", s.spawn_frame},
                     {"despawn_frame", s.despawn_frame},
                     {"source_person_id", s.source_person_id}};
}

inline void from_json(const nlohmann::json& j, AgentSpec& s) {
  const auto point = [](const nlohmann::json& a) {
    if (!a.is_array() || a.size() != 3) throw ConfigError("agent spec point must be [x, y, z]");
    return WorldPoint{a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
  };
  s.agent_id = j.at("agent_id").get<std::int64_t>();
  s.start = point(j.at("start"));
  s.goal = point(j.at("goal"));
  s.speed = j.at("speed").get<double>();
  s.spawn_frame = j.at("spawn_frame").get<std::int64_t>();
  s.despawn_frame = j.at("despawn_frame").get<std::int64_t>();
  s.source_person_id = j.value("source_person_id", s.agent_id);
  if (!(s.speed >= 0.0) || s.spawn_frame > s.despawn_frame || s.start.z != 0.0 || s.goal.z != 0.0) {
    throw ConfigError("agent spec " + std::to_string(s.agent_id) + " violates its invariants");
  }
}

}  // namespace crowdaug
