#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "crowdaug/errors.hpp"
#include "crowdaug/framelog.hpp"
#include "crowdaug/planar.hpp"
#include "crowdaug/random.hpp"

namespace crowdaug::routesim {

// Walkable region (graph node).
struct Context {
  std::string id;
  ConvexPolygon region;
  bool is_entry = false;
  bool is_exit = false;
};

// Directed route between two contexts. Agents walk to the waypoint, which
// should sit on the shared boundary (or overlap) of `from` and `to`.
struct Route {
  std::string from;
  std::string to;
  Vec2 waypoint{};
};

struct NavGraph {
  std::vector<Context> contexts;
  std::vector<Route> routes;
  // Per decision context: probabilities aligned with its outgoing routes, in listing order.
  std::map<std::string, std::vector<double>> decisions;

  std::optional<std::size_t> find(const std::string& id) const {
    for (std::size_t i = 0; i < contexts.size(); ++i) {
      if (contexts[i].id == id) return i;
    }
    return std::nullopt;
  }

  std::vector<std::size_t> outgoing(const std::string& id) const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < routes.size(); ++r) {
      if (routes[r].from == id) out.push_back(r);
    }
    return out;
  }

  bool walkable(const Vec2& p, double tol = 1e-6) const {
    return std::any_of(contexts.begin(), contexts.end(),
                       [&](const Context& c) { return c.region.contains(p, tol); });
  }
};

struct Finding {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;
  bool valid() const { return findings.empty(); }
  bool has(const std::string& code) const {
    return std::any_of(findings.begin(), findings.end(), [&](const Finding& f) { return f.code == code; });
  }
  std::string summary() const {
    std::string s;
    for (const auto& f : findings) s += (s.empty() ? "" : "; ") + f.code + ": " + f.message;
    return s;
  }
};

inline ValidationReport validate_graph(const NavGraph& g) {
  ValidationReport report;
  auto add = [&](std::string code, std::string msg) { report.findings.push_back({std::move(code), std::move(msg)}); };

  std::set<std::string> ids;
  for (const auto& c : g.contexts) {
    if (!ids.insert(c.id).second) add("duplicate_context", "context '" + c.id + "' defined twice");
  }
  if (std::none_of(g.contexts.begin(), g.contexts.end(), [](const Context& c) { return c.is_entry; })) {
    add("no_entry", "graph has no entry context");
  }
  if (std::none_of(g.contexts.begin(), g.contexts.end(), [](const Context& c) { return c.is_exit; })) {
    add("no_exit", "graph has no exit context");
  }

  for (std::size_t r = 0; r < g.routes.size(); ++r) {
    const Route& route = g.routes[r];
    const auto from = g.find(route.from);
    const auto to = g.find(route.to);
    if (!from || !to) {
      add("dangling_edge", "route " + std::to_string(r) + " (" + route.from + " -> " + route.to +
                               ") references an unknown context");
      continue;
    }
    if (!g.contexts[*from].region.contains(route.waypoint, 1e-6) ||
        !g.contexts[*to].region.contains(route.waypoint, 1e-6)) {
      add("waypoint_outside", "waypoint of route " + route.from + " -> " + route.to +
                                  " is not on the boundary shared by both contexts");
    }
  }

  for (const auto& [id, probs] : g.decisions) {
    if (!g.find(id)) {
      add("dangling_decision", "decision distribution for unknown context '" + id + "'");
      continue;
    }
    const auto out = g.outgoing(id);
    if (probs.size() != out.size()) {
      add("distribution_size", "context '" + id + "' has " + std::to_string(out.size()) + " routes but " +
                                   std::to_string(probs.size()) + " probabilities");
    }
    double sum = 0.0;
    bool negative = false;
    for (double p : probs) {
      sum += p;
      negative = negative || p < 0.0;
    }
    if (negative || std::abs(sum - 1.0) > 1e-9) {
      add("distribution_not_normalized", "distribution at '" + id + "' sums to " + format_g9(sum));
    }
  }

  // Reachability over valid routes.
  std::map<std::string, std::vector<std::string>> adjacency;
  for (const auto& route : g.routes) {
    if (g.find(route.from) && g.find(route.to)) adjacency[route.from].push_back(route.to);
  }
  for (const auto& entry : g.contexts) {
    if (!entry.is_entry) continue;
    std::set<std::string> seen{entry.id};
    std::deque<std::string> queue{entry.id};
    while (!queue.empty()) {
      const std::string cur = queue.front();
      queue.pop_front();
      const Context& ctx = g.contexts[*g.find(cur)];
      if (!ctx.is_exit && adjacency[cur].empty()) {
        add("dead_end", "context '" + cur + "' is reachable but has no outgoing route");
      }
      for (const auto& next : adjacency[cur]) {
        if (seen.insert(next).second) queue.push_back(next);
      }
    }
    for (const auto& exit : g.contexts) {
      if (exit.is_exit && !seen.count(exit.id)) {
        add("unreachable_exit", "exit '" + exit.id + "' is unreachable from entry '" + entry.id + "'");
      }
    }
  }
  return report;
}

struct EntryPopulation {
  std::string context;
  std::int64_t count = 0;
  std::int64_t first_frame = 0;
  std::int64_t last_frame = 0;
};

struct PopulationPlan {
  std::vector<EntryPopulation> entries;
  double speed_min = 0.03;  // meters per frame
  double speed_max = 0.05;
};

enum class AgentState { pending, active, exited };

struct RouteAgent {
  std::int64_t agent_id = 0;
  Vec2 position{};
  double speed = 0.0;
  std::int64_t spawn_frame = 0;
  std::size_t context = 0;
  std::optional<std::size_t> route;
  AgentState state = AgentState::pending;
  std::optional<std::size_t> exit_context;
};

// Uniform point in a convex polygon via area-weighted fan triangulation.
inline Vec2 sample_in_polygon(const ConvexPolygon& poly, Rng& rng) {
  const auto& v = poly.vertices();
  std::vector<double> cumulative;
  double total = 0.0;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    total += 0.5 * cross(v[i] - v[0], v[i + 1] - v[0]);
    cumulative.push_back(total);
  }
  const double pick = uniform01(rng) * total;
  std::size_t tri = 0;
  while (tri + 1 < cumulative.size() && pick >= cumulative[tri]) ++tri;
  double a = uniform01(rng);
  double b = uniform01(rng);
  if (a + b > 1.0) {
    a = 1.0 - a;
    b = 1.0 - b;
  }
  return v[0] + (v[tri + 1] - v[0]) * a + (v[tri + 2] - v[0]) * b;
}

inline std::vector<RouteAgent> spawn(const PopulationPlan& plan, const NavGraph& g, std::uint64_t seed) {
  if (const auto report = validate_graph(g); !report.valid()) throw InvalidGraphError(report.summary());
  if (!(plan.speed_min > 0.0) || plan.speed_max < plan.speed_min) {
    throw InvalidGraphError("population speed range must be positive and ordered");
  }
  Rng rng(seed);
  std::vector<RouteAgent> agents;
  for (const auto& entry : plan.entries) {
    const auto ctx = g.find(entry.context);
    if (!ctx || !g.contexts[*ctx].is_entry) {
      throw InvalidGraphError("population entry '" + entry.context + "' is not an entry context");
    }
    if (entry.count < 0 || entry.last_frame < entry.first_frame || entry.first_frame < 0) {
      throw InvalidGraphError("population entry '" + entry.context + "' has an invalid count or window");
    }
    const auto window = static_cast<std::uint64_t>(entry.last_frame - entry.first_frame + 1);
    for (std::int64_t k = 0; k < entry.count; ++k) {
      RouteAgent a;
      a.agent_id = static_cast<std::int64_t>(agents.size());
      a.context = *ctx;
      a.position = sample_in_polygon(g.contexts[*ctx].region, rng);
      a.spawn_frame = entry.first_frame + static_cast<std::int64_t>(uniform_index(rng, window));
      a.speed = uniform(rng, plan.speed_min, plan.speed_max);
      agents.push_back(a);
    }
  }
  return agents;
}

struct RouteParams {
  double repulsion_gain = 0.05;   // k_r, meters per frame
  double repulsion_range = 0.6;   // d_0, meters
  double lateral_bias = 0.5;      // sidestep share of the repulsion, to the right of the heading
  double waypoint_tolerance = 0.1;
  std::int64_t max_frames = 20000;
};

struct FrameCounts {
  std::int64_t spawned = 0;
  std::int64_t active = 0;
  std::int64_t exited = 0;
};

struct RouteState {
  std::vector<RouteAgent> agents;
  std::int64_t frame = 0;
  FrameLog log;
  std::vector<FrameCounts> counts;
  Rng rng;
  std::vector<std::size_t> route_choices;  // times each route was taken

  bool finished() const {
    return std::all_of(agents.begin(), agents.end(), [](const RouteAgent& a) { return a.state == AgentState::exited; });
  }
};

inline RouteState make_state(std::vector<RouteAgent> agents, const NavGraph& g, std::uint64_t seed) {
  RouteState s{std::move(agents), 0, {}, {}, Rng(seed), std::vector<std::size_t>(g.routes.size(), 0)};
  return s;
}

namespace detail {

inline std::optional<std::size_t> choose_route(const NavGraph& g, std::size_t context, Rng& rng) {
  const auto out = g.outgoing(g.contexts[context].id);
  if (out.empty()) return std::nullopt;
  if (out.size() == 1) return out.front();
  const auto it = g.decisions.find(g.contexts[context].id);
  const double pick = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    acc += it != g.decisions.end() ? it->second[i] : 1.0 / static_cast<double>(out.size());
    if (pick < acc) return out[i];
  }
  return out.back();
}

// Moves the agent into the context its route leads to; returns false if it exited.
inline bool enter_next(RouteState& s, const NavGraph& g, RouteAgent& a) {
  for (std::size_t hops = 0; hops <= g.contexts.size(); ++hops) {
    if (g.contexts[a.context].is_exit) {
      a.state = AgentState::exited;
      a.exit_context = a.context;
      return false;
    }
    a.route = choose_route(g, a.context, s.rng);
    if (!a.route) return true;
    ++s.route_choices[*a.route];
    if (norm(g.routes[*a.route].waypoint - a.position) > 0.0) return true;
    a.context = *g.find(g.routes[*a.route].to);
  }
  return true;
}

}  // namespace detail

// One frame: activate, log, seek + repulsion, transition at waypoints.
inline void step_route(RouteState& s, const NavGraph& g, const RouteParams& params) {
  for (auto& a : s.agents) {
    if (a.state == AgentState::pending && a.spawn_frame <= s.frame) {
      a.state = AgentState::active;
      a.route.reset();
    }
  }

  auto& entries = s.log.frames.emplace_back();
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    if (s.agents[i].state == AgentState::active) {
      active.push_back(i);
      entries.push_back({s.agents[i].agent_id, lift(s.agents[i].position)});
    }
  }

  // Route decisions happen against the logged positions. An agent enters the
  // next context at the waypoint or as soon as it has crossed out of the
  // current one into the next, so a crowd at the waypoint cannot jam it.
  for (std::size_t i : active) {
    RouteAgent& a = s.agents[i];
    if (!a.route) {
      if (!detail::enter_next(s, g, a)) continue;
    } else if (const std::size_t to = *g.find(g.routes[*a.route].to);
               g.contexts[to].region.contains(a.position, 1e-6) &&
               (norm(g.routes[*a.route].waypoint - a.position) <= params.waypoint_tolerance ||
                !g.contexts[a.context].region.contains(a.position, 0.0))) {
      a.context = to;
      if (!detail::enter_next(s, g, a)) continue;
    }
  }

  // Neighbour lookup on a hash grid with cell size d_0.
  const double d0 = params.repulsion_range;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> grid;
  auto key = [d0](double x, double y) {
    return (static_cast<std::int64_t>(std::floor(x / d0)) << 32) ^
           (static_cast<std::int64_t>(std::floor(y / d0)) & 0xffffffff);
  };
  for (std::size_t i : active) {
    if (s.agents[i].state == AgentState::active) grid[key(s.agents[i].position.x, s.agents[i].position.y)].push_back(i);
  }

  std::vector<Vec2> next(s.agents.size());
  for (std::size_t i : active) {
    const RouteAgent& a = s.agents[i];
    if (a.state != AgentState::active) continue;
    next[i] = a.position;
    if (!a.route) continue;
    const Vec2 to_wp = g.routes[*a.route].waypoint - a.position;
    const double wp_dist = norm(to_wp);
    const Vec2 heading = wp_dist > 0.0 ? to_wp * (1.0 / wp_dist) : Vec2{};
    const Vec2 seek = heading * std::min(a.speed, wp_dist);
    const Vec2 right{-heading.y, heading.x};

    Vec2 repulsion{};
    const auto cx = static_cast<std::int64_t>(std::floor(a.position.x / d0));
    const auto cy = static_cast<std::int64_t>(std::floor(a.position.y / d0));
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        const auto it = grid.find(((cx + dx) << 32) ^ ((cy + dy) & 0xffffffff));
        if (it == grid.end()) continue;
        for (std::size_t j : it->second) {
          if (j == i) continue;
          const Vec2 away = a.position - s.agents[j].position;
          const double d = norm(away);
          if (d >= d0) continue;
          // Coincident agents separate along +x / -x by id order.
          const Vec2 unit = d > 0.0 ? away * (1.0 / d) : Vec2{a.agent_id < s.agents[j].agent_id ? -1.0 : 1.0, 0.0};
          const double magnitude = params.repulsion_gain * (1.0 - d / d0);
          repulsion += unit * magnitude + right * (magnitude * params.lateral_bias);
        }
      }
    }
    const Vec2 candidate = a.position + clamp_length(seek + repulsion, a.speed);
    if (g.walkable(candidate)) {
      next[i] = candidate;
    } else if (g.walkable(a.position + seek)) {
      next[i] = a.position + seek;
    }
  }
  for (std::size_t i : active) {
    if (s.agents[i].state == AgentState::active) s.agents[i].position = next[i];
  }

  FrameCounts c;
  for (const auto& a : s.agents) {
    if (a.state != AgentState::pending) ++c.spawned;
    if (a.state == AgentState::active) ++c.active;
    if (a.state == AgentState::exited) ++c.exited;
  }
  s.counts.push_back(c);
  ++s.frame;
}

struct RouteRun {
  RouteState state;
  bool terminated = true;
};

inline RouteRun run(const NavGraph& g, const PopulationPlan& plan, const RouteParams& params, std::uint64_t seed) {
  auto agents = spawn(plan, g, derive_seed(seed, "routesim.spawn"));
  RouteRun result{make_state(std::move(agents), g, derive_seed(seed, "routesim.decisions")), true};
  while (!result.state.finished() && result.state.frame < params.max_frames) step_route(result.state, g, params);
  result.terminated = result.state.finished();
  return result;
}

struct Scenario {
  NavGraph graph;
  PopulationPlan plan;
  RouteParams params;
  std::uint64_t seed = 0;
};

inline Vec2 parse_vec2(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("expected a 2D point [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Scenario parse_scenario(const nlohmann::json& j) {
  Scenario s;
  try {
    for (const auto& c : j.at("contexts")) {
      std::vector<Vec2> verts;
      for (const auto& v : c.at("vertices")) verts.push_back(parse_vec2(v));
      s.graph.contexts.push_back({c.at("id").get<std::string>(), ConvexPolygon(std::move(verts)),
                                  c.value("entry", false), c.value("exit", false)});
    }
    for (const auto& e : j.value("edges", nlohmann::json::array())) {
      s.graph.routes.push_back({e.at("from").get<std::string>(), e.at("to").get<std::string>(),
                                parse_vec2(e.at("waypoint"))});
    }
    const auto decisions = j.value("decisions", nlohmann::json::object());
    for (const auto& [id, probs] : decisions.items()) {
      s.graph.decisions[id] = probs.get<std::vector<double>>();
    }
    for (const auto& p : j.value("population", nlohmann::json::array())) {
      const auto window = p.value("spawn_window", std::vector<std::int64_t>{0, 0});
      if (window.size() != 2) throw ConfigError("spawn_window must be [first, last]");
      s.plan.entries.push_back({p.at("context").get<std::string>(), p.at("count").get<std::int64_t>(), window[0],
                                window[1]});
    }
    if (j.contains("speed_range")) {
      const auto range = j.at("speed_range").get<std::vector<double>>();
      if (range.size() != 2) throw ConfigError("speed_range must be [min, max]");
      s.plan.speed_min = range[0];
      s.plan.speed_max = range[1];
    }
    if (j.contains("params")) {
      const auto& p = j.at("params");
      s.params.repulsion_gain = p.value("repulsion_gain", s.params.repulsion_gain);
      s.params.repulsion_range = p.value("repulsion_range", s.params.repulsion_range);
      s.params.lateral_bias = p.value("lateral_bias", s.params.lateral_bias);
      s.params.waypoint_tolerance = p.value("waypoint_tolerance", s.params.waypoint_tolerance);
      s.params.max_frames = p.value("max_frames", s.params.max_frames);
    }
    s.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  if (!(s.params.repulsion_range > 0.0) || s.params.repulsion_gain < 0.0 || !(s.params.waypoint_tolerance > 0.0)) {
    throw ConfigError("scenario: repulsion_range and waypoint_tolerance must be > 0, repulsion_gain >= 0");
  }
  return s;
}

}  // namespace crowdaug::routesim
