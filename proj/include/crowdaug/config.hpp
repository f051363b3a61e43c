#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "crowdaug/biocrowds.hpp"
#include "crowdaug/dataset.hpp"
#include "crowdaug/density.hpp"
#include "crowdaug/errors.hpp"
#include "crowdaug/geometry.hpp"
#include "crowdaug/render.hpp"
#include "crowdaug/routesim.hpp"

namespace crowdaug {

enum class SimulatorKind { biocrowds, routesim };

// Everything one pipeline run needs. Relative paths resolve against base_dir
// (the directory holding the config file).
struct PipelineConfig {
  std::filesystem::path base_dir;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  SimulatorKind simulator = SimulatorKind::biocrowds;

  std::optional<std::filesystem::path> tracks;
  double replication = 1.0;
  double jitter_m = 0.1;
  biocrowds::SimConfig biocrowds;
  bool world_bounds_given = false;

  std::optional<routesim::Scenario> scenario;
  nlohmann::json scenario_json;

  std::optional<CameraModel> camera;
  GroundMapping mapping{1.0, {}};
  RenderConfig render;
  KernelParams kernel;
  bool kernel_defaults = true;
  MixSpec mix;
  std::optional<std::filesystem::path> real_manifest;

  std::filesystem::path resolve(const std::filesystem::path& p) const {
    return p.is_absolute() ? p : (base_dir / p).lexically_normal();
  }

  const CameraModel& camera_model() const {
    if (!camera) throw ConfigError("config has no camera");
    return *camera;
  }
};

namespace detail {

inline Rgb parse_rgb(const nlohmann::json& j) {
  const auto v = j.get<std::vector<int>>();
  if (v.size() != 3) throw ConfigError("colors are [r, g, b]");
  for (int c : v) {
    if (c < 0 || c > 255) throw ConfigError("color components must lie in [0, 255]");
  }
  return {static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]), static_cast<std::uint8_t>(v[2])};
}

inline CameraModel parse_camera(const nlohmann::json& j, const GroundMapping& mapping) {
  const int w = j.at("image_width").get<int>();
  const int h = j.at("image_height").get<int>();
  if (j.contains("P")) {
    const auto rows = j.at("P").get<std::vector<double>>();
    return CameraModel::from_matrix(rows, w, h);
  }
  if (j.contains("top_view")) {
    return top_view_camera(mapping, j.at("top_view").at("height_m").get<double>(), w, h);
  }
  const auto& pose = j.at("pose");
  const auto rotation = pose.at("rotation").get<std::vector<double>>();
  const auto center = pose.at("center").get<std::vector<double>>();
  if (center.size() != 3) throw ConfigError("camera.pose.center must be [x, y, z]");
  return CameraModel::from_intrinsics(j.at("focal_px").get<double>(), j.at("cx").get<double>(),
                                      j.at("cy").get<double>(), rotation, {center[0], center[1], center[2]}, w, h);
}

}  // namespace detail

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline PipelineConfig parse_config(const nlohmann::json& j, std::filesystem::path base_dir) {
  PipelineConfig c;
  c.base_dir = std::move(base_dir);
  try {
    c.seed = j.value("seed", std::uint64_t{0});
    c.output_dir = j.value("output_dir", std::string("out"));
    const auto sim = j.value("simulator", std::string("biocrowds"));
    if (sim == "biocrowds") {
      c.simulator = SimulatorKind::biocrowds;
    } else if (sim == "routesim") {
      c.simulator = SimulatorKind::routesim;
    } else {
      throw ConfigError("unknown simulator '" + sim + "'");
    }
    if (j.contains("tracks")) c.tracks = j.at("tracks").get<std::string>();

    if (j.contains("agents")) {
      c.replication = j.at("agents").value("replication", c.replication);
      c.jitter_m = j.at("agents").value("jitter_m", c.jitter_m);
    }

    if (j.contains("mapping")) {
      const auto& m = j.at("mapping");
      const auto origin = m.value("origin", std::vector<double>{0.0, 0.0});
      if (origin.size() != 2) throw ConfigError("mapping.origin must be [x, y]");
      c.mapping = GroundMapping(m.at("meters_per_pixel").get<double>(), {origin[0], origin[1], 0.0});
    }

    if (j.contains("biocrowds")) {
      const auto& b = j.at("biocrowds");
      auto& s = c.biocrowds;
      s.perception_radius = b.value("perception_radius", s.perception_radius);
      s.marker_density = b.value("marker_density", s.marker_density);
      s.arrival_tolerance = b.value("arrival_tolerance", s.arrival_tolerance);
      s.max_frames = b.value("max_frames", s.max_frames);
      if (b.contains("world_bounds")) {
        const auto wb = b.at("world_bounds").get<std::vector<double>>();
        if (wb.size() != 4) throw ConfigError("biocrowds.world_bounds must be [xmin, ymin, xmax, ymax]");
        s.world_bounds = {wb[0], wb[1], wb[2], wb[3]};
        c.world_bounds_given = true;
      }
      for (const auto& poly : b.value("obstacles", nlohmann::json::array())) {
        Polygon p;
        for (const auto& v : poly) p.vertices.push_back(routesim::parse_vec2(v));
        if (p.vertices.size() < 3) throw ConfigError("obstacle polygons need at least 3 vertices");
        s.obstacles.push_back(std::move(p));
      }
    }

    if (j.contains("scenario")) {
      const auto& sc = j.at("scenario");
      c.scenario_json = sc.is_string() ? read_json_file(c.resolve(sc.get<std::string>())) : sc;
      c.scenario = routesim::parse_scenario(c.scenario_json);
    }

    if (j.contains("camera")) c.camera = detail::parse_camera(j.at("camera"), c.mapping);

    if (j.contains("render")) {
      const auto& r = j.at("render");
      auto& rc = c.render;
      if (c.camera) {
        rc.image_width = c.camera->width();
        rc.image_height = c.camera->height();
      }
      if (r.contains("background")) {
        const auto& bg = r.at("background");
        if (bg.is_string()) {
          rc.background_image = read_image(c.resolve(bg.get<std::string>()));
        } else {
          rc.background_color = detail::parse_rgb(bg);
        }
      }
      rc.agent_radius_m = r.value("agent_radius_m", rc.agent_radius_m);
      if (r.contains("palette")) {
        rc.palette.clear();
        for (const auto& col : r.at("palette")) rc.palette.push_back(detail::parse_rgb(col));
      }
      const auto style = r.value("style", std::string("disc"));
      if (style != "disc" && style != "sprite") throw ConfigError("render.style must be 'disc' or 'sprite'");
      rc.style = style == "disc" ? AgentStyle::disc : AgentStyle::sprite;
      if (r.contains("sprite")) rc.sprite = read_sprite(c.resolve(r.at("sprite").get<std::string>()));
    } else if (c.camera) {
      c.render.image_width = c.camera->width();
      c.render.image_height = c.camera->height();
    }

    if (j.contains("density")) {
      const auto& d = j.at("density");
      c.kernel.k = d.value("k", c.kernel.k);
      c.kernel.beta = d.value("beta", c.kernel.beta);
      c.kernel.sigma_default = d.value("sigma_default", c.kernel.sigma_default);
      c.kernel.truncation = d.value("truncation", c.kernel.truncation);
      c.kernel_defaults = false;
    }
    c.kernel.validate();

    if (j.contains("mix")) c.mix.cg_percentage = j.at("mix").value("cg_percentage", 0.0);
    c.mix.validate();
    if (j.contains("real_manifest")) c.real_manifest = j.at("real_manifest").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  // Default simulation area: the image footprint on the ground.
  if (!c.world_bounds_given && c.camera) {
    const WorldPoint lo = pixels_to_meters(c.mapping, {0.0, 0.0});
    const WorldPoint hi = pixels_to_meters(c.mapping, {static_cast<double>(c.camera->width()),
                                                       static_cast<double>(c.camera->height())});
    c.biocrowds.world_bounds = {lo.x, lo.y, hi.x, hi.y};
  }
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_json_file(path), std::filesystem::absolute(path).parent_path());
}

}  // namespace crowdaug
