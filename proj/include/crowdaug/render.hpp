#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <png.h>

#include "crowdaug/errors.hpp"
#include "crowdaug/framelog.hpp"
#include "crowdaug/geometry.hpp"

namespace crowdaug {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// 8-bit RGB raster, row-major.
struct FrameImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  FrameImage() = default;
  FrameImage(int w, int h, Rgb fill = {}) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3) {
    for (std::size_t i = 0; i < pixels.size(); i += 3) {
      pixels[i] = fill.r;
      pixels[i + 1] = fill.g;
      pixels[i + 2] = fill.b;
    }
  }

  Rgb at(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    pixels[i] = c.r;
    pixels[i + 1] = c.g;
    pixels[i + 2] = c.b;
  }

  friend bool operator==(const FrameImage&, const FrameImage&) = default;
};

// RGBA texture used for sprite-style agents.
struct Sprite {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgba;
};

enum class AgentStyle { disc, sprite };

struct RenderConfig {
  int image_width = 640;
  int image_height = 480;
  Rgb background_color{200, 200, 200};
  std::optional<FrameImage> background_image;
  double agent_radius_m = 0.25;
  std::vector<Rgb> palette{{220, 40, 40}, {40, 90, 220}, {40, 160, 60}, {230, 160, 20}, {140, 60, 180}};
  AgentStyle style = AgentStyle::disc;
  std::optional<Sprite> sprite;  // built-in silhouette when empty
};

// Top-view silhouette: shoulders ellipse with a head disc, shaded by luminance.
inline Sprite default_sprite() {
  constexpr int n = 32;
  Sprite s{n, n, std::vector<std::uint8_t>(n * n * 4, 0)};
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double u = (x + 0.5) / n * 2.0 - 1.0;
      const double v = (y + 0.5) / n * 2.0 - 1.0;
      std::uint8_t lum = 0;
      bool on = false;
      if (u * u + v * v <= 0.16) {
        lum = 255;
        on = true;
      } else if ((u * u) / 1.0 + (v * v) / 0.36 <= 1.0) {
        lum = 150;
        on = true;
      }
      const std::size_t i = (static_cast<std::size_t>(y) * n + x) * 4;
      s.rgba[i] = s.rgba[i + 1] = s.rgba[i + 2] = lum;
      s.rgba[i + 3] = on ? 255 : 0;
    }
  }
  return s;
}

namespace detail {

struct Placement {
  std::int64_t agent_id;
  double depth;
  ImagePoint center;
  double radius_px;
};

// Radius in pixels at the agent's depth: mean image length of two world
// offsets of agent_radius_m along x and y.
inline std::optional<double> projected_radius(const CameraModel& camera, const WorldPoint& p, const ImagePoint& c,
                                              double radius_m) {
  double sum = 0.0;
  int n = 0;
  for (const WorldPoint& off : {WorldPoint{p.x + radius_m, p.y, p.z}, WorldPoint{p.x, p.y + radius_m, p.z}}) {
    try {
      sum += distance(project(camera, off), c);
      ++n;
    } catch (const DepthError&) {
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

inline std::uint8_t blend(std::uint8_t dst, std::uint8_t src, int coverage) {
  return static_cast<std::uint8_t>((dst * (16 - coverage) + src * coverage + 8) / 16);
}

}  // namespace detail

// Painter's-order rasterizer: background, then agents farthest first, each as a
// 4x4-supersampled disc (or sprite). Output is a pure function of the inputs.
inline FrameImage render_frame(const CameraModel& camera, const std::vector<AgentPosition>& agents,
                               const RenderConfig& cfg) {
  if (camera.width() != cfg.image_width || camera.height() != cfg.image_height) {
    throw DimensionMismatchError("camera is " + std::to_string(camera.width()) + "x" +
                                 std::to_string(camera.height()) + " but render config is " +
                                 std::to_string(cfg.image_width) + "x" + std::to_string(cfg.image_height));
  }
  if (!(cfg.agent_radius_m > 0.0)) throw PreconditionError("agent_radius_m must be positive");
  if (cfg.palette.empty()) throw PreconditionError("palette must not be empty");

  FrameImage img;
  if (cfg.background_image) {
    if (cfg.background_image->width != cfg.image_width || cfg.background_image->height != cfg.image_height) {
      throw DimensionMismatchError("background image size differs from the render size");
    }
    img = *cfg.background_image;
  } else {
    img = FrameImage(cfg.image_width, cfg.image_height, cfg.background_color);
  }

  std::vector<detail::Placement> placements;
  for (const auto& a : agents) {
    const double w = camera.depth(a.position);
    if (!(w > kMinDepth)) continue;
    const ImagePoint c = project(camera, a.position);
    const auto r = detail::projected_radius(camera, a.position, c, cfg.agent_radius_m);
    if (!r) continue;
    if (c.u + *r < 0.0 || c.u - *r >= img.width || c.v + *r < 0.0 || c.v - *r >= img.height) continue;
    placements.push_back({a.agent_id, w, c, *r});
  }
  std::sort(placements.begin(), placements.end(), [](const detail::Placement& a, const detail::Placement& b) {
    if (a.depth != b.depth) return a.depth > b.depth;
    return a.agent_id < b.agent_id;
  });

  const Sprite* sprite = nullptr;
  Sprite builtin;
  if (cfg.style == AgentStyle::sprite) {
    if (cfg.sprite) {
      sprite = &*cfg.sprite;
    } else {
      builtin = default_sprite();
      sprite = &builtin;
    }
  }

  for (const auto& p : placements) {
    const Rgb color = cfg.palette[static_cast<std::size_t>(p.agent_id % static_cast<std::int64_t>(cfg.palette.size()))];
    const int x0 = std::max(0, static_cast<int>(std::floor(p.center.u - p.radius_px)));
    const int x1 = std::min(img.width - 1, static_cast<int>(std::floor(p.center.u + p.radius_px)));
    const int y0 = std::max(0, static_cast<int>(std::floor(p.center.v - p.radius_px)));
    const int y1 = std::min(img.height - 1, static_cast<int>(std::floor(p.center.v + p.radius_px)));
    const double r2 = p.radius_px * p.radius_px;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        int coverage = 0;
        int acc[3] = {0, 0, 0};
        for (int sy = 0; sy < 4; ++sy) {
          for (int sx = 0; sx < 4; ++sx) {
            const double dx = x + (sx + 0.5) / 4.0 - p.center.u;
            const double dy = y + (sy + 0.5) / 4.0 - p.center.v;
            if (!sprite) {
              if (dx * dx + dy * dy <= r2) ++coverage;
              continue;
            }
            const double tu = (dx / p.radius_px + 1.0) * 0.5;
            const double tv = (dy / p.radius_px + 1.0) * 0.5;
            if (tu < 0.0 || tu >= 1.0 || tv < 0.0 || tv >= 1.0) continue;
            const int tx = std::min(sprite->width - 1, static_cast<int>(tu * sprite->width));
            const int ty = std::min(sprite->height - 1, static_cast<int>(tv * sprite->height));
            const std::size_t ti = (static_cast<std::size_t>(ty) * sprite->width + tx) * 4;
            if (sprite->rgba[ti + 3] < 128) continue;
            ++coverage;
            acc[0] += color.r * sprite->rgba[ti] / 255;
            acc[1] += color.g * sprite->rgba[ti + 1] / 255;
            acc[2] += color.b * sprite->rgba[ti + 2] / 255;
          }
        }
        if (coverage == 0) continue;
        const Rgb src = sprite ? Rgb{static_cast<std::uint8_t>(acc[0] / coverage),
                                     static_cast<std::uint8_t>(acc[1] / coverage),
                                     static_cast<std::uint8_t>(acc[2] / coverage)}
                               : color;
        const Rgb dst = img.at(x, y);
        img.set(x, y, {detail::blend(dst.r, src.r, coverage), detail::blend(dst.g, src.g, coverage),
                       detail::blend(dst.b, src.b, coverage)});
      }
    }
  }
  return img;
}

// 8-bit RGB, non-interlaced PNG via the libpng simplified API.
inline void write_image(const FrameImage& img, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, img.pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot write PNG '" + path.string() + "': " + msg);
  }
}

namespace detail {

inline std::vector<std::uint8_t> read_png(const std::filesystem::path& path, png_uint_32 format, int& width,
                                          int& height) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot read PNG '" + path.string() + "': " + msg);
  }
  image.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("cannot decode PNG '" + path.string() + "': " + msg);
  }
  width = static_cast<int>(image.width);
  height = static_cast<int>(image.height);
  return buffer;
}

}  // namespace detail

inline FrameImage read_image(const std::filesystem::path& path) {
  FrameImage img;
  img.pixels = detail::read_png(path, PNG_FORMAT_RGB, img.width, img.height);
  return img;
}

inline Sprite read_sprite(const std::filesystem::path& path) {
  Sprite s;
  s.rgba = detail::read_png(path, PNG_FORMAT_RGBA, s.width, s.height);
  return s;
}

}  // namespace crowdaug
