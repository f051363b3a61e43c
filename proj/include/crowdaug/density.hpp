#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "crowdaug/annotate.hpp"
#include "crowdaug/errors.hpp"

namespace crowdaug {

struct KernelParams {
  int k = 3;
  double beta = 0.3;
  double sigma_default = 4.0;  // pixels, used when a frame has a single head
  double truncation = 4.0;     // kernel support radius in multiples of sigma

  void validate() const {
    if (k < 1 || !(beta > 0.0) || !(sigma_default > 0.0) || !(truncation > 0.0)) {
      throw ConfigError("kernel parameters must all be strictly positive");
    }
  }
};

// Non-negative raster, row-major; total mass equals the head count.
struct DensityMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<float> grid;

  DensityMap() = default;
  DensityMap(std::uint32_t w, std::uint32_t h) : width(w), height(h), grid(static_cast<std::size_t>(w) * h, 0.0f) {}

  float at(std::uint32_t x, std::uint32_t y) const { return grid[static_cast<std::size_t>(y) * width + x]; }

  double mass() const {
    double s = 0.0;
    for (float v : grid) s += v;
    return s;
  }

  friend bool operator==(const DensityMap&, const DensityMap&) = default;
};

// Per-head spread: beta times the mean distance to its min(k, n-1) nearest neighbours.
inline std::vector<double> adaptive_sigmas(const std::vector<AnnotationEntry>& heads, const KernelParams& p) {
  std::vector<double> sigmas(heads.size(), p.sigma_default);
  if (heads.size() < 2) return sigmas;
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(p.k), heads.size() - 1);
  std::vector<double> d;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    d.clear();
    for (std::size_t j = 0; j < heads.size(); ++j) {
      if (j != i) d.push_back(distance(heads[i].position, heads[j].position));
    }
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    double sum = 0.0;
    for (std::size_t n = 0; n < k; ++n) sum += d[n];
    sigmas[i] = p.beta * (sum / static_cast<double>(k));
  }
  return sigmas;
}

// Sums isotropic Gaussians evaluated at pixel centres, each truncated at
// truncation*sigma and rescaled to unit mass over the cells inside the image.
// A kernel that covers no pixel centre puts its unit mass in the pixel holding the head.
inline DensityMap build_density_map(const FrameAnnotation& ann, std::uint32_t width, std::uint32_t height,
                                    const KernelParams& p) {
  if (width == 0 || height == 0) throw PreconditionError("density map dimensions must be positive");
  p.validate();
  std::vector<double> acc(static_cast<std::size_t>(width) * height, 0.0);
  const auto sigmas = adaptive_sigmas(ann.entries, p);
  std::vector<double> kernel;
  for (std::size_t i = 0; i < ann.entries.size(); ++i) {
    const ImagePoint c = ann.entries[i].position;
    const double sigma = sigmas[i];
    const double reach = p.truncation * sigma;
    const auto clampi = [](double v, std::int64_t hi) {
      return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(v)), 0, hi);
    };
    const std::int64_t x0 = clampi(c.u - reach, width - 1), x1 = clampi(c.u + reach, width - 1);
    const std::int64_t y0 = clampi(c.v - reach, height - 1), y1 = clampi(c.v + reach, height - 1);
    const std::int64_t bw = x1 - x0 + 1;
    kernel.assign(static_cast<std::size_t>(bw * (y1 - y0 + 1)), 0.0);
    double total = 0.0;
    if (sigma > 0.0) {
      const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
      for (std::int64_t y = y0; y <= y1; ++y) {
        for (std::int64_t x = x0; x <= x1; ++x) {
          const double dx = static_cast<double>(x) + 0.5 - c.u;
          const double dy = static_cast<double>(y) + 0.5 - c.v;
          const double r2 = dx * dx + dy * dy;
          if (r2 > reach * reach) continue;
          const double w = std::exp(-r2 * inv2s2);
          kernel[static_cast<std::size_t>((y - y0) * bw + (x - x0))] = w;
          total += w;
        }
      }
    }
    if (!(total > 0.0)) {
      const std::int64_t x = clampi(c.u, width - 1), y = clampi(c.v, height - 1);
      acc[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)] += 1.0;
      continue;
    }
    for (std::int64_t y = y0; y <= y1; ++y) {
      for (std::int64_t x = x0; x <= x1; ++x) {
        acc[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)] +=
            kernel[static_cast<std::size_t>((y - y0) * bw + (x - x0))] / total;
      }
    }
  }
  DensityMap map(width, height);
  std::transform(acc.begin(), acc.end(), map.grid.begin(), [](double v) { return static_cast<float>(v); });
  return map;
}

inline constexpr char kDmapMagic[6] = {'D', 'M', 'A', 'P', '1', '\n'};

namespace detail {

inline void put_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

// DMAP1: magic "DMAP1\n", u32 LE width, u32 LE height, width*height f32 LE row-major.
inline std::string encode_density(const DensityMap& map) {
  std::string bytes(kDmapMagic, sizeof kDmapMagic);
  bytes.reserve(14 + map.grid.size() * 4);
  detail::put_u32le(bytes, map.width);
  detail::put_u32le(bytes, map.height);
  for (float v : map.grid) detail::put_u32le(bytes, std::bit_cast<std::uint32_t>(v));
  return bytes;
}

inline DensityMap decode_density(const std::string& bytes) {
  if (bytes.size() < sizeof kDmapMagic || std::memcmp(bytes.data(), kDmapMagic, sizeof kDmapMagic) != 0) {
    throw FormatError("not a DMAP1 file (bad magic)");
  }
  if (bytes.size() < 14) throw FormatError("DMAP1 header truncated");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t w = detail::get_u32le(p + 6);
  const std::uint32_t h = detail::get_u32le(p + 10);
  const std::uint64_t cells = static_cast<std::uint64_t>(w) * h;
  if (bytes.size() != 14 + cells * 4) {
    throw FormatError("DMAP1 payload is " + std::to_string(bytes.size() - 14) + " bytes, expected " +
                      std::to_string(cells * 4));
  }
  DensityMap map(w, h);
  for (std::uint64_t i = 0; i < cells; ++i) map.grid[i] = std::bit_cast<float>(detail::get_u32le(p + 14 + i * 4));
  return map;
}

inline void write_density(const DensityMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::string bytes = encode_density(map);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline DensityMap read_density(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_density(bytes);
}

}  // namespace crowdaug
