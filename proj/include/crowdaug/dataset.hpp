#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "crowdaug/errors.hpp"
#include "crowdaug/random.hpp"

namespace crowdaug {

enum class Source { real, cg };
enum class Split { train, test };

inline std::string to_string(Source s) { return s == Source::real ? "real" : "cg"; }
inline std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }

struct ManifestEntry {
  std::filesystem::path image;
  std::filesystem::path annotation;
  std::filesystem::path density;
  Source source = Source::real;
  Split split = Split::train;
  std::int64_t frame = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

// Entry paths are relative to base_dir (or absolute).
struct Manifest {
  std::filesystem::path base_dir;
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const std::filesystem::path& p) const {
    return p.is_absolute() ? p : (base_dir / p).lexically_normal();
  }
};

inline Manifest parse_manifest(const nlohmann::json& j, std::filesystem::path base_dir) {
  if (!j.is_array()) throw InvalidManifestError("manifest must be a JSON array");
  Manifest m{std::move(base_dir), {}};
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    try {
      ManifestEntry entry;
      entry.image = e.at("image").get<std::string>();
      entry.annotation = e.at("annotation").get<std::string>();
      entry.density = e.at("density").get<std::string>();
      const auto source = e.at("source").get<std::string>();
      const auto split = e.at("split").get<std::string>();
      if (source != "real" && source != "cg") throw InvalidManifestError("bad source '" + source + "'");
      if (split != "train" && split != "test") throw InvalidManifestError("bad split '" + split + "'");
      entry.source = source == "real" ? Source::real : Source::cg;
      entry.split = split == "train" ? Split::train : Split::test;
      entry.frame = e.at("frame").get<std::int64_t>();
      m.entries.push_back(std::move(entry));
    } catch (const nlohmann::json::exception& ex) {
      throw InvalidManifestError("manifest entry " + std::to_string(i) + ": " + ex.what());
    }
  }
  return m;
}

inline Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidManifestError("manifest '" + path.string() + "' is not valid JSON: " + ex.what());
  }
  return parse_manifest(j, std::filesystem::absolute(path).parent_path());
}

// Paths are written relative to `base_dir`; keys come out sorted.
inline nlohmann::json manifest_to_json(const Manifest& m, const std::filesystem::path& base_dir) {
  const auto out_base = std::filesystem::absolute(base_dir).lexically_normal();
  const auto rel = [&](const std::filesystem::path& p) {
    const auto abs = std::filesystem::absolute(m.resolve(p)).lexically_normal();
    return abs.lexically_relative(out_base).generic_string();
  };
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : m.entries) {
    j.push_back({{"image", rel(e.image)},
                 {"annotation", rel(e.annotation)},
                 {"density", rel(e.density)},
                 {"source", to_string(e.source)},
                 {"split", to_string(e.split)},
                 {"frame", e.frame}});
  }
  return j;
}

inline void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << manifest_to_json(m, std::filesystem::absolute(path).parent_path()).dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// Referenced files exist and (source, frame) pairs are unique.
inline void validate_manifest(const Manifest& m, bool check_files = true) {
  std::set<std::pair<Source, std::int64_t>> seen;
  for (const auto& e : m.entries) {
    if (!seen.emplace(e.source, e.frame).second) {
      throw InvalidManifestError("duplicate (" + to_string(e.source) + ", frame " + std::to_string(e.frame) + ")");
    }
    if (!check_files) continue;
    for (const auto* p : {&e.image, &e.annotation, &e.density}) {
      if (!std::filesystem::exists(m.resolve(*p))) {
        throw InvalidManifestError("missing file '" + m.resolve(*p).string() + "'");
      }
    }
  }
}

struct MixSpec {
  double cg_percentage = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(cg_percentage >= 0.0 && cg_percentage <= 100.0)) {
      throw ConfigError("cg_percentage must lie in [0, 100]");
    }
  }
};

// floor(p/100 * n); the 1e-9 guard keeps exact products like 20% of 735 at 147.
inline std::size_t cg_sample_count(double percentage, std::size_t cg_size) {
  return static_cast<std::size_t>(std::floor(percentage * static_cast<double>(cg_size) / 100.0 + 1e-9));
}

// Real train entries, then floor(p% of |cg|) CG entries drawn without
// replacement, then the real test entries untouched. CG never lands in test.
inline Manifest compose_training_set(const Manifest& real, const Manifest& cg, const MixSpec& mix,
                                     bool check_files = true) {
  mix.validate();
  validate_manifest(real, check_files);
  validate_manifest(cg, check_files);
  if (std::any_of(real.entries.begin(), real.entries.end(), [](const auto& e) { return e.source != Source::real; })) {
    throw InvalidManifestError("real manifest contains CG entries");
  }
  if (std::any_of(cg.entries.begin(), cg.entries.end(), [](const auto& e) { return e.source != Source::cg; })) {
    throw InvalidManifestError("CG manifest contains real entries");
  }
  if (std::none_of(real.entries.begin(), real.entries.end(), [](const auto& e) { return e.split == Split::train; })) {
    throw InvalidManifestError("real manifest has no train entries");
  }

  const auto absolute_entry = [](const Manifest& m, ManifestEntry e) {
    e.image = std::filesystem::absolute(m.resolve(e.image)).lexically_normal();
    e.annotation = std::filesystem::absolute(m.resolve(e.annotation)).lexically_normal();
    e.density = std::filesystem::absolute(m.resolve(e.density)).lexically_normal();
    return e;
  };

  Manifest out;
  for (const auto& e : real.entries) {
    if (e.split == Split::train) out.entries.push_back(absolute_entry(real, e));
  }

  const std::size_t take = cg_sample_count(mix.cg_percentage, cg.entries.size());
  std::vector<std::size_t> pool(cg.entries.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  Rng rng(mix.seed);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  for (std::size_t i = 0; i < take; ++i) {
    ManifestEntry e = absolute_entry(cg, cg.entries[pool[i]]);
    e.split = Split::train;
    out.entries.push_back(std::move(e));
  }

  for (const auto& e : real.entries) {
    if (e.split == Split::test) out.entries.push_back(absolute_entry(real, e));
  }
  return out;
}

enum class SplitPolicy { contiguous, random };

struct FrameRange {
  std::int64_t first = 0;
  std::int64_t last = 0;  // inclusive
};

// Marks real entries train/test. Contiguous: the earliest round(fraction*n)
// frames, or exactly the frames inside `range` when given. Random: a seeded
// sample of round(fraction*n) frames. CG entries always stay in train.
inline Manifest split_fraction(const Manifest& m, double train_fraction, SplitPolicy policy, std::uint64_t seed,
                               std::optional<FrameRange> range = std::nullopt) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidFractionError("train fraction must lie strictly between 0 and 1");
  }
  Manifest out = m;
  std::vector<std::size_t> real;
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    if (out.entries[i].source == Source::real) {
      real.push_back(i);
    } else {
      out.entries[i].split = Split::train;
    }
  }
  const auto train_count = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(real.size())));
  for (std::size_t i : real) out.entries[i].split = Split::test;

  if (policy == SplitPolicy::contiguous) {
    if (range) {
      if (range->last < range->first) throw InvalidFractionError("frame range is empty");
      for (std::size_t i : real) {
        const auto f = out.entries[i].frame;
        if (f >= range->first && f <= range->last) out.entries[i].split = Split::train;
      }
      return out;
    }
    std::stable_sort(real.begin(), real.end(),
                     [&](std::size_t a, std::size_t b) { return out.entries[a].frame < out.entries[b].frame; });
    for (std::size_t k = 0; k < train_count; ++k) out.entries[real[k]].split = Split::train;
    return out;
  }

  Rng rng(seed);
  for (std::size_t k = 0; k < train_count; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(uniform_index(rng, real.size() - k));
    std::swap(real[k], real[j]);
    out.entries[real[k]].split = Split::train;
  }
  return out;
}

namespace detail {
inline void check_metric_inputs(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) {
    throw LengthMismatchError("prediction and ground-truth lengths differ (" + std::to_string(pred.size()) + " vs " +
                              std::to_string(gt.size()) + ")");
  }
  if (pred.empty()) throw EmptyInputError("metrics need at least one sample");
}
}  // namespace detail

inline double mae(std::span<const double> pred, std::span<const double> gt) {
  detail::check_metric_inputs(pred, gt);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - gt[i]);
  return sum / static_cast<double>(pred.size());
}

// Mean squared error (not its square root).
inline double mse(std::span<const double> pred, std::span<const double> gt) {
  detail::check_metric_inputs(pred, gt);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = pred[i] - gt[i];
    sum += r * r;
  }
  return sum / static_cast<double>(pred.size());
}

struct MetricReport {
  double mae = 0.0;
  double mse = 0.0;
  std::size_t n = 0;
};

inline MetricReport evaluate(std::span<const double> pred, std::span<const double> gt) {
  return {mae(pred, gt), mse(pred, gt), pred.size()};
}

}  // namespace crowdaug
