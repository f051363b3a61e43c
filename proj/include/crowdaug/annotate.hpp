#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "crowdaug/csv.hpp"
#include "crowdaug/errors.hpp"
#include "crowdaug/framelog.hpp"
#include "crowdaug/geometry.hpp"

namespace crowdaug {

struct AnnotationEntry {
  std::int64_t agent_id = 0;
  ImagePoint position{};
};

struct FrameAnnotation {
  std::int64_t frame = 0;
  std::vector<AnnotationEntry> entries;

  std::size_t count() const noexcept { return entries.size(); }
};

struct ExclusionTally {
  std::size_t behind_camera = 0;
  std::size_t outside_image = 0;
};

struct AnnotationResult {
  std::vector<FrameAnnotation> frames;
  ExclusionTally excluded;
};

// An agent counts iff its projected centre lies in [0, width) x [0, height).
inline AnnotationResult annotate(const CameraModel& camera, const FrameLog& log) {
  AnnotationResult result;
  result.frames.reserve(log.frames.size());
  for (std::size_t f = 0; f < log.frames.size(); ++f) {
    FrameAnnotation ann{static_cast<std::int64_t>(f), {}};
    for (const auto& a : log.frames[f]) {
      if (!(camera.depth(a.position) > kMinDepth)) {
        ++result.excluded.behind_camera;
        continue;
      }
      const ImagePoint q = project(camera, a.position);
      if (!camera.in_image(q)) {
        ++result.excluded.outside_image;
        continue;
      }
      ann.entries.push_back({a.agent_id, q});
    }
    result.frames.push_back(std::move(ann));
  }
  return result;
}

inline std::string format_fixed6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

// CSV `frame,agent_id,u,v` with 6 decimals.
inline void write_annotations(std::ostream& out, const std::vector<FrameAnnotation>& anns) {
  out << "frame,agent_id,u,v\n";
  for (const auto& ann : anns) {
    for (const auto& e : ann.entries) {
      out << ann.frame << ',' << e.agent_id << ',' << format_fixed6(e.position.u) << ',' << format_fixed6(e.position.v)
          << '\n';
    }
  }
}

inline void write_annotations(const std::filesystem::path& path, const std::vector<FrameAnnotation>& anns) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_annotations(out, anns);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// Frames 0..frame_count-1 are returned (empty ones included); with
// frame_count < 0 the range ends at the largest frame in the file.
inline std::vector<FrameAnnotation> read_annotations(std::istream& in, std::int64_t frame_count = -1) {
  std::string line;
  std::size_t line_no = 1;
  if (!csv::read_line(in, line) || line != "frame,agent_id,u,v") {
    throw ParseError("expected header 'frame,agent_id,u,v'", 1);
  }
  std::vector<FrameAnnotation> anns;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != 4) throw ParseError("expected 4 fields, got " + std::to_string(fields.size()), line_no);
    const std::int64_t frame = csv::parse_int(fields[0], line_no, "frame");
    if (frame < 0) throw ParseError("negative frame index", line_no);
    AnnotationEntry e{csv::parse_int(fields[1], line_no, "agent_id"),
                      {csv::parse_double(fields[2], line_no, "u"), csv::parse_double(fields[3], line_no, "v")}};
    if (frame_count >= 0 && frame >= frame_count) {
      throw ParseError("frame " + std::to_string(frame) + " beyond the declared frame count", line_no);
    }
    while (static_cast<std::int64_t>(anns.size()) <= frame) {
      anns.push_back({static_cast<std::int64_t>(anns.size()), {}});
    }
    anns[static_cast<std::size_t>(frame)].entries.push_back(e);
  }
  while (static_cast<std::int64_t>(anns.size()) < frame_count) {
    anns.push_back({static_cast<std::int64_t>(anns.size()), {}});
  }
  return anns;
}

inline std::vector<FrameAnnotation> read_annotations(const std::filesystem::path& path, std::int64_t frame_count = -1) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_annotations(in, frame_count);
}

// Per-frame head counts, CSV `frame,count`. Used both as ground truth and for predictions.
inline void write_counts(std::ostream& out, const std::vector<FrameAnnotation>& anns) {
  out << "frame,count\n";
  for (const auto& ann : anns) out << ann.frame << ',' << ann.count() << '\n';
}

struct FrameCount {
  std::int64_t frame = 0;
  double count = 0.0;
};

inline std::vector<FrameCount> read_counts(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!csv::read_line(in, line) || line != "frame,count") throw ParseError("expected header 'frame,count'", 1);
  std::vector<FrameCount> counts;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != 2) throw ParseError("expected 2 fields", line_no);
    counts.push_back({csv::parse_int(fields[0], line_no, "frame"), csv::parse_double(fields[1], line_no, "count")});
  }
  return counts;
}

}  // namespace crowdaug
