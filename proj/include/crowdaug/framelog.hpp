#pragma once

#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "crowdaug/csv.hpp"
#include "crowdaug/errors.hpp"
#include "crowdaug/geometry.hpp"

namespace crowdaug {

struct AgentPosition {
  std::int64_t agent_id = 0;
  WorldPoint position{};

  friend bool operator==(const AgentPosition&, const AgentPosition&) = default;
};

// World position of every active agent at every frame. frames[f] holds frame f;
// frames are contiguous from 0, so an empty frame is an empty list.
struct FrameLog {
  std::vector<std::vector<AgentPosition>> frames;
  double frame_rate = 30.0;

  std::size_t frame_count() const noexcept { return frames.size(); }
  friend bool operator==(const FrameLog&, const FrameLog&) = default;
};

inline std::string format_g9(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

// CSV `frame,agent_id,x,y,z`, 9 significant digits. Empty frames produce no rows,
// so a trailing `# frames=N` comment records the frame count.
inline void write_framelog(std::ostream& out, const FrameLog& log) {
  out << "frame,agent_id,x,y,z\n";
  for (std::size_t f = 0; f < log.frames.size(); ++f) {
    for (const auto& entry : log.frames[f]) {
      out << f << ',' << entry.agent_id << ',' << format_g9(entry.position.x) << ','
          << format_g9(entry.position.y) << ',' << format_g9(entry.position.z) << '\n';
    }
  }
  out << "# frames=" << log.frames.size() << '\n';
}

inline FrameLog read_framelog(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!csv::read_line(in, line) || line != "frame,agent_id,x,y,z") {
    throw ParseError("expected header 'frame,agent_id,x,y,z'", 1);
  }
  ++line_no;
  FrameLog log;
  std::int64_t declared = -1;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    if (line.rfind("# frames=", 0) == 0) {
      declared = csv::parse_int(std::string_view(line).substr(9), line_no, "frames");
      continue;
    }
    const auto fields = csv::split(line);
    if (fields.size() != 5) throw ParseError("expected 5 fields", line_no);
    const std::int64_t frame = csv::parse_int(fields[0], line_no, "frame");
    if (frame < 0) throw ParseError("negative frame index", line_no);
    AgentPosition entry;
    entry.agent_id = csv::parse_int(fields[1], line_no, "agent_id");
    entry.position = {csv::parse_double(fields[2], line_no, "x"), csv::parse_double(fields[3], line_no, "y"),
                      csv::parse_double(fields[4], line_no, "z")};
    if (static_cast<std::size_t>(frame) >= log.frames.size()) log.frames.resize(static_cast<std::size_t>(frame) + 1);
    for (const auto& other : log.frames[static_cast<std::size_t>(frame)]) {
      if (other.agent_id == entry.agent_id) {
        throw DuplicateRecordError("line " + std::to_string(line_no) + ": agent " +
                                   std::to_string(entry.agent_id) + " repeated in frame " +
                                   std::to_string(frame));
      }
    }
    log.frames[static_cast<std::size_t>(frame)].push_back(entry);
  }
  if (declared >= 0) {
    if (static_cast<std::size_t>(declared) < log.frames.size()) {
      throw ParseError("frame count trailer smaller than the largest frame index", line_no);
    }
    log.frames.resize(static_cast<std::size_t>(declared));
  }
  return log;
}

}  // namespace crowdaug
