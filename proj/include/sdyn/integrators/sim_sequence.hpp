#pragma once

#include <filesystem>
#include <vector>

#include "sdyn/types.hpp"

namespace sdyn {

// Per-frame absolute vertex positions at a fixed timestep.
struct SimSequence {
  double dt = 1.0 / 24.0;
  std::vector<Positions> frames;

  std::size_t frame_count() const { return frames.size(); }
  std::size_t vertex_count() const { return frames.empty() ? 0 : frames.front().size(); }
};

// Binary "PDSQ" v1, little-endian:
//   char[4] magic, u32 version, u32 vertex_count, u32 frame_count, f64 dt,
//   f32 positions[frame_count][vertex_count][3]
void write_pdsq(const std::filesystem::path& path, const SimSequence& seq);
SimSequence read_pdsq(const std::filesystem::path& path);

// Debug export: header "frame,vertex,x,y,z", one row per vertex per frame.
void write_sequence_csv(const std::filesystem::path& path, const SimSequence& seq);

}  // namespace sdyn
