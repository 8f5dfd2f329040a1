#pragma once

#include <vector>

#include "sdyn/fem/elastic.hpp"
#include "sdyn/types.hpp"

namespace sdyn {

// Skinned / primary motion x(t): per-frame positions of every tet vertex at a
// fixed timestep. Velocities and accelerations are central differences
// (one-sided at the ends).
class ReferenceMotion {
 public:
  ReferenceMotion() = default;
  // Throws Error(InvalidArgument) for fewer than 3 frames and
  // Error(LengthMismatch) for frames of unequal length.
  ReferenceMotion(std::vector<Positions> frames, double dt);

  std::size_t frame_count() const { return frames_.size(); }
  std::size_t vertex_count() const { return frames_.front().size(); }
  double dt() const { return dt_; }

  const Positions& frame(std::size_t t) const { return frames_[t]; }
  const std::vector<Positions>& frames() const { return frames_; }
  Field field(std::size_t t) const { return to_field(frames_[t]); }

  Vec3 velocity(std::size_t t, std::size_t vertex) const;
  Vec3 acceleration(std::size_t t, std::size_t vertex) const;

 private:
  std::vector<Positions> frames_;
  double dt_ = 1.0 / 24.0;
};

}  // namespace sdyn
