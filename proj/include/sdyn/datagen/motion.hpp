#pragma once

#include <cstdint>
#include <numbers>
#include <vector>

#include "sdyn/integrators/reference.hpp"
#include "sdyn/meshkit/constraints.hpp"

namespace sdyn {

// Rotation about a pivot followed by a translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p, const Vec3& pivot) const {
    return rotation * (p - pivot) + pivot + translation;
  }
};

enum class MotionPhase : std::uint8_t { Accelerate, Reverse, Settle };

struct MotionLimits {
  double max_accel = 10.0;                         // length / s^2
  double max_angular_speed = std::numbers::pi;     // rad / s
};

struct MotionScript {
  double dt = 1.0 / 24.0;
  std::vector<RigidTransform> frames;
  std::vector<MotionPhase> phases;  // one label per frame
  Vec3 acceleration = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  double angular_speed = 0.0;

  std::size_t frame_count() const { return frames.size(); }
};

// Random rigid core motion in three phases over 40% / 40% / 20% of the frames.
//
// Accelerate: angular velocity w about a uniform random axis; the core is
//   pushed along a with |a| <= max_accel (a for the first half, -a for the
//   second, so it arrives at rest).
// Reverse: angular velocity -w and the mirrored push (-a then a), which brings
//   the core back to its starting pose at rest.
// Settle: the core holds still while the secondary motion dies out.
//
// Throws Error(InvalidArgument) for fewer than 12 frames.
MotionScript random_motion_script(std::uint64_t seed, std::size_t frame_count, double dt,
                                  const MotionLimits& limits = {});

// Applies the script rigidly to every vertex about the rest centroid of the
// constrained core.
ReferenceMotion script_to_reference(const TetMesh& mesh, const ConstraintSet& constraints,
                                    const MotionScript& script);

}  // namespace sdyn
