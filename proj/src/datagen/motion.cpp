#include "sdyn/datagen/motion.hpp"

#include <Eigen/Geometry>

#include "sdyn/datagen/rng.hpp"
#include "sdyn/error.hpp"

namespace sdyn {

namespace {

// Displacement along the push direction for a bang-bang profile that
// accelerates for half of `span`, decelerates for the other half and ends at
// rest at distance accel * (span / 2)^2.
double push_profile(double accel, double span, double s) {
  const double half = 0.5 * span;
  if (s <= 0.0) return 0.0;
  if (s >= span) return accel * half * half;
  if (s <= half) return 0.5 * accel * s * s;
  const double r = span - s;
  return accel * half * half - 0.5 * accel * r * r;
}

}  // namespace

MotionScript random_motion_script(std::uint64_t seed, std::size_t frame_count, double dt,
                                  const MotionLimits& limits) {
  if (frame_count < 12) throw Error(Errc::InvalidArgument, "motion scripts need at least 12 frames");
  if (!(dt > 0.0)) throw Error(Errc::InvalidArgument, "dt must be positive");
  Rng rng(seed);
  MotionScript script;
  script.dt = dt;
  const Vec3 accel_dir = rng.unit_vector();
  const double accel = rng.uniform(0.0, limits.max_accel);
  script.axis = rng.unit_vector();
  script.angular_speed = rng.uniform(0.0, limits.max_angular_speed);
  script.acceleration = accel * accel_dir;

  const std::size_t phase_frames = (4 * frame_count + 5) / 10;  // round(0.4 F)
  const double span = static_cast<double>(phase_frames) * dt;
  script.frames.resize(frame_count);
  script.phases.resize(frame_count);
  for (std::size_t f = 0; f < frame_count; ++f) {
    const double time = static_cast<double>(f) * dt;
    double along = 0.0, angle = 0.0;
    if (f < phase_frames) {
      script.phases[f] = MotionPhase::Accelerate;
      along = push_profile(accel, span, time);
      angle = script.angular_speed * time;
    } else if (f < 2 * phase_frames) {
      script.phases[f] = MotionPhase::Reverse;
      const double s = time - span;
      along = push_profile(accel, span, span) - push_profile(accel, span, s);
      angle = script.angular_speed * (span - s);
    } else {
      script.phases[f] = MotionPhase::Settle;
    }
    if (f == 0) continue;  // exact identity
    script.frames[f].rotation = Eigen::AngleAxisd(angle, script.axis).toRotationMatrix();
    script.frames[f].translation = along * accel_dir;
  }
  return script;
}

ReferenceMotion script_to_reference(const TetMesh& mesh, const ConstraintSet& constraints,
                                    const MotionScript& script) {
  if (constraints.size() != mesh.size()) {
    throw Error(Errc::LengthMismatch, "constraint flags do not match the mesh");
  }
  Vec3 pivot = Vec3::Zero();
  for (std::uint32_t i : constraints.constrained_indices()) pivot += mesh.vertices()[i];
  pivot /= static_cast<double>(constraints.constrained_indices().size());

  std::vector<Positions> frames(script.frame_count(), Positions(mesh.size()));
  for (std::size_t f = 0; f < script.frame_count(); ++f) {
    for (std::size_t i = 0; i < mesh.size(); ++i) {
      frames[f][i] = f == 0 ? mesh.vertices()[i] : script.frames[f].apply(mesh.vertices()[i], pivot);
    }
  }
  return ReferenceMotion(std::move(frames), script.dt);
}

}  // namespace sdyn
