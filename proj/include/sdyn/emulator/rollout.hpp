#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "sdyn/emulator/model.hpp"
#include "sdyn/integrators/sim_sequence.hpp"

namespace sdyn {

// Training always runs in double precision; inference may use a single
// precision copy of the weights.
enum class InferencePrecision { F32, F64 };

// Evaluates the emulator for every free vertex of a mesh at once.
class FramePredictor {
 public:
  FramePredictor(const EmulatorModel& model, const TetMesh& mesh, const MaterialField& material,
                 const ConstraintSet& constraints,
                 InferencePrecision precision = InferencePrecision::F32, std::size_t threads = 1);
  ~FramePredictor();
  FramePredictor(const FramePredictor&) = delete;
  FramePredictor& operator=(const FramePredictor&) = delete;

  // Frame t + 1: free vertices advance by the predicted delta from u(t),
  // constrained vertices take x(t + 1).
  Positions predict(const FrameWindow& window) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct RolloutOptions {
  InferencePrecision precision = InferencePrecision::F32;
  std::size_t threads = 1;
  // When false a non-finite prediction ends the rollout quietly: exploded_at
  // is set and the remaining frames are NaN.
  bool halt_on_nonfinite = true;
};

struct RolloutResult {
  SimSequence sequence;
  std::optional<std::size_t> exploded_at;
  std::vector<double> frame_seconds;  // wall-clock per predicted frame
};

// Recurrent rollout seeded with three frames of history (usually reference
// frames 0-2); constrained vertices always follow the reference. Output has
// as many frames as `ref`. Throws Error(NonFinitePrediction, frame) when
// halting is enabled, Error(InvalidArgument) for a reference shorter than 4
// frames or an init other than 3 frames, Error(LengthMismatch) on size
// mismatches.
RolloutResult rollout(const EmulatorModel& model, const TetMesh& mesh,
                      const MaterialField& material, const ConstraintSet& constraints,
                      const ReferenceMotion& ref, const std::vector<Positions>& init,
                      const RolloutOptions& options = {});

// Teacher-forced evaluation: frames 0-2 copy `gt`, every later frame t + 1 is
// predicted from ground-truth frames t, t - 1, t - 2.
SimSequence teacher_forced_sequence(const EmulatorModel& model, const TetMesh& mesh,
                                    const MaterialField& material,
                                    const ConstraintSet& constraints, const ReferenceMotion& ref,
                                    const SimSequence& gt, const RolloutOptions& options = {});

}  // namespace sdyn
