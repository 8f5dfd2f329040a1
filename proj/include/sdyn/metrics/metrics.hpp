#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdyn/emulator/rollout.hpp"
#include "sdyn/fem/elastic.hpp"
#include "sdyn/integrators/sim_sequence.hpp"

namespace sdyn {

// Root mean square over every vertex coordinate of one frame.
double frame_rmse(const Positions& pred, const Positions& gt);

// Per-frame RMSE averaged over the first `window` frames (0 means all).
// Constrained vertices are included. Throws Error(ShapeMismatch) on differing
// vertex or frame counts and Error(InvalidArgument) for a window longer than
// the sequences.
double rmse(const SimSequence& pred, const SimSequence& gt, std::size_t window = 0);

// Mean of frame_rmse over frames 3.. of the teacher-forced prediction.
double single_frame_rmse(const EmulatorModel& model, const TetMesh& mesh,
                         const MaterialField& material, const ConstraintSet& constraints,
                         const ReferenceMotion& ref, const SimSequence& gt,
                         const RolloutOptions& options = {});

struct EnergyStats {
  double min = 0.0;
  double stdev = 0.0;  // population
  double max = 0.0;
  std::optional<std::size_t> exploded_at;  // first frame with non-finite energy
  std::vector<double> per_frame;
};

// Elastic energy of each frame's displacement from rest; statistics cover the
// frames before the first non-finite one.
EnergyStats energy_stats(const SimSequence& seq, const ElasticModel& model,
                         const ReferenceMotion& ref);

struct EvalReport {
  std::string label;
  std::optional<double> single_frame_rmse;
  double rollout_rmse_24 = 0.0;
  double rollout_rmse_48 = 0.0;
  double rollout_rmse_all = 0.0;
  double energy_min = 0.0;
  double energy_stdev = 0.0;
  double energy_max = 0.0;
  std::optional<std::size_t> exploded_at;

  static std::string csv_header();
  std::string csv_row() const;
  nlohmann::json to_json() const;
};

// Rollout windows shorter than 24 / 48 frames fall back to all frames.
EvalReport evaluate_sequence(const SimSequence& pred, const SimSequence& gt,
                             const ElasticModel& model, const ReferenceMotion& ref,
                             std::optional<double> single_frame = std::nullopt);

// frame,rmse,energy
void write_frame_csv(const std::filesystem::path& path, const SimSequence& pred,
                     const SimSequence& gt, const EnergyStats& energy);

}  // namespace sdyn
