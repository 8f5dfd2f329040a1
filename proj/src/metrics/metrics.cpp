#include "sdyn/metrics/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sdyn/error.hpp"

namespace sdyn {

namespace {

void check_aligned(const SimSequence& a, const SimSequence& b) {
  if (a.frame_count() != b.frame_count() || a.vertex_count() != b.vertex_count()) {
    throw Error(Errc::ShapeMismatch, "sequences differ in frame or vertex count");
  }
}

std::string number(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

nlohmann::json json_number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(number(v));
}

}  // namespace

double frame_rmse(const Positions& pred, const Positions& gt) {
  if (pred.size() != gt.size() || gt.empty()) {
    throw Error(Errc::ShapeMismatch, "frames differ in vertex count");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) sum += (pred[i] - gt[i]).squaredNorm();
  return std::sqrt(sum / static_cast<double>(3 * gt.size()));
}

double rmse(const SimSequence& pred, const SimSequence& gt, std::size_t window) {
  check_aligned(pred, gt);
  if (gt.frame_count() == 0) throw Error(Errc::ShapeMismatch, "empty sequences");
  if (window > gt.frame_count()) {
    throw Error(Errc::InvalidArgument, "RMSE window longer than the sequence", window);
  }
  const std::size_t frames = window == 0 ? gt.frame_count() : window;
  double sum = 0.0;
  for (std::size_t f = 0; f < frames; ++f) sum += frame_rmse(pred.frames[f], gt.frames[f]);
  return sum / static_cast<double>(frames);
}

double single_frame_rmse(const EmulatorModel& model, const TetMesh& mesh,
                         const MaterialField& material, const ConstraintSet& constraints,
                         const ReferenceMotion& ref, const SimSequence& gt,
                         const RolloutOptions& options) {
  const SimSequence pred = teacher_forced_sequence(model, mesh, material, constraints, ref, gt, options);
  double sum = 0.0;
  for (std::size_t f = 3; f < gt.frame_count(); ++f) sum += frame_rmse(pred.frames[f], gt.frames[f]);
  return sum / static_cast<double>(gt.frame_count() - 3);
}

EnergyStats energy_stats(const SimSequence& seq, const ElasticModel& model,
                         const ReferenceMotion& ref) {
  if (seq.vertex_count() != model.size() || ref.vertex_count() != model.size() ||
      seq.frame_count() != ref.frame_count()) {
    throw Error(Errc::ShapeMismatch, "sequence, reference and model are not aligned");
  }
  EnergyStats s;
  for (const Positions& frame : seq.frames) {
    s.per_frame.push_back(model.elastic_energy(to_field(frame) - model.rest()));
  }
  std::size_t finite = 0;
  while (finite < s.per_frame.size() && std::isfinite(s.per_frame[finite])) ++finite;
  if (finite < s.per_frame.size()) s.exploded_at = finite;
  if (finite == 0) {
    s.min = s.max = s.stdev = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.min = std::numeric_limits<double>::infinity();
  s.max = -s.min;
  double mean = 0.0;
  for (std::size_t f = 0; f < finite; ++f) {
    s.min = std::min(s.min, s.per_frame[f]);
    s.max = std::max(s.max, s.per_frame[f]);
    mean += s.per_frame[f];
  }
  mean /= static_cast<double>(finite);
  double var = 0.0;
  for (std::size_t f = 0; f < finite; ++f) var += (s.per_frame[f] - mean) * (s.per_frame[f] - mean);
  s.stdev = std::sqrt(var / static_cast<double>(finite));
  return s;
}

std::string EvalReport::csv_header() {
  return "label,single_frame_rmse,rollout_rmse_24,rollout_rmse_48,rollout_rmse_all,energy_min,"
         "energy_stdev,energy_max,exploded_at";
}

std::string EvalReport::csv_row() const {
  std::ostringstream s;
  s << label << ',' << (single_frame_rmse ? number(*single_frame_rmse) : "") << ','
    << number(rollout_rmse_24) << ',' << number(rollout_rmse_48) << ',' << number(rollout_rmse_all)
    << ',' << number(energy_min) << ',' << number(energy_stdev) << ',' << number(energy_max) << ','
    << (exploded_at ? std::to_string(*exploded_at) : "");
  return s.str();
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["label"] = label;
  j["single_frame_rmse"] = single_frame_rmse ? json_number(*single_frame_rmse) : nlohmann::json(nullptr);
  j["rollout_rmse_24"] = json_number(rollout_rmse_24);
  j["rollout_rmse_48"] = json_number(rollout_rmse_48);
  j["rollout_rmse_all"] = json_number(rollout_rmse_all);
  j["energy_min"] = json_number(energy_min);
  j["energy_stdev"] = json_number(energy_stdev);
  j["energy_max"] = json_number(energy_max);
  j["exploded_at"] = exploded_at ? nlohmann::json(*exploded_at) : nlohmann::json(nullptr);
  j["rmse_includes_constrained_vertices"] = true;
  return j;
}

EvalReport evaluate_sequence(const SimSequence& pred, const SimSequence& gt,
                             const ElasticModel& model, const ReferenceMotion& ref,
                             std::optional<double> single_frame) {
  check_aligned(pred, gt);
  EvalReport r;
  r.single_frame_rmse = single_frame;
  const std::size_t frames = gt.frame_count();
  r.rollout_rmse_24 = rmse(pred, gt, std::min<std::size_t>(24, frames));
  r.rollout_rmse_48 = rmse(pred, gt, std::min<std::size_t>(48, frames));
  r.rollout_rmse_all = rmse(pred, gt, 0);
  const EnergyStats e = energy_stats(pred, model, ref);
  r.energy_min = e.min;
  r.energy_stdev = e.stdev;
  r.energy_max = e.max;
  r.exploded_at = e.exploded_at;
  return r;
}

void write_frame_csv(const std::filesystem::path& path, const SimSequence& pred,
                     const SimSequence& gt, const EnergyStats& energy) {
  check_aligned(pred, gt);
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << "frame,rmse,energy\n";
  for (std::size_t f = 0; f < gt.frame_count(); ++f) {
    out << f << ',' << number(frame_rmse(pred.frames[f], gt.frames[f])) << ','
        << (f < energy.per_frame.size() ? number(energy.per_frame[f]) : "") << '\n';
  }
}

}  // namespace sdyn
